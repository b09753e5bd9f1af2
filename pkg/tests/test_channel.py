import numpy as np
import pytest

from selcoop.channel import (ErrorScaling, SystemConfig, complex_normal, derive_stats,
                             sample_realization)


def profile_cfg(p0_db=10.0, rho=1.0, m=2, **kw):
    return SystemConfig.from_profile(m, 10 ** (p0_db / 10), rho=rho, **kw)


def test_perfect_csi_harmonic_beta():
    cfg = profile_cfg(15.0)
    st = derive_stats(cfg)
    np.testing.assert_array_equal(st.eps_si, 0.0)
    np.testing.assert_array_equal(st.lam_si, 1.0)
    np.testing.assert_array_equal(st.lam_id, 1.0)
    g = st.gbar_si
    np.testing.assert_allclose(st.beta, g * st.gbar_id / (g + st.gbar_id), rtol=1e-15)


def test_default_energy_profile_average_snrs():
    p0 = 10 ** 2.3
    st = derive_stats(SystemConfig.from_profile(3, p0))
    np.testing.assert_allclose(st.gbar_sd, p0)
    np.testing.assert_allclose(st.gbar_si, 0.5 * p0)
    np.testing.assert_allclose(st.gbar_id, 0.5 * p0)
    np.testing.assert_allclose(st.mu_bar, p0)


def test_rho_point_nine_variances():
    cfg = profile_cfg(10.0, rho=0.9)
    np.testing.assert_allclose(cfg.est_variance(0.9), 1 / 0.9)
    np.testing.assert_allclose(cfg.error_variance(0.9, cfg.e_sd), 0.1)
    st = derive_stats(cfg)
    np.testing.assert_allclose(st.eps_sd, 0.1 * cfg.e_sd / cfg.n0)
    np.testing.assert_allclose(st.lam_si, 1 + 0.81 * st.eps_id)
    np.testing.assert_allclose(st.mu_bar, 0.81 * st.gbar_sd / (1 + st.eps_sd))


def test_beta_below_single_hop_limits():
    rng = np.random.default_rng(7)
    for _ in range(50):
        cfg = SystemConfig(relay_count=3, e_sd=rng.uniform(0.1, 100),
                           e_si=rng.uniform(0.1, 100, 3), e_id=rng.uniform(0.1, 100, 3),
                           rho_sd=rng.uniform(0.5, 1), rho_si=rng.uniform(0.5, 1, 3),
                           rho_id=rng.uniform(0.5, 1, 3))
        st = derive_stats(cfg)
        c = cfg.rho_si**2 * cfg.rho_id**2
        cap = np.minimum(st.gbar_si * c / st.lam_id, st.gbar_id * c / st.lam_si)
        assert np.all(st.beta > 0) and st.mu_bar > 0
        assert np.all(st.beta <= cap * (1 + 1e-15))


def test_snr_inverse_keeps_epsilon_constant():
    eps = [derive_stats(profile_cfg(db, rho=0.9, error_scaling="snr_inverse")).eps_sd
           for db in (0.0, 20.0, 40.0)]
    np.testing.assert_allclose(eps, 0.1, rtol=1e-12)
    fixed = derive_stats(profile_cfg(20.0, rho=0.9)).eps_sd
    np.testing.assert_allclose(fixed, 10.0, rtol=1e-12)


def test_scale_invariance():
    a = SystemConfig(relay_count=2, e_sd=3.0, e_si=[1.0, 2.0], e_id=[0.5, 4.0], n0=0.7,
                     rho_sd=0.9, rho_si=[0.95, 0.8], rho_id=0.85)
    b = SystemConfig(relay_count=2, e_sd=3.0 * 11, e_si=[11.0, 22.0], e_id=[5.5, 44.0],
                     n0=7.7, rho_sd=0.9, rho_si=[0.95, 0.8], rho_id=0.85)
    sa, sb = derive_stats(a), derive_stats(b)
    for name in ("gbar_sd", "gbar_si", "gbar_id", "eps_sd", "eps_si", "eps_id",
                 "lam_si", "lam_id", "beta", "mu_bar"):
        np.testing.assert_allclose(getattr(sa, name), getattr(sb, name), rtol=1e-14)


@pytest.mark.parametrize("kwargs, match", [
    (dict(relay_count=0), "relay_count"),
    (dict(e_sd=0.0), "energies"),
    (dict(n0=-1.0), "n0"),
    (dict(rho_si=0.0), "rho_si"),
    (dict(rho_id=1.2), "rho_id"),
    (dict(k_mod=0.0), "k_mod"),
    (dict(rate=0.0), "rate"),
    (dict(e_si=[1.0, 2.0, 3.0]), "e_si"),
])
def test_config_validation(kwargs, match):
    base = dict(relay_count=2, e_sd=1.0, e_si=1.0, e_id=1.0)
    base.update(kwargs)
    with pytest.raises(ValueError, match=match):
        SystemConfig(**base)


def test_complex_normal_splits_variance():
    z = complex_normal(np.random.default_rng(0), 2.0, 200_000)
    np.testing.assert_allclose(z.real.var(), 1.0, rtol=0.02)
    np.testing.assert_allclose(z.imag.var(), 1.0, rtol=0.02)
    assert abs(np.mean(z.real * z.imag)) < 0.01


def test_perfect_csi_estimates_equal_truth():
    real = sample_realization(profile_cfg(), np.random.default_rng(1), 1000)
    np.testing.assert_array_equal(real.sd_true, real.sd_est)
    np.testing.assert_array_equal(real.si_true, real.si_est)
    assert real.si_true.shape == (1000, 2) and real.sd_true.shape == (1000,)


def test_single_draw_drops_leading_axis():
    real = sample_realization(profile_cfg(m=3), np.random.default_rng(2))
    assert np.ndim(real.sd_true) == 0
    assert real.si_est.shape == (3,)


def _within_3se(samples, expected):
    mean = samples.mean()
    se = samples.std(ddof=1) / np.sqrt(samples.size)
    assert abs(mean - expected) < 3 * se, (mean, expected, se)


def test_second_moments_over_a_million_draws():
    cfg = profile_cfg(10.0, rho=0.9, m=1)
    real = sample_realization(cfg, np.random.default_rng(11), 1_000_000)
    h, h_est = real.sd_true, real.sd_est
    # var(h) = rho^2 var(h_est) + sigma_D^2 = 0.81/0.9 + 0.1 = 1
    _within_3se(np.abs(h) ** 2, 1.0)
    _within_3se(np.abs(h_est) ** 2, 1 / 0.9)
    # E[h conj(h_est)] = rho var(h_est) = sigma_h^2
    _within_3se((h * np.conj(h_est)).real, 1.0)
    _within_3se((h * np.conj(h_est)).imag, 0.0)
    # the error d = h - rho h_est is uncorrelated with the estimate
    d = h - 0.9 * h_est
    _within_3se((d * np.conj(h_est)).real, 0.0)
    _within_3se(np.abs(d) ** 2, 0.1)


def test_snr_inverse_error_variance_in_samples():
    cfg = profile_cfg(20.0, rho=0.8, m=1, error_scaling=ErrorScaling.SNR_INVERSE)
    real = sample_realization(cfg, np.random.default_rng(5), 400_000)
    d = real.sd_true - 0.8 * real.sd_est
    _within_3se(np.abs(d) ** 2, 0.2 / cfg.e_sd)
