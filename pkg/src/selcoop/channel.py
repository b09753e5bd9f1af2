"""System configuration, per-link statistics and channel sampling.

Every link carries a true gain ``h`` and the receiver's estimate ``h_est``
tied together by ``h = rho * h_est + d`` with ``d ~ CN(0, sigma_d2)``
independent of the estimate.  Estimation quality is parameterised by
``rho`` with the true-channel variance fixed, so that
``var(h_est) = sigma_h_sq / rho`` and ``sigma_d2 = (1 - rho) * sigma_h_sq``.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class ErrorScaling(str, Enum):
    FIXED = "fixed"
    SNR_INVERSE = "snr_inverse"


def _per_relay(value, m, name):
    try:
        return np.broadcast_to(np.asarray(value, dtype=float), (m,)).copy()
    except ValueError:
        raise ValueError(f"{name} must be a scalar or have length {m}") from None


@dataclass
class SystemConfig:
    """Selection-relaying system parameters (linear scale throughout).

    Per-relay fields accept a scalar, which is broadcast to every relay.
    """

    relay_count: int
    e_sd: float
    e_si: np.ndarray
    e_id: np.ndarray
    n0: float = 1.0
    rho_sd: float = 1.0
    rho_si: np.ndarray = 1.0
    rho_id: np.ndarray = 1.0
    sigma_h_sq: float = 1.0
    k_mod: float = 2.0
    rate: float = 1.0
    error_scaling: ErrorScaling = ErrorScaling.FIXED

    def __post_init__(self):
        m = int(self.relay_count)
        if m < 1:
            raise ValueError("relay_count must be >= 1")
        self.relay_count = m
        self.e_sd = float(self.e_sd)
        self.e_si = _per_relay(self.e_si, m, "e_si")
        self.e_id = _per_relay(self.e_id, m, "e_id")
        self.rho_sd = float(self.rho_sd)
        self.rho_si = _per_relay(self.rho_si, m, "rho_si")
        self.rho_id = _per_relay(self.rho_id, m, "rho_id")
        self.error_scaling = ErrorScaling(self.error_scaling)
        if self.e_sd <= 0 or np.any(self.e_si <= 0) or np.any(self.e_id <= 0):
            raise ValueError("all energies must be > 0")
        if self.n0 <= 0:
            raise ValueError("n0 must be > 0")
        for name in ("rho_sd", "rho_si", "rho_id"):
            rho = np.asarray(getattr(self, name))
            if np.any(rho <= 0) or np.any(rho > 1):
                raise ValueError(f"{name} must be in (0, 1]")
        if self.sigma_h_sq <= 0:
            raise ValueError("sigma_h_sq must be > 0")
        if self.k_mod <= 0:
            raise ValueError("k_mod must be > 0")
        if self.rate <= 0:
            raise ValueError("rate must be > 0")

    @classmethod
    def from_profile(cls, relay_count, p0_over_n0, profile=(1.0, 0.5, 0.5),
                     rho=1.0, **kwargs):
        """Energies ``profile * P0`` with ``N0 = 1`` and a common ``rho``."""
        f_sd, f_si, f_id = profile
        n0 = kwargs.pop("n0", 1.0)
        p0 = p0_over_n0 * n0
        return cls(relay_count=relay_count, e_sd=f_sd * p0, e_si=np.multiply(f_si, p0),
                   e_id=np.multiply(f_id, p0), n0=n0, rho_sd=rho, rho_si=rho,
                   rho_id=rho, **kwargs)

    @property
    def perfect_csi(self):
        return (self.rho_sd == 1.0 and np.all(self.rho_si == 1.0)
                and np.all(self.rho_id == 1.0))

    def est_variance(self, rho):
        return self.sigma_h_sq / np.asarray(rho, dtype=float)

    def error_variance(self, rho, energy):
        """Per-link ``sigma_D^2``; shrinks as ``N0/E`` under snr_inverse scaling."""
        var = (1.0 - np.asarray(rho, dtype=float)) * self.sigma_h_sq
        if self.error_scaling is ErrorScaling.SNR_INVERSE:
            var = var / (np.asarray(energy, dtype=float) / self.n0)
        return var


@dataclass
class LinkStats:
    gbar_sd: float
    gbar_si: np.ndarray
    gbar_id: np.ndarray
    eps_sd: float
    eps_si: np.ndarray
    eps_id: np.ndarray
    lam_si: np.ndarray
    lam_id: np.ndarray
    beta: np.ndarray
    mu_bar: float

    @property
    def relay_count(self):
        return len(self.beta)


def derive_stats(cfg):
    """Average SNRs, epsilon/lambda factors, ``beta_i`` and ``mu_bar`` of ``cfg``.

    Average SNRs refer to the estimated channel, ``E * var(h_est) / N0``.
    """
    snr_sd = cfg.e_sd / cfg.n0
    snr_si = cfg.e_si / cfg.n0
    snr_id = cfg.e_id / cfg.n0

    gbar_sd = snr_sd * cfg.est_variance(cfg.rho_sd)
    gbar_si = snr_si * cfg.est_variance(cfg.rho_si)
    gbar_id = snr_id * cfg.est_variance(cfg.rho_id)

    eps_sd = snr_sd * cfg.error_variance(cfg.rho_sd, cfg.e_sd)
    eps_si = snr_si * cfg.error_variance(cfg.rho_si, cfg.e_si)
    eps_id = snr_id * cfg.error_variance(cfg.rho_id, cfg.e_id)

    lam_si = 1.0 + cfg.rho_si**2 * eps_id
    lam_id = 1.0 + cfg.rho_id**2 * eps_si
    beta = (gbar_si * gbar_id * cfg.rho_si**2 * cfg.rho_id**2
            / (lam_si * gbar_si + lam_id * gbar_id))
    mu_bar = cfg.rho_sd**2 * gbar_sd / (1.0 + eps_sd)
    return LinkStats(gbar_sd=float(gbar_sd), gbar_si=gbar_si, gbar_id=gbar_id,
                     eps_sd=float(eps_sd), eps_si=eps_si, eps_id=eps_id,
                     lam_si=lam_si, lam_id=lam_id, beta=beta, mu_bar=float(mu_bar))


@dataclass
class ChannelRealization:
    """True and estimated gains of all ``2M + 1`` links.

    With ``size=n`` sampling, ``sd_*`` have shape ``(n,)`` and the relay
    arrays ``(n, M)``; a single draw drops the leading axis.
    """

    sd_true: np.ndarray
    sd_est: np.ndarray
    si_true: np.ndarray
    si_est: np.ndarray
    id_true: np.ndarray
    id_est: np.ndarray
    n0: float = field(default=1.0)


def complex_normal(rng, variance, shape):
    """Circular ``CN(0, variance)`` samples: each quadrature has ``variance / 2``."""
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def draw_link(rng, rho, est_var, err_var, shape):
    """Draw ``(h, h_est)`` with ``h_est ~ CN(0, est_var)`` and ``h = rho h_est + d``."""
    h_est = complex_normal(rng, est_var, shape)
    d = complex_normal(rng, err_var, shape)
    return rho * h_est + d, h_est


def sample_realization(cfg, rng, size=None):
    """Sample independent channel realisations for every link of ``cfg``.

    ``rng`` is a :class:`numpy.random.Generator` owned by the caller.
    """
    m = cfg.relay_count
    n = 1 if size is None else int(size)
    sd_true, sd_est = draw_link(rng, cfg.rho_sd, cfg.est_variance(cfg.rho_sd),
                                cfg.error_variance(cfg.rho_sd, cfg.e_sd), (n,))
    si_true, si_est = draw_link(rng, cfg.rho_si, cfg.est_variance(cfg.rho_si),
                                cfg.error_variance(cfg.rho_si, cfg.e_si), (n, m))
    id_true, id_est = draw_link(rng, cfg.rho_id, cfg.est_variance(cfg.rho_id),
                                cfg.error_variance(cfg.rho_id, cfg.e_id), (n, m))
    if size is None:
        sd_true, sd_est = sd_true[0], sd_est[0]
        si_true, si_est, id_true, id_est = si_true[0], si_est[0], id_true[0], id_est[0]
    return ChannelRealization(sd_true, sd_est, si_true, si_est, id_true, id_est, cfg.n0)
