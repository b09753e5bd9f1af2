"""Monte Carlo engine for selection (S-AF) and all-participate (AP-AF) relaying.

Two SNR forms are supported:

``exact``
    Full symbol-level chain: BPSK source phase, estimate-based power
    normalisation at every relay, relay phase, and a maximum ratio combiner
    whose weights use only channel estimates.  The relay is chosen by the
    effective SNR that keeps the ``1 + eps_si * eps_id`` denominator term.
``approx``
    Relay metric without that term, and a Gaussian-equivalent detector: the
    decision statistic is ``sqrt(k * gamma_r) * x + w`` with ``w ~ N(0, 1)``.
    This is the system the closed-form bounds describe.

Importance sampling (optional) draws the channel estimates with shrunk
variance so that deep fades are common, and reweights every trial by the
likelihood ratio.  It is meant for error and outage rates far below
``1 / trials``.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .channel import ChannelRealization, derive_stats, draw_link, sample_realization


class Mode(str, Enum):
    S_AF = "s_af"
    AP_AF = "ap_af"


class SnrForm(str, Enum):
    EXACT = "exact"
    APPROX = "approx"


METRICS = ("ser", "outage", "capacity")
DEFAULT_CHUNK = 1 << 16
# importance-sampling tilt aims each biased link at this mean effective SNR
IS_TARGET_SNR = 2.0


@dataclass
class SnrSample:
    gamma_sd_eff: np.ndarray
    gamma_i_eff: np.ndarray
    selected_index: np.ndarray
    gamma_r: np.ndarray


@dataclass
class TrialOutcome:
    symbol_error: bool
    in_outage: bool
    instant_capacity: float


@dataclass
class TrialBatch:
    snr: SnrSample
    symbol_error: np.ndarray
    in_outage: np.ndarray
    capacity: np.ndarray
    weight: np.ndarray = None


def prelog(cfg, mode):
    """Fraction of time slots carrying new symbols: 1/2 for S-AF, 1/(M+1) for AP-AF."""
    return 0.5 if Mode(mode) is Mode.S_AF else 1.0 / (cfg.relay_count + 1)


def outage_threshold(cfg, mode):
    return 2.0 ** (cfg.rate / prelog(cfg, mode)) - 1.0


def effective_snrs(cfg, stats, real, snr_form=SnrForm.EXACT):
    """Direct-path and per-relay effective SNRs computed from channel estimates."""
    g_sd = cfg.e_sd * np.abs(real.sd_est) ** 2 / cfg.n0
    g_si = cfg.e_si * np.abs(real.si_est) ** 2 / cfg.n0
    g_id = cfg.e_id * np.abs(real.id_est) ** 2 / cfg.n0
    gamma_sd = cfg.rho_sd**2 * g_sd / (1.0 + stats.eps_sd)
    den = g_si * stats.lam_si + g_id * stats.lam_id
    if SnrForm(snr_form) is SnrForm.EXACT:
        den = den + stats.eps_si * stats.eps_id + 1.0
    num = cfg.rho_si**2 * cfg.rho_id**2 * g_si * g_id
    gamma_i = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return gamma_sd, gamma_i


def select_relay(gamma_i_eff):
    """Index of the relay with the largest effective SNR (smallest timer ``1/gamma``)."""
    return np.argmax(gamma_i_eff, axis=-1)


def snr_sample(cfg, stats, real, mode=Mode.S_AF, snr_form=SnrForm.EXACT):
    gamma_sd, gamma_i = effective_snrs(cfg, stats, real, snr_form)
    sel = select_relay(gamma_i)
    if Mode(mode) is Mode.S_AF:
        relay = np.take_along_axis(gamma_i, sel[..., None], axis=-1)[..., 0]
    else:
        relay = gamma_i.sum(axis=-1)
    return SnrSample(gamma_sd, gamma_i, sel, gamma_sd + relay)


def _importance_tilts(cfg, stats):
    c = cfg.rho_si**2 * cfg.rho_id**2
    scale_sd = stats.mu_bar
    scale_si = c * stats.gbar_si / stats.lam_id
    scale_id = c * stats.gbar_id / stats.lam_si
    tilt = lambda scale: np.maximum(1.0, np.asarray(scale) / IS_TARGET_SNR)
    return tilt(scale_sd), tilt(scale_si), tilt(scale_id)


def _log_ratio(t, u):
    # log of biased/nominal density of a unit-mean exponential tilted to mean 1/t
    return np.log(t) - (t - 1.0) * u


def _sample_biased(cfg, stats, rng, n):
    """Channel draws with biased estimates; returns the realisation and trial weights."""
    m = cfg.relay_count
    t_sd, t_si, t_id = _importance_tilts(cfg, stats)
    var_sd = cfg.est_variance(cfg.rho_sd)
    var_si = cfg.est_variance(cfg.rho_si)
    var_id = cfg.est_variance(cfg.rho_id)
    # per relay one hop (chosen uniformly) is biased: defensive two-component mixture
    bias_si = rng.random((n, m)) < 0.5
    sd_true, sd_est = draw_link(rng, cfg.rho_sd, var_sd / t_sd,
                                cfg.error_variance(cfg.rho_sd, cfg.e_sd), (n,))
    si_var = np.where(bias_si, var_si / t_si, var_si)
    id_var = np.where(bias_si, var_id, var_id / t_id)
    si_true, si_est = draw_link(rng, cfg.rho_si, si_var,
                                cfg.error_variance(cfg.rho_si, cfg.e_si), (n, m))
    id_true, id_est = draw_link(rng, cfg.rho_id, id_var,
                                cfg.error_variance(cfg.rho_id, cfg.e_id), (n, m))
    u_sd = np.abs(sd_est) ** 2 / var_sd
    u_si = np.abs(si_est) ** 2 / var_si
    u_id = np.abs(id_est) ** 2 / var_id
    log_mix = np.logaddexp(_log_ratio(t_si, u_si), _log_ratio(t_id, u_id)) - math.log(2.0)
    log_w = -_log_ratio(t_sd, u_sd) - log_mix.sum(axis=-1)
    real = ChannelRealization(sd_true, sd_est, si_true, si_est, id_true, id_est, cfg.n0)
    return real, np.exp(log_w)


def _noise(rng, n0, shape):
    s = math.sqrt(n0 / 2.0)
    return s * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def _symbol_errors_exact(cfg, real, snr, mode, rng, x):
    """Hard BPSK decisions at the output of the estimate-weighted MRC."""
    n0 = cfg.n0
    n = x.shape[0]
    m = cfg.relay_count
    n_sd = _noise(rng, n0, (n,))
    n_si = _noise(rng, n0, (n, m))
    n_id = _noise(rng, n0, (n, m))

    y_sd = math.sqrt(cfg.e_sd) * real.sd_true * x + n_sd
    y_si = np.sqrt(cfg.e_si) * real.si_true * x[:, None] + n_si
    p_si = cfg.e_si * np.abs(real.si_est) ** 2
    norm = np.sqrt(p_si + n0)
    y_id = np.sqrt(cfg.e_id) * real.id_true * (y_si / norm) + n_id

    alpha = np.sqrt(cfg.e_si * cfg.e_id) / norm
    omega_sq = (p_si + cfg.e_id * np.abs(real.id_est) ** 2 + n0) / (p_si + n0)
    branch = (alpha * np.conj(real.si_est) * np.conj(real.id_est)
              / (omega_sq * n0)) * y_id
    direct = np.conj(real.sd_est) * math.sqrt(cfg.e_sd) / n0 * y_sd
    if Mode(mode) is Mode.S_AF:
        relay = np.take_along_axis(branch, snr.selected_index[:, None], axis=1)[:, 0]
    else:
        relay = branch.sum(axis=1)
    x_hat = direct + relay
    return np.where(x_hat.real >= 0, 1.0, -1.0) != x


def simulate_batch(cfg, stats, rng, n, mode=Mode.S_AF, snr_form=SnrForm.EXACT,
                   importance=False):
    """Run ``n`` independent trials and return per-trial outcomes."""
    mode, snr_form = Mode(mode), SnrForm(snr_form)
    if snr_form is SnrForm.EXACT and cfg.k_mod != 2.0:
        raise ValueError("the exact symbol-level chain is BPSK only (k_mod = 2)")
    if importance:
        real, weight = _sample_biased(cfg, stats, rng, n)
    else:
        real, weight = sample_realization(cfg, rng, n), None
    snr = snr_sample(cfg, stats, real, mode, snr_form)
    x = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    if snr_form is SnrForm.EXACT:
        err = _symbol_errors_exact(cfg, real, snr, mode, rng, x)
    else:
        w = rng.standard_normal(n)
        z = np.sqrt(cfg.k_mod * snr.gamma_r) * x + w
        err = np.where(z >= 0, 1.0, -1.0) != x
    outage = snr.gamma_r <= outage_threshold(cfg, mode)
    capacity = prelog(cfg, mode) * np.log2(1.0 + snr.gamma_r)
    return TrialBatch(snr, err, outage, capacity, weight)


def run_trial(cfg, stats, rng, mode=Mode.S_AF, snr_form=SnrForm.EXACT):
    b = simulate_batch(cfg, stats, rng, 1, mode, snr_form)
    return TrialOutcome(bool(b.symbol_error[0]), bool(b.in_outage[0]), float(b.capacity[0]))


@dataclass
class SweepRow:
    x: float
    metric: str
    estimator: str
    value: float
    stderr: float = None
    trials: int = None


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)

    def add(self, *args, **kwargs):
        self.rows.append(SweepRow(*args, **kwargs))

    def select(self, metric=None, estimator=None):
        return [r for r in self.rows
                if (metric is None or r.metric == metric)
                and (estimator is None or r.estimator == estimator)]

    def series(self, metric, estimator="monte_carlo"):
        rows = self.select(metric, estimator)
        return (np.array([r.x for r in rows]), np.array([r.value for r in rows]),
                np.array([np.nan if r.stderr is None else r.stderr for r in rows]))


def _chunk_sums(task):
    cfg, stats, n, seed, mode, snr_form, importance, metrics = task
    rng = np.random.default_rng(seed)
    b = simulate_batch(cfg, stats, rng, n, mode, snr_form, importance)
    w = np.ones(n) if b.weight is None else b.weight
    sums = {}
    for name, values in (("ser", b.symbol_error), ("outage", b.in_outage),
                         ("capacity", b.capacity)):
        if name in metrics:
            v = w * values
            sums[name] = (float(v.sum()), float((v * v).sum()))
    return n, sums


def run_sweep(points, trials, metrics=METRICS, seed=0, mode=Mode.S_AF,
              snr_form=SnrForm.EXACT, importance=False, threads=1,
              chunk_size=DEFAULT_CHUNK):
    """Monte Carlo estimates of ``metrics`` at every ``(x, SystemConfig)`` point.

    ``importance`` is one flag for the whole sweep or one per point.
    Trials are split into fixed chunks; chunk ``j`` over the whole sweep uses
    the generator seeded with ``seed + j``, so results do not depend on
    ``threads``.
    """
    metrics = tuple(metrics)
    unknown = set(metrics) - set(METRICS)
    if unknown:
        raise ValueError(f"unknown metrics {sorted(unknown)}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    points = list(points)
    flags = np.broadcast_to(np.asarray(importance, dtype=bool), (len(points),))
    if flags.any() and "capacity" in metrics:
        raise ValueError("capacity is not estimable under importance sampling")
    tasks, owners = [], []
    stream = 0
    for p, (_, cfg) in enumerate(points):
        stats = derive_stats(cfg)
        left = trials
        while left > 0:
            n = min(chunk_size, left)
            tasks.append((cfg, stats, n, seed + stream, mode, snr_form, bool(flags[p]),
                          metrics))
            owners.append(p)
            stream += 1
            left -= n
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_chunk_sums, tasks))
    else:
        results = [_chunk_sums(t) for t in tasks]

    out = SweepResult()
    for p, (x, _) in enumerate(points):
        mine = [r for r, o in zip(results, owners) if o == p]
        n = sum(r[0] for r in mine)
        for name in metrics:
            s1 = math.fsum(r[1][name][0] for r in mine)
            s2 = math.fsum(r[1][name][1] for r in mine)
            mean = s1 / n
            if name == "capacity" or flags[p]:
                var = max(s2 / n - mean * mean, 0.0)
                se = math.sqrt(var / n)
            else:
                se = math.sqrt(mean * (1.0 - mean) / n)
            out.add(float(x), name, "monte_carlo", mean, se, n)
    return out
