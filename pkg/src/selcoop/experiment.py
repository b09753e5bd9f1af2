"""Experiment configuration, sweeps and CSV output.

A config file is flat ``key = value`` text.  Lists are comma separated and
``#`` starts a comment.  Example::

    experiment = aser_vs_snr
    M = 2
    rho = 1, 0.99
    snr_grid_db = 0, 5, 10, 15, 20
    trials = 100000

Every curve of an experiment (one per ``M``, ``rho`` and, where relevant,
combining mode or distance-sweep SNR) becomes a ``metric`` label such as
``ser/M=2/rho=0.99`` in the output CSV.
"""

import csv
import io
import math
import os
import tempfile
from dataclasses import dataclass, field, fields, replace
from enum import Enum

import numpy as np

from . import __version__, analytic
from .channel import ErrorScaling, SystemConfig, derive_stats
from .simulator import Mode, SnrForm, run_sweep

CSV_COLUMNS = ("x", "metric", "estimator", "value", "stderr", "trials")
MIN_TRIALS = 10_000
# curve k draws its random streams from seed + k * CURVE_STRIDE
CURVE_STRIDE = 1 << 32
AUTO_IMPORTANCE_BELOW = 1e-3


class Experiment(str, Enum):
    ASER_VS_SNR = "aser_vs_snr"
    OUTAGE_VS_SNR = "outage_vs_snr"
    OUTAGE_VS_DISTANCE = "outage_vs_distance"
    CAPACITY_VS_SNR = "capacity_vs_snr"
    DIVERSITY_CHECK = "diversity_check"
    SF_VS_APAF = "sf_vs_apaf"


class EnergyProfile(str, Enum):
    PAPER_DEFAULT = "paper_default"
    SYMMETRIC = "symmetric"
    PATHLOSS = "pathloss"


class Importance(str, Enum):
    AUTO = "auto"  # on for rare error and outage events, off for capacity
    ON = "on"
    OFF = "off"


PROFILE_FACTORS = {
    EnergyProfile.PAPER_DEFAULT: (1.0, 0.5, 0.5),
    EnergyProfile.SYMMETRIC: (0.5, 0.5, 0.5),
}


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` and ``line`` locate the culprit."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        self.message = message
        super().__init__(f"line {line}: {message}" if line else message)


def _default_d_grid():
    return tuple(round(0.1 * i, 10) for i in range(1, 10))


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: Experiment
    M: tuple
    rho: tuple
    snr_grid_db: tuple
    error_scaling: ErrorScaling = ErrorScaling.FIXED
    energy_profile: EnergyProfile = EnergyProfile.PAPER_DEFAULT
    pathloss_exponent: float = 8.0
    d_grid: tuple = field(default_factory=_default_d_grid)
    trials: int = 1_000_000
    seed: int = 1
    rate: float = 1.0
    n0: float = 1.0
    k_mod: float = 2.0
    sigma_h_sq: float = 1.0
    snr_form: SnrForm = SnrForm.EXACT
    importance: Importance = Importance.AUTO
    metric: str = None
    fit_span_db: float = 10.0
    output: str = None

    def __post_init__(self):
        def coerce(name, fn):
            try:
                object.__setattr__(self, name, fn(getattr(self, name)))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{name}: {exc}", name) from None

        coerce("experiment", Experiment)
        coerce("error_scaling", ErrorScaling)
        coerce("energy_profile", EnergyProfile)
        coerce("snr_form", SnrForm)
        coerce("importance", Importance)
        for name in ("M", "rho", "snr_grid_db", "d_grid"):
            coerce(name, lambda v: tuple(np.atleast_1d(v).tolist()))
        coerce("M", lambda v: tuple(int(m) for m in v))
        _validate(self)

    @property
    def sweeps_distance(self):
        return self.experiment is Experiment.OUTAGE_VS_DISTANCE

    def resolved_metric(self):
        return {
            Experiment.ASER_VS_SNR: "ser",
            Experiment.DIVERSITY_CHECK: "ser",
            Experiment.OUTAGE_VS_SNR: "outage",
            Experiment.OUTAGE_VS_DISTANCE: "outage",
            Experiment.CAPACITY_VS_SNR: "capacity",
        }.get(self.experiment, self.metric or "ser")


def _increasing(values):
    return len(values) > 0 and all(b > a for a, b in zip(values, values[1:]))


def _validate(cfg):
    def check(ok, name, message):
        if not ok:
            raise ConfigError(message, name)

    check(len(cfg.M) > 0 and all(1 <= m <= analytic.MAX_RELAYS for m in cfg.M), "M",
          f"M must be between 1 and {analytic.MAX_RELAYS}")
    check(len(cfg.rho) > 0 and all(0 < r <= 1 for r in cfg.rho), "rho",
          "rho must be in (0,1]")
    check(_increasing(cfg.snr_grid_db), "snr_grid_db",
          "snr_grid_db must be nonempty and strictly increasing")
    check(_increasing(cfg.d_grid), "d_grid", "d_grid must be nonempty and strictly increasing")
    check(all(0 < d < 1 for d in cfg.d_grid), "d_grid", "d_grid values must be in (0,1)")
    check(cfg.trials >= MIN_TRIALS, "trials", f"trials must be >= {MIN_TRIALS}")
    check(0 <= cfg.seed < 2**63, "seed", "seed must be in [0, 2**63)")
    for name in ("rate", "n0", "k_mod", "sigma_h_sq", "pathloss_exponent", "fit_span_db"):
        check(getattr(cfg, name) > 0, name, f"{name} must be > 0")
    pathloss = cfg.energy_profile is EnergyProfile.PATHLOSS
    check(pathloss == cfg.sweeps_distance, "energy_profile",
          "energy_profile = pathloss goes with experiment = outage_vs_distance and only with it")
    check(cfg.snr_form is SnrForm.APPROX or cfg.k_mod == 2.0, "k_mod",
          "k_mod must be 2 with snr_form = exact (BPSK symbol chain)")
    check(cfg.metric is None or cfg.experiment is Experiment.SF_VS_APAF, "metric",
          "metric only applies to experiment = sf_vs_apaf")
    check(cfg.metric in (None, "ser", "outage", "capacity"), "metric",
          "metric must be ser, outage or capacity")
    check(not (cfg.importance is Importance.ON and cfg.resolved_metric() == "capacity"),
          "importance", "importance = on cannot be used for capacity")
    if cfg.experiment is Experiment.DIVERSITY_CHECK:
        top = cfg.snr_grid_db[-1] - cfg.fit_span_db
        check(sum(x >= top - 1e-9 for x in cfg.snr_grid_db) >= 3, "fit_span_db",
              "diversity_check needs at least 3 grid points within fit_span_db of the top")


# ---------------------------------------------------------------- parsing

def _int(text):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        value = float(text)
    except ValueError:
        value = math.nan
    if not value.is_integer():
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


def _float(text):
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"expected a number, got {text!r}") from None


def _list(item):
    def parse(text):
        parts = [p.strip() for p in text.split(",")]
        if any(p == "" for p in parts):
            raise ValueError(f"malformed list {text!r}")
        return tuple(item(p) for p in parts)

    return parse


def _choice(enum):
    def parse(text):
        try:
            return enum(text.lower())
        except ValueError:
            options = ", ".join(e.value for e in enum)
            raise ValueError(f"expected one of {options}, got {text!r}") from None

    return parse


_PARSERS = {
    "experiment": _choice(Experiment),
    "M": _list(_int),
    "rho": _list(_float),
    "snr_grid_db": _list(_float),
    "error_scaling": _choice(ErrorScaling),
    "energy_profile": _choice(EnergyProfile),
    "pathloss_exponent": _float,
    "d_grid": _list(_float),
    "trials": _int,
    "seed": _int,
    "rate": _float,
    "n0": _float,
    "k_mod": _float,
    "sigma_h_sq": _float,
    "snr_form": _choice(SnrForm),
    "importance": _choice(Importance),
    "metric": str,
    "fit_span_db": _float,
    "output": str,
}
REQUIRED_KEYS = ("experiment", "M", "rho", "snr_grid_db")


def parse_config(text):
    """Parse and validate config text; errors carry the offending line number."""
    values, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"unknown key {key!r}", key, lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", key, lineno)
        if not value:
            raise ConfigError(f"{key}: missing value", key, lineno)
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}", key, lineno) from None
        lines[key] = lineno
    missing = [k for k in REQUIRED_KEYS if k not in values]
    if missing:
        raise ConfigError("missing required keys: " + ", ".join(missing))
    try:
        return ExperimentConfig(**values)
    except ConfigError as exc:
        raise ConfigError(exc.message, exc.field, lines.get(exc.field)) from None


def _format(value):
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(cfg):
    """Config text that :func:`parse_config` maps back to an equal config."""
    out = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if value is not None:
            out.append(f"{f.name} = {_format(value)}")
    return "\n".join(out) + "\n"


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


# ---------------------------------------------------------------- running

def system_config(cfg, relays, rho, snr_db, d=None):
    """:class:`SystemConfig` for one sweep point; ``d`` is the pathloss distance."""
    if cfg.energy_profile is EnergyProfile.PATHLOSS:
        e = cfg.pathloss_exponent
        profile = (1.0, 0.5 / d**e, 0.5 / (1.0 - d) ** e)
    else:
        profile = PROFILE_FACTORS[cfg.energy_profile]
    return SystemConfig.from_profile(relays, 10.0 ** (snr_db / 10.0), profile, rho=rho,
                                     n0=cfg.n0, sigma_h_sq=cfg.sigma_h_sq, k_mod=cfg.k_mod,
                                     rate=cfg.rate, error_scaling=cfg.error_scaling)


def _label(metric, relays, rho, *extra):
    return "/".join([metric, f"M={relays}", f"rho={rho:.15g}", *extra])


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    csv_text: str = ""

    def add(self, x, metric, estimator, value, stderr=None, trials=None):
        self.rows.append((float(x), metric, estimator, float(value),
                          None if stderr is None else float(stderr), trials))

    def series(self, metric, estimator="monte_carlo"):
        rows = [r for r in self.rows if r[1] == metric and r[2] == estimator]
        return (np.array([r[0] for r in rows]), np.array([r[3] for r in rows]),
                np.array([np.nan if r[4] is None else r[4] for r in rows]))


def _analytic_rows(res, metric, label, points):
    for x, sc in points:
        st = derive_stats(sc)
        if metric == "ser":
            res.add(x, label, "analytic_lower", analytic.aser_bound(st, sc.k_mod, "lower_aser"))
            res.add(x, label, "analytic_upper", analytic.aser_bound(st, sc.k_mod, "upper_aser"))
            res.add(x, label, "asymptotic", analytic.aser_asymptotic(st, sc.k_mod, "lower_aser"))
        elif metric == "outage":
            res.add(x, label, "analytic_lower", analytic.outage_bound(st, sc.rate, "lower_outage"))
            res.add(x, label, "analytic_upper", analytic.outage_bound(st, sc.rate, "upper_outage"))
        else:
            res.add(x, label, "analytic_lower",
                    analytic.capacity_bound_per_bandwidth(st, "lower_capacity"))
            res.add(x, label, "analytic_upper",
                    analytic.capacity_bound_per_bandwidth(st, "upper_capacity"))


def fit_diversity(x_db, values, stderr, span_db):
    """Fitted slope over the top ``span_db`` of the grid and its standard error.

    The error propagates each point's relative standard error through the
    least-squares slope of ``log10(value)`` against ``x_db / 10``.
    """
    x_db, values, stderr = map(np.asarray, (x_db, values, stderr))
    keep = x_db >= x_db.max() - span_db - 1e-9
    x, v, s = x_db[keep], values[keep], stderr[keep]
    slope = analytic.estimate_slope(np.column_stack([x, v]))
    u = x / 10.0
    lever = (u - u.mean()) / np.sum((u - u.mean()) ** 2)
    sigma_log = s / (v * math.log(10.0))
    return slope, float(np.sqrt(np.sum((lever * sigma_log) ** 2)))


def importance_flags(cfg, points):
    """Per-point importance-sampling switch.

    ``auto`` samples with importance only where the analytic upper bound of
    the metric is below ``AUTO_IMPORTANCE_BELOW``; plain sampling is already
    efficient for frequent events and gives binomial standard errors.
    """
    metric = cfg.resolved_metric()
    if cfg.importance is Importance.OFF or metric == "capacity":
        return [False] * len(points)
    if cfg.importance is Importance.ON:
        return [True] * len(points)
    flags = []
    for _, sc in points:
        st = derive_stats(sc)
        if metric == "ser":
            upper = analytic.aser_bound(st, sc.k_mod, "upper_aser")
        else:
            upper = analytic.outage_bound(st, sc.rate, "upper_outage")
        flags.append(upper < AUTO_IMPORTANCE_BELOW)
    return flags


def _curves(cfg):
    modes = (Mode.S_AF, Mode.AP_AF) if cfg.experiment is Experiment.SF_VS_APAF else (Mode.S_AF,)
    out = []
    for relays in cfg.M:
        for rho in cfg.rho:
            if cfg.sweeps_distance:
                for snr_db in cfg.snr_grid_db:
                    pts = [(d, system_config(cfg, relays, rho, snr_db, d)) for d in cfg.d_grid]
                    out.append((relays, rho, Mode.S_AF, f"snr_db={snr_db:g}", pts))
            else:
                for mode in modes:
                    pts = [(x, system_config(cfg, relays, rho, x)) for x in cfg.snr_grid_db]
                    tag = mode.value if len(modes) > 1 else None
                    out.append((relays, rho, mode, tag, pts))
    return out


def run_experiment(cfg, threads=1, write=True):
    """Run every curve of ``cfg``; writes the CSV to ``cfg.output`` once all are done."""
    metric = cfg.resolved_metric()
    res = ExperimentResult(cfg)
    fits = {}
    for k, (relays, rho, mode, tag, points) in enumerate(_curves(cfg)):
        label = _label(metric, relays, rho, *([tag] if tag else []))
        sweep = run_sweep(points, cfg.trials, metrics=(metric,),
                          seed=cfg.seed + k * CURVE_STRIDE, mode=mode,
                          snr_form=cfg.snr_form, importance=importance_flags(cfg, points),
                          threads=threads)
        for row in sweep.rows:
            res.add(row.x, label, "monte_carlo", row.value, row.stderr, row.trials)
        if mode is Mode.S_AF:
            _analytic_rows(res, metric, label, points)
        if cfg.experiment in (Experiment.DIVERSITY_CHECK, Experiment.SF_VS_APAF) and metric == "ser":
            x, v, s = sweep.series(metric)
            if np.any(v <= 0):
                raise ValueError(f"{label}: zero simulated errors in the fit window; "
                                 "raise trials or enable importance sampling")
            fits[label] = (relays, rho, mode, *fit_diversity(x, v, s, cfg.fit_span_db))

    top = cfg.snr_grid_db[-1]
    lo = top - cfg.fit_span_db
    for label, (relays, rho, mode, slope, se) in fits.items():
        cfg_top = system_config(cfg, relays, rho, top)
        predicted = analytic.diversity_prediction(cfg_top)
        name = _label("diversity", relays, rho, *([mode.value] if cfg.experiment is
                                                   Experiment.SF_VS_APAF else []))
        res.add(top, name, "monte_carlo", slope, se, cfg.trials)
        res.add(top, name, "asymptotic", predicted)
        res.notes.append(f"{label}: fitted diversity {slope:.3f} +- {se:.3f} over "
                         f"{lo:g}..{top:g} dB, predicted {predicted:g}")

    res.csv_text = format_csv(res)
    if write and cfg.output:
        write_atomic(cfg.output, res.csv_text)
    return res


def format_csv(res):
    cfg = res.config
    buf = io.StringIO()
    x_name = "normalized source-relay distance" if cfg.sweeps_distance else "P0/N0 in dB"
    header = [
        f"selcoop {__version__}",
        f"x = {x_name}",
        "capacity in bit/s/Hz with prelog 1/2 for S-AF and 1/(M+1) for AP-AF",
        "analytic ser rows: lower/upper ASER bounds and the high-SNR asymptote of the lower one",
        "config:",
    ]
    header += serialize_config(replace(cfg, output=None)).splitlines()
    header += [f"note: {n}" for n in res.notes]
    for line in header:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for x, metric, estimator, value, stderr, trials in res.rows:
        writer.writerow([repr(x), metric, estimator, repr(value),
                         "" if stderr is None else repr(stderr),
                         "" if trials is None else trials])
    return buf.getvalue()


def write_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".selcoop-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_csv(text):
    """Data rows of an experiment CSV as dicts, header comments skipped."""
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(body))


# ---------------------------------------------------------------- presets

_SNR_0_40 = "0, 5, 10, 15, 20, 25, 30, 35, 40"

PRESET_TEXT = {
    "fig2": f"""
        experiment = aser_vs_snr
        M = 2
        rho = 1, 0.99, 0.9
        snr_grid_db = {_SNR_0_40}
    """,
    "fig3": f"""
        experiment = aser_vs_snr
        M = 3
        rho = 1, 0.99, 0.9
        snr_grid_db = {_SNR_0_40}
    """,
    "fig4": f"""
        experiment = outage_vs_snr
        M = 2, 3
        rho = 1, 0.99, 0.9
        snr_grid_db = {_SNR_0_40}
    """,
    "fig5": """
        experiment = outage_vs_distance
        M = 2
        rho = 1
        energy_profile = pathloss
        snr_grid_db = -10, -5, 0
        d_grid = 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9
    """,
    "fig7": """
        experiment = sf_vs_apaf
        M = 2
        rho = 1
        metric = ser
        snr_grid_db = 0, 5, 10, 15, 20, 25, 30
    """,
    "fig8": f"""
        experiment = aser_vs_snr
        M = 2, 3
        rho = 1, 0.9
        error_scaling = snr_inverse
        energy_profile = symmetric
        snr_grid_db = {_SNR_0_40}
    """,
    "fig9": f"""
        experiment = capacity_vs_snr
        M = 2
        rho = 1, 0.99, 0.9
        snr_grid_db = {_SNR_0_40}
    """,
    "fig10": f"""
        experiment = sf_vs_apaf
        M = 2, 3, 6, 9
        rho = 1
        metric = capacity
        snr_grid_db = {_SNR_0_40}
    """,
}


def preset(name):
    if name not in PRESET_TEXT:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(PRESET_TEXT)}")
    return parse_config(PRESET_TEXT[name])
