import math
from dataclasses import replace

import numpy as np
import pytest

from selcoop import experiment as ex
from selcoop.experiment import (ConfigError, Experiment, ExperimentConfig, Importance,
                                parse_config, preset, serialize_config)

SMALL = """
experiment = aser_vs_snr   # trailing comment
M = 2
rho = 1, 0.9
snr_grid_db = 0, 10
trials = 1e4
seed = 3
"""


def test_parse_minimal_config_with_defaults():
    cfg = parse_config(SMALL)
    assert cfg.experiment is Experiment.ASER_VS_SNR
    assert cfg.M == (2,) and cfg.rho == (1.0, 0.9) and cfg.snr_grid_db == (0.0, 10.0)
    assert cfg.trials == 10_000 and cfg.seed == 3
    assert cfg.importance is Importance.AUTO and cfg.pathloss_exponent == 8.0
    assert cfg.resolved_metric() == "ser"


def test_empty_config_lists_required_keys():
    with pytest.raises(ConfigError) as info:
        parse_config("# nothing here\n\n")
    for key in ex.REQUIRED_KEYS:
        assert key in str(info.value)


def test_out_of_range_rho_names_field_and_line():
    text = SMALL.replace("rho = 1, 0.9", "rho = 1.5")
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    err = info.value
    assert err.field == "rho" and err.line == 4
    assert str(err) == "line 4: rho must be in (0,1]"


@pytest.mark.parametrize("line, match", [
    ("colour = red", "unknown key 'colour'"),
    ("M = 3", "duplicate key 'M'"),
    ("trials = many", "expected an integer"),
    ("trials = 1.5e4 5", "expected an integer"),
    ("seed = 2.5", "expected an integer"),
    ("rate =", "rate: missing value"),
    ("snr_form = fancy", "expected one of exact, approx"),
    ("d_grid = 0.2,,0.5", "malformed list"),
    ("just words", "expected 'key = value'"),
])
def test_parse_errors(line, match):
    base = SMALL.split("trials")[0]
    with pytest.raises(ConfigError, match=match) as info:
        parse_config(base + line + "\n")
    assert info.value.line == base.count("\n") + 1


@pytest.mark.parametrize("change, field", [
    (dict(trials=9_999), "trials"),
    (dict(snr_grid_db=(10.0, 0.0)), "snr_grid_db"),
    (dict(M=(0,)), "M"),
    (dict(d_grid=(0.0, 0.5)), "d_grid"),
    (dict(energy_profile="pathloss"), "energy_profile"),
    (dict(k_mod=1.0), "k_mod"),
    (dict(metric="capacity"), "metric"),
    (dict(rate=0.0), "rate"),
    (dict(experiment="diversity_check"), "fit_span_db"),
    (dict(experiment="capacity_vs_snr", importance="on"), "importance"),
])
def test_semantic_validation(change, field):
    with pytest.raises(ConfigError) as info:
        replace(parse_config(SMALL), **change)
    assert info.value.field == field


def test_approx_form_allows_other_constellations():
    cfg = replace(parse_config(SMALL), k_mod=1.0, snr_form="approx")
    assert cfg.k_mod == 1.0


@pytest.mark.parametrize("name", sorted(ex.PRESET_TEXT))
def test_preset_round_trip(name):
    cfg = preset(name)
    again = parse_config(serialize_config(cfg))
    assert again == cfg
    assert serialize_config(again) == serialize_config(cfg)


def test_unknown_preset():
    with pytest.raises(KeyError, match="fig2"):
        preset("fig6")


def test_pathloss_profile_energies():
    cfg = preset("fig5")
    sc = ex.system_config(cfg, 2, 1.0, 0.0, 0.25)
    np.testing.assert_allclose(sc.e_si, 0.5 / 0.25**8)
    np.testing.assert_allclose(sc.e_id, 0.5 / 0.75**8)
    assert sc.e_sd == 1.0


def test_symmetric_profile_energies():
    sc = ex.system_config(preset("fig8"), 3, 0.9, 20.0)
    np.testing.assert_allclose([sc.e_sd, *sc.e_si, *sc.e_id], 50.0)


def test_auto_importance_switches_on_at_high_snr():
    cfg = replace(preset("fig2"), trials=10_000)
    pts = [(x, ex.system_config(cfg, 2, 1.0, x)) for x in cfg.snr_grid_db]
    flags = ex.importance_flags(cfg, pts)
    assert flags[0] is False and flags[-1] is True
    assert flags == sorted(flags)
    assert not any(ex.importance_flags(replace(cfg, importance="off"), pts))
    assert all(ex.importance_flags(replace(cfg, importance="on"), pts))


def test_fit_diversity_recovers_known_slope():
    x = np.array([20.0, 25.0, 30.0])
    v = 3e-2 * 10 ** (-3 * x / 10)
    slope, se = ex.fit_diversity(x, v, 0.1 * v, 10.0)
    np.testing.assert_allclose(slope, 3.0, rtol=1e-12)
    # three points with 10% relative error each
    u = x / 10 - 2.5
    expected = math.sqrt(np.sum((u / np.sum(u**2)) ** 2)) * 0.1 / math.log(10)
    np.testing.assert_allclose(se, expected, rtol=1e-12)


def test_csv_layout():
    res = ex.run_experiment(parse_config(SMALL))
    text = res.csv_text
    header = [line for line in text.splitlines() if line.startswith("#")]
    assert header[0].startswith("# selcoop ")
    assert "# experiment = aser_vs_snr" in header
    rows = ex.read_csv(text)
    assert tuple(rows[0]) == ex.CSV_COLUMNS
    assert {r["metric"] for r in rows} == {"ser/M=2/rho=1", "ser/M=2/rho=0.9"}
    est = {r["estimator"] for r in rows}
    assert est == {"monte_carlo", "analytic_lower", "analytic_upper", "asymptotic"}
    for r in rows:
        if r["estimator"] == "monte_carlo":
            assert int(r["trials"]) == 10_000 and float(r["stderr"]) > 0
        else:
            assert r["trials"] == "" and r["stderr"] == ""
    assert len(rows) == 2 * 2 * 4


def test_monte_carlo_rows_respect_bounds():
    res = ex.run_experiment(replace(parse_config(SMALL), snr_form="approx", trials=40_000))
    for label in ("ser/M=2/rho=1", "ser/M=2/rho=0.9"):
        _, mc, se = res.series(label)
        _, lo, _ = res.series(label, "analytic_lower")
        _, hi, _ = res.series(label, "analytic_upper")
        assert np.all(lo - 3 * se <= mc) and np.all(mc <= hi + 3 * se)


def test_output_is_thread_and_rerun_invariant():
    cfg = parse_config(SMALL)
    one = ex.run_experiment(cfg).csv_text
    assert ex.run_experiment(cfg).csv_text == one
    assert ex.run_experiment(cfg, threads=2).csv_text == one
    assert ex.run_experiment(replace(cfg, seed=4)).csv_text != one


def test_nearby_rho_values_get_distinct_labels_and_streams():
    cfg = replace(parse_config(SMALL), rho=(1.0, 0.9999999))
    res = ex.run_experiment(cfg)
    a = res.series("ser/M=2/rho=1")[1]
    b = res.series("ser/M=2/rho=0.9999999")[1]
    assert a.size == b.size == 2
    assert not np.array_equal(a, b)


def test_written_file_matches_returned_text(tmp_path):
    out = tmp_path / "sweep.csv"
    res = ex.run_experiment(replace(parse_config(SMALL), output=str(out)))
    assert out.read_text() == res.csv_text
    assert "output" not in res.csv_text


def test_failed_run_leaves_no_partial_file(tmp_path, monkeypatch):
    out = tmp_path / "sweep.csv"
    out.write_text("previous\n")
    real = ex.run_sweep
    calls = []

    def flaky(*args, **kwargs):
        calls.append(1)
        if len(calls) == 2:
            raise RuntimeError("worker died")
        return real(*args, **kwargs)

    monkeypatch.setattr(ex, "run_sweep", flaky)
    with pytest.raises(RuntimeError):
        ex.run_experiment(replace(parse_config(SMALL), output=str(out)))
    assert out.read_text() == "previous\n"
    assert [p.name for p in tmp_path.iterdir()] == ["sweep.csv"]


def test_diversity_check_reports_fit_and_prediction():
    cfg = ExperimentConfig(experiment="diversity_check", M=(2,), rho=(1.0,),
                           snr_grid_db=(20.0, 25.0, 30.0), trials=50_000, seed=5)
    res = ex.run_experiment(cfg)
    x, slope, se = res.series("diversity/M=2/rho=1")
    _, pred, _ = res.series("diversity/M=2/rho=1", "asymptotic")
    assert pred[0] == 3
    assert abs(slope[0] - 3) < max(4 * se[0], 0.5)
    assert any("fitted diversity" in n for n in res.notes)


def test_sf_vs_apaf_capacity_has_both_modes():
    cfg = replace(preset("fig10"), M=(2,), snr_grid_db=(10.0, 20.0), trials=10_000)
    res = ex.run_experiment(cfg)
    _, sa, _ = res.series("capacity/M=2/rho=1/s_af")
    _, ap, _ = res.series("capacity/M=2/rho=1/ap_af")
    assert np.all(sa > ap)
    _, lo, _ = res.series("capacity/M=2/rho=1/s_af", "analytic_lower")
    assert lo.size == 2
    assert res.series("capacity/M=2/rho=1/ap_af", "analytic_lower")[1].size == 0


def test_distance_sweep_is_symmetric_with_minimum_in_the_middle():
    cfg = replace(preset("fig5"), snr_grid_db=(0.0,), trials=10_000)
    res = ex.run_experiment(cfg)
    d, lo, _ = res.series("outage/M=2/rho=1/snr_db=0", "analytic_lower")
    np.testing.assert_allclose(lo, lo[::-1], rtol=1e-9)
    assert d[np.argmin(lo)] == 0.5
