import json
from pathlib import Path

import numpy as np
import pytest
import yaml

from main import main, parse_arguments
from src.experiments.ledger import CheckLedger
from src.experiments.verify import (decay_checks, field_checks, geometry_checks, limits_checks,
                                    nonvanish_chain_checks, scheme_checks, sweep_checks)
from src.geometry.cone import ConeChart
from src.limits.blowup import CenterSeries, blowup_fit
from src.scheme.picard import IncrementTailReport
from src.utils.config import ConfigManager
from src.utils.errors import EXIT_CHECK_FAILURE, EXIT_OK, EXIT_USAGE

DEFAULT_CONFIG = Path(__file__).parent.parent / "src" / "utils" / "config.yaml"


def _write_config(tmp_path: Path, **sections) -> Path:
    """Small-grid copy of the default configuration with section overrides."""
    config = yaml.safe_load(DEFAULT_CONFIG.read_text())
    config["scheme"].update({"slices": 5, "s_max": 0.25, "k_max": 10})
    config["experiment"].update({"audit_samples": 20})
    config["output"]["output_dir"] = str(tmp_path / "results")
    for section, values in sections.items():
        config[section].update(values)
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(config))
    return path


def _run(config_path: Path, experiment: str, out: Path) -> int:
    return main([experiment, "--config", str(config_path), "--out", str(out), "--quiet"])


# -- ledger -------------------------------------------------------------------

def test_ledger_counts_only_checks_as_failures():
    ledger = CheckLedger()
    assert ledger.add_check("a", True, 1.0, 1.0)
    assert not ledger.add_check("b", False, 2.0, 1.0)
    ledger.add_discrepancy("c", 1.299, 1.0)
    ledger.add_measured("d", 0.5)
    assert ledger.failures == ["b"]
    assert not ledger.passed
    summary = ledger.to_dict()["summary"]
    assert summary == {"checks": 2, "failures": 1, "discrepancies": 1, "measured": 1}
    assert ledger.get("c").expected == 1.0
    with pytest.raises(KeyError):
        ledger.get("missing")


def test_geometry_checks_pass():
    ledger = CheckLedger()
    geometry_checks(ledger)
    assert ledger.passed, ledger.failures
    assert ledger.get("geometry.damping_sup_printed").measured == pytest.approx(3 * 3 ** 0.5 / 4)


def test_field_and_scheme_checks_pass(chart):
    ledger = CheckLedger()
    field_checks(ledger, chart)
    scheme_checks(ledger)
    assert ledger.passed, ledger.failures


def test_limits_and_decay_checks_pass(chart):
    ledger = CheckLedger()
    limits_checks(ledger, chart)
    decay_checks(ledger)
    assert ledger.passed, ledger.failures
    assert ledger.get("decay.original_leray_increments").kind == "measured"


def _tail(sup_sum=0.2):
    return IncrementTailReport(norms=[1.0], ratios=[], r=None, tail_bound=float("inf"),
                               partial_sums=[0.0], tail_holds=True, center_deviation=0.1,
                               increment_sup_sum=sup_sum, center_stable=True)


def test_nonvanish_chain_checks_follow_the_center_series(chart):
    gap = chart.rho * np.geomspace(1.0, 1e-3, 40)
    t = chart.rho - gap
    held = CenterSeries(t=t, v=0.9 / gap)
    ledger = CheckLedger()
    nonvanish_chain_checks(ledger, chart, 0.5, 1.0, _tail(), held, blowup_fit(t, held.v, chart))
    assert ledger.passed, ledger.failures
    assert ledger.get("chain.tail_limit").measured == pytest.approx(0.9)

    decayed = CenterSeries(t=t, v=np.full_like(t, 1e-3))
    ledger = CheckLedger()
    nonvanish_chain_checks(ledger, chart, 0.5, 1.0, _tail(), decayed,
                           blowup_fit(t, decayed.v, chart))
    assert {"chain.tail_limit", "chain.final_decade_product"} <= set(ledger.failures)

    ledger = CheckLedger()
    nonvanish_chain_checks(ledger, chart, 0.5, 1.0, _tail(sup_sum=0.6), held, None)
    assert set(ledger.failures) == {"chain.increment_sup_sum", "chain.tail_limit"}


def test_nonvanish_chain_is_skipped_above_the_criterion():
    chart = ConeChart(3, 0.2)
    ledger = CheckLedger()
    nonvanish_chain_checks(ledger, chart, 0.5, 1.0, _tail(), CenterSeries(t=np.zeros(1), v=np.ones(1)), None)
    assert ledger.passed
    assert ledger.get("chain.skipped").kind == "measured"


def _sweep_report(spread, scaling, declined=False):
    row = {"ratios": [0.2, 0.1], "max_ratio": 0.2, "predicted_ratio": 1.0,
           "within_prediction": True, "converged": True}
    return {
        "per_rho": {"0.05": {"order": 1.0, "declined": declined, "notes": ["fitted order 1"],
                             "contraction": {"0.1": row}}},
        "trends": {"spread_across_nu": {"0.05": spread},
                   "ratio_of_ratios": {"0.02/0.05": {"0.1": scaling}}},
    }


def test_sweep_checks_apply_the_contraction_thresholds():
    passing = CheckLedger()
    sweep_checks(passing, _sweep_report(0.1, 0.4))
    assert passing.passed, passing.failures
    failing = CheckLedger()
    sweep_checks(failing, _sweep_report(2.9, 0.9, declined=True))
    assert set(failing.failures) == {"sweep.extrapolation[rho=0.05]", "sweep.nu_spread[rho=0.05]",
                                     "sweep.rho_scaling[0.02/0.05,nu=0.1]"}


# -- configuration ----------------------------------------------------------------

def test_config_manager_builds_scheme_config(tmp_path):
    manager = ConfigManager(_write_config(tmp_path), quiet=True)
    config = manager.get_scheme_config(rho=0.05, nu=0.5)
    assert config.chart.rho == 0.05
    assert config.nu == 0.5
    assert config.slices == 5
    assert manager.get_toggles().leray


@pytest.mark.parametrize("section, values", [
    ("grid", {"points_per_axis": 24}),
    ("limits", {"nus": [0.01, 0.1]}),
    ("scheme", {"terms": {"pressure": True}}),
    ("scheme", {"convection_variant": "other"}),
    ("kernels", {"mu": 1.5}),
    ("kernels", {"radial_nodes": 0}),
])
def test_config_manager_rejects_invalid_values(tmp_path, section, values):
    with pytest.raises(ValueError):
        ConfigManager(_write_config(tmp_path, **{section: values}), quiet=True)


def test_update_config_revalidates(tmp_path):
    manager = ConfigManager(_write_config(tmp_path), quiet=True)
    with pytest.raises(ValueError):
        manager.update_config({"experiment": {"name": "transcribe"}})


# -- command line -------------------------------------------------------------------

def test_parse_arguments_rejects_unknown_experiments():
    with pytest.raises(SystemExit):
        parse_arguments(["transcribe"])
    args = parse_arguments(["run", "--seed", "3", "--quiet"])
    assert args.experiment == "run" and args.seed == 3 and args.quiet


def test_dimension_two_is_a_usage_error(tmp_path):
    config = _write_config(tmp_path, geometry={"n": 2})
    assert _run(config, "run", tmp_path / "out") == EXIT_USAGE


def test_diagnose_without_a_run_is_a_usage_error(tmp_path):
    assert _run(_write_config(tmp_path), "diagnose", tmp_path / "empty") == EXIT_USAGE


def test_audit_writes_its_ledger(tmp_path):
    out = tmp_path / "audit"
    assert _run(_write_config(tmp_path), "audit", out) == EXIT_OK
    report = json.loads((out / "audit.json").read_text())
    assert report["selected_variant"] == "chain_rule"
    assert (out / "audit.csv").read_text().startswith("# term [-],max_rel_error [1]")
    assert (out / "config_resolved.yaml").exists()


def test_run_without_terms_reproduces_heat_flow(tmp_path):
    terms = {"burgers": False, "convection": False, "damping": False, "leray": False}
    out = tmp_path / "heat"
    assert _run(_write_config(tmp_path, scheme={"terms": terms}), "run", out) == EXIT_OK
    summary = json.loads((out / "run.json").read_text())
    assert summary["heat_flow_deviation"] < 1e-12
    assert len(list((out / "trajectory").glob("slice_*.cw"))) == 5


def test_run_is_deterministic(tmp_path):
    config = _write_config(tmp_path)
    assert _run(config, "run", tmp_path / "a") == EXIT_OK
    assert _run(config, "run", tmp_path / "b") == EXIT_OK
    for name in ("run_center.csv", "run_residual.csv", "run.json", "trajectory/slice_0004.cw"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


SMALL_CONTRACTION = {"contraction_slices": 5, "contraction_s_max": 0.25}


def test_diagnose_extends_the_run_to_the_forcing_ladder(tmp_path):
    config = _write_config(tmp_path, scheme={"s_max": 1.0},
                           limits={"eps_fractions": [1e-2, 1e-3], **SMALL_CONTRACTION})
    out = tmp_path / "diag"
    assert _run(config, "run", out) == EXIT_OK
    code = _run(config, "diagnose", out)
    report = json.loads((out / "diagnose.json").read_text())
    ledger = report["ledger"]
    assert code == (EXIT_OK if ledger["passed"] else EXIT_CHECK_FAILURE)
    assert report["s_max"] > report["stored_s_max"] == 1.0
    assert report["forcing"]["eps_covered"] == [True, True]
    assert "fitted_order" in report["blowup"]
    residual = report["residual"]
    assert residual["forced_max"] == pytest.approx(residual["unforced_max"], rel=1e-8)
    assert residual["defect_tolerance"] > 0
    entries = {entry["name"]: entry for entry in ledger["entries"]}
    assert entries["diagnose.forcing_ladder_covered"]["passed"]
    assert entries["diagnose.step_defect"]["kind"] == "check"
    assert "diagnose.chain.increment_sup_sum" in entries


def test_diagnose_of_a_reduced_run_skips_the_chain(tmp_path):
    terms = {"burgers": False, "convection": False, "damping": True, "leray": False}
    config = _write_config(tmp_path, scheme={"terms": terms, "s_max": 1.0},
                           limits={"eps_fractions": [1e-2]})
    out = tmp_path / "diag"
    assert _run(config, "run", out) == EXIT_OK
    _run(config, "diagnose", out)
    entries = {e["name"]: e for e in json.loads((out / "diagnose.json").read_text())["ledger"]["entries"]}
    assert entries["diagnose.chain"]["measured"] == "skipped"
    assert not any(name.startswith("diagnose.chain.") for name in entries)


SMALL_SWEEP = {"nus": [0.1, 0.01, 0.001], "rhos": [0.05, 0.02], **SMALL_CONTRACTION}


def test_sweep_writes_one_summary_row_per_rho_and_nu(tmp_path):
    config = _write_config(tmp_path, limits=SMALL_SWEEP)
    out = tmp_path / "sweep"
    code = _run(config, "sweep", out)
    report = json.loads((out / "sweep.json").read_text())
    assert code == (EXIT_OK if report["ledger"]["passed"] else EXIT_CHECK_FAILURE)
    lines = (out / "sweep_summary.csv").read_text().splitlines()
    assert lines[0].startswith("# rho [time],nu [length^2/time]")
    assert len(lines) == 1 + 6
    names = {entry["name"] for entry in report["ledger"]["entries"]}
    assert "sweep.nu_spread[rho=0.05]" in names
    assert "sweep.rho_scaling[0.02/0.05,nu=0.1]" in names


def test_sweep_is_deterministic(tmp_path):
    config = _write_config(tmp_path, limits=SMALL_SWEEP)
    _run(config, "sweep", tmp_path / "a")
    _run(config, "sweep", tmp_path / "b")
    for name in ("sweep_summary.csv", "sweep.json", "sweep_center_rho0.05.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_damping_only_run_follows_the_gap(tmp_path):
    terms = {"burgers": False, "convection": False, "damping": True, "leray": False}
    out = tmp_path / "damping"
    config = _write_config(tmp_path, scheme={"terms": terms, "nu": 1e-8})
    assert _run(config, "run", out) == EXIT_OK
    summary = json.loads((out / "run.json").read_text())
    assert summary["damping_oracle_deviation"] < 1e-3
