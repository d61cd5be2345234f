import json
import math
import os

import pytest

from oscdom.config import SUITES, load_config
from oscdom.errors import ConfigError
from runner import SuiteRunner, exit_status, run_suite

SMOKE = os.path.join(os.path.dirname(__file__), "..", "..", "configs", "smoke.toml")

EXPECTED_ARTIFACTS = {
    "stats-oracles": ["oracles.csv"],
    "kernel-audit": ["hilbert.json", "riesz1.json", "riesz2.json", "control_signflip.json",
                     "plugin_demo_TemperedHilbertKernel.json"],
    "prop-cr": ["oscillation.series.csv", "tail.csv"],
    "sparse-mr": ["plateau.plot.csv", "plateau.hist.csv", "plateau.json", "bump.json", "zero.json"],
    "sparse-spd-compare": ["bounds.csv"],
    "sobolev": ["riesz1.csv", "sum_riesz1_plus_diag_one.csv", "diag_one.csv", "poincare.csv"],
    "necessity-probe": ["hilbert.series.csv", "riesz1.json", "sum_hilbert_plus_diag_log.series.csv"],
}


INTERIOR_CHECK = "interior oscillation/average ratio"


def _required(checks):
    # whether the stopping time emits cubes inside the plateau depends on the
    # resolution; the interior comparison is reported, not required, here
    return [c for c in checks if INTERIOR_CHECK not in c.name]


@pytest.mark.parametrize("suite", SUITES)
def test_suite_passes_on_the_smoke_config(suite, smoke_config, memory_store):
    runner = SuiteRunner(smoke_config, store=memory_store)
    started, finished = [], []
    runner.suiteStarted.connect(started.append)
    runner.suiteFinished.connect(lambda name, passed: finished.append((name, passed)))

    outcome = runner.run(suite)

    required = _required(outcome.checks)
    assert all(c.passed for c in required), [(c.module, c.name, c.detail) for c in required if not c.passed]
    assert outcome.checks
    assert started == [suite]
    assert finished == [(suite, outcome.passed)]
    artifacts = memory_store.list_artifacts(suite)
    assert "summary.json" in artifacts
    for name in EXPECTED_ARTIFACTS[suite]:
        assert name in artifacts, name

    summary = json.loads(memory_store.read_text(suite, "summary.json"))
    assert summary["suite"] == suite
    assert summary["passed"] is outcome.passed
    assert len(summary["checks"]) == len(outcome.checks)
    assert "out" not in summary["config"]
    assert "workers" not in summary["config"]


def test_plateau_interior_ratio_is_reported(smoke_config, memory_store):
    outcome = SuiteRunner(smoke_config, store=memory_store).run("sparse-spd-compare")
    interior = [c for c in outcome.checks if INTERIOR_CHECK in c.name]
    assert [c.name.split(":")[0] for c in interior] == ["plateau"]
    check = interior[0]
    ratio = outcome.results["members"]["plateau"]["interiorRatio"]
    assert check.passed == (ratio <= 0.2)
    if math.isinf(ratio):
        assert check.detail.startswith("no emitted cube inside the core")
    assert outcome.passed == check.passed


def test_prop_cr_artifacts(smoke_config, memory_store):
    SuiteRunner(smoke_config, store=memory_store).run("prop-cr")
    assert memory_store.read_text("prop-cr", "tail.csv").startswith("x,F_Q,exact\n")
    series = memory_store.read_text("prop-cr", "oscillation.series.csv").splitlines()
    assert series[0] == "scale,side,oscillation"
    assert len(series) == 1 + len(smoke_config.scales)


def test_sparse_plot_data_is_nonnegative(smoke_config, memory_store):
    SuiteRunner(smoke_config, store=memory_store).run("sparse-mr")
    plot = memory_store.read_text("sparse-mr", "bump.plot.csv").splitlines()
    assert plot[0] == "x,abs_tf,bound"
    assert len(plot) > 1
    for line in plot[1:]:
        _, abs_tf, bound = (float(v) for v in line.split(","))
        assert abs_tf >= 0.0
        assert bound >= 0.0


def test_worker_count_does_not_change_artifacts():
    stores = []
    for tag, workers in (("serial", 1), ("pooled", 4)):
        runner = SuiteRunner(load_config(SMOKE, {"out": f"mem://{tag}", "workers": workers}))
        runner.run("sparse-mr")
        runner.run("kernel-audit")
        stores.append(runner.store)
    a, b = stores
    for suite in ("sparse-mr", "kernel-audit"):
        assert a.list_artifacts(suite) == b.list_artifacts(suite)
        for name in a.list_artifacts(suite):
            assert a.read_bytes(suite, name) == b.read_bytes(suite, name), f"{suite}/{name}"


def test_failures_become_failed_checks(memory_store):
    cfg = load_config(SMOKE, {
        "out": "mem://tight", "workers": 1, "corpus": "bump", "engine.tail_tolerance": 1e-6,
    })
    runner = SuiteRunner(cfg, store=memory_store)
    outcome = runner.run("sparse-mr")
    assert not outcome.passed
    failure = outcome.failures[-1]
    assert failure.name == "RingBudgetExceeded"
    assert failure.module == "sparse_engine"
    assert failure.detail.startswith("bump")
    assert not memory_store.exists("sparse-mr", "bump.json")
    assert json.loads(memory_store.read_text("sparse-mr", "summary.json"))["passed"] is False

    # cached member failures are reported again by the comparison suite
    compare = runner.run("sparse-spd-compare")
    assert [c.name for c in compare.failures] == ["RingBudgetExceeded"]
    assert exit_status([outcome, compare]) == 1


def test_unknown_suite(smoke_config, memory_store):
    with pytest.raises(ConfigError) as exc:
        SuiteRunner(smoke_config, store=memory_store).run("nope")
    assert exc.value.field == "suite"


def test_run_suite_helper(smoke_config, memory_store):
    outcomes = run_suite("stats-oracles", smoke_config, memory_store)
    assert [o.suite for o in outcomes] == ["stats-oracles"]
    assert exit_status(outcomes) == 0


def test_zero_corpus_has_zero_constants(memory_store):
    cfg = load_config(SMOKE, {"out": "mem://zero", "workers": 1, "corpus": "zero", "refine": True})
    outcome = SuiteRunner(cfg, store=memory_store).run("sparse-mr")
    assert outcome.passed, [(c.name, c.detail) for c in outcome.failures]
    assert outcome.results["bestConstant"] == 0.0
    assert "zero" in memory_store.read_text("sparse-mr", "refinement.csv")


def test_sobolev_records_the_chain(smoke_config, memory_store):
    outcome = SuiteRunner(smoke_config, store=memory_store).run("sobolev")
    rows = outcome.results["riesz1.chain"]
    assert {"plateau", "bump"} <= {row["member"] for row in rows}
    for row in rows:
        assert row["product"] == row["sparseConstant"] * row["poincareConstant"] * row["potentialRatio"]
    chain_checks = [c for c in outcome.checks if "chain product" in c.name]
    assert [c.name.split(":")[0] for c in chain_checks] == ["riesz1"]
    assert chain_checks[0].passed
    # operators with a diagonal part carry no chain
    assert "diag:one.chain" not in outcome.results


def test_explicit_line_dimension_is_rejected_for_sobolev(memory_store):
    cfg = load_config(SMOKE, {"out": "mem://line", "dim": 1})
    with pytest.raises(ConfigError) as exc:
        SuiteRunner(cfg, store=memory_store).run("sobolev")
    assert exc.value.field == "dim"
    assert "n >= 2" in exc.value.message
    assert memory_store.list_artifacts("sobolev") == []
