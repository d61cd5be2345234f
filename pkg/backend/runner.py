"""
Suite orchestration.

SuiteRunner evaluates corpus members (or operators, or oracle pairs) on a
worker pool, gathers the results in submission order, turns them into
CheckResults and writes per-member artifacts plus one summary per suite.
"""
import logging
import math
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import psutil

from oscdom.builtin.corpus import PlateauGenerator
from oscdom.config import EngineConfig, SUITES
from oscdom.czo import (
    ProbeConfig,
    cr_constant,
    indicator_oscillation,
    kernel_smoothness_check,
    t1_estimate,
    t1_probe,
    tail_integral_FQ,
)
from oscdom.errors import ConfigError, InvariantViolation, OscdomError
from oscdom.field import Grid, GridFunction, gradient_norm
from oscdom.lattice import Cube
from oscdom.local_stats import (
    average_abs,
    mean_oscillation,
    median,
    median_oscillation,
    rearrangement,
)
from oscdom.registry import OperatorRegistry
from oscdom.rng import stream
from oscdom.sobolev import (
    chain_constants,
    dyadic_riesz_bound,
    necessity_probe,
    poincare_check,
    riesz_potential,
    sobolev_check,
)
from oscdom.sparse_engine import (
    assemble_global,
    domination_report,
    interior_ratio,
    rearrangement_vs_oscillation,
    sharp_domination,
)
from oscdom.storage import StorageRegistry
from report_mixin import SUMMARY_NAME, ReportPipeline

logger = logging.getLogger(__name__)

DEFAULT_PLUGIN_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "plugins")

AUDIT_KERNELS = ("hilbert", "riesz1", "riesz2", "control:signflip")
PLANE_SUITES = ("sobolev",)
SOBOLEV_OPERATORS = ("riesz1", "sum:riesz1+diag:one", "diag:one")
PROBE_OPERATORS = ("hilbert", "riesz1", "riesz2", "sum:hilbert+diag:log")
ORACLE_CELLS = {1: 64, 2: 16}
HILBERT_CR = 2.0 * math.log(1.5)
CR_TOLERANCE = 1e-2
SCALE_VARIATION = 0.05
VIOLATION_BUDGET = 0.01
REFINEMENT_FACTOR = 2.0
CHAIN_FACTOR = 3.0
POINCARE_VARIATION = 0.1
PLATEAU_RIPPLE = 0.05
INTERIOR_THRESHOLD = 0.2
RIESZ_LATTICES = (0, 4, 8)       # shifts (0,0), (1/3,1/3), (2/3,2/3)
RELATIVE_SLACK = 1e-12


class Signal:
    """Minimal callback list for progress reporting"""

    def __init__(self, *types):
        self._callbacks = []

    def connect(self, callback):
        if callback not in self._callbacks:
            self._callbacks.append(callback)

    def disconnect(self, callback=None):
        if callback is None:
            self._callbacks = []
        elif callback in self._callbacks:
            self._callbacks.remove(callback)

    def emit(self, *args):
        for callback in self._callbacks:
            try:
                callback(*args)
            except Exception as e:
                logger.warning("[Runner] Error in signal callback: %s", e)


@dataclass
class CheckResult:
    name: str
    module: str
    passed: bool
    detail: str = ""

    def to_dict(self):
        return {"name": self.name, "module": self.module, "passed": bool(self.passed), "detail": self.detail}


@dataclass
class SuiteOutcome:
    suite: str
    checks: list = field(default_factory=list)
    results: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    @property
    def failures(self):
        return [c for c in self.checks if not c.passed]

    def check(self, name, module, passed, detail=""):
        self.checks.append(CheckResult(name, module, bool(passed), detail))


@dataclass
class SparseMember:
    name: str
    grid: int
    zero: bool
    plateau_ripple: Optional[float]
    osc: object                   # DominationReport, oscillation bound
    avg: object                   # DominationReport, average bound
    interior: float
    whole: float
    same_family: bool
    rearrangement: float
    sharp: float
    achieved_eta: float
    target_eta: float
    eta_slack: float
    incomplete: bool


def _raising_module(exc):
    tb = exc.__traceback__
    while tb is not None and tb.tb_next is not None:
        tb = tb.tb_next
    name = tb.tb_frame.f_globals.get("__name__", "") if tb is not None else ""
    return name.rsplit(".", 1)[-1] or "runner"


def _failure(exc, label):
    if isinstance(exc, InvariantViolation):
        return CheckResult(exc.invariant, exc.module, False, f"{label}: {exc.detail}")
    return CheckResult(type(exc).__name__, _raising_module(exc), False, f"{label}: {exc}")


def _chain_slack(best, product):
    if best == 0.0:
        return 0.0
    return best / (CHAIN_FACTOR * product) if product > 0 else math.inf


def _within_factor(a, b, factor):
    if a == b:
        return True
    if not (math.isfinite(a) and math.isfinite(b)) or min(a, b) <= 0.0:
        return False
    return max(a, b) / min(a, b) <= factor


def _safe_name(label):
    return label.replace(":", "_").replace("+", "_plus_")


class SuiteRunner(ReportPipeline):
    def __init__(self, cfg, store=None, registry=None):
        self.cfg = cfg
        self.store = store if store is not None else StorageRegistry().get_provider(cfg.out)
        self.registry = registry or OperatorRegistry(str(cfg.plugin_dir or DEFAULT_PLUGIN_DIR))
        self.registry.discover_plugins()
        self.max_workers = cfg.workers or psutil.cpu_count(logical=False) or 1
        self._sparse_cache = {}
        self._failures = []
        self._lock = threading.Lock()
        self.suiteStarted = Signal(str)
        self.memberFinished = Signal(str, str)
        self.suiteFinished = Signal(str, bool)

    # ------------------------------------------------------------------
    # plumbing
    # ------------------------------------------------------------------

    def _map(self, fn, items):
        """fn over items on the worker pool; results in submission order"""
        items = list(items)
        if self.max_workers == 1 or len(items) < 2:
            return [fn(item) for item in items]
        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            futures = [executor.submit(fn, item) for item in items]
            return [f.result() for f in futures]

    def _guard(self, label, fn, *args):
        """fn(*args), or None with the failure recorded"""
        try:
            return fn(*args)
        except OscdomError as e:
            logger.error("[Runner] %s failed: %s", label, e)
            with self._lock:
                self._failures.append((label, _failure(e, label)))
            return None

    def _corpus_function(self, gen, name, grid):
        rng = stream(self.cfg.seed, "corpus", name) if gen.uses_rng else None
        return gen.generate(grid, rng)

    def run(self, name):
        if name not in SUITES:
            raise ConfigError("suite", f"unknown suite '{name}', expected one of {', '.join(SUITES)}")
        self._check_dimension(name)
        self.suiteStarted.emit(name)
        self._failures = []
        started = time.perf_counter()
        outcome = SuiteOutcome(name)
        getattr(self, "_suite_" + name.replace("-", "_"))(outcome)
        for _, failure in sorted(self._failures, key=lambda item: item[0]):
            outcome.checks.append(failure)
        self._finalize(outcome)
        logger.info("[Runner] %s: %s in %.1fs (%d checks, %d failed)", name,
                    "PASS" if outcome.passed else "FAIL", time.perf_counter() - started,
                    len(outcome.checks), len(outcome.failures))
        for c in outcome.failures:
            logger.error("[Runner] [%s] %s violated: %s", c.module, c.name, c.detail)
        self.suiteFinished.emit(name, outcome.passed)
        return outcome

    def run_all(self):
        for name in SUITES:
            self._check_dimension(name)
        return [self.run(name) for name in SUITES]

    def _check_dimension(self, name):
        # plane suites run in n = 2 unless the record asks for n = 1 explicitly
        if name in PLANE_SUITES and "dim" in self.cfg.model_fields_set and self.cfg.dim < 2:
            raise ConfigError("dim", f"suite '{name}' needs n >= 2, got n = {self.cfg.dim}")

    def _finalize(self, outcome):
        config = self.cfg.model_dump(mode="json", exclude={"out", "workers", "plugin_dir"})
        self.write_json(outcome.suite, SUMMARY_NAME, {
            "suite": outcome.suite,
            "passed": outcome.passed,
            "checks": [c.to_dict() for c in outcome.checks],
            "results": outcome.results,
            "config": config,
        })

    # ------------------------------------------------------------------
    # stats-oracles
    # ------------------------------------------------------------------

    def _oracle_pair(self, index):
        rng = stream(self.cfg.seed, "stats-oracles", index)
        dim = self.cfg.dim
        cells = ORACLE_CELLS[dim]
        grid = Grid.centered(2.0, cells, dim)
        # dyadic rationals: every sum below is exact
        f = GridFunction(grid, rng.integers(-64, 65, size=grid.shape) / 8.0, compact=False)
        length = int(rng.integers(1, cells + 1))
        start = rng.integers(0, cells - length + 1, size=dim)
        q = Cube.from_lower(grid.box.lower + start * grid.spacing, length * grid.spacing)

        vals, weights = f.cube_sample(q)
        m = median(f, q)

        def deviation(c):
            return math.fsum(np.abs(vals - c) * weights)

        candidates = np.concatenate([np.unique(vals), rng.integers(-64, 65, size=8) / 8.0])
        minimal = all(deviation(m) <= deviation(c) for c in candidates)
        bounded = abs(m) * math.fsum(weights) <= 2.0 * math.fsum(np.abs(vals) * weights)

        ordered = np.sort(np.abs(vals))[::-1]
        sorted_ok = True
        for lam in (2.0 ** (-dim - 3), 0.25, 0.5, 1.0):
            k = math.floor(lam * len(ordered))
            oracle = float(ordered[k]) if k < len(ordered) else 0.0
            sorted_ok = sorted_ok and rearrangement(f, q, lam) == oracle

        c = float(rng.integers(-64, 65)) / 8.0
        shifted = f.with_values(f.values - c, compact=False)
        translation = median(shifted, q) == m - c

        med_osc, osc = median_oscillation(f, q), mean_oscillation(f, q)
        comparable = med_osc <= osc * (1 + RELATIVE_SLACK) and osc <= 2.0 * med_osc * (1 + RELATIVE_SLACK)
        return {
            "pair": index, "side": q.side, "median": m, "average": average_abs(f, q),
            "minimal": minimal, "bounded": bounded, "rearrangement": sorted_ok,
            "translation": translation, "comparable": comparable,
        }

    def _suite_stats_oracles(self, outcome):
        rows = self._map(self._oracle_pair, range(self.cfg.oracle_pairs))
        checks = (
            ("minimal", "median minimizes the L1 deviation"),
            ("bounded", "|m_f(Q)| <= 2<|f|>_Q"),
            ("rearrangement", "rearrangement equals the sort oracle"),
            ("translation", "median(f - c) = median(f) - c"),
            ("comparable", "median oscillation <= mean oscillation <= 2 median oscillation"),
        )
        for key, name in checks:
            bad = [r["pair"] for r in rows if not r[key]]
            outcome.check(name, "local_stats", not bad, f"{len(bad)} of {len(rows)} pairs fail: {bad[:10]}")
            outcome.results[f"{key}Failures"] = len(bad)
        outcome.results["pairs"] = len(rows)
        header = ["pair", "side", "median", "average"] + [key for key, _ in checks]
        self.write_table(outcome.suite, "oracles.csv", header,
                         [[r[h] if not isinstance(r[h], bool) else int(r[h]) for h in header] for r in rows])

    # ------------------------------------------------------------------
    # kernel-audit
    # ------------------------------------------------------------------

    def _audit(self, label):
        kernel = self.registry.create_kernel(label)
        report = kernel_smoothness_check(kernel, self.cfg.audit_samples, stream(self.cfg.seed, "kernel-audit", label))
        self.memberFinished.emit("kernel-audit", label)
        return kernel, report

    def _suite_kernel_audit(self, outcome):
        labels = list(AUDIT_KERNELS) + sorted(self.registry.plugin_kernels)
        labels += [op for op in self.cfg.operators if self.registry.kernel_class(op) and op not in labels]
        audits = self._map(lambda label: self._guard(label, self._audit, label), labels)
        for label, audit in zip(labels, audits):
            if audit is None:
                continue
            kernel, report = audit
            is_control = label.startswith("control:")
            verdict = "flagged" if report.violation else "clean"
            outcome.check(
                f"{label}: smoothness {'violated' if is_control else 'holds'} for the declared modulus",
                "czo", report.violation == is_control,
                f"max ratio {report.max_ratio:.6g} over {report.samples} triples ({verdict})",
            )
            outcome.check(f"{label}: Dini integral finite", "core", kernel.modulus().is_dini,
                          f"∫ω(t)/t = {kernel.modulus().dini_integral:.6g}")
            outcome.results[f"{label}.maxRatio"] = report.max_ratio
            self.write_json(outcome.suite, f"{_safe_name(label)}.json", report.to_dict())

    # ------------------------------------------------------------------
    # prop-cr
    # ------------------------------------------------------------------

    def _suite_prop_cr(self, outcome):
        T = self.registry.resolve(self.cfg.operator)
        if T.kernel is None or T.kernel.is_zero:
            raise ConfigError("operator", f"prop-cr needs a kernel operator, got '{T.label}'")
        dim = T.kernel.dim or self.cfg.dim
        center = (0.0,) * dim
        scales = sorted(self.cfg.scales)

        def oscillation_at(s):
            value = self._guard(f"scale {s}", indicator_oscillation, T, Cube(center, 2.0 ** s))
            self.memberFinished.emit("prop-cr", str(s))
            return value

        values = self._map(oscillation_at, scales)
        series = [(s, 2.0 ** s, v) for s, v in zip(scales, values) if v is not None]
        self.emit_series(outcome.suite, "oscillation", ["scale", "side", "oscillation"], series)
        if not series:
            return
        reference = dict((s, v) for s, _, v in series).get(0, series[0][2])
        spread = max(abs(v - reference) for _, _, v in series) / reference if reference > 0 else math.inf
        outcome.check("oscillation of T(χ_Q*) on Q is scale invariant", "czo", spread <= SCALE_VARIATION,
                      f"max relative deviation {spread:.4g} over {len(series)} scales")
        outcome.results.update(unitOscillation=reference, maxOscillation=max(v for *_, v in series),
                               scaleSpread=spread)

        q = Cube(center, 1.0)
        cr = self._guard("cr constant", cr_constant, T, q, None, self.cfg.tail_tol)
        if cr is not None:
            c_q, cr_spread = cr
            outcome.check("T(χ_Q*) - F_Q is constant on Q", "czo", cr_spread <= CR_TOLERANCE,
                          f"c_Q = {c_q:.6g}, spread {cr_spread:.3g}")
            outcome.results.update(cQ=c_q, cQSpread=cr_spread)

        if self.cfg.operator == "hilbert":
            outcome.check("Hilbert oscillation equals 2 ln(3/2)", "czo", abs(reference - HILBERT_CR) <= CR_TOLERANCE,
                          f"{reference:.6g} vs {HILBERT_CR:.6g}")
            rows = []
            for x in (0.0, 0.25, 0.5):
                exact = math.log((5.0 + 2.0 * x) / (5.0 - 2.0 * x))
                value = self._guard(f"tail at x={x}", tail_integral_FQ, T, q, x, self.cfg.tail_tol)
                if value is None:
                    continue
                rows.append((x, value, exact))
                outcome.check(f"F_Q({x}) matches ln((5+2x)/(5-2x))", "czo",
                              abs(value - exact) <= self.cfg.tail_tol, f"{value:.8g} vs {exact:.8g}")
            self.write_table(outcome.suite, "tail.csv", ["x", "F_Q", "exact"], rows)

    # ------------------------------------------------------------------
    # sparse-mr / sparse-spd-compare
    # ------------------------------------------------------------------

    def _sparse_member(self, cfg, T, name, gen):
        engine = cfg.engine_config()
        grid = Grid.centered(cfg.half_width, cfg.grid, cfg.dim)
        f = self._corpus_function(gen, name, grid)
        pieces = []
        S = assemble_global(f, T, engine, collector=pieces)
        osc = domination_report(T, f, S, "oscillation")
        avg = domination_report(T, f, S, "average")
        center = (0.0,) * cfg.dim
        interior, whole = interior_ratio(S, f, f.grid, Cube(center, 2.0), Cube(center, 1.0))
        same_family = bool(np.all(osc.bound <= 2.0 * avg.bound * (1 + RELATIVE_SLACK)))
        slack = max((e.e_portion.grid.cell_measure / e.cube.measure() for e in S.entries), default=0.0)
        ripple = gen.ripple if isinstance(gen, PlateauGenerator) else None
        member = SparseMember(
            name, cfg.grid, len(f.nonzero) == 0, ripple, osc, avg, interior, whole, same_family,
            rearrangement_vs_oscillation(pieces, f, engine), sharp_domination(pieces, f, engine),
            S.achieved_eta, engine.target_eta, slack, S.incomplete,
        )
        self.memberFinished.emit("sparse", name)
        return member

    def _sparse_members(self, cfg):
        """Memoized per-member pipeline results for one experiment config"""
        key = cfg.model_dump_json()
        cached = self._sparse_cache.get(key)
        if cached is not None:
            members, failures = cached
            self._failures.extend(failures)
            return members
        T = self.registry.resolve(cfg.operator)
        corpus = self.registry.build_corpus(cfg)
        seen = len(self._failures)
        results = self._map(lambda item: self._guard(item[0], self._sparse_member, cfg, T, *item), corpus)
        members = [m for m in results if m is not None]
        self._sparse_cache[key] = (members, list(self._failures[seen:]))
        return members

    def _suite_sparse_mr(self, outcome):
        members = self._sparse_members(self.cfg)
        fine = {}
        if self.cfg.refine:
            fine_cfg = self.cfg.model_copy(update={"grid": 2 * self.cfg.grid})
            fine = {m.name: m for m in self._sparse_members(fine_cfg)}

        for m in members:
            outcome.check(f"{m.name}: achievedEta >= target", "sparse_engine",
                          m.achieved_eta >= m.target_eta - m.eta_slack - RELATIVE_SLACK,
                          f"{m.achieved_eta:.6g} vs {m.target_eta:.6g} (one-cell slack {m.eta_slack:.3g})")
            outcome.check(f"{m.name}: |Tf| dominated by the oscillation bound", "sparse_engine",
                          m.osc.violation_fraction <= VIOLATION_BUDGET,
                          f"{len(m.osc.violations)} of {m.osc.cell_count} cells uncovered")
            outcome.check(f"{m.name}: finite domination constant", "sparse_engine",
                          math.isfinite(m.osc.best_constant), f"C = {m.osc.best_constant:.6g}")
            outcome.check(f"{m.name}: finite sharp-maximal constant", "sparse_engine",
                          math.isfinite(m.sharp), f"C# = {m.sharp:.6g}")
            self.emit_plot_data(m.osc, outcome.suite, m.name)
            self.write_json(outcome.suite, f"{m.name}.json", {
                **m.osc.summary(),
                "averageBestConstant": m.avg.best_constant,
                "rearrangementConstant": m.rearrangement,
                "sharpConstant": m.sharp,
            })

        rows = []
        for m in members:
            r = fine.get(m.name)
            if r is None:
                continue
            rows.append((m.name, m.grid, m.osc.best_constant, r.grid, r.osc.best_constant))
            outcome.check(f"{m.name}: domination constant refinement-stable", "sparse_engine",
                          _within_factor(m.osc.best_constant, r.osc.best_constant, REFINEMENT_FACTOR),
                          f"C(N={m.grid}) = {m.osc.best_constant:.6g}, C(N={r.grid}) = {r.osc.best_constant:.6g}")
        if rows:
            self.write_table(outcome.suite, "refinement.csv", ["member", "N", "C_N", "N_fine", "C_fine"], rows)

        if members:
            sharp = max(m.sharp for m in members)
            outcome.results.update(
                bestConstant=max(m.osc.best_constant for m in members),
                sharpConstant=sharp,
                rearrangementConstant=max(m.rearrangement for m in members),
                minAchievedEta=min(m.achieved_eta for m in members),
                maxViolationFraction=max(m.osc.violation_fraction for m in members),
                incompleteMembers=sum(m.incomplete for m in members),
            )
            if fine:
                fine_sharp = max(r.sharp for r in fine.values())
                outcome.check("sharp-maximal constant refinement-stable", "sparse_engine",
                              _within_factor(sharp, fine_sharp, REFINEMENT_FACTOR),
                              f"C#(N={self.cfg.grid}) = {sharp:.6g}, C#(N={2 * self.cfg.grid}) = {fine_sharp:.6g}")
                outcome.results["sharpConstantFine"] = fine_sharp

    def _suite_sparse_spd_compare(self, outcome):
        rows = self.compare_bounds([self.cfg])
        self.write_table(outcome.suite, "bounds.csv",
                         ["member", "oscBestConstant", "avgBestConstant", "interiorRatio", "wholeRatio"],
                         [(r["member"], r["oscBestConstant"], r["avgBestConstant"], r["interiorRatio"],
                           r["wholeRatio"]) for r in rows])
        for m in self._sparse_members(self.cfg):
            outcome.check(f"{m.name}: oscillation bound <= 2 x average bound at every cell", "sparse_engine",
                          m.same_family, f"max ratio {m.whole:.6g}")
            if m.plateau_ripple is not None and m.plateau_ripple <= PLATEAU_RIPPLE:
                reached = "" if math.isfinite(m.interior) else "no emitted cube inside the core reaches the inner cube, "
                outcome.check(f"{m.name}: interior oscillation/average ratio <= {INTERIOR_THRESHOLD}",
                              "sparse_engine", m.interior <= INTERIOR_THRESHOLD,
                              f"{reached}interior {m.interior:.4g}, whole family {m.whole:.4g}, ε = {m.plateau_ripple}")
            if m.zero:
                values = (m.osc.best_constant, m.avg.best_constant, m.whole)
                outcome.check(f"{m.name}: zero function gives zero bounds", "sparse_engine",
                              not any(values), f"{values}")
        outcome.results["members"] = {r["member"]: {k: v for k, v in r.items() if k != "member"} for r in rows}

    # ------------------------------------------------------------------
    # sobolev
    # ------------------------------------------------------------------

    def _plane_function(self, gen, name, cells):
        return self._corpus_function(gen, name, Grid.centered(self.cfg.half_width, cells, 2))

    def _sobolev_task(self, task):
        label, name, gen = task
        T = self.registry.resolve(label)
        f = self._plane_function(gen, name, self.cfg.plane_grid)
        coarse = sobolev_check(T, f)
        fine = None
        if self.cfg.refine:
            fine = sobolev_check(T, self._plane_function(gen, name, 2 * self.cfg.plane_grid))
        chain = None
        if T.diagonal is None and T.kernel is not None and not T.kernel.is_zero:
            engine = EngineConfig.for_dim(2, **self.cfg.engine.model_dump(exclude_none=True))
            chain = chain_constants(T, f, engine)
        self.memberFinished.emit("sobolev", f"{label}/{name}")
        return label, name, coarse, fine, chain

    def _poincare_task(self, item):
        name, gen = item
        rng = stream(self.cfg.seed, "sobolev", f"poincare:{name}")
        cubes = [
            Cube(tuple(rng.uniform(-1.5, 1.5, size=2)), 2.0 ** rng.uniform(-3.0, 0.5))
            for _ in range(self.cfg.poincare_cubes)
        ]
        cells = self.cfg.plane_grid
        f = self._plane_function(gen, name, cells)
        coarse = poincare_check(f, cubes)
        fine = poincare_check(self._plane_function(gen, name, 2 * cells), cubes, reference=coarse) \
            if self.cfg.refine else None

        points = rng.integers(0, cells, size=(self.cfg.riesz_points, 2))

        def riesz_ratio(func, scale):
            g = gradient_norm(func)
            potential = riesz_potential(g)
            best = 0.0
            for x in points:
                for j in RIESZ_LATTICES:
                    lhs, rhs = dyadic_riesz_bound(g, j, scale * x, potential)
                    if rhs > 0:
                        best = max(best, lhs / rhs)
            return best

        ratio = riesz_ratio(f, 1)
        ratio_fine = riesz_ratio(self._plane_function(gen, name, 2 * cells), 2) if self.cfg.refine else None
        return name, coarse, fine, ratio, ratio_fine

    def _suite_sobolev(self, outcome):
        corpus = [(name, gen) for name, gen in self.registry.build_corpus(self.cfg) if gen.smooth]
        labels = list(self.cfg.operators) or list(SOBOLEV_OPERATORS)
        tasks = [(label, name, gen) for label in labels for name, gen in corpus]
        results = self._map(lambda t: self._guard(f"{t[0]}/{t[1]}", self._sobolev_task, t), tasks)

        for label in labels:
            runs = [r for r in results if r is not None and r[0] == label]
            if not runs:
                continue
            best = max(c.best_constant for _, _, c, _, _ in runs)
            worst = max(c.violation_fraction for _, _, c, _, _ in runs)
            outcome.check(f"{label}: |Tf| <= C I_1(|∇f|) with finite C", "sobolev",
                          math.isfinite(best) and worst <= VIOLATION_BUDGET,
                          f"C = {best:.6g}, max violation fraction {worst:.3g}")
            outcome.results[f"{label}.bestConstant"] = best
            rows = [(name, c.best_constant, r.best_constant if r else "") for _, name, c, r, _ in runs]
            self.write_table(outcome.suite, f"{_safe_name(label)}.csv", ["member", "C", "C_fine"], rows)
            if self.cfg.refine:
                best_fine = max(r.best_constant for _, _, _, r, _ in runs)
                outcome.check(f"{label}: Sobolev constant refinement-stable", "sobolev",
                              _within_factor(best, best_fine, REFINEMENT_FACTOR),
                              f"C(N={self.cfg.plane_grid}) = {best:.6g}, C(N={2 * self.cfg.plane_grid}) = {best_fine:.6g}")
                outcome.results[f"{label}.bestConstantFine"] = best_fine

            chains = [(c, ch) for _, _, c, _, ch in runs if ch is not None]
            if chains:
                # per member |Tf| <= sparse x poincare x potential x I_1(|∇f|) cell by cell
                slack = max(_chain_slack(c.best_constant, ch.product) for c, ch in chains)
                product = max(ch.product for _, ch in chains)
                outcome.check(f"{label}: Sobolev constant <= {CHAIN_FACTOR:g} x chain product", "sobolev",
                              slack <= 1.0,
                              f"C = {best:.6g}, max chain product {product:.6g}, worst C/({CHAIN_FACTOR:g} x product) {slack:.3g}")
                outcome.results[f"{label}.chain"] = [{"member": name, **ch.to_dict()}
                                                     for (_, name, _, _, ch) in runs if ch is not None]

        stats = [s for s in self._map(lambda item: self._guard(item[0], self._poincare_task, item), corpus)
                 if s is not None]
        if not stats:
            return
        poincare = max(c.max_constant for _, c, _, _, _ in stats)
        ratio = max(r for *_, r, _ in stats)
        outcome.results.update(poincareConstant=poincare, rieszRatio=ratio)
        self.write_table(outcome.suite, "poincare.csv", ["member", "C_Q", "C_Q_fine", "skipped", "riesz", "riesz_fine"],
                         [(n, c.max_constant, f.max_constant if f else "", len(c.skipped), r, rf if rf is not None else "")
                          for n, c, f, r, rf in stats])
        if self.cfg.refine:
            poincare_fine = max(f.max_constant for _, _, f, _, _ in stats)
            ratio_fine = max(rf for *_, rf in stats)
            drift = abs(poincare_fine - poincare) / poincare if poincare > 0 else 0.0
            outcome.check("Poincaré constant stable under refinement", "sobolev", drift <= POINCARE_VARIATION,
                          f"max C_Q {poincare:.6g} -> {poincare_fine:.6g}")
            outcome.check("dyadic sum / I_1 ratio stable under refinement", "sobolev",
                          _within_factor(ratio, ratio_fine, REFINEMENT_FACTOR), f"{ratio:.6g} -> {ratio_fine:.6g}")
            outcome.results.update(poincareConstantFine=poincare_fine, rieszRatioFine=ratio_fine)

    # ------------------------------------------------------------------
    # necessity-probe
    # ------------------------------------------------------------------

    def _probe_config(self, dim):
        p = self.cfg.probe
        return ProbeConfig(radii=tuple(p.radii), cells=p.cells if dim == 1 else p.plane_cells,
                           margin=p.margin, dim=dim)

    def _probe_task(self, label):
        T = self.registry.resolve(label)
        dim = T.dim or self.cfg.dim
        probe = self._probe_config(dim)
        if dim == 2:
            verdict = necessity_probe(T, probe)
            result, extra = verdict.probe, verdict.to_dict()
        else:
            result = t1_probe(T, probe)
            extra = {"operator": T.label, "probe": result.to_dict(), "note": ""
                     if T.within_hypotheses else "control with an unbounded diagonal, outside the CZO class"}
        error = None
        if T.diagonal is not None:
            window = Cube((0.0,) * dim, 2.0)
            estimate = t1_estimate(T, probe, window)
            grid = estimate.grid
            sl = grid.slices(window)
            b = T.diagonal(grid.midpoints()).reshape(grid.shape)[sl]
            error = float(np.max(np.abs(estimate.values[sl] - (b - b.mean()))))
        self.memberFinished.emit("necessity-probe", label)
        return T, result, extra, error

    def _suite_necessity_probe(self, outcome):
        labels = list(self.cfg.operators) or list(PROBE_OPERATORS)
        results = self._map(lambda label: self._guard(label, self._probe_task, label), labels)
        for label, res in zip(labels, results):
            if res is None:
                continue
            T, result, extra, error = res
            norms = result.norms
            self.emit_series(outcome.suite, _safe_name(label), ["R", "supNorm"], result.rows)
            if error is not None:
                extra["t1EstimateError"] = error
            self.write_json(outcome.suite, f"{_safe_name(label)}.json", extra)
            outcome.results[f"{label}.verdict"] = result.verdict
            if T.within_hypotheses:
                outcome.check(f"{label}: T(θ_R) bounded in R", "czo", result.verdict == "bounded",
                              f"sup norms {[round(s, 6) for s in norms]}")
                if "premiseOk" in extra:
                    outcome.check(f"{label}: sup I_1(|∇θ_R|) independent of R", "sobolev", extra["premiseOk"],
                                  f"{[round(p['supPotential'], 6) for p in extra['premise']]}")
            else:
                radii = [r for r, _ in result.rows]
                needed = 0.5 * math.log(radii[-1] / radii[0]) if len(radii) > 1 else 0.0
                monotone = all(b >= a for a, b in zip(norms, norms[1:]))
                outcome.check(f"{label}: control grows at least like ½ ln R", "czo",
                              result.verdict == "unbounded" and monotone and norms[-1] - norms[0] >= needed,
                              f"growth {norms[-1] - norms[0]:.4g} (needed {needed:.4g}), verdict {result.verdict}")


def run_suite(name, cfg, store=None):
    """Run one suite (or "all") and return the list of outcomes"""
    runner = SuiteRunner(cfg, store)
    if name == "all":
        return runner.run_all()
    return [runner.run(name)]


def exit_status(outcomes):
    return 0 if all(o.passed for o in outcomes) else 1
