"""The acceptance suite behind ``rotorlab selftest``.

Each criterion runs its experiments, applies its tolerance and wall-clock
limit, and returns the reports.  Only report content goes to CSV, so two
runs with the same seed write identical bytes; timings go to JSON only.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

from . import experiments as ex
from .corpus import corpus
from .engine import RotorConfig, walk_to_sink
from .forests import bareiss_det, count_forests, fraction_det, laplacian
from .graph import build_lattice_box, from_edge_list
from .rng import Rng, substream_key

DEFAULT_SEED = 20190


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    elapsed: float
    limit: float
    reports: list = field(default_factory=list)
    notes: str = ""

    def line(self) -> str:
        state = "PASS" if self.passed else "FAIL"
        return f"[{state}] criterion {self.number}: {self.title} ({self.elapsed:.1f}s / {self.limit:.0f}s){self.notes}"


def _rng(seed: int, *path: int) -> Rng:
    key = seed
    for p in path:
        key = substream_key(key, p)
    return Rng(key)


def warmup() -> None:
    """Compile the numba kernels on a toy graph so timings measure the work."""
    g = from_edge_list(2, [(0, 1)], [(1, 1)], spec="warmup")
    walk_to_sink(g, RotorConfig([0, 1]), 0)
    rng = Rng(1)
    ex.sampler_uniformity(g, rng, per_forest=1)
    ex.odometer_vs_green(g, 0, 100, rng)
    ex.escape_rate_run(g, 0, 2, 2, rng)
    ex.tail_events(build_lattice_box(1, 2), 2, [2], 2, 1)
    ex.window_slots(g, 0, [0], 2, 1, True)
    from .srw import mc_green

    mc_green(g, 0, 2, rng)


def c1_exact_stationarity(seed: int):
    reports = []
    for g in corpus().values():
        reports.extend(ex.stationarity_exact(g, a) for a in range(g.n_active))
    return reports, ""


def c2_counting(seed: int):
    reports = [ex.counting_oracle(g) for g in corpus().values()]
    grid = corpus()["grid3x3-corner"]
    L = laplacian(grid)
    bareiss, frac, counted = bareiss_det(L), fraction_det(L), count_forests(grid)
    ok = bareiss == frac == counted == 192
    reports.append(ex.ExperimentReport(
        "determinant-crosscheck", grid.spec, None, 0,
        [ex.Metric("bareiss", bareiss, reference=frac, verdict=ex.PASS if ok else ex.FAIL),
         ex.Metric("matrix_tree_count", counted, reference=192, verdict=ex.PASS if ok else ex.FAIL)],
        ex.PASS if ok else ex.FAIL))
    return reports, ""


def c3_sampler(seed: int):
    return [ex.sampler_uniformity(g, _rng(seed, 3, i), per_forest=100, alpha=1e-3)
            for i, g in enumerate(corpus().values())], ""


ODOMETER_VERTICES = ["0,0,0", "1,0,0", "0,0,-1", "1,1,0", "2,0,0", "3,2,1"]


def c4_odometer(seed: int):
    reports = []
    for g in corpus().values():
        reports.extend(ex.odometer_exact(g, a, tol=1e-9) for a in range(g.n_active))
    g = build_lattice_box(3, 10)
    vs = [g.resolve(v) for v in ODOMETER_VERTICES]
    reports.append(ex.odometer_vs_green(g, vs[0], 10_000, _rng(seed, 4), vs, z_limit=3.0))
    return reports, ""


def c5_green(seed: int):
    reports = [ex.green_crosscheck(g, 0, 100_000, _rng(seed, 5, i), z_limit=4.0)
               for i, g in enumerate(corpus().values())]
    g = build_lattice_box(3, 8)
    reports.append(ex.green_crosscheck(g, g.resolve("origin"), 100_000, _rng(seed, 5, 1000), z_limit=4.0))
    visits = [m for r in reports for m in r.metrics if m.metric == "visits"]
    over = [m for m in visits if m.verdict == ex.FAIL]
    notes = f"; {len(over)} of {len(visits)} vertices beyond 4 s.e."
    if over:
        worst = max(over, key=lambda m: abs(m.statistic))
        notes += f" (worst z={worst.statistic:.2f} at {worst.vertex})"
    return reports, notes


def c6_escape(seed: int):
    g = build_lattice_box(3, 12)
    big = ex.escape_rate_run(g, g.resolve("origin"), 10_000, 20, _rng(seed, 6))
    path = corpus()["path2"]
    small = ex.escape_rate_run(path, 0, 2, 2, _rng(seed, 6, 1))
    m = small.metric("escape_ratio", "0")
    exact = abs(m.estimate - m.reference) <= 1e-12 and m.stderr == 0.0
    small.metrics.append(ex.Metric("ratio_equals_alpha", int(exact), reference=1,
                                   verdict=ex.PASS if exact else ex.FAIL))
    small.verdict = ex._combine([small.verdict, ex.PASS if exact else ex.FAIL])
    return [big, small], ""


def c7_tail(seed: int):
    g = build_lattice_box(3, 10)
    return [ex.tail_decay([(10, g)], "origin", ["origin"], [1, 2, 4, 6], 10_000, _rng(seed, 7), alpha=0.01)], ""


def c8_marginals(seed: int):
    g = build_lattice_box(3, 8)
    window = ex.ball(g, g.resolve("origin"), 2)
    a = g.resolve("4,0,0")
    walked = ex.stationarity_marginals(g, a, 10_000, window, _rng(seed, 8), alpha=0.01)
    null = ex.stationarity_marginals(g, a, 10_000, window, _rng(seed, 8, 1), alpha=0.01, walk=False)
    return [walked, null], ""


CRITERIA: list[tuple[int, str, float, Callable]] = [
    (1, "exact stationarity on the corpus", 10, c1_exact_stationarity),
    (2, "forest counting oracle", 5, c2_counting),
    (3, "Wilson sampler uniformity", 30, c3_sampler),
    (4, "odometer identity", 120, c4_odometer),
    (5, "Green's function cross-check", 120, c5_green),
    (6, "escape rate", 180, c6_escape),
    (7, "tail decay", 180, c7_tail),
    (8, "marginal stationarity proxy", 300, c8_marginals),
]


def run_criterion(number: int, seed: int = DEFAULT_SEED) -> CriterionResult:
    for num, title, limit, fn in CRITERIA:
        if num == number:
            t0 = time.perf_counter()
            reports, notes = fn(seed)
            elapsed = time.perf_counter() - t0
            ok = all(r.passed for r in reports) and elapsed < limit
            return CriterionResult(num, title, ok, elapsed, limit, reports, notes)
    raise KeyError(number)


def run_all(seed: int = DEFAULT_SEED, only: list[int] | None = None, progress=None) -> list[CriterionResult]:
    warmup()
    results = []
    for num, *_ in CRITERIA:
        if only and num not in only:
            continue
        res = run_criterion(num, seed)
        if progress:
            progress(res.line())
        results.append(res)
    return results
