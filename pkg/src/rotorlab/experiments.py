"""Exact checks and seeded Monte Carlo experiments producing structured reports.

Every Monte Carlo trial draws from its own substream (``seed ^ mix64(trial)``,
or a tagged derivative of the seed for a second batch), and reductions run in
trial order, so reports replay bit-exactly for any thread count.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numba
import numpy as np

from .engine import (
    RotorConfig,
    WalkDidNotTerminate,
    default_step_cap,
    nb_escape,
    nb_reaches_tags,
    nb_return_reach,
    walk_to_sink,
)
from .forests import (
    default_draw_cap,
    enumerate_forests,
    count_forests,
    forest_to_rotor,
    nb_wilson,
    rotor_to_forest,
)
from .graph import SinkedGraph, distance_to_set, distance_to_sink, enlarge_sink
from .parallel import map_chunks
from .rng import Rng, nb_key, substream_key
from .srw import escape_probability, green_function, mc_green
from .stats import chi_square_uniform, normal_sf, two_proportion_z, two_sided_p

SCHEMA_VERSION = 1
CSV_HEADER = [
    "experiment", "graph", "seed", "metric", "vertex",
    "estimate", "stderr", "reference", "statistic", "pvalue", "verdict",
]
PASS, FAIL, INFO = "pass", "fail", "informational"

# second-batch stream tags, offset past any trial index
_STREAM_B = 1 << 40
_STREAM_D = (1 << 40) + 1


@dataclass
class Metric:
    metric: str
    estimate: float | int | None
    stderr: float | None = None
    reference: float | int | None = None
    statistic: float | None = None
    pvalue: float | None = None
    vertex: str = ""
    verdict: str = INFO


@dataclass
class ExperimentReport:
    name: str
    graph: str
    seed: int | None
    trials: int
    metrics: list[Metric] = field(default_factory=list)
    verdict: str = INFO
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict != FAIL

    def metric(self, name: str, vertex: str = "") -> Metric:
        for m in self.metrics:
            if m.metric == name and m.vertex == vertex:
                return m
        raise KeyError((name, vertex))

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "graph": self.graph,
            "seed": self.seed,
            "trials": self.trials,
            "verdict": self.verdict,
            "metrics": [asdict(m) for m in self.metrics],
            "details": self.details,
        }

    def csv_rows(self) -> list[list[str]]:
        return [
            [self.name, self.graph, _fmt(self.seed), m.metric, m.vertex, _fmt(m.estimate),
             _fmt(m.stderr), _fmt(m.reference), _fmt(m.statistic), _fmt(m.pvalue), m.verdict]
            for m in self.metrics
        ]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def reports_to_csv(reports: Iterable[ExperimentReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in reports:
        w.writerows(r.csv_rows())
    return buf.getvalue()


def reports_to_json(reports: Iterable[ExperimentReport]) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "reports": [r.to_dict() for r in reports]}
    return json.dumps(doc, indent=2, default=_json_default)


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _combine(verdicts: Iterable[str]) -> str:
    vs = list(verdicts)
    if FAIL in vs:
        return FAIL
    return PASS if PASS in vs else INFO


# ---------------------------------------------------------------- trial kernels

@numba.njit(cache=True, nogil=True)
def nb_odometer_trials(off, tg, a, seed, lo, hi, draw_cap, step_cap, sums, sqsums):
    n = off.shape[0] - 1
    rotor = np.empty(n, dtype=np.int64)
    count = np.zeros(n, dtype=np.int64)
    touched = np.empty(n, dtype=np.int64)
    for trial in range(lo, hi):
        if nb_wilson(off, tg, nb_key(seed, trial), np.uint64(0), rotor, draw_cap) == 0:
            return -1
        x = a
        t = 0
        m = 0
        while True:
            if count[x] == 0:
                touched[m] = x
                m += 1
            count[x] += 1
            base = off[x]
            s = rotor[x] + 1
            if s == off[x + 1] - base:
                s = 0
            rotor[x] = s
            y = tg[base + s]
            if y < 0:
                break
            t += 1
            if t > step_cap:
                return -2
            x = y
        for i in range(m):
            v = touched[i]
            c = count[v]
            sums[v] += c
            sqsums[v] += c * c
            count[v] = 0
    return 0


@numba.njit(cache=True, nogil=True)
def nb_escape_trials(off, tg, a, n_particles, seed, lo, hi, draw_cap, step_cap, out):
    rotor = np.empty(off.shape[0] - 1, dtype=np.int64)
    for trial in range(lo, hi):
        if nb_wilson(off, tg, nb_key(seed, trial), np.uint64(0), rotor, draw_cap) == 0:
            return -1
        k = nb_escape(off, tg, rotor, a, n_particles, step_cap)
        if k < 0:
            return -2
        out[trial - lo] = k
    return 0


@numba.njit(cache=True, nogil=True)
def nb_tail_trials(off, tg, a, in_w, dist_w, seed_e, off2, tg2, dist2, tag_ok, seed_d,
                   lo, hi, draw_cap, draw_cap2, step_cap, out_e, out_d):
    rotor = np.empty(off.shape[0] - 1, dtype=np.int64)
    rotor2 = np.empty(off2.shape[0] - 1, dtype=np.int64)
    for trial in range(lo, hi):
        if nb_wilson(off, tg, nb_key(seed_e, trial), np.uint64(0), rotor, draw_cap) == 0:
            return -1
        m = nb_return_reach(off, tg, rotor, a, in_w, dist_w, step_cap)
        if m == -2:
            return -2
        out_e[trial - lo] = m
        if nb_wilson(off2, tg2, nb_key(seed_d, trial), np.uint64(0), rotor2, draw_cap2) == 0:
            return -1
        reach = nb_reaches_tags(off2, tg2, rotor2, tag_ok)
        best = 0
        for v in range(reach.shape[0]):
            if reach[v] and dist2[v] > best:
                best = dist2[v]
        out_d[trial - lo] = best
    return 0


@numba.njit(cache=True, nogil=True)
def nb_window_trials(off, tg, a, do_walk, window, seed, lo, hi, draw_cap, step_cap, out):
    rotor = np.empty(off.shape[0] - 1, dtype=np.int64)
    for trial in range(lo, hi):
        if nb_wilson(off, tg, nb_key(seed, trial), np.uint64(0), rotor, draw_cap) == 0:
            return -1
        if do_walk:
            x = a
            t = 0
            while True:
                base = off[x]
                s = rotor[x] + 1
                if s == off[x + 1] - base:
                    s = 0
                rotor[x] = s
                y = tg[base + s]
                if y < 0:
                    break
                t += 1
                if t > step_cap:
                    return -2
                x = y
        for j in range(window.shape[0]):
            out[trial - lo, j] = rotor[window[j]]
    return 0


@numba.njit(cache=True, nogil=True)
def nb_forest_trials(off, tg, seed, lo, hi, draw_cap, out):
    rotor = np.empty(off.shape[0] - 1, dtype=np.int64)
    for trial in range(lo, hi):
        if nb_wilson(off, tg, nb_key(seed, trial), np.uint64(0), rotor, draw_cap) == 0:
            return -1
        out[trial - lo, :] = rotor
    return 0


def _check_status(status: int, g: SinkedGraph, a: int) -> None:
    if status == -1:
        raise RuntimeError("Wilson sampler exceeded its draw cap")
    if status == -2:
        raise WalkDidNotTerminate(a, default_step_cap(g))


def sample_forests(g: SinkedGraph, trials: int, seed: int) -> np.ndarray:
    """``trials`` independent forests (one row of parent slots per trial)."""
    key = np.uint64(seed & ((1 << 64) - 1))

    def run(lo, hi):
        out = np.empty((hi - lo, g.n_active), dtype=np.int64)
        _check_status(nb_forest_trials(g.offsets, g.targets, key, lo, hi, default_draw_cap(g), out), g, -1)
        return out

    return np.concatenate(map_chunks(run, trials)) if trials else np.empty((0, g.n_active), np.int64)


# ---------------------------------------------------------------- exact experiments

def stationarity_exact(g: SinkedGraph, a: int) -> ExperimentReport:
    """Check that walking from ``a`` permutes the set of oriented spanning forests."""
    forests = enumerate_forests(g)
    index = {f.as_tuple(): i for i, f in enumerate(forests)}
    image = []
    for f in forests:
        out = walk_to_sink(g, forest_to_rotor(f), a).final_config
        image.append(index[rotor_to_forest(g, out).as_tuple()])
    bijective = sorted(image) == list(range(len(forests)))
    verdict = PASS if bijective else FAIL
    fixed = sum(1 for i, j in enumerate(image) if i == j)
    metrics = [
        Metric("forests", len(forests), verdict=INFO),
        Metric("bijection", int(bijective), reference=1, vertex=g.label_str(a), verdict=verdict),
        Metric("fixed_points", fixed, vertex=g.label_str(a)),
    ]
    return ExperimentReport(
        "stationarity-exact", g.spec, None, len(forests), metrics, verdict,
        {"start": g.label_str(a), "permutation": image,
         "forests": [list(f.as_tuple()) for f in forests]},
    )


def odometer_exact(g: SinkedGraph, a: int, tol: float = 1e-9) -> ExperimentReport:
    """Average odometer over all forests against the Green's function, entrywise."""
    forests = enumerate_forests(g)
    total = np.zeros(g.n_active)
    for f in forests:
        total += walk_to_sink(g, forest_to_rotor(f), a).odometer
    mean = total / len(forests)
    G = green_function(g, a)
    metrics = []
    for v in range(g.n_active):
        err = abs(mean[v] - G[v])
        metrics.append(Metric("mean_odometer", mean[v], 0.0, G[v], err, None, g.label_str(v),
                              PASS if err <= tol else FAIL))
    return ExperimentReport("odometer-exact", g.spec, None, len(forests), metrics,
                            _combine(m.verdict for m in metrics), {"start": g.label_str(a), "tol": tol})


def counting_oracle(g: SinkedGraph) -> ExperimentReport:
    enumerated = len(enumerate_forests(g))
    det = count_forests(g)
    verdict = PASS if enumerated == det else FAIL
    return ExperimentReport("count-forests", g.spec, None, 0,
                            [Metric("forests", enumerated, reference=det, verdict=verdict)], verdict)


def sampler_uniformity(g: SinkedGraph, rng: Rng, per_forest: int = 100, alpha: float = 1e-3) -> ExperimentReport:
    """Chi-square of Wilson samples over the enumerated forests (N = per_forest * |SF|)."""
    forests = enumerate_forests(g)
    index = {f.parent_slot.tobytes(): i for i, f in enumerate(forests)}
    n = per_forest * len(forests)
    samples = sample_forests(g, n, rng.key)
    counts = [0] * len(forests)
    for row in samples:
        counts[index[row.tobytes()]] += 1
    stat, dof, p = chi_square_uniform(counts)
    verdict = PASS if p >= alpha else FAIL
    metrics = [Metric("chi_square", stat, reference=dof, statistic=stat, pvalue=p, verdict=verdict),
               Metric("forests", len(forests))]
    return ExperimentReport("sample-forest", g.spec, rng.seed, n, metrics, verdict,
                            {"counts": counts, "alpha": alpha})


# ---------------------------------------------------------------- Monte Carlo experiments

def green_crosscheck(g: SinkedGraph, a: int, trials: int, rng: Rng,
                     z_limit: float = 4.0, z_flag: float = 3.0) -> ExperimentReport:
    """Exact Green's function against simulated random walks, vertex by vertex."""
    G = green_function(g, a)
    mean, se = mc_green(g, a, trials, rng)
    metrics = []
    flagged = 0
    for v in range(g.n_active):
        diff = mean[v] - G[v]
        if se[v] > 0:
            z = diff / se[v]
        else:
            z = 0.0 if abs(diff) <= 1e-12 else math.copysign(math.inf, diff)
        flagged += abs(z) > z_flag
        metrics.append(Metric("visits", mean[v], se[v], G[v], z, two_sided_p(z), g.label_str(v),
                              PASS if abs(z) <= z_limit else FAIL))
    verdict = _combine(m.verdict for m in metrics)
    zs = [abs(m.statistic) for m in metrics]
    metrics.append(Metric("max_abs_z", max(zs), reference=z_limit, verdict=verdict))
    metrics.append(Metric("flagged_vertices", flagged, reference=z_flag))
    return ExperimentReport("green-crosscheck", g.spec, rng.seed, trials, metrics, verdict,
                            {"start": g.label_str(a)})


def odometer_vs_green(g: SinkedGraph, a: int, trials: int, rng: Rng,
                      vertices: Sequence[int] | None = None, z_limit: float = 4.0) -> ExperimentReport:
    """Mean rotor-walk odometer from uniformly sampled forests against the Green's function."""
    if trials < 100:
        raise ValueError("odometer experiment needs at least 100 trials")
    n = g.n_active
    key = np.uint64(rng.key)
    cap = default_step_cap(g)

    def run(lo, hi):
        sums = np.zeros(n, dtype=np.int64)
        sq = np.zeros(n, dtype=np.int64)
        _check_status(nb_odometer_trials(g.offsets, g.targets, a, key, lo, hi,
                                         default_draw_cap(g), cap, sums, sq), g, a)
        return sums, sq

    parts = map_chunks(run, trials)
    sums = sum(p[0] for p in parts)
    sq = sum(p[1] for p in parts)
    mean = sums / trials
    se = np.sqrt(np.maximum(sq - trials * mean * mean, 0.0) / (trials - 1) / trials)
    G = green_function(g, a)
    vertices = [a] if vertices is None else list(vertices)
    decisive = trials >= 10_000
    metrics = []
    for v in vertices:
        diff = mean[v] - G[v]
        z = diff / se[v] if se[v] > 0 else (0.0 if abs(diff) <= 1e-9 else math.inf)
        ok = abs(z) <= z_limit
        metrics.append(Metric("mean_odometer", mean[v], se[v], G[v], z, two_sided_p(z), g.label_str(v),
                              (PASS if ok else FAIL) if decisive else INFO))
    verdict = _combine(m.verdict for m in metrics)
    return ExperimentReport("odometer", g.spec, rng.seed, trials, metrics, verdict,
                            {"start": g.label_str(a), "z_limit": z_limit})


def escape_rate_run(g: SinkedGraph, a: int, n: int, trials: int, rng: Rng) -> ExperimentReport:
    """Fraction of ``n`` rotor-walk particles escaping, against the random-walk escape probability."""
    if n < 1:
        raise ValueError("need at least one particle")
    key = np.uint64(rng.key)
    cap = default_step_cap(g)

    def run(lo, hi):
        out = np.empty(hi - lo, dtype=np.int64)
        _check_status(nb_escape_trials(g.offsets, g.targets, a, n, key, lo, hi,
                                       default_draw_cap(g), cap, out), g, a)
        return out

    counts = np.concatenate(map_chunks(run, trials))
    ratios = counts / n
    mean = float(ratios.mean())
    se = float(ratios.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    alpha = escape_probability(g, a)
    band = max(4 * se, 2 / math.sqrt(n) + 0.01)
    dev = abs(mean - alpha)
    verdict = INFO if n == 1 else (PASS if dev <= band else FAIL)
    metrics = [
        Metric("escape_ratio", mean, se, alpha, dev, None, g.label_str(a), verdict),
        Metric("band", band),
        Metric("min_ratio", float(ratios.min())),
        Metric("max_ratio", float(ratios.max())),
    ]
    return ExperimentReport("escape-rate", g.spec, rng.seed, trials, metrics, verdict,
                            {"start": g.label_str(a), "particles": n, "escaped": counts.tolist()})


def tail_events(g: SinkedGraph, a: int, W: Sequence[int], trials: int, seed: int
                ) -> tuple[np.ndarray, np.ndarray]:
    """Per-trial reach values for the return event and the sink-path event.

    ``E_{r,W}`` holds iff the first value is >= r; ``D_r`` (paths into ``W``
    after ``W`` is absorbed into the sink) holds for r >= 1 iff the second
    value is >= r.
    """
    W = sorted(set(W))
    dist_w = distance_to_set(g, W)
    in_w = np.zeros(g.n_active, dtype=np.bool_)
    in_w[W] = True
    gbar, _ = enlarge_sink(g, W, tag=1)
    dist2 = distance_to_sink(gbar, [1])
    tag_ok = np.array([False, True])
    seed_e = np.uint64(seed & ((1 << 64) - 1))
    seed_d = np.uint64(substream_key(seed, _STREAM_D))
    cap = default_step_cap(g)

    def run(lo, hi):
        out_e = np.empty(hi - lo, dtype=np.int64)
        out_d = np.empty(hi - lo, dtype=np.int64)
        status = nb_tail_trials(g.offsets, g.targets, a, in_w, dist_w, seed_e,
                                gbar.offsets, gbar.targets, dist2, tag_ok, seed_d,
                                lo, hi, default_draw_cap(g), default_draw_cap(gbar), cap, out_e, out_d)
        _check_status(status, g, a)
        return out_e, out_d

    parts = map_chunks(run, trials)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def _proportion(x: int, n: int) -> tuple[float, float]:
    p = x / n
    return p, math.sqrt(p * (1 - p) / n)


def tail_decay(family: Sequence[tuple[int, SinkedGraph]], a_label, W_labels, r_list: Sequence[int],
               trials: int, rng: Rng, alpha: float = 0.01) -> ExperimentReport:
    """Decay in r of P[E_{r,W}] and P[D_r] for each exhaustion radius R."""
    r_list = sorted(set(int(r) for r in r_list))
    if not r_list or r_list[0] < 0:
        raise ValueError("r_list must hold non-negative distances")
    family = sorted(family, key=lambda p: p[0])
    metrics: list[Metric] = []
    curves: dict[int, dict[str, list[float]]] = {}
    counts: dict[int, dict[str, list[int]]] = {}
    for R, g in family:
        a = g.resolve(a_label)
        W = [g.resolve(w) for w in W_labels]
        reach_e, reach_d = tail_events(g, a, W, trials, substream_key(rng.key, R))
        ce = [int(np.count_nonzero(reach_e >= r)) for r in r_list]
        cd = [trials if r == 0 else int(np.count_nonzero(reach_d >= r)) for r in r_list]
        counts[R] = {"E": ce, "D": cd}
        curves[R] = {"E": [c / trials for c in ce], "D": [c / trials for c in cd]}
        for r, xe, xd in zip(r_list, ce, cd):
            pe, se_e = _proportion(xe, trials)
            pd, se_d = _proportion(xd, trials)
            metrics.append(Metric(f"P_E[R={R},r={r}]", pe, se_e))
            metrics.append(Metric(f"P_D[R={R},r={r}]", pd, se_d))
    # stability of each curve point between consecutive radii
    for (R0, _), (R1, _) in zip(family, family[1:]):
        for i, r in enumerate(r_list):
            for ev in ("E", "D"):
                z = two_proportion_z(counts[R1][ev][i], trials, counts[R0][ev][i], trials)
                metrics.append(Metric(f"stability_{ev}[R={R0}->{R1},r={r}]",
                                      curves[R1][ev][i], None, curves[R0][ev][i], z, two_sided_p(z)))
    Rmax = family[-1][0]
    verdicts = []
    for ev in ("E", "D"):
        x_lo, x_hi = counts[Rmax][ev][0], counts[Rmax][ev][-1]
        z = two_proportion_z(x_lo, trials, x_hi, trials)
        p = normal_sf(z)
        v = PASS if (len(r_list) > 1 and p <= alpha) else FAIL
        verdicts.append(v)
        metrics.append(Metric(f"decay_{ev}[R={Rmax},r={r_list[0]}->{r_list[-1]}]",
                              x_hi / trials, None, x_lo / trials, z, p, verdict=v))
    return ExperimentReport("tail-decay", ";".join(g.spec for _, g in family), rng.seed, trials, metrics,
                            _combine(verdicts),
                            {"r_list": r_list, "radii": [R for R, _ in family], "curves": curves,
                             "start": str(a_label), "W": [str(w) for w in W_labels]})


def ball(g: SinkedGraph, center: int, radius: int) -> list[int]:
    d = distance_to_set(g, [center])
    return [int(v) for v in np.flatnonzero((d >= 0) & (d <= radius))]


def window_slots(g: SinkedGraph, a: int, window: Sequence[int], trials: int, seed: int,
                 walk: bool) -> np.ndarray:
    """Rotor slots on ``window`` per trial: of the final configuration (``walk``) or of the sample."""
    win = np.asarray(window, dtype=np.int64)
    key = np.uint64(seed & ((1 << 64) - 1))
    cap = default_step_cap(g)

    def run(lo, hi):
        out = np.empty((hi - lo, len(win)), dtype=np.int64)
        _check_status(nb_window_trials(g.offsets, g.targets, a, walk, win, key, lo, hi,
                                       default_draw_cap(g), cap, out), g, a)
        return out

    return np.concatenate(map_chunks(run, trials))


def stationarity_marginals(g: SinkedGraph, a: int, trials: int, window: Sequence[int], rng: Rng,
                           alpha: float = 0.01, walk: bool = True) -> ExperimentReport:
    """Edge-inclusion frequencies on ``window``: final configurations vs fresh forests.

    With ``walk=False`` both batches are plain forest samples (null self-test).
    One two-proportion z-test per out-slot, Bonferroni-corrected at ``alpha``.
    """
    if trials < 1000:
        raise ValueError("marginal comparison needs at least 1000 trials")
    window = sorted(set(int(v) for v in window))
    name = "stationarity-marginals" if walk else "stationarity-marginals-null"
    details = {"start": g.label_str(a), "window": [g.label_str(v) for v in window], "alpha": alpha}
    if not window:
        return ExperimentReport(name, g.spec, rng.seed, trials, [], PASS, details)
    first = window_slots(g, a, window, trials, rng.key, walk)
    second = window_slots(g, a, window, trials, substream_key(rng.key, _STREAM_B), False)
    tests = sum(g.degree(v) for v in window)
    threshold = alpha / tests
    metrics = []
    for j, v in enumerate(window):
        for s in range(g.degree(v)):
            x1 = int(np.count_nonzero(first[:, j] == s))
            x2 = int(np.count_nonzero(second[:, j] == s))
            z = two_proportion_z(x1, trials, x2, trials)
            p = two_sided_p(z)
            metrics.append(Metric(f"slot{s}", x1 / trials, math.sqrt(x1 / trials * (1 - x1 / trials) / trials),
                                  x2 / trials, z, p, g.label_str(v), PASS if p > threshold else FAIL))
    verdict = _combine(m.verdict for m in metrics)
    metrics.append(Metric("min_pvalue", min(m.pvalue for m in metrics), reference=threshold, verdict=verdict))
    details["tests"] = tests
    return ExperimentReport(name, g.spec, rng.seed, trials, metrics, verdict, details)


def walk_report(g: SinkedGraph, cfg: RotorConfig, a: int) -> ExperimentReport:
    out = walk_to_sink(g, cfg, a)
    metrics = [Metric("odometer", int(out.odometer[v]), vertex=g.label_str(v))
               for v in range(g.n_active) if out.odometer[v]]
    metrics.append(Metric("steps", out.steps))
    return ExperimentReport("walk", g.spec, None, 1, metrics, INFO,
                            {"start": g.label_str(a), "final": list(out.final_config.as_tuple()),
                             "terminal_vertex": g.label_str(out.terminal_vertex)})
