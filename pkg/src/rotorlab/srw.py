"""Simple random walk absorbed at the sink: Green's function and escape probability."""
from __future__ import annotations

import numba
import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .budget import budget
from .graph import SinkedGraph
from .parallel import map_chunks
from .rng import Rng, nb_below, nb_key

RESIDUAL_TOL = 1e-10


class SolverError(RuntimeError):
    pass


def laplacian_sparse(g: SinkedGraph) -> scipy.sparse.csr_matrix:
    n = g.n_active
    src = np.repeat(np.arange(n), g.degrees)
    keep = g.targets >= 0
    adj = scipy.sparse.csr_matrix(
        (np.ones(int(keep.sum())), (src[keep], g.targets[keep])), shape=(n, n)
    )
    return (scipy.sparse.diags(g.degrees.astype(float)) - adj).tocsr()


def _rel_residual(L, y, rhs) -> float:
    return float(np.linalg.norm(L @ y - rhs) / np.linalg.norm(rhs))


def green_function(g: SinkedGraph, a: int) -> np.ndarray:
    """Expected visits to each active vertex by the absorbed walk from ``a``.

    With L the sink-reduced Laplacian (symmetric positive definite), the
    visit matrix is L^{-1} D, so row ``a`` is ``deg * y`` where ``L y = e_a``.
    """
    g._check_vertex(a)
    n = g.n_active
    rhs = np.zeros(n)
    rhs[a] = 1.0
    L = laplacian_sparse(g)
    if n <= budget("dense"):
        dense = L.toarray()
        try:
            lu = scipy.linalg.lu_factor(dense, check_finite=False)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SolverError(str(exc)) from exc
        y = scipy.linalg.lu_solve(lu, rhs)
        for _ in range(2):
            y += scipy.linalg.lu_solve(lu, rhs - dense @ y)
    else:
        precond = scipy.sparse.diags(1.0 / g.degrees)
        y, info = scipy.sparse.linalg.cg(L, rhs, rtol=1e-12, atol=0.0, M=precond, maxiter=50 * n)
        if info != 0:
            raise SolverError(f"conjugate gradient did not converge (info={info})")
    res = _rel_residual(L, y, rhs)
    if not np.isfinite(res) or res > RESIDUAL_TOL:
        raise SolverError(f"relative residual {res:.3g} above {RESIDUAL_TOL}")
    return y * g.degrees


def escape_probability(g: SinkedGraph, a: int) -> float:
    """Probability the walk from ``a`` hits the sink before returning to ``a``."""
    return 1.0 / float(green_function(g, a)[a])


def escape_probability_direct(g: SinkedGraph, a: int) -> float:
    """Same quantity from the harmonic first-return system (independent route)."""
    g._check_vertex(a)
    n = g.n_active
    others = [v for v in range(n) if v != a]
    pos = {v: i for i, v in enumerate(others)}
    M = np.zeros((len(others), len(others)))
    b = np.zeros(len(others))
    for v in others:
        i = pos[v]
        d = g.degree(v)
        M[i, i] += 1.0
        for t in g.slots(v):
            if t < 0:
                b[i] += 1.0 / d
            elif t != a:
                M[i, pos[t]] -= 1.0 / d
    h = np.linalg.solve(M, b) if others else np.zeros(0)
    d = g.degree(a)
    return sum(1.0 if t < 0 else h[pos[t]] for t in g.slots(a)) / d


@numba.njit(cache=True, nogil=True)
def nb_srw_visits(off, tg, a, seed, lo, hi, sums, sqsums, count, touched):
    """Absorbed random walks for trials [lo, hi); integer visit sums per vertex."""
    for trial in range(lo, hi):
        key = nb_key(seed, trial)
        ctr = np.uint64(0)
        m = 0
        x = a
        while True:
            if count[x] == 0:
                touched[m] = x
                m += 1
            count[x] += 1
            base = off[x]
            s, ctr = nb_below(key, ctr, off[x + 1] - base)
            x = tg[base + s]
            if x < 0:
                break
        for i in range(m):
            v = touched[i]
            c = count[v]
            sums[v] += c
            sqsums[v] += c * c
            count[v] = 0


def mc_green(g: SinkedGraph, a: int, trials: int, rng: Rng) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo visit counts: per-vertex mean and standard error over ``trials`` walks.

    Trial ``i`` uses the substream keyed ``rng.seed ^ mix64(i)``.
    """
    g._check_vertex(a)
    if trials < 1:
        raise ValueError("trials must be positive")
    n = g.n_active
    seed = np.uint64(rng.key)

    def run(lo, hi):
        sums = np.zeros(n, dtype=np.int64)
        sq = np.zeros(n, dtype=np.int64)
        nb_srw_visits(g.offsets, g.targets, a, seed, lo, hi, sums, sq,
                      np.zeros(n, dtype=np.int64), np.empty(n, dtype=np.int64))
        return sums, sq

    parts = map_chunks(run, trials)
    sums = sum(p[0] for p in parts)
    sq = sum(p[1] for p in parts)
    mean = sums / trials
    if trials > 1:
        var = np.maximum(sq - trials * mean * mean, 0.0) / (trials - 1)
        se = np.sqrt(var / trials)
    else:
        se = np.zeros(n)
    return mean, se
