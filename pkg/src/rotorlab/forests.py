"""Sink-oriented spanning forests: Wilson sampling, enumeration, counting."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .budget import BudgetExceeded, budget
from .engine import RotorConfig
from .graph import SinkedGraph
from .rng import Rng, nb_below


class CycleDetected(ValueError):
    def __init__(self, vertex: int):
        super().__init__(f"oriented cycle through vertex {vertex}")
        self.vertex = vertex


@dataclass(frozen=True, eq=False)
class OrientedForest:
    """One out-slot per active vertex; following them always ends in the sink."""

    parent_slot: np.ndarray

    def __post_init__(self):
        arr = np.array(self.parent_slot, dtype=np.int64)
        arr.setflags(write=False)
        object.__setattr__(self, "parent_slot", arr)

    def __eq__(self, other):
        return isinstance(other, OrientedForest) and np.array_equal(self.parent_slot, other.parent_slot)

    def __hash__(self):
        return hash(self.parent_slot.tobytes())

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(int(x) for x in self.parent_slot)

    def to_document(self, graph_spec: str = "", seed: int | None = None) -> dict:
        doc = {"parent": [int(x) for x in self.parent_slot]}
        if graph_spec:
            doc["graph"] = graph_spec
        if seed is not None:
            doc["seed"] = seed
        return doc


@numba.njit(cache=True, nogil=True)
def nb_wilson(off, tg, key, ctr, parent, draw_cap):
    """Wilson's algorithm rooted at the sink, writing slot choices into ``parent``.

    Loop erasure is implicit: the last exit slot of each vertex overwrites
    earlier ones.  Returns the new counter, or 0 if ``draw_cap`` was hit.
    """
    n = parent.shape[0]
    in_tree = np.zeros(n, dtype=np.bool_)
    draws = 0
    for i in range(n):
        u = i
        while not in_tree[u]:
            base = off[u]
            s, ctr = nb_below(key, ctr, off[u + 1] - base)
            draws += 1
            if draws > draw_cap:
                return np.uint64(0)
            parent[u] = s
            t = tg[base + s]
            if t < 0:
                break
            u = t
        u = i
        while not in_tree[u]:
            in_tree[u] = True
            t = tg[off[u] + parent[u]]
            if t < 0:
                break
            u = t
    return ctr


def default_draw_cap(g: SinkedGraph) -> int:
    return 10**6 + 10**4 * g.n_active * g.max_degree


def wilson_sample(g: SinkedGraph, rng: Rng) -> OrientedForest:
    """Uniform sample from the sink-oriented spanning forests of ``g``; advances ``rng``."""
    parent = np.zeros(g.n_active, dtype=np.int64)
    key, ctr = rng.state()
    new = nb_wilson(g.offsets, g.targets, key, ctr, parent, default_draw_cap(g))
    if new == 0:
        raise RuntimeError("Wilson sampler exceeded its draw cap; is the sink reachable?")
    rng.advance_to(new)
    return OrientedForest(parent)


def forest_to_rotor(f: OrientedForest) -> RotorConfig:
    return RotorConfig(f.parent_slot)


def rotor_to_forest(g: SinkedGraph, cfg: RotorConfig) -> OrientedForest:
    """Inverse of :func:`forest_to_rotor`; raises :class:`CycleDetected` on a cycle."""
    cfg.check(g)
    n = g.n_active
    state = [0] * n  # 0 unseen, 1 on current path, 2 reaches sink
    off, tg, rot = g.offsets, g.targets, cfg.rotor
    for v in range(n):
        path = []
        x = v
        while x >= 0 and state[x] == 0:
            state[x] = 1
            path.append(x)
            x = int(tg[off[x] + rot[x]])
        if x >= 0 and state[x] == 1:
            raise CycleDetected(x)
        for y in path:
            state[y] = 2
    return OrientedForest(cfg.rotor)


def enumeration_size(g: SinkedGraph) -> int:
    return math.prod(int(d) for d in g.degrees)


def enumerate_forests(g: SinkedGraph, limit: int | None = None) -> list[OrientedForest]:
    """All sink-oriented spanning forests in lexicographic order of slot tuples."""
    limit = budget("enum") if limit is None else limit
    size = enumeration_size(g)
    if size > limit:
        raise BudgetExceeded(f"enumeration needs {size} assignments, budget is {limit}")
    n = g.n_active
    rows = [g.slots(v) for v in range(n)]
    choice = [-1] * n
    out: list[OrientedForest] = []

    def closes_cycle(v: int) -> bool:
        x = rows[v][choice[v]]
        while x >= 0 and choice[x] >= 0:
            if x == v:
                return True
            x = rows[x][choice[x]]
        return x == v

    def extend(v: int) -> None:
        if v == n:
            out.append(OrientedForest(np.array(choice)))
            return
        for s in range(len(rows[v])):
            choice[v] = s
            if not closes_cycle(v):
                extend(v + 1)
        choice[v] = -1

    extend(0)
    return out


def laplacian(g: SinkedGraph) -> list[list[int]]:
    """Sink-reduced Laplacian: degree (sink slots included) minus active adjacency."""
    n = g.n_active
    L = [[0] * n for _ in range(n)]
    for v in range(n):
        L[v][v] = g.degree(v)
        for t in g.slots(v):
            if t >= 0:
                L[v][t] -= 1
    return L


def bareiss_det(M: list[list[int]]) -> int:
    """Exact integer determinant by fraction-free elimination."""
    A = [row[:] for row in M]
    n = len(A)
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            for i in range(k + 1, n):
                if A[i][k] != 0:
                    A[k], A[i] = A[i], A[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = A[k][k]
        for i in range(k + 1, n):
            aik = A[i][k]
            row_i, row_k = A[i], A[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * akk - aik * row_k[j]) // prev
        prev = akk
    return sign * A[n - 1][n - 1] if n else 1


def count_forests(g: SinkedGraph, limit: int | None = None) -> int:
    """Number of sink-oriented spanning forests (Matrix-Tree determinant)."""
    limit = budget("det") if limit is None else limit
    if g.n_active > limit:
        raise BudgetExceeded(f"determinant of size {g.n_active} exceeds budget {limit}")
    return bareiss_det(laplacian(g))


def fraction_det(M: list[list[int]]) -> int:
    """Exact determinant by Gaussian elimination over rationals (cross-check for Bareiss)."""
    from fractions import Fraction

    A = [[Fraction(x) for x in row] for row in M]
    n = len(A)
    det = Fraction(1)
    for k in range(n):
        pivot = next((i for i in range(k, n) if A[i][k] != 0), None)
        if pivot is None:
            return 0
        if pivot != k:
            A[k], A[pivot] = A[pivot], A[k]
            det = -det
        det *= A[k][k]
        for i in range(k + 1, n):
            f = A[i][k] / A[k][k]
            if f:
                for j in range(k, n):
                    A[i][j] -= f * A[k][j]
    assert det.denominator == 1
    return int(det)
