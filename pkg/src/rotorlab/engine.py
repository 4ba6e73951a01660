"""Rotor walks with a sink: odometers, final configurations and tail events.

The update rule: at each step the rotor at the walker's location advances to
the next slot in cyclic order, then the walker moves along the new rotor.
The walk stops the moment it moves along a sink slot.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numba
import numpy as np

from .graph import SinkedGraph, distance_to_set, distance_to_sink, eccentricity_bound, sink_tag

WALK_DONE = 0
WALK_CAPPED = 1


class WalkDidNotTerminate(RuntimeError):
    """The step cap was exhausted; on a graph with reachable sink this is a bug."""

    def __init__(self, start: int, cap: int):
        super().__init__(f"rotor walk from {start} did not reach the sink within {cap} steps")
        self.start = start
        self.cap = cap


@dataclass(frozen=True, eq=False)
class RotorConfig:
    """Slot index of the rotor at every active vertex."""

    rotor: np.ndarray

    def __post_init__(self):
        arr = np.array(self.rotor, dtype=np.int64)
        arr.setflags(write=False)
        object.__setattr__(self, "rotor", arr)

    def __eq__(self, other):
        return isinstance(other, RotorConfig) and np.array_equal(self.rotor, other.rotor)

    def __hash__(self):
        return hash(self.rotor.tobytes())

    def __len__(self):
        return len(self.rotor)

    def __getitem__(self, v):
        return int(self.rotor[v])

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(int(x) for x in self.rotor)

    def check(self, g: SinkedGraph) -> "RotorConfig":
        if len(self.rotor) != g.n_active:
            raise ValueError("rotor configuration size does not match the graph")
        if np.any(self.rotor < 0) or np.any(self.rotor >= g.degrees):
            raise ValueError("rotor slot index out of range")
        return self

    def points_to(self, g: SinkedGraph, v: int) -> int:
        return g.target(v, int(self.rotor[v]))

    @classmethod
    def zeros(cls, g: SinkedGraph) -> "RotorConfig":
        return cls(np.zeros(g.n_active, dtype=np.int64))


@dataclass
class WalkOutcome:
    odometer: np.ndarray
    final_config: RotorConfig
    terminated: bool
    steps: int
    terminal_vertex: int
    terminal_slot: int
    terminal_tag: int
    trajectory: tuple[int, ...] | None = field(default=None)

    def visits(self, W: Iterable[int]) -> int:
        return int(sum(self.odometer[w] for w in W))


# ---------------------------------------------------------------- kernels

@numba.njit(cache=True, nogil=True)
def nb_walk(off, tg, rotor, a, cap, odo, traj):
    """Walk from ``a`` mutating ``rotor`` and adding visits into ``odo``.

    Returns (status, last active vertex, its exit slot, steps, n recorded).
    ``steps`` is the time of the last active position.
    """
    x = a
    t = 0
    nrec = 0
    ntraj = traj.shape[0]
    while True:
        odo[x] += 1
        if nrec < ntraj:
            traj[nrec] = x
            nrec += 1
        base = off[x]
        deg = off[x + 1] - base
        s = rotor[x] + 1
        if s == deg:
            s = 0
        rotor[x] = s
        y = tg[base + s]
        if y < 0:
            return WALK_DONE, x, s, t, nrec
        if t >= cap:
            return WALK_CAPPED, x, s, t, nrec
        x = y
        t += 1


@numba.njit(cache=True, nogil=True)
def nb_escape(off, tg, rotor, a, n, cap):
    """Launch ``n`` particles from ``a`` in turn; count those reaching the sink."""
    escaped = 0
    for _ in range(n):
        x = a
        steps = 0
        while True:
            base = off[x]
            deg = off[x + 1] - base
            s = rotor[x] + 1
            if s == deg:
                s = 0
            rotor[x] = s
            y = tg[base + s]
            if y < 0:
                escaped += 1
                break
            if y == a:
                break
            steps += 1
            if steps > cap:
                return -1
            x = y
    return escaped


@numba.njit(cache=True, nogil=True)
def nb_return_reach(off, tg, rotor, a, in_w, dist, cap):
    """Largest r such that the walk visits W after having been at distance >= r.

    -1 if the walk never visits W after time 0; -2 on cap exhaustion.
    Mutates ``rotor`` into the final configuration.
    """
    best = -1
    prefix = dist[a]
    x = a
    t = 0
    while True:
        base = off[x]
        deg = off[x + 1] - base
        s = rotor[x] + 1
        if s == deg:
            s = 0
        rotor[x] = s
        y = tg[base + s]
        if y < 0:
            return best
        t += 1
        if t > cap:
            return -2
        if in_w[y] and prefix > best:
            best = prefix
        if dist[y] > prefix:
            prefix = dist[y]
        x = y


@numba.njit(cache=True, nogil=True)
def nb_reaches_tags(off, tg, rotor, tag_ok):
    """For each vertex: does its rotor path end in a sink slot whose tag is accepted?"""
    n = rotor.shape[0]
    state = np.zeros(n, dtype=np.int8)  # 0 unknown, 1 on stack, 2 yes, 3 no
    stack = np.empty(n, dtype=np.int64)
    for v in range(n):
        if state[v] != 0:
            continue
        depth = 0
        x = v
        verdict = 3
        while True:
            if state[x] >= 2:
                verdict = state[x]
                break
            if state[x] == 1:
                verdict = 3
                break
            state[x] = 1
            stack[depth] = x
            depth += 1
            y = tg[off[x] + rotor[x]]
            if y < 0:
                tag = -1 - y
                verdict = 2 if tag < tag_ok.shape[0] and tag_ok[tag] else 3
                break
            x = y
        for i in range(depth):
            state[stack[i]] = verdict
    return state == 2


# ---------------------------------------------------------------- operations

def default_step_cap(g: SinkedGraph) -> int:
    cap = g._cache.get("step_cap")
    if cap is None:
        cap = g._cache["step_cap"] = 64 * g.n_active * g.max_degree * (eccentricity_bound(g) + 1)
    return cap


def step(g: SinkedGraph, cfg: RotorConfig, loc: int) -> tuple[RotorConfig, int]:
    """One rotor step: advance the rotor at ``loc`` and return (config, destination).

    The destination is an active index, or a negative sink slot code.
    """
    g._check_vertex(loc)
    rotor = cfg.rotor.copy()
    rotor[loc] = (rotor[loc] + 1) % g.degree(loc)
    return RotorConfig(rotor), g.target(loc, int(rotor[loc]))


def walk_to_sink(
    g: SinkedGraph,
    cfg: RotorConfig,
    a: int,
    step_cap: int | None = None,
    record: int = 0,
) -> WalkOutcome:
    """Run the rotor walk from ``a`` until it moves into the sink.

    ``record`` caps how many positions of the trajectory are kept.
    Raises :class:`WalkDidNotTerminate` if ``step_cap`` steps pass first.
    """
    g._check_vertex(a)
    cap = default_step_cap(g) if step_cap is None else int(step_cap)
    if cap < 1:
        raise ValueError("step_cap must be positive")
    rotor = np.array(cfg.rotor, dtype=np.int64)
    odo = np.zeros(g.n_active, dtype=np.int64)
    traj = np.empty(int(record), dtype=np.int64)
    status, last, slot, steps, nrec = nb_walk(g.offsets, g.targets, rotor, a, cap, odo, traj)
    if status == WALK_CAPPED:
        raise WalkDidNotTerminate(a, cap)
    end = g.target(int(last), int(slot))
    return WalkOutcome(
        odometer=odo,
        final_config=RotorConfig(rotor),
        terminated=True,
        steps=int(steps),
        terminal_vertex=int(last),
        terminal_slot=int(slot),
        terminal_tag=sink_tag(end),
        trajectory=tuple(int(x) for x in traj[:nrec]) if record else None,
    )


def sequential_walks(g: SinkedGraph, cfg: RotorConfig, starts: Sequence[int]) -> list[RotorConfig]:
    """Configurations left behind by walkers started in turn: ``[cfg, xi_1, ..., xi_k]``."""
    out = [cfg]
    for a in starts:
        out.append(walk_to_sink(g, out[-1], a).final_config)
    return out


def escape_count(g: SinkedGraph, cfg: RotorConfig, a: int, n: int, step_cap: int | None = None) -> int:
    """How many of ``n`` particles sent from ``a`` reach the sink before returning to ``a``."""
    g._check_vertex(a)
    if n < 0:
        raise ValueError("particle count must be non-negative")
    cap = default_step_cap(g) if step_cap is None else int(step_cap)
    rotor = np.array(cfg.rotor, dtype=np.int64)
    k = nb_escape(g.offsets, g.targets, rotor, a, n, cap)
    if k < 0:
        raise WalkDidNotTerminate(a, cap)
    return int(k)


def _mask(n: int, W: Iterable[int]) -> np.ndarray:
    m = np.zeros(n, dtype=np.bool_)
    for w in W:
        m[int(w)] = True
    return m


def return_reach(g: SinkedGraph, cfg: RotorConfig, a: int, W: Iterable[int], dist: np.ndarray | None = None) -> int:
    """Largest r for which :func:`detect_event_E` holds, or -1 if none."""
    W = list(W)
    if dist is None:
        dist = distance_to_set(g, W)
    rotor = np.array(cfg.rotor, dtype=np.int64)
    cap = default_step_cap(g)
    m = nb_return_reach(g.offsets, g.targets, rotor, a, _mask(g.n_active, W), dist, cap)
    if m == -2:
        raise WalkDidNotTerminate(a, cap)
    return int(m)


def detect_event_E(g: SinkedGraph, cfg: RotorConfig, a: int, r: int, W: Iterable[int]) -> bool:
    """Does the walk from ``a`` visit ``W`` after some time at distance >= r from ``W``?"""
    if r < 0:
        raise ValueError("r must be non-negative")
    g._check_vertex(a)
    return return_reach(g, cfg, a, W) >= r


def sink_reaching(g: SinkedGraph, cfg: RotorConfig, tags: Iterable[int] | None = None) -> np.ndarray:
    """Boolean mask of vertices whose oriented rotor path ends in an accepted sink slot."""
    all_tags = g.sink_tags()
    wanted = all_tags if tags is None else set(tags)
    ok = np.zeros(max(all_tags | wanted | {0}) + 1, dtype=np.bool_)
    for t in wanted:
        ok[t] = True
    return nb_reaches_tags(g.offsets, g.targets, cfg.rotor, ok)


def detect_event_D(g: SinkedGraph, cfg: RotorConfig, r: int, tags: Iterable[int] | None = None) -> bool:
    """Is there an oriented rotor path from distance exactly ``r`` into the sink?

    Distance is measured with the (tag-filtered) sink contracted to one vertex,
    so ``r = 0`` names the sink itself.
    """
    if r < 0:
        raise ValueError("r must be non-negative")
    tags = None if tags is None else list(tags)
    dist = distance_to_sink(g, tags)
    if r == 0:
        return bool(np.any(dist == 1))
    return bool(np.any(sink_reaching(g, cfg, tags) & (dist == r)))


def sink_reach_radius(g: SinkedGraph, cfg: RotorConfig, tags: Iterable[int] | None = None, dist=None) -> int:
    """Largest r >= 1 with :func:`detect_event_D` true (0 if none).

    A path into the sink passes through every smaller distance, so the event
    holds exactly for ``1 <= r <=`` this value.
    """
    tags = None if tags is None else list(tags)
    if dist is None:
        dist = distance_to_sink(g, tags)
    reach = sink_reaching(g, cfg, tags)
    return int(dist[reach].max()) if reach.any() else 0
