"""Finite graphs with an absorbing sink.

Each active vertex owns an ordered list of edge slots stored in CSR form.  A
slot target ``t >= 0`` is an active neighbour; ``t < 0`` is a sink slot with
tag ``-1 - t``.  Tag 0 (:data:`SINK`) is the wired exterior; other tags are
used when a set of active vertices is absorbed into the sink and walks must
report where they ended.
"""
from __future__ import annotations

import itertools
import json
import os
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

SINK = -1


class GraphError(ValueError):
    """Malformed graph input or graph spec string."""


def sink_slot(tag: int = 0) -> int:
    return -1 - tag


def sink_tag(target: int) -> int:
    return -1 - target


@dataclass(frozen=True, eq=False)
class SinkedGraph:
    offsets: np.ndarray
    targets: np.ndarray
    labels: tuple | None = None
    spec: str = ""
    _label_index: dict = field(default=None, init=False, repr=False)
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        offsets = np.ascontiguousarray(self.offsets, dtype=np.int64)
        targets = np.ascontiguousarray(self.targets, dtype=np.int64)
        offsets.setflags(write=False)
        targets.setflags(write=False)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "targets", targets)
        if self.labels is not None:
            if len(self.labels) != self.n_active:
                raise GraphError("one label per active vertex required")
            object.__setattr__(
                self, "_label_index", {lab: i for i, lab in enumerate(self.labels)}
            )
        self._validate()

    def _validate(self) -> None:
        n = self.n_active
        if n < 1:
            raise GraphError("graph needs at least one active vertex")
        deg = self.degrees
        if np.any(deg < 1):
            raise GraphError(f"vertex {int(np.argmin(deg))} has no slots")
        t = self.targets
        if np.any(t >= n):
            raise GraphError("slot target out of range")
        src = np.repeat(np.arange(n, dtype=np.int64), deg)
        active = t >= 0
        if np.any(src[active] == t[active]):
            raise GraphError("self-loops are not allowed")
        fwd = np.sort(src[active] * n + t[active])
        bwd = np.sort(t[active] * n + src[active])
        if not np.array_equal(fwd, bwd):
            raise GraphError("active slots are not symmetric")
        if not np.all(distance_to_sink(self) > 0):
            raise GraphError("sink is not reachable from every active vertex")

    @property
    def n_active(self) -> int:
        return len(self.offsets) - 1

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.offsets)

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max())

    def degree(self, v: int) -> int:
        self._check_vertex(v)
        return int(self.offsets[v + 1] - self.offsets[v])

    def slots(self, v: int) -> list[int]:
        self._check_vertex(v)
        return [int(x) for x in self.targets[self.offsets[v] : self.offsets[v + 1]]]

    def target(self, v: int, slot: int) -> int:
        if not 0 <= slot < self.degree(v):
            raise IndexError(f"slot {slot} out of range for vertex {v}")
        return int(self.targets[self.offsets[v] + slot])

    def sink_slot_count(self) -> int:
        return int(np.count_nonzero(self.targets < 0))

    def sink_tags(self) -> set[int]:
        return {sink_tag(int(t)) for t in np.unique(self.targets[self.targets < 0])}

    def label(self, v: int):
        return v if self.labels is None else self.labels[v]

    def _check_vertex(self, v: int) -> None:
        if not 0 <= v < self.n_active:
            raise IndexError(f"vertex {v} is not active")

    def resolve(self, ref) -> int:
        """Map a vertex reference (index, label, ``"origin"``, ``"1,0,0"``) to an index."""
        if isinstance(ref, (int, np.integer)):
            self._check_vertex(int(ref))
            return int(ref)
        idx = self._label_index or {}
        if ref in idx:
            return idx[ref]
        if isinstance(ref, str):
            s = ref.strip()
            if s in idx:
                return idx[s]
            if s == "origin":
                for lab, i in idx.items():
                    if isinstance(lab, tuple) and not any(lab):
                        return i
                raise GraphError("graph has no origin label")
            if s.lstrip("-").isdigit():
                return self.resolve(int(s))
            parts = [p for p in s.strip("()[] ").split(",") if p.strip()]
            try:
                nums = tuple(int(p) for p in parts)
            except ValueError:
                raise GraphError(f"unknown vertex {ref!r}") from None
            if nums in idx:
                return idx[nums]
        if isinstance(ref, (tuple, list)) and tuple(ref) in idx:
            return idx[tuple(ref)]
        raise GraphError(f"unknown vertex {ref!r}")

    def label_str(self, v: int) -> str:
        lab = self.label(v)
        if isinstance(lab, tuple):
            return ",".join(str(c) for c in lab)
        return str(lab)

    def to_document(self) -> dict:
        """Serialize to ``{n, edges, sink_edges}`` (slot order is not preserved)."""
        edges, sinks = [], []
        for v in range(self.n_active):
            m = 0
            for t in self.slots(v):
                if t > v:
                    edges.append([v, t])
                elif t < 0:
                    m += 1
            if m:
                sinks.append([v, m])
        return {"n": self.n_active, "edges": edges, "sink_edges": sinks}


def _from_slot_lists(slot_lists: Sequence[Sequence[int]], labels=None, spec="") -> SinkedGraph:
    offsets = np.zeros(len(slot_lists) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([len(s) for s in slot_lists])
    targets = np.fromiter(itertools.chain.from_iterable(slot_lists), dtype=np.int64)
    return SinkedGraph(offsets, targets, None if labels is None else tuple(labels), spec)


def build_lattice_box(d: int, R: int) -> SinkedGraph:
    """Box ``[-R, R]^d`` of Z^d with every exterior vertex wired into the sink.

    Slots follow the axis order ``+e1, -e1, +e2, -e2, ...``.
    """
    if d < 1 or R < 1:
        raise GraphError("lattice box needs d >= 1 and R >= 1")
    side = 2 * R + 1
    n = side**d
    coords = np.array(np.unravel_index(np.arange(n), (side,) * d)).T - R
    strides = np.array([side ** (d - 1 - i) for i in range(d)], dtype=np.int64)
    idx = np.arange(n, dtype=np.int64)
    targets = np.empty((n, 2 * d), dtype=np.int64)
    for axis in range(d):
        for k, sign in enumerate((1, -1)):
            moved = coords[:, axis] + sign
            inside = np.abs(moved) <= R
            targets[:, 2 * axis + k] = np.where(inside, idx + sign * strides[axis], SINK)
    offsets = np.arange(0, 2 * d * n + 1, 2 * d, dtype=np.int64)
    labels = tuple(tuple(int(c) for c in row) for row in coords)
    return SinkedGraph(offsets, targets.ravel(), labels, f"lattice:d={d},R={R}")


def build_bary_tree(b: int, depth: int, path_len: int = 0) -> SinkedGraph:
    """Perfect ``b``-ary tree of the given depth, leaves wired to the sink.

    Vertices are numbered breadth-first from the root (0); path vertices follow.
    Children come before the parent in every slot list and a leaf's sink slot
    stands in for its children.  A hanging path of ``path_len`` vertices is the
    root's last slot, and its far end gets one sink slot.
    """
    if b < 2:
        raise GraphError("branching must be at least 2")
    if depth < 1:
        raise GraphError("depth must be at least 1")
    if path_len < 0:
        raise GraphError("path length must be non-negative")
    n_tree = (b ** (depth + 1) - 1) // (b - 1)
    first_leaf = (b**depth - 1) // (b - 1)
    slots: list[list[int]] = []
    labels: list[str] = []
    for v in range(n_tree):
        s = [b * v + j + 1 for j in range(b)] if v < first_leaf else [SINK]
        if v > 0:
            s.append((v - 1) // b)
        slots.append(s)
        addr, u = [], v
        while u > 0:
            addr.append(str((u - 1) % b))
            u = (u - 1) // b
        labels.append("root" if v == 0 else "root." + ".".join(reversed(addr)))
    for k in range(path_len):
        v = n_tree + k
        prev = 0 if k == 0 else v - 1
        slots.append([prev, v + 1 if k < path_len - 1 else SINK])
        labels.append(f"p{k + 1}")
    if path_len:
        slots[0].append(n_tree)
    return _from_slot_lists(slots, labels, f"btree:b={b},depth={depth},path={path_len}")


def from_edge_list(
    n: int,
    edges: Iterable[Sequence[int]],
    sink_edges: Iterable[Sequence[int]],
    spec: str = "",
) -> SinkedGraph:
    """Canonical graph: neighbours in ascending index order, sink slots last."""
    if n < 1:
        raise GraphError("need at least one vertex")
    nbrs: list[set[int]] = [set() for _ in range(n)]
    for e in edges:
        u, v = (int(x) for x in e)
        if not (0 <= u < n and 0 <= v < n):
            raise GraphError(f"edge ({u}, {v}) out of range for n={n}")
        if u == v:
            raise GraphError(f"self-loop at {u}")
        if v in nbrs[u]:
            raise GraphError(f"duplicate edge ({u}, {v})")
        nbrs[u].add(v)
        nbrs[v].add(u)
    mult = [0] * n
    for v, m in sink_edges:
        v, m = int(v), int(m)
        if not 0 <= v < n:
            raise GraphError(f"sink edge at {v} out of range for n={n}")
        if m < 1:
            raise GraphError("sink edge multiplicity must be positive")
        mult[v] += m
    if not any(mult):
        raise GraphError("at least one sink edge is required")
    seen = {0}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for w in nbrs[u]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    if len(seen) != n:
        raise GraphError("active part is disconnected")
    slots = [sorted(nbrs[v]) + [SINK] * mult[v] for v in range(n)]
    return _from_slot_lists(slots, spec=spec)


def rotor_successor(g: SinkedGraph, v: int, slot: int) -> int:
    deg = g.degree(v)
    if not 0 <= slot < deg:
        raise IndexError(f"slot {slot} out of range for vertex {v} of degree {deg}")
    return (slot + 1) % deg


def _bfs(g: SinkedGraph, dist: np.ndarray, queue: deque) -> np.ndarray:
    off, tg = g.offsets, g.targets
    while queue:
        u = queue.popleft()
        du = dist[u] + 1
        for t in tg[off[u] : off[u + 1]]:
            if t >= 0 and dist[t] < 0:
                dist[t] = du
                queue.append(int(t))
    return dist


def distance_to_set(g: SinkedGraph, W: Iterable[int]) -> np.ndarray:
    """Breadth-first distance over active edges; -1 marks unreachable vertices."""
    W = sorted({int(w) for w in W})
    if not W:
        raise GraphError("target set must be nonempty")
    dist = np.full(g.n_active, -1, dtype=np.int64)
    for w in W:
        g._check_vertex(w)
        dist[w] = 0
    return _bfs(g, dist, deque(W))


def distance_to_sink(g: SinkedGraph, tags: Iterable[int] | None = None) -> np.ndarray:
    """Distance with the sink (optionally only some tags) contracted to one vertex.

    Vertices with a matching sink slot are at distance 1.
    """
    wanted = None if tags is None else {int(t) for t in tags}
    dist = np.full(g.n_active, -1, dtype=np.int64)
    queue = deque()
    off, tg = g.offsets, g.targets
    for v in range(g.n_active):
        row = tg[off[v] : off[v + 1]]
        if wanted is None:
            hit = bool(np.any(row < 0))
        else:
            hit = any(t < 0 and sink_tag(int(t)) in wanted for t in row)
        if hit:
            dist[v] = 1
            queue.append(v)
    return _bfs(g, dist, queue)


def eccentricity_bound(g: SinkedGraph) -> int:
    """Upper bound on the active diameter: twice the eccentricity of vertex 0."""
    return 2 * int(distance_to_set(g, [0]).max())


def enlarge_sink(g: SinkedGraph, W: Iterable[int], tag: int = 1) -> tuple[SinkedGraph, np.ndarray]:
    """Absorb the active vertices ``W`` into the sink under ``tag``.

    Returns the new graph and an index map old -> new (-1 for absorbed vertices).
    Slot order of the surviving vertices is unchanged.
    """
    if tag < 1:
        raise GraphError("tag 0 is reserved for the exterior sink")
    absorbed = np.zeros(g.n_active, dtype=bool)
    for w in W:
        g._check_vertex(int(w))
        absorbed[int(w)] = True
    if not absorbed.any():
        raise GraphError("absorbed set must be nonempty")
    if absorbed.all():
        raise GraphError("cannot absorb every active vertex")
    remap = np.full(g.n_active, -1, dtype=np.int64)
    keep = np.flatnonzero(~absorbed)
    remap[keep] = np.arange(len(keep))
    slots = []
    for v in keep:
        row = []
        for t in g.slots(int(v)):
            if t < 0:
                row.append(t)
            elif absorbed[t]:
                row.append(sink_slot(tag))
            else:
                row.append(int(remap[t]))
        slots.append(row)
    labels = None if g.labels is None else [g.labels[v] for v in keep]
    return _from_slot_lists(slots, labels, g.spec + f"|absorb:{tag}"), remap


def load_graph_file(path: str | os.PathLike) -> SinkedGraph:
    try:
        doc = json.loads(Path(path).read_text())
        return from_edge_list(doc["n"], doc["edges"], doc["sink_edges"], spec=f"file:{path}")
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise GraphError(f"cannot read graph file {path}: {exc}") from exc


def _kv(body: str) -> dict[str, int]:
    out = {}
    for part in body.split(","):
        if not part:
            continue
        key, sep, val = part.partition("=")
        if not sep:
            raise GraphError(f"expected key=value, got {part!r}")
        try:
            out[key.strip()] = int(val)
        except ValueError:
            raise GraphError(f"non-integer value in {part!r}") from None
    return out


def parse_graph_spec(spec: str, **overrides: int) -> SinkedGraph:
    """Build a graph from ``lattice:d=3,R=8``, ``btree:b=2,depth=3,path=0`` or ``file:<path>``."""
    kind, sep, body = spec.partition(":")
    if not sep:
        raise GraphError(f"malformed graph spec {spec!r}")
    if kind == "file":
        return load_graph_file(body)
    params = {**_kv(body), **overrides}
    if kind == "lattice":
        try:
            return build_lattice_box(params["d"], params["R"])
        except KeyError as exc:
            raise GraphError(f"lattice spec needs {exc.args[0]}") from None
    if kind == "btree":
        try:
            return build_bary_tree(params["b"], params["depth"], params.get("path", 0))
        except KeyError as exc:
            raise GraphError(f"btree spec needs {exc.args[0]}") from None
    raise GraphError(f"unknown graph kind {kind!r}")
