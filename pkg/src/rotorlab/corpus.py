"""Bundled small graphs: every one fits exhaustive forest enumeration."""
from __future__ import annotations

from .graph import SinkedGraph, build_bary_tree, build_lattice_box, from_edge_list


def _cycle(k: int, sink_at=(0,)) -> list:
    return [k, [(i, (i + 1) % k) for i in range(k)], [(v, 1) for v in sink_at]]


def _grid_corner_sink() -> list:
    # 3x3 grid whose corner (0,0) is the sink; active vertices are the other 8
    cells = [(i, j) for i in range(3) for j in range(3) if (i, j) != (0, 0)]
    idx = {c: k for k, c in enumerate(cells)}
    edges, sinks = [], []
    for (i, j) in cells:
        for (di, dj) in ((1, 0), (0, 1)):
            nb = (i + di, j + dj)
            if nb in idx:
                edges.append((idx[(i, j)], idx[nb]))
    for c in ((0, 1), (1, 0)):
        sinks.append((idx[c], 1))
    return [8, edges, sinks]


EDGE_LISTS: dict[str, list] = {
    "path2": [2, [(0, 1)], [(1, 1)]],
    "path3": [3, [(0, 1), (1, 2)], [(2, 1)]],
    "path4-two-ends": [4, [(0, 1), (1, 2), (2, 3)], [(0, 1), (3, 1)]],
    "triangle": [3, [(0, 1), (1, 2), (0, 2)], [(2, 1)]],
    "cycle3-two-sinks": _cycle(3, (0, 1)),
    "cycle4": _cycle(4),
    "cycle5": _cycle(5),
    "cycle6": _cycle(6),
    "k4-wired": [3, [(0, 1), (0, 2), (1, 2)], [(0, 1), (1, 1), (2, 1)]],
    "grid3x3-corner": _grid_corner_sink(),
    "diamond-double-sink": [4, [(0, 1), (0, 2), (1, 3), (2, 3), (1, 2)], [(3, 2)]],
}


def corpus() -> dict[str, SinkedGraph]:
    graphs = {name: from_edge_list(*spec, spec=f"corpus:{name}") for name, spec in EDGE_LISTS.items()}
    graphs["btree-2-2"] = build_bary_tree(2, 2)
    graphs["btree-2-1-path2"] = build_bary_tree(2, 1, 2)
    graphs["btree-3-1"] = build_bary_tree(3, 1)
    graphs["lattice-1-2"] = build_lattice_box(1, 2)
    return graphs
