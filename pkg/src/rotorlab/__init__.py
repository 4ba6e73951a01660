"""Rotor walks on graphs with a sink, oriented uniform spanning forests, and experiments."""
from .engine import (
    RotorConfig,
    WalkDidNotTerminate,
    WalkOutcome,
    detect_event_D,
    detect_event_E,
    escape_count,
    sequential_walks,
    step,
    walk_to_sink,
)
from .forests import (
    CycleDetected,
    OrientedForest,
    count_forests,
    enumerate_forests,
    forest_to_rotor,
    rotor_to_forest,
    wilson_sample,
)
from .graph import (
    SINK,
    GraphError,
    SinkedGraph,
    build_bary_tree,
    build_lattice_box,
    distance_to_set,
    enlarge_sink,
    from_edge_list,
    parse_graph_spec,
    rotor_successor,
)
from .rng import Rng
from .srw import escape_probability, green_function, mc_green

__version__ = "0.1.0"
