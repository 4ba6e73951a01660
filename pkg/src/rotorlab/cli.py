"""``rotorlab`` command line: build a graph, run one experiment, write reports."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import experiments as ex
from .budget import BudgetExceeded, budget
from .engine import RotorConfig, WalkDidNotTerminate
from .forests import count_forests, enumerate_forests, enumeration_size, wilson_sample
from .graph import GraphError, parse_graph_spec
from .parallel import set_threads
from .rng import Rng
from .srw import SolverError

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_GRAPH, EXIT_BUDGET, EXIT_RUNTIME = 0, 1, 2, 3, 4, 5

EPILOG = """\
graph specs:
  lattice:d=<d>,R=<R>          box [-R,R]^d of Z^d, exterior wired to the sink
  btree:b=<b>,depth=<k>,path=<p>  b-ary tree, leaves wired, optional hanging path
  file:<path>                  JSON {"n": .., "edges": [[u,v],..], "sink_edges": [[v,m],..]}

vertices: an index (7), a coordinate (1,0,0), a tree address (root.0.1) or "origin".

exit codes:
  0  all verdicts pass or informational
  1  some verdict failed
  2  usage error or unknown experiment
  3  malformed graph spec, graph file or vertex
  4  enumeration or solver budget exceeded (see ROTORLAB_BUDGET)
  5  walk did not terminate or linear solve failed
"""


@dataclass
class RunConfig:
    experiment: str
    graph: str | None = None
    start: str = "0"
    seed: int = 20190
    trials: int | None = None
    params: dict = field(default_factory=dict)
    json_path: str | None = None
    csv_path: str | None = None


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rotorlab", description="Rotor walks, oriented spanning forests and their experiments.",
        epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="experiment", metavar="command")
    sub.required = True

    def add(name, help_, graph=True, start=True, trials=None):
        p = sub.add_parser(name, help=help_, epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
        if graph:
            p.add_argument("--graph", required=True, help="graph spec string")
        if start:
            p.add_argument("--start", default="0", help="start vertex (default 0)")
        p.add_argument("--seed", type=int, default=20190)
        if trials is not None:
            p.add_argument("--trials", type=int, default=trials)
        p.add_argument("--threads", type=int, default=None, help="trial-level threads (default: all cores)")
        p.add_argument("--json", dest="json_path", help="write the JSON report here")
        p.add_argument("--csv", dest="csv_path", help="write CSV rows here ('-' for stdout)")
        p.add_argument("--dry-run", action="store_true", help="validate and print the plan only")
        return p

    p = add("walk", "run one rotor walk and print its odometer")
    p.add_argument("--rotors", default="forest",
                   help="'forest' (Wilson sample from --seed), 'zero', or comma-separated slots")
    p = add("sample-forest", "sample oriented spanning forests with Wilson's algorithm", start=False, trials=1)
    p.add_argument("--check", action="store_true", help="chi-square uniformity test (N = 100 |SF|)")
    add("count-forests", "count forests by determinant (and enumeration when small)", start=False)
    p = add("stationarity-exact", "check the final-configuration map is a permutation of forests")
    p.add_argument("--all-starts", action="store_true")
    p = add("stationarity-marginals", "compare window edge marginals of final configs and forests", trials=10_000)
    p.add_argument("--window-radius", type=int, default=2)
    p.add_argument("--window-center", default="origin")
    p.add_argument("--null", action="store_true", help="compare two forest batches, no walk")
    p = add("odometer", "mean odometer from sampled forests vs Green's function", trials=10_000)
    p.add_argument("--vertices", default=None, help="semicolon-separated vertices to report")
    p = add("escape-rate", "escape fraction of n sequential particles vs escape probability", trials=20)
    p.add_argument("--particles", type=int, default=10_000)
    p = add("tail-decay", "decay of the return and sink-path events in r", trials=10_000)
    p.add_argument("--W", default="origin", help="semicolon-separated target set")
    p.add_argument("--r-list", type=_int_list, default=[1, 2, 4, 6])
    p.add_argument("--R-list", type=_int_list, default=None, help="exhaustion radii (lattice specs)")
    p = add("selftest", "run the full acceptance suite", graph=False, start=False)
    p.add_argument("--only", type=_int_list, default=None, help="criterion numbers to run")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    skip = {"experiment", "graph", "start", "seed", "trials", "json_path", "csv_path", "dry_run", "threads"}
    params = {k: v for k, v in vars(args).items() if k not in skip}
    return RunConfig(args.experiment, getattr(args, "graph", None), str(getattr(args, "start", "0")),
                     args.seed, getattr(args, "trials", None), params, args.json_path, args.csv_path)


def _split(text: str) -> list[str]:
    return [x for x in text.split(";") if x.strip()]


def _family(cfg: RunConfig):
    radii = cfg.params.get("R_list")
    if not radii:
        g = parse_graph_spec(cfg.graph)
        return [(0, g)]
    return [(R, parse_graph_spec(cfg.graph, R=R)) for R in radii]


def plan(cfg: RunConfig) -> dict:
    """Resolve graphs and vertices without running anything."""
    out = asdict(cfg)
    if cfg.experiment == "tail-decay":
        fam = _family(cfg)
        out["graphs"] = [{"R": R, "spec": g.spec, "n_active": g.n_active,
                          "start": g.resolve(cfg.start), "W": [g.resolve(w) for w in _split(cfg.params["W"])]}
                         for R, g in fam]
    elif cfg.graph:
        g = parse_graph_spec(cfg.graph)
        out["n_active"] = g.n_active
        size = enumeration_size(g)
        out["enumerable"] = size <= budget("enum")
        out["log10_configurations"] = round(float(np.log10(g.degrees.astype(float)).sum()), 3)
        if cfg.experiment not in ("sample-forest", "count-forests"):
            out["start_index"] = g.resolve(cfg.start)
    return out


def _rotors(g, spec: str, seed: int) -> RotorConfig:
    if spec == "forest":
        return RotorConfig(wilson_sample(g, Rng(seed)).parent_slot)
    if spec == "zero":
        return RotorConfig.zeros(g)
    return RotorConfig(_int_list(spec)).check(g)


def execute(cfg: RunConfig, out=None) -> list[ex.ExperimentReport]:
    out = out or sys.stdout
    p = cfg.params
    rng = Rng(cfg.seed)
    name = cfg.experiment
    if name == "selftest":
        from .acceptance import run_all

        results = run_all(cfg.seed, p.get("only"), progress=lambda s: print(s, file=sys.stderr))
        return [r for res in results for r in res.reports] + [_criterion_report(res) for res in results]
    if name == "tail-decay":
        fam = _family(cfg)
        return [ex.tail_decay(fam, cfg.start, _split(p["W"]), p["r_list"], cfg.trials, rng)]
    g = parse_graph_spec(cfg.graph)
    if name == "count-forests":
        det = count_forests(g)
        metrics = [ex.Metric("determinant", det)]
        verdict = ex.INFO
        try:
            n_enum = len(enumerate_forests(g))
        except BudgetExceeded:
            pass
        else:
            verdict = ex.PASS if n_enum == det else ex.FAIL
            metrics.append(ex.Metric("enumerated", n_enum, reference=det, verdict=verdict))
        return [ex.ExperimentReport("count-forests", g.spec, None, 0, metrics, verdict)]
    if name == "sample-forest":
        if p.get("check"):
            return [ex.sampler_uniformity(g, rng)]
        rows = ex.sample_forests(g, cfg.trials, rng.key)
        for row in rows:
            print(json.dumps({"parent": row.tolist(), "graph": g.spec, "seed": cfg.seed}), file=out)
        return []
    a = g.resolve(cfg.start)
    if name == "walk":
        return [ex.walk_report(g, _rotors(g, p["rotors"], cfg.seed), a)]
    if name == "stationarity-exact":
        starts = range(g.n_active) if p.get("all_starts") else [a]
        return [ex.stationarity_exact(g, s) for s in starts]
    if name == "stationarity-marginals":
        window = ex.ball(g, g.resolve(p["window_center"]), p["window_radius"])
        return [ex.stationarity_marginals(g, a, cfg.trials, window, rng, walk=not p.get("null"))]
    if name == "odometer":
        vs = [a] if not p.get("vertices") else [g.resolve(v) for v in _split(p["vertices"])]
        return [ex.odometer_vs_green(g, a, cfg.trials, rng, vs)]
    if name == "escape-rate":
        return [ex.escape_rate_run(g, a, p["particles"], cfg.trials, rng)]
    raise ValueError(f"unknown experiment {name!r}")


def _criterion_report(res) -> ex.ExperimentReport:
    verdict = ex.PASS if res.passed else ex.FAIL
    return ex.ExperimentReport(f"criterion-{res.number}", "", None, 0,
                               [ex.Metric("criterion", res.number, verdict=verdict)], verdict)


def _summary(report: ex.ExperimentReport) -> list[str]:
    if report.name == "walk":
        odo = {m.vertex: m.estimate for m in report.metrics if m.metric == "odometer"}
        body = ", ".join(f"{k}: {v}" for k, v in odo.items())
        return [f"odometer {{{body}}}", f"steps {report.metric('steps').estimate}"]
    lines = []
    for m in report.metrics:
        parts = [report.name, m.metric]
        if m.vertex:
            parts.append(f"@{m.vertex}")
        parts.append(f"estimate={ex._fmt(m.estimate)}")
        if m.reference is not None:
            parts.append(f"reference={ex._fmt(m.reference)}")
        if m.statistic is not None:
            parts.append(f"stat={ex._fmt(m.statistic)}")
        parts.append(m.verdict)
        lines.append(" ".join(parts))
    if report.name == "stationarity-exact":
        lines.append(f"permutation {report.details['permutation']}")
    return lines


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = config_from_args(args)
    set_threads(args.threads)
    try:
        if args.dry_run:
            print(json.dumps(plan(cfg), indent=2))
            return EXIT_OK
        csv_to_stdout = cfg.csv_path == "-"
        reports = execute(cfg)
    except (GraphError, IndexError) as exc:
        print(f"rotorlab: {exc}", file=sys.stderr)
        return EXIT_GRAPH
    except BudgetExceeded as exc:
        print(f"rotorlab: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (WalkDidNotTerminate, SolverError) as exc:
        print(f"rotorlab: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        print(f"rotorlab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not csv_to_stdout:
        shown = [r for r in reports if cfg.experiment != "selftest" or r.name.startswith("criterion-")]
        for r in shown:
            for line in _summary(r):
                print(line)
    if cfg.csv_path:
        text = ex.reports_to_csv(reports)
        if csv_to_stdout:
            sys.stdout.write(text)
        else:
            Path(cfg.csv_path).write_text(text)
    if cfg.json_path:
        Path(cfg.json_path).write_text(ex.reports_to_json(reports))
    return EXIT_FAIL if any(r.verdict == ex.FAIL for r in reports) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
