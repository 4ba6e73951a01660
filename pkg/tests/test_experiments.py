import csv
import io
import json
import math

import numpy as np
import pytest

from rotorlab import experiments as ex
from rotorlab.corpus import corpus

CORPUS = corpus()
from rotorlab.engine import RotorConfig, return_reach, sink_reach_radius, walk_to_sink
from rotorlab.forests import wilson_sample
from rotorlab.graph import build_lattice_box, enlarge_sink
from rotorlab.parallel import chunk_bounds, set_threads
from rotorlab.rng import Rng, substream_key
from rotorlab.srw import escape_probability


@pytest.fixture
def threads():
    yield set_threads
    set_threads(None)


@pytest.fixture(scope="module")
def box():
    return build_lattice_box(2, 3)


def test_chunks_cover():
    for n in (1, 5, 64, 65, 1000):
        b = chunk_bounds(n)
        assert b[0][0] == 0 and b[-1][1] == n
        assert all(x[1] == y[0] for x, y in zip(b, b[1:]))


def test_sample_forests_match_python(box):
    rows = ex.sample_forests(box, 10, 77)
    for i, row in enumerate(rows):
        f = wilson_sample(box, Rng(substream_key(77, i)))
        assert row.tolist() == list(f.as_tuple())


def test_tail_events_match_engine(box):
    o = box.resolve("origin")
    a = box.resolve("2,0")
    seed = 99
    reach_e, reach_d = ex.tail_events(box, a, [o], 20, seed)
    gbar, _ = enlarge_sink(box, [o], tag=1)
    for i in range(20):
        f = wilson_sample(box, Rng(substream_key(seed, i)))
        assert reach_e[i] == return_reach(box, RotorConfig(f.parent_slot), a, [o])
        fd = wilson_sample(gbar, Rng(substream_key(substream_key(seed, ex._STREAM_D), i)))
        assert reach_d[i] == max(sink_reach_radius(gbar, RotorConfig(fd.parent_slot), tags=[1]), 0)


@pytest.mark.parametrize("name", sorted(CORPUS))
def test_corpus_exact(name):
    g = CORPUS[name]
    for a in range(g.n_active):
        assert ex.stationarity_exact(g, a).passed
        assert ex.odometer_exact(g, a).passed
    assert ex.counting_oracle(g).passed


def test_stationarity_details(path2):
    rep = ex.stationarity_exact(path2, 0)
    assert rep.details["permutation"] == [0]
    assert rep.metric("forests").estimate == 1


def test_sampler_uniformity(triangle):
    rep = ex.sampler_uniformity(triangle, Rng(4))
    assert rep.passed and rep.trials == 300


def test_green_crosscheck(triangle):
    rep = ex.green_crosscheck(triangle, 0, 5000, Rng(8))
    assert rep.passed
    assert rep.metric("max_abs_z").estimate <= 4


def test_odometer_small_trials_are_informational(box):
    rep = ex.odometer_vs_green(box, box.resolve("origin"), 200, Rng(1))
    assert rep.verdict == ex.INFO
    with pytest.raises(ValueError):
        ex.odometer_vs_green(box, 0, 10, Rng(1))


def test_escape_single_particle_is_informational(box):
    o = box.resolve("origin")
    rep = ex.escape_rate_run(box, o, 1, 50, Rng(2))
    assert rep.verdict == ex.INFO
    assert set(rep.details["escaped"]) <= {0, 1}


def test_escape_path2_exact(path2):
    # the unique forest: particle 1 returns, particle 2 escapes
    rep = ex.escape_rate_run(path2, 0, 2, 2, Rng(0))
    assert rep.metric("escape_ratio", "0").estimate == 0.5 == pytest.approx(escape_probability(path2, 0))


def test_marginals_empty_window(box):
    rep = ex.stationarity_marginals(box, 0, 1000, [], Rng(1))
    assert rep.passed and rep.metrics == []


def test_marginals_need_trials(box):
    with pytest.raises(ValueError):
        ex.stationarity_marginals(box, 0, 10, [0], Rng(1))


def test_marginals_null_and_walk(box):
    o = box.resolve("origin")
    window = ex.ball(box, o, 1)
    assert len(window) == 5
    null = ex.stationarity_marginals(box, o, 2000, window, Rng(3), walk=False)
    walk = ex.stationarity_marginals(box, o, 2000, window, Rng(3))
    assert null.passed and walk.passed
    assert null.details["tests"] == 20


def test_tail_decay_edges(box):
    fam = [(3, box)]
    rep = ex.tail_decay(fam, "2,0", ["origin"], [0, 1, 50], 500, Rng(5))
    assert rep.metric("P_E[R=3,r=0]").estimate > 0
    assert rep.metric("P_D[R=3,r=0]").estimate == 1.0
    # beyond the diameter neither event can hold
    assert rep.metric("P_E[R=3,r=50]").estimate == 0.0
    assert rep.metric("P_D[R=3,r=50]").estimate == 0.0
    with pytest.raises(ValueError):
        ex.tail_decay(fam, "2,0", ["origin"], [-1], 10, Rng(5))


def test_replay_and_threads(box, threads):
    o = box.resolve("origin")

    def run():
        return ex.reports_to_csv([
            ex.odometer_vs_green(box, o, 500, Rng(11)),
            ex.escape_rate_run(box, o, 50, 30, Rng(11)),
            ex.stationarity_marginals(box, o, 1000, ex.ball(box, o, 1), Rng(11)),
            ex.tail_decay([(3, box)], "origin", ["1,0"], [1, 2], 300, Rng(11)),
        ])

    threads(1)
    one = run()
    threads(8)
    assert run() == one
    assert run() == one


def test_csv_and_json(path2):
    rep = ex.walk_report(path2, RotorConfig([0, 1]), 0)
    rows = list(csv.reader(io.StringIO(ex.reports_to_csv([rep]))))
    assert rows[0] == ex.CSV_HEADER
    assert ["walk", path2.spec, "", "odometer", "0", "2"] == rows[1][:6]
    doc = json.loads(ex.reports_to_json([rep]))
    assert doc["schema_version"] == ex.SCHEMA_VERSION
    assert doc["reports"][0]["details"]["final"] == [0, 1]


def test_fmt_roundtrip():
    x = 0.1 + 0.2
    assert float(ex._fmt(x)) == x
    assert ex._fmt(3) == "3"
    assert ex._fmt(None) == ""
    assert ex._fmt(math.inf) == "inf"
