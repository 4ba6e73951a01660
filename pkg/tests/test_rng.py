import numpy as np
import pytest

from rotorlab.rng import MASK64, Rng, mix64, nb_below, nb_key, nb_next, substream_key


def splitmix64_reference(seed, count):
    # textbook SplitMix64 with a running state
    state, out = seed, []
    for _ in range(count):
        state = (state + 0x9E3779B97F4A7C15) & MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        out.append(z ^ (z >> 31))
    return out


def test_published_vectors():
    r = Rng(0)
    assert [r.next_u64() for _ in range(3)] == [
        0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F,
    ]


@pytest.mark.parametrize("seed", [0, 1, 42, 2**63 + 12345, MASK64])
def test_python_and_kernel_streams_match_reference(seed):
    expected = splitmix64_reference(seed, 20)
    r = Rng(seed)
    assert [r.next_u64() for _ in range(20)] == expected
    ctr = np.uint64(0)
    got = []
    for _ in range(20):
        x, ctr = nb_next(np.uint64(seed), ctr)
        got.append(int(x))
    assert got == expected


def test_kernel_below_matches_python():
    r = Rng(7)
    ctr = np.uint64(0)
    for k in [1, 2, 3, 5, 6, 7, 1000]:
        for _ in range(50):
            v, ctr = nb_below(np.uint64(7), ctr, k)
            assert v == r.below(k)
    assert int(ctr) == r.counter


def test_below_is_roughly_uniform():
    r = Rng(3)
    counts = np.bincount([r.below(6) for _ in range(60_000)], minlength=6)
    assert np.all(np.abs(counts - 10_000) < 500)


def test_substream_keys():
    assert substream_key(5, 3) == 5 ^ mix64(3)
    assert int(nb_key(np.uint64(5), 3)) == substream_key(5, 3)
    assert Rng(5).substream(3).seed == substream_key(5, 3)
    assert len({substream_key(11, i) for i in range(1000)}) == 1000


def test_random_in_unit_interval():
    r = Rng(9)
    xs = [r.random() for _ in range(1000)]
    assert min(xs) >= 0.0 and max(xs) < 1.0
