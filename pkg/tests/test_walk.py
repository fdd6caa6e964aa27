import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from circlewalk.circle import Arc, circle_dist
from circlewalk.homeo import IntervalMap, Rotation, compose, identity, north_south
from circlewalk.walk import (
    GeneratorSet, WalkStream, iterate_interval, iterate_pair, iterate_point, parallel_map, run_points,
    sample_word,
)

PINGPONG = [("f1", IntervalMap.affine_map(1 / 3, 0.0), 0.5), ("f2", IntervalMap.affine_map(1 / 3, 2 / 3), 0.5)]


def find_stream(gs, prefix):
    """First trajectory whose word starts with ``prefix``."""
    for t in range(1000):
        if list(gs.word(t, len(prefix))) == list(prefix):
            return WalkStream(gs, t)
    raise AssertionError("no trajectory with the requested prefix")


def test_generator_set_normalises_and_validates():
    gs = GeneratorSet([("a", Rotation(0.1), 2.0), ("b", Rotation(0.2), 6.0)])
    np.testing.assert_allclose(gs.weights, [0.25, 0.75])
    with pytest.raises(ValueError):
        GeneratorSet([("a", Rotation(0.1), 1.0), ("a", Rotation(0.2), 1.0)])
    with pytest.raises(ValueError):
        GeneratorSet([("a", Rotation(0.1), 0.0)])
    with pytest.raises(ValueError):
        GeneratorSet([])


def test_sample_word_examples():
    single = GeneratorSet([("g", Rotation(0.3), 1.0)], seed=99)
    assert sample_word(WalkStream(single), 5) == ["g"] * 5
    assert sample_word(WalkStream(single), 0) == []


def test_label_frequencies():
    gs = GeneratorSet(PINGPONG, seed=5)
    w = gs.word(0, 100_000)
    freq = np.bincount(w, minlength=2) / w.size
    assert np.all((freq >= 0.494) & (freq <= 0.506))


@given(st.integers(0, 2**64 - 1), st.integers(0, 2**20), st.integers(0, 200))
def test_word_reproducible_and_prefix_stable(seed, t, n):
    gs = GeneratorSet(PINGPONG, seed=seed)
    a, b = gs.word(t, n), GeneratorSet(PINGPONG, seed=seed).word(t, n + 7)
    np.testing.assert_array_equal(a, b[:n])


def test_stream_position_continues_word():
    gs = GeneratorSet(PINGPONG, seed=3)
    ws = WalkStream(gs, 4, position=10)
    np.testing.assert_array_equal(ws.word(20), gs.word(4, 30)[10:])


def test_iterate_point_examples():
    gs = GeneratorSet([("r", Rotation(0.25), 1.0)])
    np.testing.assert_allclose(iterate_point(WalkStream(gs), 0.0, 4), [0, 0.25, 0.5, 0.75, 0])
    assert iterate_point(WalkStream(gs), 0.3, 0).tolist() == [0.3]


def test_pingpong_orbit_in_interval_chart():
    gs = GeneratorSet(PINGPONG, seed=11)
    ws = find_stream(gs, [0, 1, 0])
    orbit = iterate_point(ws, 0.0, 3)
    chart = PINGPONG[0][1].to_chart(orbit)
    np.testing.assert_allclose(chart, [0, 0, 2 / 3, 2 / 9], atol=1e-15)
    np.testing.assert_allclose(orbit, [0, 0, 1 / 3, 1 / 9], atol=1e-15)


def test_iterate_interval_examples():
    gs = GeneratorSet(PINGPONG, seed=2)
    arcs = iterate_interval(WalkStream(gs), Arc(0.0, 0.5), 12)
    lengths = np.array([a.length for a in arcs])
    np.testing.assert_allclose(lengths, 0.5 * 3.0 ** -np.arange(13), rtol=1e-9)
    rot = GeneratorSet([("a", Rotation(0.3), 1), ("b", Rotation(0.7071), 1)], seed=2)
    arcs = iterate_interval(WalkStream(rot), Arc(0.1, 0.2), 50)
    np.testing.assert_allclose([a.length for a in arcs], 0.2, atol=1e-12)
    ident = GeneratorSet([("e", identity(), 1.0)])
    assert all(a == Arc(0.4, 0.3) for a in iterate_interval(WalkStream(ident), Arc(0.4, 0.3), 5))


def test_iterate_pair_examples():
    gs = GeneratorSet(PINGPONG, seed=8)
    # x=0, y=1 in the interval chart
    pairs = iterate_pair(WalkStream(gs), 0.0, 0.5, 15)
    dist = np.abs(PINGPONG[0][1].to_chart(pairs[:, 0]) - PINGPONG[0][1].to_chart(pairs[:, 1]))
    np.testing.assert_allclose(dist, 3.0 ** -np.arange(16), rtol=1e-9)
    rot = GeneratorSet([("a", Rotation(0.3), 1), ("b", Rotation(0.7071), 1)], seed=2)
    p = iterate_pair(WalkStream(rot), 0.1, 0.45, 100)
    np.testing.assert_allclose(circle_dist(p[:, 0], p[:, 1]), 0.35, atol=1e-12)


@given(st.floats(0, 1, exclude_max=True), st.integers(0, 1000))
def test_diagonal_invariance_exact(x, seed):
    gs = GeneratorSet([("n", north_south(0.2, 0.7), 1), ("r", Rotation(2**0.5 - 1), 1)], seed=seed)
    p = iterate_pair(WalkStream(gs), x, x, 60)
    assert np.array_equal(p[:, 0], p[:, 1])


def test_steps_match_composed_word():
    gs = GeneratorSet([("n", north_south(0.2, 0.7), 1), ("r", Rotation(2**0.5 - 1), 1)], seed=4)
    ws = WalkStream(gs, 3)
    word = ws.word(100)
    x = np.linspace(0, 1, 33, endpoint=False)
    orbit = run_points(gs, word[None, :], x)[0]
    h = identity()
    for k, g in enumerate(word):
        assert np.max(circle_dist(gs.maps[g](orbit[k]), orbit[k + 1])) == 0.0
        h = compose(gs.maps[g], h)
    assert np.max(circle_dist(h(x), orbit[-1])) < 1e-9


def test_parallel_map_order_independent(monkeypatch):
    gs = GeneratorSet(PINGPONG, seed=1)
    serial = parallel_map(lambda t: gs.word(t, 50), list(range(12)))
    monkeypatch.setenv("RDS_THREADS", "4")
    threaded = parallel_map(lambda t: gs.word(t, 50), list(range(12)))
    for a, b in zip(serial, threaded):
        np.testing.assert_array_equal(a, b)
