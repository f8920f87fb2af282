import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aislab.shape_space import (
    AffinityConfig,
    ShapeSpaceError,
    binary_vector,
    binding_value,
    distance,
    euclidean_distance,
    hamming_distance,
    manhattan_distance,
    pairwise_distances,
    seeded_rng,
)

reals = st.floats(-1e3, 1e3, allow_nan=False)


def real_pair(max_len=8):
    return st.integers(1, max_len).flatmap(
        lambda L: st.tuples(st.lists(reals, min_size=L, max_size=L), st.lists(reals, min_size=L, max_size=L))
    )


def bit_pair(max_len=64):
    bits = st.integers(0, 1)
    return st.integers(1, max_len).flatmap(
        lambda L: st.tuples(st.lists(bits, min_size=L, max_size=L), st.lists(bits, min_size=L, max_size=L))
    )


def test_euclidean_examples():
    assert euclidean_distance([0, 0], [3, 4]) == 5.0
    assert euclidean_distance([1.5, -2, 7], [1.5, -2, 7]) == 0.0


def test_euclidean_brute_force():
    rng = seeded_rng(3)
    for _ in range(10):
        a, b = rng.normal(size=4), rng.normal(size=4)
        oracle = math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))
        assert abs(euclidean_distance(a, b) - oracle) < 1e-12


def test_manhattan_examples():
    assert manhattan_distance([1, 1], [4, 5]) == 7.0
    assert manhattan_distance([2, 3], [2, 3]) == 0.0
    assert manhattan_distance([1, 1], [4, 5], root=True) == pytest.approx(math.sqrt(7))


def test_manhattan_coordinate_oracle():
    rng = seeded_rng(4)
    for _ in range(10):
        a, b = rng.integers(-50, 50, 6), rng.integers(-50, 50, 6)
        assert manhattan_distance(a, b) == sum(abs(int(x) - int(y)) for x, y in zip(a, b))


def test_hamming_examples():
    assert hamming_distance([1, 0, 1, 0], [0, 1, 0, 1]) == 4
    assert hamming_distance([1, 1, 0], [1, 1, 0]) == 0
    a = np.array([1, 1, 0, 1, 0, 0, 1, 0, 1, 1])
    b = a.copy()
    b[[0, 4, 7]] ^= 1
    assert hamming_distance(a, b) == 3


@pytest.mark.parametrize("fn", [euclidean_distance, manhattan_distance, hamming_distance])
def test_dimension_mismatch(fn):
    with pytest.raises(ShapeSpaceError):
        fn([0, 1], [0, 1, 1])


def test_hamming_rejects_non_binary():
    with pytest.raises(ShapeSpaceError):
        hamming_distance([0, 2], [0, 1])
    with pytest.raises(ShapeSpaceError):
        binary_vector([[0, 1]])


@given(real_pair())
def test_real_metric_axioms(pair):
    a, b = pair
    for fn in (euclidean_distance, manhattan_distance):
        assert fn(a, b) >= 0
        assert fn(a, b) == fn(b, a)
        assert fn(a, a) == 0
    assert euclidean_distance(a, a) < 1e-12


@given(bit_pair())
def test_hamming_axioms_and_complement(pair):
    a, b = pair
    assert hamming_distance(a, b) == hamming_distance(b, a) >= 0
    assert hamming_distance(a, a) == 0
    assert (hamming_distance(a, b) == 0) == (a == b)
    comp = [1 - x for x in a]
    assert hamming_distance(a, comp) == len(a)


def test_rng_reproducible():
    a = seeded_rng(2**63 + 11).random(10_000)
    b = seeded_rng(2**63 + 11).random(10_000)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, seeded_rng(12).random(10_000))


def test_rng_seed_range():
    with pytest.raises(ShapeSpaceError):
        seeded_rng(-1)
    with pytest.raises(ShapeSpaceError):
        seeded_rng(2**64)


def test_binding_step():
    cfg = AffinityConfig(metric="hamming", epsilon=3.0)
    assert binding_value(3.0, cfg) == 1.0
    assert binding_value(0.0, cfg) == 0.0
    assert binding_value(0.0, AffinityConfig(epsilon=0.0)) == 1.0


def test_binding_s_curve_monotone():
    cfg = AffinityConfig(epsilon=5.0, binding_shape="s_curve", slope=2.0)
    grid = np.linspace(0, 10, 100)
    vals = [binding_value(x, cfg) for x in grid]
    assert all(0.0 <= v <= 1.0 for v in vals)
    assert all(x <= y for x, y in zip(vals, vals[1:]))
    assert binding_value(5.0, cfg) == pytest.approx(0.5)
    # far tails stay finite
    assert binding_value(1e6, cfg) == 1.0


def test_binding_rejects_negative_distance():
    with pytest.raises(ShapeSpaceError):
        binding_value(-0.1, AffinityConfig())


def test_config_validation():
    with pytest.raises(ShapeSpaceError):
        AffinityConfig(metric="cosine")
    with pytest.raises(ShapeSpaceError):
        AffinityConfig(binding_shape="ramp")
    with pytest.raises(ShapeSpaceError):
        AffinityConfig(epsilon=-1)
    with pytest.raises(ShapeSpaceError):
        AffinityConfig(metric="hamming").check([0.5, 1.0])
    with pytest.raises(ShapeSpaceError):
        AffinityConfig(metric="euclidean").check(np.array([True, False]))
    assert AffinityConfig(metric="manhattan", manhattan_root=True).distance([0, 0], [1, 3]) == 2.0


def test_pairwise_matches_scalar():
    rng = seeded_rng(9)
    A, B = rng.normal(size=(5, 3)), rng.normal(size=(4, 3))
    for metric in ("euclidean", "manhattan"):
        M = pairwise_distances(A, B, metric)
        for i in range(5):
            for j in range(4):
                assert M[i, j] == pytest.approx(distance(A[i], B[j], metric), abs=1e-12)
    bits = rng.integers(0, 2, (6, 12))
    H = pairwise_distances(bits, bits, "hamming")
    assert H[1, 2] == hamming_distance(bits[1], bits[2])
