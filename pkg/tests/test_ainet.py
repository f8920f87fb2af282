import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.distance import cdist

from aislab.ainet import (
    AiNetError,
    AiNetParams,
    ImmuneNetwork,
    ainet_mutate,
    ainet_train,
    mst_clusters,
    mst_edges,
    suppress,
)
from aislab.datasets import gen_shapes
from aislab.shape_space import seeded_rng

TABLE = AiNetParams(n=4, zeta=10, sigma_d=1.0, sigma_s=0.1, n_gen=40)


def _min_offdiag(S):
    S = S.copy()
    np.fill_diagonal(S, np.inf)
    return S.min()


def test_mutate_cases():
    assert np.array_equal(ainet_mutate([0.3, 7.0], [1.0, -2.0], 1.0), [1.0, -2.0])
    assert np.array_equal(ainet_mutate([0.3, 7.0], [1.0, -2.0], 0.0), [0.3, 7.0])
    assert np.array_equal(ainet_mutate([0, 0], [2, 4], 0.5), [1, 2])


@given(st.lists(st.floats(-10, 10), min_size=2, max_size=2), st.lists(st.floats(-10, 10), min_size=2, max_size=2),
       st.floats(0, 1))
def test_mutate_moves_toward_antigen(c, ag, alpha):
    out = ainet_mutate(c, ag, alpha)
    before = np.linalg.norm(np.subtract(c, ag))
    assert np.linalg.norm(out - ag) <= before + 1e-9


def test_params_validation():
    for kw in (dict(zeta=0), dict(zeta=101), dict(sigma_d=0), dict(sigma_s=-1), dict(n=0), dict(r_replace_pct=120)):
        with pytest.raises(AiNetError):
            AiNetParams(**kw)


def test_suppress_greedy():
    pts = np.array([[0.0], [0.05], [0.2], [0.22], [1.0]])
    assert suppress(pts, 0.1).tolist() == [0, 2, 4]
    assert suppress(np.zeros((0, 1)), 0.1).size == 0


def test_redundant_data_collapses():
    data = np.tile([3.0, -2.0], (50, 1))
    net = ainet_train(data, TABLE, seeded_rng(1))
    assert len(net) == 1
    assert np.abs(net.cells[0] - [3.0, -2.0]).max() < 1e-6


def test_empty_data():
    with pytest.raises(AiNetError):
        ainet_train(np.zeros((0, 2)), TABLE, seeded_rng(0))


@pytest.fixture(scope="module")
def circles_net():
    ds = gen_shapes("concentric_circles", seeded_rng(0))
    return ds, ainet_train(ds.points, TABLE, seeded_rng(100))


def test_circles_compression_and_suppression(circles_net):
    ds, net = circles_net
    assert len(net) <= 0.3 * len(ds)
    assert net.compression == pytest.approx(1 - net.trace[-1] / len(ds))
    S = net.similarity
    assert np.allclose(S, S.T) and np.all(np.diag(S) == 0)
    assert _min_offdiag(S) >= TABLE.sigma_s


def test_circles_two_clusters(circles_net):
    ds, net = circles_net
    labels = mst_clusters(net, 2)
    Xs = (ds.points - net.lo) / net.span
    owner = labels[cdist(Xs, net.scaled_cells).argmin(axis=1)]
    assert set(labels) == {0, 1}
    agree = (owner == ds.labels).mean()
    assert max(agree, 1 - agree) == 1.0


@pytest.mark.parametrize("kind", ["two_spirals", "chainlink_rings", "concentric_circles"])
def test_compression_on_shapes(kind):
    ds = gen_shapes(kind, seeded_rng(3), noise=0.02)
    net = ainet_train(ds.points, TABLE, seeded_rng(4))
    assert len(net) < len(ds)
    assert _min_offdiag(net.similarity) >= TABLE.sigma_s


def test_sigma_s_sweep_non_increasing():
    ds = gen_shapes("concentric_circles", seeded_rng(5), noise=0.02)
    sizes = [len(ainet_train(ds.points, AiNetParams(n=4, zeta=10, sigma_s=s, n_gen=15), seeded_rng(6)))
             for s in (0.05, 0.1, 0.15, 0.2)]
    assert all(a >= b for a, b in zip(sizes, sizes[1:]))


def test_larger_zeta_more_work():
    ds = gen_shapes("two_spirals", seeded_rng(7))
    small = ainet_train(ds.points, AiNetParams(zeta=10, n_gen=5, beta=3), seeded_rng(8))
    large = ainet_train(ds.points, AiNetParams(zeta=50, n_gen=5, beta=3), seeded_rng(8))
    assert large.clones_processed >= small.clones_processed


def test_random_replacement_keeps_final_invariant():
    ds = gen_shapes("concentric_circles", seeded_rng(9), noise=0.02)
    net = ainet_train(ds.points, AiNetParams(r_replace_pct=10, n_gen=10), seeded_rng(10))
    assert _min_offdiag(net.similarity) >= 0.1


def test_raw_mode_uses_data_units():
    data = np.array([[0.0, 0.0], [10.0, 0.0]])
    net = ainet_train(data, AiNetParams(n=1, sigma_s=0.5, n_gen=30, scale=False), seeded_rng(11))
    assert np.array_equal(net.cells, net.scaled_cells)


def test_mst_two_blobs_fixed_k():
    rng = seeded_rng(12)
    a = rng.uniform(0, 1, (15, 2))
    b = rng.uniform(0, 1, (10, 2)) + [20.0, 0.0]
    pts = np.vstack([a, b])
    labels = mst_clusters(pts, 2)
    assert list(labels) == [0] * 15 + [1] * 10


def test_mst_single_and_full_split():
    assert mst_clusters(np.array([[1.0, 2.0]]), "auto").tolist() == [0]
    assert mst_clusters(np.array([[1.0, 2.0]]), 1).tolist() == [0]
    pts = seeded_rng(13).normal(size=(7, 3))
    assert sorted(mst_clusters(pts, 7)) == list(range(7))
    with pytest.raises(AiNetError):
        mst_clusters(pts, 8)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 25), st.integers(0, 10_000), st.data())
def test_mst_fixed_k_component_count(n, seed, data):
    pts = seeded_rng(seed).normal(size=(n, 2))
    K = data.draw(st.integers(1, n))
    assert np.unique(mst_clusters(pts, K)).size == K
    assert np.array_equal(mst_clusters(pts, "auto"), mst_clusters(pts, "auto"))


def test_mst_edges_tree():
    pts = seeded_rng(14).normal(size=(10, 2))
    e = mst_edges(pts)
    assert e.shape == (9, 3)
    dup = np.vstack([pts, pts[:1]])
    assert mst_edges(dup).shape == (10, 3)


def test_auto_mode_two_circles_raw_points():
    ds = gen_shapes("concentric_circles", seeded_rng(0), counts=(100, 300), radii=(1.0, 3.0))
    labels = mst_clusters(ds.points, "auto")
    assert np.unique(labels).size == 2
    assert np.array_equal(labels, ds.labels)
