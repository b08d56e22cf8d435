"""Annulus-crossing and long-edge events on hand-built and random graphs."""

import numpy as np
import pytest

from percolab import (
    ConfigError,
    GraphSample,
    ModelSpec,
    ParameterError,
    VertexSet,
    Window,
    annulus_crossing,
    build_graph,
    local_annulus_crossing,
    long_edge_present,
    sample_poisson_marked,
)

MODEL = ModelSpec("wdrcm-interpolation", gamma=0.0, alpha=0.0, delta=2.0)


def _graph(locs, edges, radius=20.0, kind="continuum-ball"):
    locs = np.asarray(locs, dtype=np.float64)
    w = Window(kind, radius, locs.shape[1])
    vs = VertexSet(w, locs, np.full(len(locs), 0.5), intensity=1.0, seed=0)
    return GraphSample(vs, np.asarray(edges, dtype=np.int64).reshape(-1, 2), MODEL, 0)


def test_annulus_crossing_path():
    # chain from inside B(2) to outside B(4)
    locs = [[1.0, 0.0], [3.0, 0.0], [5.0, 0.0]]
    g = _graph(locs, [[0, 1], [1, 2]])
    assert annulus_crossing(g, 2.0)
    # removing the outer link breaks the crossing
    g2 = _graph(locs, [[0, 1]])
    assert not annulus_crossing(g2, 2.0)
    # a path that never starts inside B(r) does not count
    g3 = _graph([[2.5, 0.0], [5.0, 0.0]], [[0, 1]])
    assert not annulus_crossing(g3, 2.0)
    # vertex exactly on the inner boundary counts (closed ball) while one
    # exactly on 2r does not (strict complement)
    g4 = _graph([[2.0, 0.0], [4.0, 0.0]], [[0, 1]])
    assert not annulus_crossing(g4, 2.0)
    g5 = _graph([[2.0, 0.0], [4.0 + 1e-9, 0.0]], [[0, 1]])
    assert annulus_crossing(g5, 2.0)
    with pytest.raises(ConfigError):
        annulus_crossing(_graph(locs, [[0, 1]], radius=3.0), 2.0)


def test_annulus_crossing_isolated_vertices():
    g = _graph([[1.0, 0.0], [5.0, 0.0]], np.empty((0, 2)))
    assert not annulus_crossing(g, 2.0)
    empty = _graph(np.empty((0, 2)), np.empty((0, 2)))
    assert not annulus_crossing(empty, 2.0)


def test_local_annulus_crossing_restricts_to_ball():
    # crossing around x = (10, 0) with r = 2: B(x, 6) is the playground
    x = np.array([10.0, 0.0])
    locs = [[11.0, 0.0], [13.0, 0.0], [15.0, 0.0]]
    g = _graph(locs, [[0, 1], [1, 2]], radius=30.0)
    assert local_annulus_crossing(g, x, 2.0)
    # a path detouring through a vertex outside B(x, 3r) must not count
    locs2 = [[11.0, 0.0], [10.0, 6.5], [15.0, 0.0]]
    g2 = _graph(locs2, [[0, 1], [1, 2]], radius=30.0)
    assert not local_annulus_crossing(g2, x, 2.0)
    # the same detour inside B(x, 3r) does count
    locs3 = [[11.0, 0.0], [10.0, 5.5], [15.0, 0.0]]
    g3 = _graph(locs3, [[0, 1], [1, 2]], radius=30.0)
    assert local_annulus_crossing(g3, x, 2.0)
    with pytest.raises(ConfigError):
        local_annulus_crossing(g, np.array([28.0, 0.0]), 2.0)


def test_local_crossing_implied_by_global_at_origin():
    # G(0, r) is a subgraph event, so it implies E(r) whenever it holds
    w = Window("continuum-ball", 18.0, 2)
    model = ModelSpec("wdrcm-interpolation", gamma=0.5, alpha=0.0, delta=2.0)
    hits = 0
    for seed in range(30):
        vs = sample_poisson_marked(w, 1.0, seed)
        g = build_graph(vs, model, seed)
        loc = local_annulus_crossing(g, np.zeros(2), 3.0)
        if loc:
            hits += 1
            assert annulus_crossing(g, 3.0)
    assert hits > 0  # the check above must actually trigger


def test_long_edge_present():
    locs = [[1.0, 0.0], [9.0, 0.0], [30.0, 0.0], [36.0, 0.0]]
    g = _graph(locs, [[0, 1], [2, 3]], radius=50.0)
    # edge (0,1): length 8 > c*r = 4, endpoint |x|=1 <= 4
    assert long_edge_present(g, 4.0, 1.0)
    # with c = 2.5 the threshold is 10 > 8: no qualifying edge
    assert not long_edge_present(g, 4.0, 2.5)
    # edge (2,3) is long enough but anchored outside B(r)
    far = _graph(locs, [[2, 3]], radius=50.0)
    assert not long_edge_present(far, 4.0, 1.4)
    assert not long_edge_present(_graph(locs, np.empty((0, 2)), radius=50.0), 4.0, 1.0)
    with pytest.raises(ParameterError):
        long_edge_present(g, 4.0, 0.0)


def test_long_edge_sup_norm_on_lattice():
    # lattice windows measure both anchoring and edge length in sup-norm
    locs = [[2.0, 0.0], [5.0, 3.0]]
    g = _graph(locs, [[0, 1]], radius=10.0, kind="lattice-box")
    # sup-norm length = 3, anchor sup-norm 2
    assert long_edge_present(g, 2.0, 1.4)  # 3 > 2.8
    assert not long_edge_present(g, 2.0, 1.6)  # 3 <= 3.2
