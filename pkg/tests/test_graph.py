"""Edge construction: exact oracles, statistical agreement, components."""

import json
import math

import numpy as np
import pytest
from scipy import stats

from percolab import (
    ConfigError,
    ModelSpec,
    Window,
    build_graph,
    components,
    connect_prob_interference,
    dump_graph,
    ellipse_edge,
    sample_ellipse_field,
    sample_lattice_bernoulli,
    sample_poisson_marked,
    sample_worm_vertices,
    wdrcm_prob,
)
from percolab._rng import pair_uniform, vertex_keys


def _edge_set(graph):
    return {(int(i), int(j)) for i, j in graph.edges}


def _brute_force_wdrcm(vs, model, seed, min_len=None):
    """Per-pair Bernoulli draws with the same keyed randomness as build_graph."""
    keys = vertex_keys(vs.locations, vs.marks)
    out = set()
    n = len(vs)
    for i in range(n):
        for j in range(i + 1, n):
            dist = math.dist(vs.locations[i], vs.locations[j])
            if min_len is not None and dist <= min_len:
                continue
            phi = wdrcm_prob(model, vs.marks[i], vs.marks[j], dist)
            if pair_uniform(seed, keys[i], keys[j]) < phi:
                out.add((i, j))
    return out


def test_all_pairs_matches_brute_force():
    w = Window("continuum-ball", 6.0, 2)
    for seed in range(5):
        vs = sample_poisson_marked(w, 1.0, seed)
        model = ModelSpec("wdrcm-interpolation", gamma=0.4, alpha=0.2, delta=2.0)
        g = build_graph(vs, model, seed=seed + 100)
        assert _edge_set(g) == _brute_force_wdrcm(vs, model, seed + 100)


def test_min_edge_length_filter_exact():
    w = Window("continuum-ball", 8.0, 2)
    vs = sample_poisson_marked(w, 1.0, 3)
    model = ModelSpec("wdrcm-interpolation", gamma=0.0, alpha=0.0, delta=2.0)
    g = build_graph(vs, model, seed=9, min_edge_length=4.0)
    assert _edge_set(g) == _brute_force_wdrcm(vs, model, 9, min_len=4.0)
    for i, j in g.edges:
        assert math.dist(vs.locations[i], vs.locations[j]) > 4.0


def test_thinned_path_agrees_with_all_pairs_statistically():
    """The kd-tree/thinning edge sampler must reproduce the all-pairs edge
    count distribution.  Compared via a two-sample t statistic over seeds."""
    w = Window("continuum-ball", 12.0, 2)
    model = ModelSpec("wdrcm-interpolation", gamma=0.3, alpha=0.0, delta=3.0)
    exact, thinned = [], []
    for seed in range(40):
        vs = sample_poisson_marked(w, 1.0, seed)
        exact.append(build_graph(vs, model, seed, all_pairs_threshold=10**9).edges.shape[0])
        thinned.append(build_graph(vs, model, seed, all_pairs_threshold=0).edges.shape[0])
    t = stats.ttest_ind(exact, thinned)
    assert t.pvalue > 1e-3, (np.mean(exact), np.mean(thinned))


def test_thinned_long_edges_match_exact_distribution():
    # with min_edge_length the candidate sets are small enough to compare means
    w = Window("continuum-ball", 16.0, 2)
    model = ModelSpec("wdrcm-interpolation", gamma=0.0, alpha=0.0, delta=2.0)
    exact, thinned = [], []
    for seed in range(60):
        vs = sample_poisson_marked(w, 1.0, seed)
        exact.append(
            build_graph(vs, model, seed, min_edge_length=8.0, all_pairs_threshold=10**9).edges.shape[0]
        )
        thinned.append(
            build_graph(vs, model, seed, min_edge_length=8.0, all_pairs_threshold=0).edges.shape[0]
        )
    assert stats.ttest_ind(exact, thinned).pvalue > 1e-3


def test_interference_edges_match_quenched_rule():
    w = Window("continuum-ball", 6.0, 2)
    vs = sample_poisson_marked(w, 0.6, 5)
    model = ModelSpec(
        "soft-boolean-interference", gamma=0.3, delta=2.0, beta=0.4, profile="long"
    )
    g = build_graph(vs, model, seed=7)
    keys = vertex_keys(vs.locations, vs.marks)
    want = set()
    for i in range(len(vs)):
        for j in range(i + 1, len(vs)):
            p = connect_prob_interference(
                vs.vertex(i), vs.vertex(j), vs, model.gamma, model.delta, model.beta
            )
            if pair_uniform(7, keys[i], keys[j]) < p:
                want.add((i, j))
    assert _edge_set(g) == want


def test_ellipse_edges_match_pairwise_predicate():
    model = ModelSpec("ellipses", gamma=0.8)
    for seed in (0, 1, 2):
        w = Window("continuum-ball", 7.0, 2)
        vs = sample_ellipse_field(w, 1.0, model.gamma, seed)
        g = build_graph(vs, model, seed=seed)
        want = set()
        for i in range(len(vs)):
            for j in range(i + 1, len(vs)):
                if ellipse_edge(vs.vertex(i), vs.vertex(j), model):
                    want.add((i, j))
        assert _edge_set(g) == want


def test_ellipse_edges_min_length_heavy_tail():
    model = ModelSpec("ellipses", gamma=1.4)
    w = Window("continuum-ball", 9.0, 2)
    vs = sample_ellipse_field(w, 0.8, model.gamma, 11)
    g = build_graph(vs, model, seed=0, min_edge_length=4.0)
    want = set()
    for i in range(len(vs)):
        for j in range(i + 1, len(vs)):
            if math.dist(vs.locations[i], vs.locations[j]) <= 4.0:
                continue
            if ellipse_edge(vs.vertex(i), vs.vertex(j), model):
                want.add((i, j))
    assert _edge_set(g) == want


def test_lattice_nn_edges():
    w = Window("lattice-box", 5.0, 2)
    vs = sample_lattice_bernoulli(w, 0.6, 2)
    g = build_graph(vs, ModelSpec("lattice-nn", profile="short"), seed=0)
    locs = vs.locations
    want = {
        (i, j)
        for i in range(len(vs))
        for j in range(i + 1, len(vs))
        if np.abs(locs[i] - locs[j]).sum() == 1
    }
    assert _edge_set(g) == want
    # continuum family on a lattice window is rejected, and vice versa
    with pytest.raises(ConfigError):
        build_graph(vs, ModelSpec("wdrcm-interpolation", delta=2.0), seed=0)
    cont = sample_poisson_marked(Window("continuum-ball", 4.0, 2), 1.0, 0)
    with pytest.raises(ConfigError):
        build_graph(cont, ModelSpec("lattice-nn", profile="short"), seed=0)


def test_worm_nn_edges_connect_each_worm():
    w = Window("lattice-box", 6.0, 3)
    vs = sample_worm_vertices(w, 0.05, ("deterministic", 4), 3)
    g = build_graph(vs, ModelSpec("worm-nn", profile="short", dimension=3), seed=0)
    lab = components(g)
    # consecutive worm sites are lattice neighbors, so components merge sites
    assert lab.count <= len(vs)
    assert lab.labels.shape[0] == len(vs)
    assert lab.labels.max() + 1 == lab.count


def test_components_against_bfs_oracle():
    w = Window("continuum-ball", 8.0, 2)
    vs = sample_poisson_marked(w, 1.0, 17)
    model = ModelSpec("wdrcm-interpolation", gamma=0.5, alpha=0.0, delta=2.0)
    g = build_graph(vs, model, seed=4)
    lab = components(g)
    # BFS oracle
    n = len(vs)
    adj = [[] for _ in range(n)]
    for i, j in g.edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = np.full(n, -1)
    nc = 0
    for s in range(n):
        if seen[s] >= 0:
            continue
        stack = [s]
        seen[s] = nc
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if seen[y] < 0:
                    seen[y] = nc
                    stack.append(y)
        nc += 1
    assert lab.count == nc
    # same partition up to relabeling
    for i, j in g.edges:
        assert lab.labels[i] == lab.labels[j]
    pairs = {(int(a), int(b)) for a, b in zip(lab.labels, seen)}
    assert len(pairs) == nc


def test_graph_determinism_and_dump(tmp_path):
    w = Window("continuum-ball", 6.0, 2)
    vs = sample_poisson_marked(w, 1.0, 8)
    model = ModelSpec("wdrcm-interpolation", gamma=0.2, alpha=0.1, delta=2.5)
    g1 = build_graph(vs, model, seed=21)
    g2 = build_graph(vs, model, seed=21)
    np.testing.assert_array_equal(g1.edges, g2.edges)
    path = tmp_path / "graph.txt"
    dump_graph(g1, path)
    lines = path.read_text().splitlines()
    header = json.loads(lines[0])
    assert header["n_edges"] == g1.edges.shape[0] == len(lines) - 1
    assert header["n_vertices"] == len(vs)
