"""The three event families evaluated on a realized graph sample.

E(r): some vertex in B(r) connects by a path to some vertex outside B(2r).
G(x,r): the same crossing realized inside the subgraph induced by B(x,3r).
L(r,c): some edge {x,y} with |x| <= r and |x-y| > c*r.

Ball membership uses closed balls for sources and open complements for
targets; lattice windows measure distances in the sup-norm.
"""

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ConfigError, ParameterError
from .graph import GraphSample


def _labels(n, edges):
    if edges.shape[0] == 0:
        return np.arange(n)
    m = coo_matrix(
        (np.ones(edges.shape[0]), (edges[:, 0], edges[:, 1])), shape=(n, n)
    )
    _, labels = connected_components(m, directed=False)
    return labels


def _connected(n, edges, sources, targets):
    """Whether any source vertex shares a component with any target."""
    if not sources.any() or not targets.any():
        return False
    labels = _labels(n, edges)
    return bool(np.intersect1d(labels[sources], labels[targets]).size)


def annulus_crossing(graph: GraphSample, r: float) -> bool:
    """Event E(r): B(r) connects to the complement of B(2r)."""
    window = graph.vertices.window
    if window.radius < 2 * r:
        raise ConfigError("window must contain B(2r) for the annulus crossing")
    norms = window.norm(graph.vertices.locations) if len(graph.vertices) else np.empty(0)
    return _connected(len(graph.vertices), graph.edges, norms <= r, norms > 2 * r)


def local_annulus_crossing(graph: GraphSample, center, r: float) -> bool:
    """Event G(x, r): crossing of the annulus around x using only vertices
    and edges inside B(x, 3r)."""
    window = graph.vertices.window
    center = np.asarray(center, dtype=np.float64)
    if window.norm(center[None, :])[0] + 3 * r > window.radius * (1 + 1e-9):
        raise ConfigError("window must contain B(center, 3r)")
    if len(graph.vertices) == 0:
        return False
    rel = window.norm(graph.vertices.locations - center)
    inside = rel <= 3 * r
    idx = np.flatnonzero(inside)
    remap = -np.ones(len(graph.vertices), dtype=np.int64)
    remap[idx] = np.arange(idx.size)
    e = graph.edges
    keep = inside[e[:, 0]] & inside[e[:, 1]] if e.shape[0] else np.empty(0, bool)
    sub_edges = remap[e[keep]] if e.shape[0] else np.empty((0, 2), np.int64)
    sub_rel = rel[idx]
    return _connected(idx.size, sub_edges, sub_rel <= r, sub_rel > 2 * r)


def long_edge_present(graph: GraphSample, r: float, c: float) -> bool:
    """Event L(r, c): an edge longer than c*r with an endpoint in B(r)."""
    if c <= 0:
        raise ParameterError("c must be positive")
    e = graph.edges
    if e.shape[0] == 0:
        return False
    window = graph.vertices.window
    locs = graph.vertices.locations
    norms = window.norm(locs)
    if window.kind == "continuum-ball":
        diff = locs[e[:, 0]] - locs[e[:, 1]]
        length = np.sqrt((diff * diff).sum(axis=1))
    else:
        length = np.abs(locs[e[:, 0]] - locs[e[:, 1]]).max(axis=1)
    anchored = (norms[e[:, 0]] <= r) | (norms[e[:, 1]] <= r)
    return bool(np.any(anchored & (length > c * r)))
