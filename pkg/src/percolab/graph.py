"""Realize one graph sample from a VertexSet and a ModelSpec.

Edges are sampled independently given the vertices.  Per-pair randomness is
a hash of the seed and a symmetric content-based pair key, so the edge set
is invariant under vertex relabeling and enumeration order.  Below a vertex
count threshold all pairs are evaluated exactly; above it, long-range
profiles use distance-binned domination thinning over a cell grid (sample
candidate pairs per cell block at the block's dominating probability, then
accept by ratio), with a certified skipping budget of 1e-12 per pair and
1e-6 total.
"""

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ._rng import pair_uniform, stream, vertex_keys
from .errors import ConfigError, ParameterError
from .geometry import VertexSet
from .kernels import (
    ModelSpec,
    _ellipse_boundary,  # noqa: F401  (re-exported for plotting helpers)
    interpolation_kernel,
    profile,
    wdrcm_prob,
)

ALL_PAIRS_THRESHOLD = 3000
INTERFERENCE_CAP = 20000
PRUNE_PER_PAIR = 1e-12
PRUNE_TOTAL = 1e-6


@dataclass
class GraphSample:
    vertices: VertexSet
    edges: np.ndarray  # (m, 2) int array, i < j
    model: ModelSpec
    seed: int


class UnionFind:
    """Union-find with path compression and union by size."""

    def __init__(self, n):
        self.parent = list(range(n))
        self.size = [1] * n
        self.count = n

    def find(self, a):
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.count -= 1


@dataclass
class ComponentLabeling:
    labels: np.ndarray
    count: int


def components(graph: GraphSample) -> ComponentLabeling:
    """Connected components of the sample (union-find labeling)."""
    n = len(graph.vertices)
    uf = UnionFind(n)
    for i, j in graph.edges:
        uf.union(int(i), int(j))
    roots = np.fromiter((uf.find(i) for i in range(n)), dtype=np.int64, count=n)
    # canonical labels 0..k-1 in order of first appearance
    _, labels = np.unique(roots, return_inverse=True)
    return ComponentLabeling(labels, uf.count)


def build_graph(
    vertices: VertexSet,
    model: ModelSpec,
    seed: int,
    min_edge_length: float | None = None,
    all_pairs_threshold: int = ALL_PAIRS_THRESHOLD,
) -> GraphSample:
    """Sample one edge set.

    min_edge_length restricts construction to pairs farther apart than the
    given length; this is exact for long-edge events L(r, c) with
    min_edge_length = c*r, which ignore shorter edges by definition.
    """
    lattice = vertices.window.kind == "lattice-box"
    if model.family in ("worm-nn", "lattice-nn"):
        if not lattice:
            raise ConfigError("nearest-neighbor families need a lattice window")
        edges = _lattice_nn_edges(vertices)
    elif lattice:
        raise ConfigError(f"family {model.family} needs a continuum window")
    elif model.family == "ellipses":
        edges = _ellipse_edges(vertices, model, min_edge_length)
    elif model.family == "soft-boolean-interference":
        edges = _interference_edges(vertices, model, seed, min_edge_length)
    elif len(vertices) <= all_pairs_threshold:
        edges = _all_pairs_edges(vertices, model, seed, min_edge_length)
    else:
        edges = _thinned_edges(vertices, model, seed, min_edge_length)
    return GraphSample(vertices, edges, model, seed)


# ---------------------------------------------------------------------------
# exact all-pairs path


def _block_distances(locs, i0, i1):
    """Distances from rows i0:i1 to all points (stable dot-product form)."""
    sq = (locs * locs).sum(axis=1)
    d2 = sq[i0:i1, None] + sq[None, :] - 2.0 * (locs[i0:i1] @ locs.T)
    return np.sqrt(np.maximum(d2, 0.0))


def _upper_pairs(n, i0, i1, dist, min_len):
    jj = np.broadcast_to(np.arange(n), (i1 - i0, n))
    ii = np.broadcast_to(np.arange(i0, i1)[:, None], (i1 - i0, n))
    upper = jj > ii
    if min_len is not None:
        upper = upper & (dist > min_len)
    return ii[upper], jj[upper], dist[upper]


def _all_pairs_edges(vs, model, seed, min_len, block=1024):
    n = len(vs)
    locs, marks = vs.locations, vs.marks
    keys = vertex_keys(locs, marks)
    out_i, out_j = [], []
    for i0 in range(0, n, block):
        i1 = min(i0 + block, n)
        dist = _block_distances(locs, i0, i1)
        ii, jj, dist = _upper_pairs(n, i0, i1, dist, min_len)
        if ii.size == 0:
            continue
        p = wdrcm_prob(model, marks[ii], marks[jj], dist)
        u = pair_uniform(seed, keys[ii], keys[jj])
        hit = u < p
        out_i.append(ii[hit])
        out_j.append(jj[hit])
    return _stack_edges(out_i, out_j)


def _stack_edges(out_i, out_j):
    if not out_i:
        return np.empty((0, 2), dtype=np.int64)
    i = np.concatenate(out_i).astype(np.int64)
    j = np.concatenate(out_j).astype(np.int64)
    return np.stack([np.minimum(i, j), np.maximum(i, j)], axis=1)


# ---------------------------------------------------------------------------
# interference path (quenched rule conditioned on the whole vertex set)


def _interference_edges(vs, model, seed, min_len, block=2048):
    n = len(vs)
    if n > INTERFERENCE_CAP:
        raise ConfigError("interference family is all-pairs only (vertex cap 20000)")
    d = vs.window.dimension
    locs, marks = vs.locations, vs.marks
    tree = cKDTree(locs)
    radii = marks ** (-model.beta / d)
    counts = np.array(
        [len(tree.query_ball_point(locs[i], radii[i])) - 1 for i in range(n)]
    )
    keys = vertex_keys(locs, marks)
    gd = model.gamma * model.delta
    out_i, out_j = [], []
    for i0 in range(0, n, block):
        i1 = min(i0 + block, n)
        dist = _block_distances(locs, i0, i1)
        ii, jj, dist = _upper_pairs(n, i0, i1, dist, min_len)
        if ii.size == 0:
            continue
        umin = np.minimum(marks[ii], marks[jj])
        center = np.where(marks[ii] <= marks[jj], ii, jj)
        with np.errstate(divide="ignore"):
            base = np.minimum(
                1.0, umin**-gd * np.where(dist > 0, dist, 1.0) ** (-d * model.delta)
            )
        base = np.where(dist == 0, 1.0, base)
        inside = dist <= radii[center]
        ncount = np.maximum(counts[center] - inside.astype(np.int64), 0)
        p = base / (1.0 + ncount)
        u = pair_uniform(seed, keys[ii], keys[jj])
        hit = u < p
        out_i.append(ii[hit])
        out_j.append(jj[hit])
    return _stack_edges(out_i, out_j)


# ---------------------------------------------------------------------------
# ellipse path (deterministic given marks)


def _ellipses_separated_batch(c1, a1, b1, t1, c2, a2, b2, t2):
    """Vectorized disjointness test for pairs of closed elliptical regions.

    Works in the frame of the first ellipse scaled to the unit circle and
    examines the characteristic cubic f(lambda) = det(lambda*diag(1,1,-1) + B)
    of the pair: the regions are disjoint exactly when f has a positive
    local maximum with positive value (two distinct positive roots).
    """
    rel = c2 - c1
    ct, st = np.cos(t1), np.sin(t1)
    x0 = (rel[:, 0] * ct + rel[:, 1] * st) / a1
    y0 = (-rel[:, 0] * st + rel[:, 1] * ct) / b1
    phi = t2 - t1
    cp, sp = np.cos(phi), np.sin(phi)
    # second ellipse as an affine image of the unit circle, columns of L
    l11 = a2 * cp / a1
    l21 = a2 * sp / b1
    l12 = -b2 * sp / a1
    l22 = b2 * cp / b1
    g11 = l11 * l11 + l12 * l12
    g12 = l11 * l21 + l12 * l22
    g22 = l21 * l21 + l22 * l22
    det = g11 * g22 - g12 * g12
    s11 = g22 / det
    s12 = -g12 / det
    s22 = g11 / det
    sm1 = s11 * x0 + s12 * y0
    sm2 = s12 * x0 + s22 * y0
    b11, b12, b22 = s11, s12, s22
    b13, b23 = -sm1, -sm2
    b33 = x0 * sm1 + y0 * sm2 - 1.0
    q2 = b33 - b11 - b22
    q1 = (b11 + b22) * b33 - b11 * b22 - b23 * b23 + b12 * b12 - b13 * b13
    q0 = b11 * b22 * b33 - b11 * b23 * b23 - b12 * b12 * b33 + 2 * b12 * b23 * b13 - b13 * b13 * b22
    disc = q2 * q2 + 3.0 * q1
    sep = np.zeros(q2.shape[0], dtype=bool)
    ok = disc > 0
    lam = (q2[ok] + np.sqrt(disc[ok])) / 3.0
    fmax = -(lam**3) + q2[ok] * lam * lam + q1[ok] * lam + q0[ok]
    sep[ok] = (lam > 0) & (fmax > 0)
    return sep


def _ellipse_edges(vs, model, min_len):
    n = len(vs)
    if n == 0:
        return np.empty((0, 2), dtype=np.int64)
    axis = model.extras.get("axis", "full")
    major = vs.extra["major"]
    angle = vs.extra["angle"]
    if axis == "full":
        semi_a = major / 2.0
        semi_b = 0.5
    else:
        semi_a = major.astype(np.float64)
        semi_b = 1.0
    reach = semi_a
    locs = vs.locations
    tree = cKDTree(locs)

    def classify(ci, cj):
        """Vectorized screen of candidate pairs along the center line.

        Separated support intervals reject a pair outright; overlapping
        radial extents accept it (both ellipses then cover a common point
        of the center segment).  Only the band in between needs the
        polygonization predicate.
        """
        diff = locs[ci] - locs[cj]
        dist = np.sqrt((diff * diff).sum(axis=1))
        keep = dist <= reach[ci] + reach[cj]
        if min_len is not None:
            keep &= dist > min_len
        ci, cj, diff, dist = ci[keep], cj[keep], diff[keep], dist[keep]
        theta = np.arctan2(diff[:, 1], diff[:, 0])
        sure = np.zeros(ci.shape[0], dtype=bool)
        alive = np.ones(ci.shape[0], dtype=bool)
        wsum = np.zeros(ci.shape[0])
        rsum = np.zeros(ci.shape[0])
        for idx in (ci, cj):
            aa, bb = semi_a[idx], semi_b
            cph = np.cos(theta - angle[idx])
            sph = np.sin(theta - angle[idx])
            wsum += np.sqrt(aa * aa * cph * cph + bb * bb * sph * sph)
            rsum += aa * bb / np.sqrt(bb * bb * cph * cph + aa * aa * sph * sph)
        alive = dist <= wsum
        sure = alive & (dist <= rsum)
        amb = alive & ~sure
        return ci[sure], cj[sure], ci[amb], cj[amb]

    # small-small pairs via one fixed-radius pair query; cap the radius so
    # the candidate count stays near-linear under heavy axis tails
    lam_hat = n / (math.pi * vs.window.radius**2)
    r0 = max(2.0, float(np.quantile(reach, 0.99)))
    r0 = min(r0, max(2.0, 0.5 * math.sqrt(6e7 / (math.pi * n * lam_hat))))
    out_i, out_j = [], []
    amb_i, amb_j = [], []
    if min_len is None or 2 * r0 > min_len:
        pairs = tree.query_pairs(2 * r0, output_type="ndarray")
        if pairs.size:
            si, sj, ai, aj = classify(pairs[:, 0], pairs[:, 1])
            out_i.append(si)
            out_j.append(sj)
            amb_i.append(ai)
            amb_j.append(aj)
    big = np.flatnonzero(reach > r0)
    if big.size:
        # pairs of two big vertices, gathered at the larger-reach endpoint:
        # a separate tree over the (few) big vertices keeps this cheap
        tree_big = cKDTree(locs[big])
        lists = tree_big.query_ball_point(locs[big], 2.0 * reach[big])
        lens = np.array([len(l) for l in lists], dtype=np.int64)
        if lens.sum():
            ci = np.repeat(big, lens)
            cj = big[np.concatenate([np.asarray(l, dtype=np.int64) for l in lists])]
            keep = (reach[cj] < reach[ci]) | ((reach[cj] == reach[ci]) & (cj > ci))
            ci, cj = ci[keep], cj[keep]
            if ci.size:
                si, sj, ai, aj = classify(ci, cj)
                out_i.append(si)
                out_j.append(sj)
                amb_i.append(ai)
                amb_j.append(aj)
        # pairs of a big and a small vertex: any small partner lies in the
        # big ellipse dilated by r0, a slab of half-width h around the major
        # axis; cover that slab with balls so the queried area grows only
        # linearly in the axis length
        h = semi_b + r0
        rad = h * math.sqrt(2.0)
        for b in big:
            half = reach[b] + r0
            nb = int(math.ceil(half / h))
            offs = (2.0 * np.arange(nb) + 1.0) * h - half
            direction = np.array([math.cos(angle[b]), math.sin(angle[b])])
            centers = locs[b] + offs[:, None] * direction
            found = tree.query_ball_point(centers, rad)
            near = np.unique(np.concatenate([np.asarray(l, dtype=np.int64) for l in found]))
            near = near[reach[near] <= r0]
            if near.size == 0:
                continue
            si, sj, ai, aj = classify(np.full(near.shape[0], b), near)
            out_i.append(si)
            out_j.append(sj)
            amb_i.append(ai)
            amb_j.append(aj)
    if amb_i:
        ci = np.concatenate(amb_i)
        cj = np.concatenate(amb_j)
        for k0 in range(0, ci.shape[0], 500_000):
            ii = ci[k0 : k0 + 500_000]
            jj = cj[k0 : k0 + 500_000]
            bb = np.full(ii.shape[0], semi_b)
            sep = _ellipses_separated_batch(
                locs[ii], semi_a[ii], bb, angle[ii], locs[jj], semi_a[jj], bb, angle[jj]
            )
            out_i.append(ii[~sep])
            out_j.append(jj[~sep])
    edges = _stack_edges(out_i, out_j)
    if edges.shape[0]:
        # the fixed-radius and per-vertex queries can surface a pair twice
        code = edges[:, 0] * n + edges[:, 1]
        _, idx = np.unique(code, return_index=True)
        edges = edges[np.sort(idx)]
    return edges


# ---------------------------------------------------------------------------
# lattice nearest-neighbor path


def _lattice_nn_edges(vs):
    n = len(vs)
    if n == 0:
        return np.empty((0, 2), dtype=np.int64)
    d = vs.window.dimension
    sites = np.rint(vs.locations).astype(np.int64)
    half = int(np.abs(sites).max()) + 1
    side = 2 * half + 3
    code = np.zeros(n, dtype=np.int64)
    for k in range(d):
        code = code * side + (sites[:, k] + half + 1)
    order = np.argsort(code)
    sorted_code = code[order]
    out_i, out_j = [], []
    for k in range(d):
        step = side ** (d - 1 - k)
        target = code + step
        pos = np.searchsorted(sorted_code, target)
        pos = np.clip(pos, 0, n - 1)
        hit = sorted_code[pos] == target
        out_i.append(np.flatnonzero(hit))
        out_j.append(order[pos[hit]])
    return _stack_edges(out_i, out_j)


# ---------------------------------------------------------------------------
# domination-thinned path for large long-range samples


def _cell_geometry(locs, radius, d, side):
    ncell = max(1, int(math.ceil(2 * radius / side)))
    idx = np.clip(((locs + radius) / side).astype(np.int64), 0, ncell - 1)
    code = np.zeros(locs.shape[0], dtype=np.int64)
    for k in range(d):
        code = code * ncell + idx[:, k]
    return code, ncell


def _thinned_edges(vs, model, seed, min_len):
    if model.profile == "long" and model.delta is None:
        raise ConfigError("long-range profile needs delta")
    d = vs.window.dimension
    locs, marks = vs.locations, vs.marks
    n = len(vs)
    radius = vs.window.radius
    side = max(radius / 32.0, 1.0)
    code, ncell = _cell_geometry(locs, radius, d, side)
    order = np.argsort(code, kind="stable")
    sorted_code = code[order]
    occ_codes, starts = np.unique(sorted_code, return_index=True)
    counts = np.diff(np.concatenate([starts, [n]]))
    ncells = occ_codes.shape[0]
    # cell integer coordinates and per-cell minimum marks (max phi bound)
    coords = np.empty((ncells, d), dtype=np.int64)
    rem = occ_codes
    for k in range(d - 1, -1, -1):
        coords[:, k] = rem % ncell
        rem = rem // ncell
    min_marks = np.minimum.reduceat(marks[order], starts)

    keys = vertex_keys(locs, marks)
    rng = stream(seed, "thinning")
    out_i, out_j = [], []
    skipped_mass = 0.0

    chunk = max(1, int(2e6) // max(ncells, 1))
    for a0 in range(0, ncells, chunk):
        a1 = min(a0 + chunk, ncells)
        na = a1 - a0
        # pairwise box distances between cell chunks (upper triangle incl diag)
        gap = np.zeros((na, ncells))
        far = np.zeros((na, ncells))
        for k in range(d):
            dc = np.abs(coords[a0:a1, k][:, None] - coords[None, :, k]) * side
            gap += np.maximum(dc - side, 0.0) ** 2
            far += (dc + side) ** 2
        gap = np.sqrt(gap)
        far = np.sqrt(far)
        triangle = np.arange(a0, a1)[:, None] <= np.arange(ncells)[None, :]
        dmin = np.maximum(gap, min_len if min_len is not None else 0.0)
        g_lo = interpolation_kernel(
            np.minimum(min_marks[a0:a1, None], min_marks[None, :]),
            np.maximum(min_marks[a0:a1, None], min_marks[None, :]),
            model.gamma,
            model.alpha,
        )
        pbar = profile(g_lo * dmin**d, model.profile, model.delta, model.p)
        active = triangle & (pbar > 0)
        if min_len is not None:
            active &= far > min_len
        npairs = counts[a0:a1, None] * counts[None, :]
        diag = np.arange(a0, a1)[:, None] == np.arange(ncells)[None, :]
        npairs = np.where(diag, counts[a0:a1, None] * (counts[a0:a1, None] - 1) // 2, npairs)
        tiny = active & (pbar < PRUNE_PER_PAIR)
        mass = float((npairs[tiny] * pbar[tiny]).sum())
        if skipped_mass + mass <= PRUNE_TOTAL:
            skipped_mass += mass
            active &= ~tiny
        k_cand = np.zeros_like(npairs)
        k_cand[active] = rng.binomial(npairs[active], np.minimum(pbar[active], 1.0))
        sel = np.flatnonzero(k_cand.ravel() > 0)
        if sel.size == 0:
            continue
        ai = sel // ncells + a0
        bj = sel % ncells
        kk = k_cand.ravel()[sel]
        pb = pbar.ravel()[sel]
        ii, jj, blocks = _draw_candidates(rng, ai, bj, kk, counts, starts, order, diag=ai == bj)
        if ii.size == 0:
            continue
        diff = locs[ii] - locs[jj]
        dist = np.sqrt((diff * diff).sum(axis=1))
        p_act = wdrcm_prob(model, marks[ii], marks[jj], dist)
        if min_len is not None:
            p_act = np.where(dist > min_len, p_act, 0.0)
        u = pair_uniform(seed, keys[ii], keys[jj])
        hit = u * pb[blocks] < p_act
        out_i.append(ii[hit])
        out_j.append(jj[hit])
    return _stack_edges(out_i, out_j)


def _draw_candidates(rng, ai, bj, kk, counts, starts, order, diag):
    """Sample, per cell block, kk distinct uniform vertex pairs.

    Returns global vertex indices plus the block id of each candidate.
    Distinctness is enforced by deduplicating and topping up, which together
    with the binomial count reproduces i.i.d. Bernoulli(pbar) per pair.
    """
    nblocks = ai.shape[0]
    na = counts[ai]
    nb = counts[bj]
    space = np.where(diag, na * (na - 1) // 2, na * nb)
    kk = np.minimum(kk, space)
    # draw-with-replacement rounds, deduplicated through global codes, until
    # every block holds its k distinct flat pair indices
    stride = int(space.max()) + 1
    acc = np.empty(0, dtype=np.int64)
    shortfall = kk.copy()
    for _ in range(12):
        if not np.any(shortfall > 0):
            break
        block_rep = np.repeat(np.arange(nblocks), shortfall)
        flat = (rng.random(block_rep.shape[0]) * space[block_rep]).astype(np.int64)
        acc = np.unique(np.concatenate([acc, block_rep * stride + flat]))
        shortfall = kk - np.bincount(acc // stride, minlength=nblocks)
    blocks = acc // stride
    flat = acc % stride
    is_diag = diag[blocks]
    ii = np.empty(flat.shape[0], dtype=np.int64)
    jj = np.empty(flat.shape[0], dtype=np.int64)
    # triangular decode (row > col) for within-cell blocks
    if np.any(is_diag):
        f = flat[is_diag]
        row = ((1.0 + np.sqrt(1.0 + 8.0 * f)) / 2.0).astype(np.int64)
        col = f - row * (row - 1) // 2
        low = col < 0
        row[low] -= 1
        col[low] = f[low] - row[low] * (row[low] - 1) // 2
        high = col >= row
        row[high] += 1
        col[high] = f[high] - row[high] * (row[high] - 1) // 2
        base = starts[ai[blocks[is_diag]]]
        ii[is_diag] = order[base + row]
        jj[is_diag] = order[base + col]
    off = ~is_diag
    if np.any(off):
        b = blocks[off]
        ii[off] = order[starts[ai[b]] + flat[off] // nb[b]]
        jj[off] = order[starts[bj[b]] + flat[off] % nb[b]]
    return ii, jj, blocks


# ---------------------------------------------------------------------------
# dump


def dump_graph(graph: GraphSample, path):
    """Edge-list dump: one JSON header line, then 'i j' per edge."""
    header = {
        "window": {
            "kind": graph.vertices.window.kind,
            "radius": graph.vertices.window.radius,
            "dimension": graph.vertices.window.dimension,
        },
        "model": {
            "family": graph.model.family,
            "gamma": graph.model.gamma,
            "alpha": graph.model.alpha,
            "profile": graph.model.profile,
            "delta": graph.model.delta,
            "p": graph.model.p,
            "beta": graph.model.beta,
        },
        "seed": graph.seed,
        "n_vertices": len(graph.vertices),
        "n_edges": int(graph.edges.shape[0]),
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for i, j in graph.edges:
            fh.write(f"{int(i)} {int(j)}\n")
