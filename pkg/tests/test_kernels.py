"""Connection kernels, profiles and the ellipse adjacency predicate."""

import math

import numpy as np
import pytest

from percolab import (
    ModelSpec,
    ParameterError,
    Vertex,
    VertexSet,
    Window,
    annealed_interference_prob,
    connect_prob_interference,
    connect_prob_wdrcm,
    ellipses_intersect,
    interference_count,
    interpolation_kernel,
    profile,
    wdrcm_prob,
)


def test_interpolation_kernel_symmetry_and_values():
    rng = np.random.default_rng(0)
    u, v = rng.random(50) * 0.98 + 0.01, rng.random(50) * 0.98 + 0.01
    for gamma, alpha in [(0.0, 0.0), (0.5, 0.0), (0.3, 0.9), (0.9, 0.0)]:
        g1 = interpolation_kernel(u, v, gamma, alpha)
        g2 = interpolation_kernel(v, u, gamma, alpha)
        np.testing.assert_allclose(g1, g2, rtol=1e-14)
        oracle = np.minimum(u, v) ** gamma * np.maximum(u, v) ** alpha
        np.testing.assert_allclose(g1, oracle, rtol=1e-14)
    assert interpolation_kernel(0.2, 0.7, 0.0, 0.0) == 1.0
    with pytest.raises(ParameterError):
        interpolation_kernel(0.0, 0.5, 0.5, 0.0)
    with pytest.raises(ParameterError):
        interpolation_kernel(0.5, 1.0, 0.5, 0.0)


def test_profile_shapes():
    x = np.array([0.0, 0.5, 1.0, 2.0, 10.0])
    np.testing.assert_allclose(
        profile(x, "long", delta=2.0, p=0.7), [0.7, 0.7, 0.7, 0.7 * 0.25, 0.7 * 0.01]
    )
    np.testing.assert_allclose(profile(x, "short", p=0.3), [0.3, 0.3, 0.3, 0.0, 0.0])
    assert profile(4.0, "long", delta=3.0) == pytest.approx(4.0**-3)
    with pytest.raises(ParameterError):
        profile(x, "long", delta=1.0)
    with pytest.raises(ParameterError):
        profile(-1.0, "short")
    with pytest.raises(ParameterError):
        profile(x, "gaussian")


def test_model_spec_validation():
    with pytest.raises(ParameterError):
        ModelSpec("wdrcm-interpolation", gamma=1.0, delta=2.0)
    with pytest.raises(ParameterError):
        ModelSpec("wdrcm-interpolation", gamma=0.5, alpha=1.6, delta=2.0)
    with pytest.raises(ParameterError):
        ModelSpec("wdrcm-interpolation", profile="long")  # missing delta
    with pytest.raises(ParameterError):
        ModelSpec("no-such-family")
    m = ModelSpec("ellipses", gamma=1.5)
    assert m.vertex_process == "ellipse"
    assert ModelSpec("worm-nn", profile="short").vertex_process == "worm"
    assert ModelSpec("lattice-nn", profile="short").vertex_process == "lattice"


def test_wdrcm_prob_against_direct_formula():
    rng = np.random.default_rng(1)
    model = ModelSpec("wdrcm-interpolation", gamma=0.4, alpha=0.7, delta=2.5, p=0.8)
    u = rng.random(300) * 0.98 + 0.01
    v = rng.random(300) * 0.98 + 0.01
    dist = rng.random(300) * 10
    got = wdrcm_prob(model, u, v, dist)
    g = np.minimum(u, v) ** 0.4 * np.maximum(u, v) ** 0.7
    t = g * dist**2
    want = 0.8 * np.minimum(1.0, np.where(t > 1, t**-2.5, 1.0))
    np.testing.assert_allclose(got, want, rtol=1e-12)
    # short profile is the indicator version
    short = ModelSpec("wdrcm-interpolation", gamma=0.4, alpha=0.7, profile="short", p=0.8)
    np.testing.assert_allclose(wdrcm_prob(short, u, v, dist), np.where(t <= 1, 0.8, 0.0))


def test_connect_prob_wdrcm_single_pair():
    model = ModelSpec("wdrcm-interpolation", gamma=0.0, alpha=0.0, delta=3.0)
    w = Window("continuum-ball", 10.0, 2)
    vx = Vertex(np.array([0.0, 0.0]), 0.5)
    vy = Vertex(np.array([2.0, 0.0]), 0.9)
    # g = 1, t = dist^2 = 4, phi = 4^-3
    assert connect_prob_wdrcm(vx, vy, model) == pytest.approx(4.0**-3)
    del w
    with pytest.raises(ParameterError):
        connect_prob_wdrcm(vx, vy, ModelSpec("ellipses", gamma=1.0))


def test_interference_count_and_quenched_prob():
    w = Window("continuum-ball", 10.0, 2)
    locs = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 3.0], [5.0, 5.0]])
    marks = np.array([0.25, 0.5, 0.9, 0.99])
    vs = VertexSet(w, locs, marks, intensity=1.0, seed=0)
    vx = Vertex(locs[0], marks[0])
    # beta = 0.5: radius^d = u^-beta = 2 -> radius = sqrt(2); only (1,0) inside
    assert interference_count(vx, vs, 0.5) == 1
    assert interference_count(vx, vs, 0.0) == 1  # radius 1, (1,0) on boundary
    with pytest.raises(ParameterError):
        interference_count(vx, vs, 1.0)
    vy = Vertex(locs[1], marks[1])
    p = connect_prob_interference(vx, vy, vs, gamma=0.3, delta=2.0, beta=0.5)
    # center is vx (smaller mark); base = min(1, u^{-gamma delta} dist^{-d delta});
    # the far endpoint sits inside the interference ball and is excluded
    base = min(1.0, 0.25 ** (-0.6) * 1.0)
    assert p == pytest.approx(base)


def test_annealed_interference_prob_limits():
    # beta = 0 and tiny lam: Poisson factor -> 1, plain soft Boolean rule
    p = annealed_interference_prob(0.5, 3.0, 1e-9, gamma=0.5, delta=2.0, beta=0.0)
    assert p == pytest.approx(min(1.0, 0.5**-1.0 * 3.0**-4.0), rel=1e-6)
    # heavy environment suppresses the probability
    dense = annealed_interference_prob(0.5, 3.0, 10.0, gamma=0.5, delta=2.0, beta=0.5)
    assert dense < p
    assert annealed_interference_prob(0.5, 0.0, 1e-9, 0.5, 2.0, 0.0) == pytest.approx(
        1.0, rel=1e-6
    )


def _mc_ellipse_overlap(e1, e2, n=40000, seed=0):
    """Monte Carlo oracle: sample inside ellipse 1, test membership in 2."""
    (c1, r1, t1), (c2, r2, t2) = e1, e2
    a1, b1 = r1 / 2.0, 0.5
    a2, b2 = r2 / 2.0, 0.5
    rng = np.random.default_rng(seed)
    rad = np.sqrt(rng.random(n))
    ang = rng.random(n) * 2 * math.pi
    x, y = a1 * rad * np.cos(ang), b1 * rad * np.sin(ang)
    c, s = math.cos(t1), math.sin(t1)
    px = c1[0] + x * c - y * s
    py = c1[1] + x * s + y * c
    c, s = math.cos(t2), math.sin(t2)
    qx = ((px - c2[0]) * c + (py - c2[1]) * s) / a2
    qy = (-(px - c2[0]) * s + (py - c2[1]) * c) / b2
    return bool(np.any(qx * qx + qy * qy <= 1.0))


def test_ellipses_intersect_randomized_oracle():
    """Sampling-based cross-check of the intersection predicate.

    The membership sampler can only certify intersections (one-sided), so a
    sampled hit must imply a predicate hit; disagreements the other way are
    checked with a denser boundary scan.
    """
    rng = np.random.default_rng(2024)
    n_checked = 0
    for k in range(1200):
        r1 = 1.0 + rng.pareto(2.0)
        r2 = 1.0 + rng.pareto(2.0)
        c1 = rng.uniform(-3, 3, size=2)
        c2 = rng.uniform(-3, 3, size=2)
        t1, t2 = rng.uniform(-math.pi / 2, math.pi / 2, size=2)
        e1 = (c1, min(r1, 30.0), t1)
        e2 = (c2, min(r2, 30.0), t2)
        got = ellipses_intersect(e1, e2)
        hit = _mc_ellipse_overlap(e1, e2, seed=k) or _mc_ellipse_overlap(
            e2, e1, seed=k + 1
        )
        if hit:
            assert got, (e1, e2)
        elif got:
            # predicate says intersect but sampling missed it: verify with a
            # dense boundary scan of ellipse 1 against the quadratic of 2
            from percolab.kernels import _ellipse_boundary, _ellipse_quadratic

            poly = _ellipse_boundary(e1[0], e1[1] / 2.0, 0.5, e1[2], 400000)
            q = _ellipse_quadratic(poly, e2[0], e2[1] / 2.0, 0.5, e2[2])
            poly2 = _ellipse_boundary(e2[0], e2[1] / 2.0, 0.5, e2[2], 400000)
            q2 = _ellipse_quadratic(poly2, e1[0], e1[1] / 2.0, 0.5, e1[2])
            assert min(q.min(), q2.min()) <= 1.0 + 5e-3, (e1, e2)
        n_checked += 1
    assert n_checked >= 1000


def test_ellipses_intersect_exact_cases():
    # identical circles of radius 1/2 at distance 1.0: tangent -> intersect
    z = np.zeros(2)
    assert ellipses_intersect((z, 1.0, 0.0), (np.array([0.999, 0.0]), 1.0, 0.0))
    assert not ellipses_intersect((z, 1.0, 0.0), (np.array([1.5, 0.0]), 1.0, 0.0))
    # long thin ellipse crossing a unit circle perpendicularly
    assert ellipses_intersect((z, 20.0, 0.0), (np.array([5.0, 0.2]), 1.0, math.pi / 2))
    # same but shifted off the major axis beyond the half-width
    assert not ellipses_intersect((z, 20.0, 0.0), (np.array([5.0, 1.2]), 1.0, math.pi / 2))
    # containment: tiny ellipse deep inside a huge one
    assert ellipses_intersect((z, 40.0, 0.3), (np.array([1.0, 0.0]), 1.0, 1.0))
    with pytest.raises(ParameterError):
        ellipses_intersect((z, 1.0, 0.0), (z, 1.0, 0.0), tol=0.0)
    # semi-axis convention doubles every length
    assert ellipses_intersect((z, 1.0, 0.0), (np.array([1.9, 0.0]), 1.0, 0.0), axis="semi")
