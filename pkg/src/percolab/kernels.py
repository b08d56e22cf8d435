"""Connection-probability ingredients for every model family.

The weight-dependent random connection rule is phi(u, v, t) = rho(g(u,v)*t)
with t the d-th power of the distance, g the interpolation kernel and rho a
long-range (polynomial, exponent delta) or short-range (indicator) profile.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .geometry import Vertex, VertexSet, unit_ball_volume

FAMILIES = (
    "wdrcm-interpolation",
    "soft-boolean-interference",
    "ellipses",
    "worm-nn",
    "lattice-nn",
)

_LATTICE_FAMILIES = ("worm-nn", "lattice-nn")


@dataclass(frozen=True)
class ModelSpec:
    """Tagged model family plus its parameters.

    delta = infinity is represented by profile="short", never by a float inf.
    The ellipse family reuses gamma as the Pareto tail parameter 2/gamma of
    the major axis.  vertex_process selects the point process feeding the
    graph ("poisson", "cox", "lattice", "worm", "ellipse").
    """

    family: str
    gamma: float = 0.0
    alpha: float = 0.0
    profile: str = "long"  # "long" | "short"
    delta: float | None = None
    p: float = 1.0
    beta: float = 0.0  # interference exponent
    dimension: int = 2
    vertex_process: str = "poisson"
    extras: dict = field(default_factory=dict)  # nu, length_law, beta_env, axis

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown family {self.family!r}")
        if self.family == "ellipses":
            if self.gamma <= 0:
                raise ParameterError("ellipse model needs gamma > 0")
        elif self.family not in _LATTICE_FAMILIES:
            if not (0 <= self.gamma < 1):
                raise ParameterError("gamma must lie in [0, 1)")
            if not (0 <= self.alpha < 2 - self.gamma):
                raise ParameterError("alpha must lie in [0, 2 - gamma)")
        if self.profile not in ("long", "short"):
            raise ParameterError(f"unknown profile {self.profile!r}")
        if self.profile == "long":
            if self.family in ("wdrcm-interpolation", "soft-boolean-interference"):
                if self.delta is None or self.delta <= 1:
                    raise ParameterError(
                        "long-range profile needs delta > 1 (non-integrable otherwise)"
                    )
        if not (0 <= self.p <= 1):
            raise ParameterError("p must lie in [0, 1]")
        if not (0 <= self.beta < 1):
            raise ParameterError("interference exponent beta must lie in [0, 1)")
        if self.family == "soft-boolean-interference":
            if self.profile != "long":
                raise ParameterError("interference family uses the long-range profile")
            if self.gamma >= 1:
                raise ParameterError("interference family needs gamma < 1")
        if self.dimension < 1:
            raise ParameterError("dimension must be >= 1")
        forced = {"ellipses": "ellipse", "worm-nn": "worm", "lattice-nn": "lattice"}.get(
            self.family
        )
        if forced is not None and self.vertex_process == "poisson":
            object.__setattr__(self, "vertex_process", forced)


def interpolation_kernel(u, v, gamma: float, alpha: float):
    """g(u, v) = (u ^ v)^gamma * (u v v)^alpha, symmetric in the marks."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if np.any(u <= 0) or np.any(u >= 1) or np.any(v <= 0) or np.any(v >= 1):
        raise ParameterError("marks must lie in the open interval (0, 1)")
    lo = np.minimum(u, v)
    hi = np.maximum(u, v)
    out = lo**gamma * hi**alpha
    return float(out) if out.ndim == 0 else out


def profile(x, kind: str, delta: float | None = None, p: float = 1.0):
    """Profile rho: long-range p*(1 ^ x^-delta) or short-range p*1{x <= 1}."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise ParameterError("profile argument must be nonnegative")
    if kind == "long":
        if delta is None or delta <= 1:
            raise ParameterError("long-range profile needs delta > 1")
        with np.errstate(divide="ignore"):
            out = p * np.minimum(1.0, np.where(x > 0, x, 1.0) ** (-delta))
        out = np.where(x <= 1.0, p, out)
    elif kind == "short":
        out = np.where(x <= 1.0, p, 0.0)
    else:
        raise ParameterError(f"unknown profile kind {kind!r}")
    return float(out) if out.ndim == 0 else out


def wdrcm_prob(model: ModelSpec, u, v, dist):
    """Vectorized phi(u, v, dist^d) for the interpolation family."""
    d = model.dimension
    g = interpolation_kernel(u, v, model.gamma, model.alpha)
    t = np.asarray(dist, dtype=np.float64) ** d
    return profile(g * t, model.profile, model.delta, model.p)


def connect_prob_wdrcm(vx: Vertex, vy: Vertex, model: ModelSpec) -> float:
    """Connection probability of a single vertex pair under the WDRCM rule."""
    if model.family != "wdrcm-interpolation":
        raise ParameterError("connect_prob_wdrcm needs the wdrcm-interpolation family")
    dist = float(np.sqrt(((vx.location - vy.location) ** 2).sum()))
    return float(wdrcm_prob(model, vx.mark, vy.mark, dist))


def interference_count(vx: Vertex, vertices: VertexSet, beta: float) -> int:
    """Number of other vertices inside x's sphere of interference,
    i.e. with |x - y|^d <= u_x^{-beta}."""
    if not (0 <= beta < 1):
        raise ParameterError("beta must lie in [0, 1)")
    if len(vertices) == 0:
        return 0
    d = vertices.window.dimension
    diff = vertices.locations - vx.location
    dist2 = (diff * diff).sum(axis=1)
    radius2 = float(vx.mark) ** (-2.0 * beta / d)
    inside = dist2 <= radius2
    # exclude the query vertex itself if present in the set
    self_hits = (dist2 == 0.0) & (vertices.marks == vx.mark)
    return int(inside.sum() - self_hits.sum())


def connect_prob_interference(
    vx: Vertex, vy: Vertex, vertices: VertexSet, gamma: float, delta: float, beta: float
) -> float:
    """Quenched soft Boolean rule with local interference.

    The vertex with the smaller mark acts as the center; ties take the
    u_x >= u_y branch (deterministic tie rule).  Both end vertices are
    excluded from the interference count.
    """
    center = vx if vx.mark < vy.mark else vy
    d = vertices.window.dimension
    dist = float(np.sqrt(((vx.location - vy.location) ** 2).sum()))
    base = min(1.0, center.mark ** (-gamma * delta) * dist ** (-d * delta)) if dist > 0 else 1.0
    n = interference_count(center, vertices, beta)
    # the far endpoint is excluded from the count as well
    if dist**d <= center.mark**-beta:
        n -= 1
    return base / (1.0 + max(n, 0))


def annealed_interference_prob(u, dist, lam, gamma, delta, beta, d=2):
    """Environment average of the interference rule for the smaller mark u:
    (1 - e^-m)/m * (1 ^ u^{-gamma delta} dist^{-d delta}), m = lam*omega_d*u^-beta."""
    u = np.asarray(u, dtype=np.float64)
    dist = np.asarray(dist, dtype=np.float64)
    m = lam * unit_ball_volume(d) * u**-beta
    inv_pois = np.where(m > 1e-12, -np.expm1(-m) / np.where(m > 0, m, 1.0), 1.0 - m / 2)
    with np.errstate(divide="ignore"):
        base = np.minimum(1.0, u ** (-gamma * delta) * np.where(dist > 0, dist, 1.0) ** (-d * delta))
    base = np.where(dist == 0, 1.0, base)
    out = inv_pois * base
    return float(out) if out.ndim == 0 else out


def _ellipse_semi_axes(R: float, axis: str):
    if axis == "full":
        return R / 2.0, 0.5
    if axis == "semi":
        return float(R), 1.0
    raise ParameterError(f"unknown axis convention {axis!r}")


def _ellipse_quadratic(points, center, a, b, angle):
    """(x'/a)^2 + (y'/b)^2 in the ellipse frame; <= 1 means inside."""
    pts = np.atleast_2d(points) - np.asarray(center, dtype=np.float64)
    c, s = math.cos(angle), math.sin(angle)
    qx = pts[:, 0] * c + pts[:, 1] * s
    qy = -pts[:, 0] * s + pts[:, 1] * c
    return (qx / a) ** 2 + (qy / b) ** 2


def _ellipse_boundary(center, a, b, angle, n):
    theta = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    x = a * np.cos(theta)
    y = b * np.sin(theta)
    c, s = math.cos(angle), math.sin(angle)
    return np.stack(
        [center[0] + x * c - y * s, center[1] + x * s + y * c], axis=1
    )


def _polygon_hits_ellipse(poly, center, a, b, angle):
    """Whether a closed polygon touches an elliptical region.

    Tested segment-wise in the frame where the ellipse is the unit circle,
    so thin ellipses skewered between two polygon vertices are still caught.
    """
    pts = poly - np.asarray(center, dtype=np.float64)
    c, s = math.cos(angle), math.sin(angle)
    ux = (pts[:, 0] * c + pts[:, 1] * s) / a
    uy = (-pts[:, 0] * s + pts[:, 1] * c) / b
    vx = np.roll(ux, -1) - ux
    vy = np.roll(uy, -1) - uy
    vv = vx * vx + vy * vy
    t = np.where(vv > 0.0, -(ux * vx + uy * vy) / np.where(vv > 0.0, vv, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    nx = ux + t * vx
    ny = uy + t * vy
    return bool(np.any(nx * nx + ny * ny <= 1.0))


def ellipses_intersect(e1, e2, tol: float = 1e-3, axis: str = "full") -> bool:
    """Whether two closed elliptical regions intersect.

    Each ellipse is (center, R, orientation) with minor axis 1 and major
    axis R (full-axis convention by default; axis="semi" treats the inputs
    as semi-axes).  Decision by bounding-circle and containment pre-checks
    followed by adaptive boundary polygonization: the segment count doubles
    from 64 until the verdict is stable and the polygonization error
    (sagitta) is below tol.
    """
    if tol <= 0:
        raise ParameterError("tol must be positive")
    (c1, r1, ang1), (c2, r2, ang2) = e1, e2
    c1 = np.asarray(c1, dtype=np.float64)
    c2 = np.asarray(c2, dtype=np.float64)
    a1, b1 = _ellipse_semi_axes(r1, axis)
    a2, b2 = _ellipse_semi_axes(r2, axis)
    gap = float(np.sqrt(((c1 - c2) ** 2).sum()))
    if gap > a1 + a2:
        return False
    if gap <= b1 + b2:
        return True
    if _ellipse_quadratic(c2[None, :], c1, a1, b1, ang1)[0] <= 1.0:
        return True
    if _ellipse_quadratic(c1[None, :], c2, a2, b2, ang2)[0] <= 1.0:
        return True

    amax = max(a1, a2)
    decision = None
    n = 64
    while True:
        hit = bool(
            _polygon_hits_ellipse(_ellipse_boundary(c1, a1, b1, ang1, n), c2, a2, b2, ang2)
            or _polygon_hits_ellipse(_ellipse_boundary(c2, a2, b2, ang2, n), c1, a1, b1, ang1)
        )
        sagitta = amax * (2 * math.pi / n) ** 2 / 8.0
        if decision is not None and hit == decision and sagitta <= tol:
            return hit
        if hit and decision is True:
            return True
        decision = hit
        n *= 2
        if n > 1 << 17:  # resolution cap; boundary-tangent cases only
            return hit


def ellipse_edge(vx: Vertex, vy: Vertex, model: ModelSpec, tol: float = 1e-3) -> bool:
    """Deterministic adjacency rule of the ellipse family."""
    axis = model.extras.get("axis", "full")
    e1 = (vx.location, vx.extra["major"], vx.extra["angle"])
    e2 = (vy.location, vy.extra["major"], vy.extra["angle"])
    return ellipses_intersect(e1, e2, tol=tol, axis=axis)
