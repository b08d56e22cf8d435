"""Windows, norms, and samplers for the vertex-generating point processes.

Continuum windows are Euclidean balls; lattice windows are sup-norm boxes
(half side ``radius``).  All samplers are pure functions of their parameters
and a 64-bit seed.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import stream
from .errors import NumericError, ParameterError

QUANTILE_TRUNCATION = 1e-4  # documented truncation level for env/worm margins


def unit_ball_volume(d: int) -> float:
    """omega_d, the volume of the d-dimensional Euclidean unit ball."""
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


@dataclass(frozen=True)
class Window:
    kind: str  # "continuum-ball" | "lattice-box"
    radius: float
    dimension: int

    def __post_init__(self):
        if self.kind not in ("continuum-ball", "lattice-box"):
            raise ParameterError(f"unknown window kind {self.kind!r}")
        if self.radius < 0:
            raise ParameterError("window radius must be nonnegative")
        if self.dimension < 1:
            raise ParameterError("dimension must be >= 1")

    @property
    def volume(self) -> float:
        if self.kind == "continuum-ball":
            return unit_ball_volume(self.dimension) * self.radius**self.dimension
        return float((2 * math.floor(self.radius) + 1) ** self.dimension)

    def norm(self, points) -> np.ndarray:
        """Distance to the origin in the window's natural norm."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if self.kind == "continuum-ball":
            return np.sqrt((pts * pts).sum(axis=1))
        return np.abs(pts).max(axis=1)


@dataclass(frozen=True)
class Vertex:
    location: np.ndarray
    mark: float
    extra: dict = field(default_factory=dict)


@dataclass
class VertexSet:
    """One realized marked point configuration inside a window."""

    window: Window
    locations: np.ndarray  # (n, d)
    marks: np.ndarray  # (n,)
    intensity: float
    seed: int
    extra: dict = field(default_factory=dict)  # per-vertex extra mark arrays
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return self.locations.shape[0]

    def vertex(self, i: int) -> Vertex:
        extra = {k: v[i] for k, v in self.extra.items()}
        return Vertex(self.locations[i], float(self.marks[i]), extra)


def _uniform_in_ball(rng, n, d, radius):
    # radial inversion: uniform direction, radius ~ U^(1/d) * R
    x = rng.standard_normal((n, d))
    norms = np.sqrt((x * x).sum(axis=1))
    norms[norms == 0] = 1.0
    u = rng.random(n)
    return x / norms[:, None] * (radius * u ** (1.0 / d))[:, None]


def sample_poisson_marked(window: Window, lam: float, seed: int) -> VertexSet:
    """Homogeneous marked Poisson process in a continuum ball window.

    Vertex count is Poisson(lam * volume); locations uniform in the ball,
    marks i.i.d. uniform(0,1) independent of locations.
    """
    if window.kind != "continuum-ball":
        raise ParameterError("sample_poisson_marked needs a continuum window")
    if lam <= 0:
        raise ParameterError("intensity must be positive")
    rng = stream(seed, "poisson-marked")
    n = rng.poisson(lam * window.volume)
    locs = _uniform_in_ball(rng, n, window.dimension, window.radius)
    marks = rng.random(n)
    return VertexSet(window, locs, marks, lam, seed)


def cox_normalizer(beta_env: float) -> float:
    """Normalizer phi with E[l_o] = 1 for the Boolean intensity field (d=2).

    E[l_o] = phi * pi * E[rho^2] with Pareto(beta_env) radii, and
    E[rho^2] = beta/(beta-2), hence phi = (beta-2)/(pi*beta).
    """
    if beta_env <= 2:
        raise ParameterError("beta_env must exceed 2 (E[rho^2] diverges)")
    return (beta_env - 2.0) / (math.pi * beta_env)


def _disk_overlap_area(dist, r1, r2):
    """Area of the intersection of two disks at center distance dist."""
    if dist >= r1 + r2:
        return 0.0
    if dist <= abs(r1 - r2):
        rm = min(r1, r2)
        return math.pi * rm * rm
    a1 = r1 * r1 * math.acos((dist * dist + r1 * r1 - r2 * r2) / (2 * dist * r1))
    a2 = r2 * r2 * math.acos((dist * dist + r2 * r2 - r1 * r1) / (2 * dist * r2))
    k = (
        (-dist + r1 + r2)
        * (dist + r1 - r2)
        * (dist - r1 + r2)
        * (dist + r1 + r2)
    )
    return a1 + a2 - 0.5 * math.sqrt(max(k, 0.0))


def sample_cox_boolean_field(
    window: Window, lam: float, beta_env: float, seed: int, margin: float | None = None
) -> VertexSet:
    """Cox process directed by a Boolean disk field (d=2).

    The environment is a unit-intensity Poisson process of disk centers with
    Pareto(beta_env) radii.  Sampling is by superposition: each environment
    disk contributes an independent Poisson(lam*phi*area(disk ∩ window))
    number of uniform points in the intersection.
    """
    if window.kind != "continuum-ball" or window.dimension != 2:
        raise ParameterError("Cox sampler is defined for d=2 ball windows")
    if lam <= 0:
        raise ParameterError("intensity must be positive")
    phi = cox_normalizer(beta_env)
    quantile_margin = QUANTILE_TRUNCATION ** (-1.0 / beta_env)
    metadata = {}
    if margin is None:
        margin = quantile_margin
    elif margin < quantile_margin:
        metadata["environment_truncation_warning"] = (
            f"margin {margin:g} below the (1-{QUANTILE_TRUNCATION:g})-quantile "
            f"{quantile_margin:g} of the radius law"
        )
    rng = stream(seed, "cox-environment")
    r_env = window.radius + margin
    n_env = rng.poisson(math.pi * r_env * r_env)
    centers = _uniform_in_ball(rng, n_env, 2, r_env)
    radii = rng.random(n_env) ** (-1.0 / beta_env)  # Pareto, support [1, inf)

    prng = stream(seed, "cox-points")
    pts = []
    center_norms = np.sqrt((centers * centers).sum(axis=1))
    for i in range(n_env):
        area = _disk_overlap_area(center_norms[i], radii[i], window.radius)
        if area <= 0.0:
            continue
        count = prng.poisson(lam * phi * area)
        if count == 0:
            continue
        # rejection from the smaller of the two disks
        if radii[i] <= window.radius:
            c0, r0 = centers[i], radii[i]
            c1, r1 = np.zeros(2), window.radius
        else:
            c0, r0 = np.zeros(2), window.radius
            c1, r1 = centers[i], radii[i]
        got = []
        need = count
        for _ in range(10000):
            cand = c0 + _uniform_in_ball(prng, max(4 * need, 16), 2, r0)
            dd = cand - c1
            ok = (dd * dd).sum(axis=1) <= r1 * r1
            acc = cand[ok]
            if acc.shape[0] >= need:
                got.append(acc[:need])
                need = 0
                break
            got.append(acc)
            need -= acc.shape[0]
        if need > 0:  # pragma: no cover - acceptance rate bounded below
            raise NumericError("rejection sampling failed in Cox sampler")
        pts.append(np.concatenate(got, axis=0))
    locs = np.concatenate(pts, axis=0) if pts else np.empty((0, 2))
    marks = prng.random(locs.shape[0])
    metadata["environment_margin"] = margin
    return VertexSet(window, locs, marks, lam, seed, metadata=metadata)


def sample_lattice_bernoulli(window: Window, lam: float, seed: int) -> VertexSet:
    """Bernoulli site percolation on the sup-norm box of half side radius."""
    if window.kind != "lattice-box":
        raise ParameterError("sample_lattice_bernoulli needs a lattice window")
    if not (0 < lam <= 1):
        raise ParameterError("retention must lie in (0, 1]")
    rng = stream(seed, "lattice-bernoulli")
    half = math.floor(window.radius)
    side = np.arange(-half, half + 1)
    grids = np.meshgrid(*([side] * window.dimension), indexing="ij")
    sites = np.stack([g.ravel() for g in grids], axis=1).astype(np.float64)
    keep = rng.random(sites.shape[0]) < lam
    locs = sites[keep]
    marks = rng.random(locs.shape[0])
    return VertexSet(window, locs, marks, lam, seed)


def _worm_margin(length_law) -> int:
    """(1 - 1e-4)-quantile of the length law; the sup-norm range of a walk
    never exceeds its length, so this bounds the reach of outside worms."""
    kind, param = length_law
    if kind == "deterministic":
        return int(param)
    if kind == "geometric":
        mean = float(param)
        if mean <= 0:
            return 0
        q = mean / (1.0 + mean)
        return int(math.ceil(math.log(QUANTILE_TRUNCATION) / math.log(q)))
    if kind == "zeta":
        probs = _zeta_pmf(float(param))
        tail = 1.0 - np.cumsum(probs)
        idx = np.searchsorted(-tail, -QUANTILE_TRUNCATION)
        return int(idx + 1)
    raise ParameterError(f"unrecognized length law {kind!r}")


def _zeta_pmf(s: float, nmax: int = 200_000) -> np.ndarray:
    """P(l = n) proportional to n^{-s}, n >= 1, truncated at a tail mass
    below 1e-12 of the support (nmax chosen accordingly for s > 2)."""
    if s <= 1:
        raise ParameterError("zeta-tail exponent must exceed 1")
    n = np.arange(1, nmax + 1, dtype=np.float64)
    w = n**-s
    return w / w.sum()


def sample_worm_vertices(window: Window, nu: float, length_law, seed: int) -> VertexSet:
    """Sites of the window visited by Poisson-seeded random-walk worms.

    Each site of a box enlarged by the documented truncation margin hosts a
    Poisson(nu) number of worms; each worm performs an independent simple
    random walk with length drawn from ``length_law`` (one of
    ("geometric", mean), ("zeta", s), ("deterministic", n)).
    """
    if window.kind != "lattice-box":
        raise ParameterError("sample_worm_vertices needs a lattice window")
    if nu <= 0:
        raise ParameterError("worm intensity must be positive")
    kind, param = length_law
    margin = _worm_margin(length_law)
    d = window.dimension
    half = math.floor(window.radius)
    big = half + margin
    n_sites = (2 * big + 1) ** d

    rng = stream(seed, "worms")
    n_worms = rng.poisson(nu * n_sites)
    starts = rng.integers(-big, big + 1, size=(n_worms, d))
    if kind == "deterministic":
        lengths = np.full(n_worms, int(param), dtype=np.int64)
    elif kind == "geometric":
        mean = float(param)
        if mean <= 0:
            lengths = np.zeros(n_worms, dtype=np.int64)
        else:
            # failures before first success, success prob 1/(1+mean)
            lengths = rng.geometric(1.0 / (1.0 + mean), size=n_worms) - 1
    elif kind == "zeta":
        pmf = _zeta_pmf(float(param))
        cdf = np.cumsum(pmf)
        lengths = np.searchsorted(cdf, rng.random(n_worms)) + 1
    else:
        raise ParameterError(f"unrecognized length law {kind!r}")

    total = int(lengths.sum())
    step_table = np.zeros((2 * d, d), dtype=np.int64)
    for k in range(d):
        step_table[2 * k, k] = 1
        step_table[2 * k + 1, k] = -1
    steps = step_table[rng.integers(0, 2 * d, size=total)]
    cum = np.cumsum(steps, axis=0)
    # segmented cumulative sums: worm w occupies start_w + cum[a..b) - cum[a-1]
    offsets = np.concatenate(([0], np.cumsum(lengths)))[:-1]
    prev = np.zeros((n_worms, d), dtype=np.int64)
    nz = offsets > 0
    prev[nz] = cum[offsets[nz] - 1]
    base = np.repeat(starts - prev, lengths, axis=0)
    visited = np.concatenate([starts, base + cum], axis=0)

    inside = np.abs(visited).max(axis=1) <= half
    visited = visited[inside]
    # deduplicate via integer encoding
    side = 2 * half + 1
    code = np.zeros(visited.shape[0], dtype=np.int64)
    for k in range(d):
        code = code * side + (visited[:, k] + half)
    code = np.unique(code)
    locs = np.empty((code.shape[0], d), dtype=np.float64)
    rem = code
    for k in range(d - 1, -1, -1):
        locs[:, k] = rem % side - half
        rem = rem // side
    mrng = stream(seed, "worm-marks")
    marks = mrng.random(locs.shape[0])
    meta = {
        "margin": margin,
        "occupation_probability": locs.shape[0] / float((2 * half + 1) ** d),
        "n_worms": int(n_worms),
    }
    return VertexSet(window, locs, marks, nu, seed, metadata=meta)


def sample_ellipse_field(
    window: Window, lam: float, gamma: float, seed: int, margin: float | None = None
) -> VertexSet:
    """Marked Poisson process for the ellipse model (d=2).

    Every vertex carries a major axis R with Pareto(2/gamma) law, realized
    deterministically from the uniform mark as R = u^{-gamma/2}, and an
    independent uniform orientation in [-pi/2, pi/2).  Outside the window
    the process is thinned exactly to vertices whose ellipse can reach the
    window (bounding radius R/2 at least the gap), sampled ring by ring, so
    heavy tails stay affordable.
    """
    if window.kind != "continuum-ball" or window.dimension != 2:
        raise ParameterError("ellipse field is defined for d=2 ball windows")
    if lam <= 0:
        raise ParameterError("intensity must be positive")
    if not (0 < gamma):
        raise ParameterError("gamma must be positive for the ellipse model")
    theta = 2.0 / gamma
    if margin is None:
        # (1 - 1e-4)-quantile of the reach R/2
        margin = 0.5 * QUANTILE_TRUNCATION ** (-1.0 / theta)
    rng = stream(seed, "ellipse-field")
    R = window.radius

    locs = [_uniform_in_ball(rng, rng.poisson(lam * math.pi * (R + 1) ** 2), 2, R + 1)]
    marks = [rng.random(locs[0].shape[0])]
    # rings (R + a, R + b]: only vertices with reach R/2 > a can matter
    a = 1.0
    while a < margin:
        b = min(2 * a, margin)
        p_keep = min(1.0, (2 * a) ** -theta)  # P(R/2 > a) = P(u < (2a)^{-2/gamma})
        area = math.pi * ((R + b) ** 2 - (R + a) ** 2)
        n = rng.poisson(lam * p_keep * area)
        ring = _uniform_in_ball(rng, int(3 * n + 30), 2, R + b)
        rn = np.sqrt((ring * ring).sum(axis=1))
        ring = ring[rn > R + a][:n]
        while ring.shape[0] < n:  # pragma: no cover - top-up is rare
            extra = _uniform_in_ball(rng, 4 * (n - ring.shape[0]) + 16, 2, R + b)
            rn = np.sqrt((extra * extra).sum(axis=1))
            ring = np.concatenate([ring, extra[rn > R + a]], axis=0)[:n]
        locs.append(ring)
        marks.append(rng.random(n) * p_keep)  # conditional law of the mark
        a = b
    locations = np.concatenate(locs, axis=0)
    mk = np.concatenate(marks)
    mk = np.clip(mk, 1e-300, None)
    angles = rng.random(locations.shape[0]) * math.pi - math.pi / 2
    extra = {"major": mk ** (-gamma / 2.0), "angle": angles}
    meta = {"margin": margin}
    return VertexSet(window, locations, mk, lam, seed, extra=extra, metadata=meta)
