"""Seeded Monte Carlo estimation of event probabilities and decay slopes.

Every trial is an independent pipeline (sample vertices -> build graph ->
evaluate event) driven by a per-trial substream hashed from the master
seed, so estimates do not depend on how trials are partitioned over
workers.  A variance-reduced conditional estimator is provided for the
long-edge event of families with conditionally independent edges.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from ._rng import _tag_int, stream
from .errors import ConfigError, ParameterError, ResourceError
from .events import annulus_crossing, local_annulus_crossing, long_edge_present
from .geometry import (
    Window,
    sample_cox_boolean_field,
    sample_ellipse_field,
    sample_lattice_bernoulli,
    sample_poisson_marked,
    sample_worm_vertices,
    unit_ball_volume,
)
from .graph import build_graph
from .kernels import ModelSpec, interpolation_kernel

VERTEX_CAP = 2_000_000

CSV_COLUMNS = [
    "family",
    "gamma",
    "alpha",
    "delta_or_inf",
    "p",
    "beta",
    "lambda",
    "r",
    "kappa",
    "trials",
    "successes",
    "p_hat",
    "stderr",
    "estimator",
    "seed",
]


@dataclass
class Estimate:
    """One estimated event probability with its provenance."""

    model: ModelSpec
    event: str  # "E" | "G" | "L"
    lam: float
    r: float
    kappa: float
    trials: int
    successes: int
    p_hat: float
    stderr: float
    estimator: str
    seed: int
    metadata: dict = field(default_factory=dict)

    def row(self):
        m = self.model
        return {
            "family": m.family,
            "gamma": m.gamma,
            "alpha": m.alpha,
            "delta_or_inf": "inf" if m.profile == "short" or m.delta is None else _fmt(m.delta),
            "p": _fmt(m.p),
            "beta": _fmt(m.beta),
            "lambda": _fmt(self.lam),
            "r": _fmt(self.r),
            "kappa": _fmt(self.kappa),
            "trials": self.trials,
            "successes": self.successes,
            "p_hat": _fmt(self.p_hat),
            "stderr": _fmt(self.stderr),
            "estimator": self.estimator,
            "seed": self.seed,
        }


def _fmt(x):
    if x is None:
        return ""
    return format(float(x), ".12g")


def write_estimates_csv(estimates, path):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for est in estimates:
            writer.writerow(est.row())


def estimates_json(estimates):
    out = []
    for est in estimates:
        row = est.row()
        row["event"] = est.event
        row["metadata"] = est.metadata
        out.append(row)
    return out


def _trial_seed(seed, trial):
    return _tag_int(f"trial:{seed}:{trial}")


def _window_for(model: ModelSpec, r: float, kappa: float) -> Window:
    if model.vertex_process in ("lattice", "worm"):
        return Window("lattice-box", kappa * r, model.dimension)
    return Window("continuum-ball", kappa * r, model.dimension)


def _mean_worm_length(length_law):
    kind, param = length_law
    if kind == "deterministic":
        return float(param)
    if kind == "geometric":
        return float(param)
    if kind == "zeta":
        from .geometry import _zeta_pmf

        pmf = _zeta_pmf(float(param))
        return float((pmf * np.arange(1, pmf.shape[0] + 1)).sum())
    raise ParameterError(f"unrecognized length law {kind!r}")


def projected_vertex_count(model: ModelSpec, lam: float, window: Window) -> float:
    """Expected number of vertices before sampling (memory-budget check)."""
    if model.vertex_process == "lattice":
        return lam * window.volume
    if model.vertex_process == "worm":
        law = model.extras.get("length_law", ("geometric", 2.0))
        nu = model.extras.get("nu", lam)
        return min(window.volume, nu * window.volume * (1.0 + _mean_worm_length(law)))
    return lam * window.volume


def _sample_vertices(model: ModelSpec, lam: float, window: Window, seed: int):
    vp = model.vertex_process
    if vp == "poisson":
        return sample_poisson_marked(window, lam, seed)
    if vp == "cox":
        beta_env = model.extras.get("beta_env")
        if beta_env is None:
            raise ConfigError("cox vertex process needs extras['beta_env']")
        return sample_cox_boolean_field(window, lam, beta_env, seed)
    if vp == "lattice":
        return sample_lattice_bernoulli(window, lam, seed)
    if vp == "worm":
        law = model.extras.get("length_law", ("geometric", 2.0))
        nu = model.extras.get("nu", lam)
        return sample_worm_vertices(window, nu, law, seed)
    if vp == "ellipse":
        return sample_ellipse_field(window, lam, model.gamma, seed)
    raise ConfigError(f"unknown vertex process {vp!r}")


def _binomial_stderr(p_hat, trials):
    return math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / trials)


def estimate_event(
    model: ModelSpec,
    lam: float,
    event: str,
    r: float,
    trials: int,
    seed: int,
    kappa: float | None = None,
    c: float = 1.0,
    center=None,
    vertex_cap: int = VERTEX_CAP,
) -> Estimate:
    """Direct Monte Carlo estimate of P(E(r)), P(G(x,r)) or P(L(r,c)).

    Each trial samples the vertex process in a window of radius kappa*r,
    realizes the graph and evaluates the event indicator.
    """
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    if event not in ("E", "G", "L"):
        raise ParameterError("event must be one of E, G, L")
    if r <= 0:
        raise ParameterError("r must be positive")
    if c <= 0:
        raise ParameterError("c must be positive")
    if kappa is None:
        kappa = 8.0 if event == "L" else 4.0
    if kappa < 4:
        raise ParameterError("window factor kappa must be >= 4")
    window = _window_for(model, r, kappa)
    projected = projected_vertex_count(model, lam, window)
    if projected > vertex_cap:
        raise ResourceError(
            f"projected vertex count {projected:.3g} exceeds the cap {vertex_cap}"
        )
    if center is None:
        center = np.zeros(model.dimension)
    min_len = c * r if event == "L" else None

    successes = 0
    for t in range(trials):
        tseed = _trial_seed(seed, t)
        vs = _sample_vertices(model, lam, window, tseed)
        graph = build_graph(vs, model, tseed, min_edge_length=min_len)
        if event == "E":
            hit = annulus_crossing(graph, r)
        elif event == "G":
            hit = local_annulus_crossing(graph, center, r)
        else:
            hit = long_edge_present(graph, r, c)
        successes += int(hit)
    p_hat = successes / trials
    meta = {"c": c} if event == "L" else {}
    if successes == 0:
        meta["p_upper_95"] = 3.0 / trials  # rule of three
    label = f"direct-L(c={c:g})" if event == "L" else f"direct-{event}"
    return Estimate(
        model,
        event,
        lam,
        r,
        kappa,
        trials,
        successes,
        p_hat,
        _binomial_stderr(p_hat, trials),
        label,
        seed,
        meta,
    )


# ---------------------------------------------------------------------------
# conditional long-edge estimator


@njit(cache=True, fastmath=True)
def _inin_log_noedge(locs, marks, t0, gamma, alpha, delta, p, short, pref, lam_omega, beta, dim):
    """Sum of log(1 - phi) over inside-inside pairs farther than t0^(1/d)."""
    n = locs.shape[0]
    acc = 0.0
    t0sq = t0 ** (2.0 / dim)  # squared-distance threshold
    planar = dim == 2.0
    ag = gamma + alpha
    # short-range: g*t >= w^(gamma+alpha) * t0, so marks above wcut never connect
    wcut = 2.0
    if short and t0 > 1.0:
        wcut = 0.0 if ag == 0.0 else t0 ** (-1.0 / ag)
    idelta = int(delta)
    int_delta = (not short) and delta == idelta and 1 <= idelta <= 6
    for i in range(n):
        for j in range(i + 1, n):
            s = 0.0
            for k in range(locs.shape[1]):
                dd = locs[i, k] - locs[j, k]
                s += dd * dd
            if s <= t0sq:
                continue
            u = marks[i]
            v = marks[j]
            w = u if u < v else v
            if short and w > wcut:
                continue
            hi = v if u < v else u
            t = s if planar else s ** (dim / 2.0)
            g = 1.0
            if gamma != 0.0:
                g *= w**gamma
            if alpha != 0.0:
                g *= hi**alpha
            x = g * t
            if x <= 1.0:
                phi = p
            elif short:
                phi = 0.0
                continue
            elif int_delta:
                y = 1.0 / x
                phi = p
                for _ in range(idelta):
                    phi *= y
            else:
                phi = p * x**-delta
            if pref and phi > 0.0:
                m = lam_omega * w**-beta
                if m > 1e-12:
                    phi *= (1.0 - math.exp(-m)) / m
                else:
                    phi *= 1.0 - m / 2.0
            if phi >= 1.0:
                return -np.inf
            if phi < 1e-5:
                # |log1p(-phi) + phi + phi^2/2| < phi^3/3; negligible here
                acc += -phi - 0.5 * phi * phi
            else:
                acc += math.log1p(-phi)
    return acc


@njit(cache=True, fastmath=True)
def _inin_log_noedge_subset(
    locs, marks, idx, t0, gamma, alpha, delta, p, pref, lam_omega, beta, dim, wcut
):
    """Short-profile pair sum restricted to vertices whose mark can still
    connect beyond the length cut; idx holds exactly those vertices."""
    n = locs.shape[0]
    acc = 0.0
    t0sq = t0 ** (2.0 / dim)
    planar = dim == 2.0
    for a in range(idx.shape[0]):
        i = idx[a]
        u = marks[i]
        for j in range(n):
            if j == i:
                continue
            v = marks[j]
            if v <= wcut and j < i:
                continue  # both ends are candidates; count the pair once
            s = 0.0
            for k in range(locs.shape[1]):
                dd = locs[i, k] - locs[j, k]
                s += dd * dd
            if s <= t0sq:
                continue
            w = u if u < v else v
            hi = v if u < v else u
            t = s if planar else s ** (dim / 2.0)
            g = 1.0
            if gamma != 0.0:
                g *= w**gamma
            if alpha != 0.0:
                g *= hi**alpha
            if g * t > 1.0:
                continue
            phi = p
            if pref:
                m = lam_omega * w**-beta
                if m > 1e-12:
                    phi *= (1.0 - math.exp(-m)) / m
                else:
                    phi *= 1.0 - m / 2.0
            if phi >= 1.0:
                return -np.inf
            acc += math.log1p(-phi)
    return acc


@njit(cache=True, fastmath=True)
def _inin_log_noedge_powlaw(xs, ys, t0sq, p, c1, c2, c3, c4, c5, c6):
    """Mark-free planar power-law pair sum, phi = p * s^(-delta) beyond the
    squared cut t0sq, with the exponent one-hot encoded in c1..c6.

    Manually unrolled four-wide so the inner loop vectorises; callers must
    guarantee p * t0sq**(-delta) is small enough for the quadratic log(1-phi)
    expansion (error below phi^3/3 per pair)."""
    n = xs.shape[0]
    acc0 = 0.0
    acc1 = 0.0
    acc2 = 0.0
    acc3 = 0.0
    inf = np.inf
    for i in range(n):
        xi = xs[i]
        yi = ys[i]
        j = i + 1
        m = j + ((n - j) // 4) * 4
        while j < m:
            dxa = xi - xs[j]
            dya = yi - ys[j]
            sa = dxa * dxa + dya * dya
            dxb = xi - xs[j + 1]
            dyb = yi - ys[j + 1]
            sb = dxb * dxb + dyb * dyb
            dxc = xi - xs[j + 2]
            dyc = yi - ys[j + 2]
            sc = dxc * dxc + dyc * dyc
            dxd = xi - xs[j + 3]
            dyd = yi - ys[j + 3]
            sd = dxd * dxd + dyd * dyd
            ta = sa if sa > t0sq else inf
            tb = sb if sb > t0sq else inf
            tc = sc if sc > t0sq else inf
            td = sd if sd > t0sq else inf
            ya = 1.0 / ta
            yb = 1.0 / tb
            yc = 1.0 / tc
            yd = 1.0 / td
            y2a = ya * ya
            y3a = y2a * ya
            y4a = y2a * y2a
            y5a = y3a * y2a
            y6a = y3a * y3a
            y2b = yb * yb
            y3b = y2b * yb
            y4b = y2b * y2b
            y5b = y3b * y2b
            y6b = y3b * y3b
            y2c = yc * yc
            y3c = y2c * yc
            y4c = y2c * y2c
            y5c = y3c * y2c
            y6c = y3c * y3c
            y2d = yd * yd
            y3d = y2d * yd
            y4d = y2d * y2d
            y5d = y3d * y2d
            y6d = y3d * y3d
            pa = p * (c1 * ya + c2 * y2a + c3 * y3a + c4 * y4a + c5 * y5a + c6 * y6a)
            pb = p * (c1 * yb + c2 * y2b + c3 * y3b + c4 * y4b + c5 * y5b + c6 * y6b)
            pc = p * (c1 * yc + c2 * y2c + c3 * y3c + c4 * y4c + c5 * y5c + c6 * y6c)
            pd = p * (c1 * yd + c2 * y2d + c3 * y3d + c4 * y4d + c5 * y5d + c6 * y6d)
            acc0 += pa + 0.5 * pa * pa
            acc1 += pb + 0.5 * pb * pb
            acc2 += pc + 0.5 * pc * pc
            acc3 += pd + 0.5 * pd * pd
            j += 4
        while j < n:
            dx = xi - xs[j]
            dy = yi - ys[j]
            s = dx * dx + dy * dy
            if s > t0sq:
                y = 1.0 / s
                y2 = y * y
                y3 = y2 * y
                y4 = y2 * y2
                y5 = y3 * y2
                y6 = y3 * y3
                phi = p * (c1 * y + c2 * y2 + c3 * y3 + c4 * y4 + c5 * y5 + c6 * y6)
                acc0 += phi + 0.5 * phi * phi
            j += 1
    return -(acc0 + acc1 + acc2 + acc3)


def _log_noedge(locs, marks, t0, gamma, alpha, delta, p, short, pref, lam_omega, beta, dim):
    """Dispatch the inside-inside pair sum to the fastest applicable kernel."""
    n = locs.shape[0]
    ag = gamma + alpha
    if short and t0 > 1.0 and ag > 0.0:
        # only vertices with a small enough mark can reach past the cut
        wcut = t0 ** (-1.0 / ag)
        idx = np.flatnonzero(marks <= wcut)
        if idx.size == 0:
            return 0.0
        if idx.size * 8 < n:
            return _inin_log_noedge_subset(
                locs, marks, idx, t0, gamma, alpha, delta, p, pref, lam_omega, beta, dim, wcut
            )
    if not short and not pref and gamma == 0.0 and alpha == 0.0 and dim == 2.0:
        idelta = int(delta)
        if delta == idelta and 1 <= idelta <= 6 and p * t0 ** (-float(idelta)) <= 1e-5:
            coef = [0.0] * 6
            coef[idelta - 1] = 1.0
            return _inin_log_noedge_powlaw(
                np.ascontiguousarray(locs[:, 0]),
                np.ascontiguousarray(locs[:, 1]),
                t0,
                p,
                *coef,
            )
    return _inin_log_noedge(
        locs, marks, t0, gamma, alpha, delta, p, short, pref, lam_omega, beta, dim
    )


def _proposal_segments(u, t0, gamma, alpha, delta, p, short):
    """Per-anchor piecewise-power envelope of the tail kernel integral.

    Each anchor mark u gets up to four v-segments on which the envelope is
    coef * v^(-expo); returns (v0, v1, coef, expo) arrays of shape (n, 4)
    plus the per-segment masses.
    """
    n = u.shape[0]
    v0 = np.zeros((n, 4))
    v1 = np.zeros((n, 4))
    coef = np.zeros((n, 4))
    expo = np.zeros((n, 4))
    D = p if short else p * delta / (delta - 1.0)
    logu = np.log(u)
    logt0 = math.log(t0)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        # branch A: v < u, kernel g = v^gamma * u^alpha
        if gamma > 0:
            vc1 = np.exp(np.minimum((-logt0 - alpha * logu) / gamma, 0.0))
            a_end = np.minimum(u, vc1)
            v1[:, 0] = a_end
            coef[:, 0] = D * u**-alpha
            expo[:, 0] = gamma
            if not short:
                v0[:, 1] = a_end
                v1[:, 1] = u
                coef[:, 1] = D * t0 ** (1.0 - delta) * u ** (-alpha * delta)
                expo[:, 1] = gamma * delta
        else:
            inside = u**alpha * t0 <= 1.0
            v1[:, 0] = u
            low = D * u**-alpha
            high = 0.0 if short else D * t0 ** (1.0 - delta) * u ** (-alpha * delta)
            coef[:, 0] = np.where(inside, low, high)
        # branch B: v > u, kernel g = u^gamma * v^alpha
        if alpha > 0:
            vc2 = np.exp(np.minimum((-logt0 - gamma * logu) / alpha, 0.0))
            b_split = np.clip(vc2, u, 1.0)
            v0[:, 2] = u
            v1[:, 2] = b_split
            coef[:, 2] = D * u**-gamma
            expo[:, 2] = alpha
            if not short:
                v0[:, 3] = b_split
                v1[:, 3] = 1.0
                coef[:, 3] = D * t0 ** (1.0 - delta) * u ** (-gamma * delta)
                expo[:, 3] = alpha * delta
        else:
            inside = u**gamma * t0 <= 1.0
            v0[:, 2] = u
            v1[:, 2] = 1.0
            low = D * u**-gamma
            high = 0.0 if short else D * t0 ** (1.0 - delta) * u ** (-gamma * delta)
            coef[:, 2] = np.where(inside, low, high)

        mass = np.zeros((n, 4))
        ne = np.abs(expo - 1.0) > 1e-12
        e1 = 1.0 - expo
        safe_v0 = np.where(v0 > 0, v0, 1.0)
        pw0 = np.where(v0 > 0, safe_v0**e1, np.where(e1 > 0, 0.0, np.inf))
        mass = np.where(ne, coef * (v1**e1 - pw0) / e1, coef * np.log(v1 / safe_v0))
    mass = np.where((v1 > v0) & np.isfinite(mass) & (mass > 0), mass, 0.0)
    return v0, v1, coef, expo, mass


def _sample_v(rng, v0, v1, expo):
    """Inverse-CDF sample from density proportional to v^-expo on [v0, v1]."""
    u = rng.random(v0.shape[0])
    e1 = 1.0 - expo
    out = np.empty(v0.shape[0])
    ne = np.abs(e1) > 1e-12
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        lo_p = np.where(v0 > 0, v0 ** e1[...], 0.0)
        out[ne] = (lo_p[ne] + u[ne] * (v1[ne] ** e1[ne] - lo_p[ne])) ** (1.0 / e1[ne])
        le = ~ne
        out[le] = v0[le] * (v1[le] / v0[le]) ** u[le]
    return out


def _sample_t(rng, g, t0, delta, short):
    """Sample t > t0 from the normalized tail of the profile rho(g*t)."""
    K = g.shape[0]
    out = np.empty(K)
    u2 = rng.random(K)
    if short:
        out = t0 + u2 * np.maximum(1.0 / g - t0, 0.0)
        return out
    inv_g = 1.0 / g
    pareto_from_t0 = g * t0 >= 1.0
    out[pareto_from_t0] = t0 * u2[pareto_from_t0] ** (-1.0 / (delta - 1.0))
    rest = ~pareto_from_t0
    if np.any(rest):
        mass_u = inv_g[rest] - t0
        mass_p = inv_g[rest] / (delta - 1.0)
        pick_u = rng.random(rest.sum()) < mass_u / (mass_u + mass_p)
        tt = np.empty(rest.sum())
        tt[pick_u] = t0 + u2[rest][pick_u] * mass_u[pick_u]
        tt[~pick_u] = inv_g[rest][~pick_u] * u2[rest][~pick_u] ** (-1.0 / (delta - 1.0))
        out[rest] = tt
    return out


def _phi_matrix(g, t, delta, p, short):
    with np.errstate(over="ignore"):
        x = g * t
        if short:
            return np.where(x <= 1.0, p, 0.0)
        return np.where(x <= 1.0, p, p * np.where(x > 0, x, 1.0) ** -delta)


def _tail_integral(g, t0, delta, p, short):
    """T(g) = integral over t > t0 of rho(g*t)."""
    with np.errstate(over="ignore", divide="ignore"):
        if short:
            return p * np.maximum(1.0 / g - t0, 0.0)
        capped = g * t0 >= 1.0
        return np.where(
            capped,
            p * g**-delta * t0 ** (1.0 - delta) / (delta - 1.0),
            p * (delta / (delta - 1.0) / g - t0),
        )


def _envelope(g, t0, delta, p, short):
    """Piecewise-power upper bound of the tail integral (matches segments)."""
    with np.errstate(over="ignore", divide="ignore"):
        if short:
            return np.where(g * t0 <= 1.0, p / g, 0.0)
        D = p * delta / (delta - 1.0)
        return np.where(g * t0 <= 1.0, D / g, D * g**-delta * t0 ** (1.0 - delta))


def _annealed_prefactor(w, lam, beta, d):
    m = lam * unit_ball_volume(d) * w**-beta
    return np.where(m > 1e-12, -np.expm1(-m) / np.where(m > 0, m, 1.0), 1.0 - m / 2.0)


def estimate_long_edge_conditional(
    model: ModelSpec,
    lam: float,
    r: float,
    trials: int,
    seed: int,
    kappa: float = 8.0,
    c: float = 1.0,
    vertex_cap: int = VERTEX_CAP,
) -> Estimate:
    """Variance-reduced estimator of P(L(r, c)) for conditionally
    independent edge families.

    Only the vertices inside B(r) are sampled.  Inside-inside long pairs
    contribute an exact product of non-connection probabilities; the
    inside-outside contribution is exp(-lam * I) with the tail integral I
    estimated by mixture importance sampling over (outside location, mark),
    exact in the spatial tails (kappa is recorded for provenance only).
    """
    if model.family == "wdrcm-interpolation":
        interference = False
    elif model.family == "soft-boolean-interference":
        interference = True
    else:
        raise ConfigError(
            "conditional estimator needs a family with a known annealed kernel"
        )
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    if r <= 0 or c <= 0:
        raise ParameterError("r and c must be positive")
    d = model.dimension
    omega = unit_ball_volume(d)
    window = Window("continuum-ball", r, d)
    if lam * window.volume > vertex_cap:
        raise ResourceError("projected vertex count exceeds the cap")
    t0 = (c * r) ** d
    # proposal kernel: for the interference family the annealed base is the
    # gamma-only kernel at p=1; the sub-one Poisson prefactor goes into f
    pg, pa = (model.gamma, 0.0) if interference else (model.gamma, model.alpha)
    pp = 1.0 if interference else model.p
    short = model.profile == "short"
    delta = model.delta if model.delta is not None else 2.0

    p_trials = np.empty(trials)
    for t in range(trials):
        tseed = _trial_seed(seed, t)
        vs = sample_poisson_marked(window, lam, tseed)
        n = len(vs)
        if n == 0:
            p_trials[t] = 0.0
            continue
        locs, marks = vs.locations, vs.marks
        log_inin = _log_noedge(
            locs,
            marks,
            t0,
            model.gamma,
            model.alpha,
            delta,
            model.p,
            short,
            interference,
            lam * omega,
            model.beta,
            float(d),
        )
        if log_inin == -np.inf:
            p_trials[t] = 1.0
            continue
        v0, v1, coef, expo, mass = _proposal_segments(marks, t0, pg, pa, delta, pp, short)
        total_mass = float(mass.sum())
        if total_mass <= 0.0:
            p_trials[t] = -math.expm1(log_inin)
            continue
        rng = stream(tseed, "conditional-is")
        cdf = np.cumsum(mass.ravel())
        weights = np.empty(0)
        K = 128
        while True:
            draw = K - weights.shape[0]
            pick = np.searchsorted(cdf, rng.random(draw) * total_mass, side="right")
            pick = np.minimum(pick, cdf.shape[0] - 1)
            anchor = pick // 4
            seg = pick % 4
            v = _sample_v(rng, v0[anchor, seg], v1[anchor, seg], expo[anchor, seg])
            g_anchor = interpolation_kernel(marks[anchor], v, pg, pa)
            t_out = _sample_t(rng, g_anchor, t0, delta, short)
            direction = rng.standard_normal((draw, d))
            direction /= np.sqrt((direction * direction).sum(axis=1))[:, None]
            y = locs[anchor] + direction * t_out[:, None] ** (1.0 / d)

            diff = y[:, None, :] - locs[None, :, :]
            t_mat = ((diff * diff).sum(axis=2)) ** (d / 2.0)  # (draw, n)
            g_mat = interpolation_kernel(
                np.minimum(v[:, None], marks[None, :]),
                np.maximum(v[:, None], marks[None, :]),
                pg,
                pa,
            )
            live = t_mat > t0
            phi_q = np.where(live, _phi_matrix(g_mat, t_mat, delta, pp, short), 0.0)
            tails = _tail_integral(g_mat, t0, delta, pp, short)
            env = _envelope(g_mat, t0, delta, pp, short)
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                contrib = np.where(tails > 0, env * phi_q / tails, 0.0)
                # q may overflow to inf for near-degenerate proposals; the
                # weight below maps that to 0, which is the correct limit
                q = contrib.sum(axis=1) / (total_mass * omega)

            phi_f = phi_q
            if interference:
                phi_f = phi_q * _annealed_prefactor(
                    np.minimum(v[:, None], marks[None, :]), lam, model.beta, d
                )
            elif model.p != pp:  # pragma: no cover - pp == model.p here
                phi_f = phi_q * model.p
            outside = np.sqrt((y * y).sum(axis=1)) > r
            f = -np.expm1(np.log1p(-np.minimum(phi_f, 1.0 - 1e-15)).sum(axis=1))
            f = np.where(outside, f, 0.0)
            w = np.where(q > 0, lam * f / np.where(q > 0, q, 1.0), 0.0)
            weights = np.concatenate([weights, w])
            var_mean = float(weights.var()) / weights.shape[0]
            if var_mean <= 0.01 or weights.shape[0] >= 4096:
                break
            K = weights.shape[0] * 2
        m_hat = float(weights.mean())
        s2 = float(weights.var()) / weights.shape[0]
        # first-order debias of exp(-m_hat): E exp(-m_hat) ~ exp(-m + s2/2)
        p_trials[t] = -math.expm1(log_inin - m_hat - s2 / 2.0)

    p_hat = float(p_trials.mean())
    stderr = float(p_trials.std(ddof=1)) / math.sqrt(trials) if trials > 1 else 0.0
    return Estimate(
        model,
        "L",
        lam,
        r,
        kappa,
        trials,
        int(round(p_hat * trials)),
        p_hat,
        stderr,
        f"conditional-L(c={c:g})",
        seed,
        {"c": c, "per_trial_values": True},
    )


# ---------------------------------------------------------------------------
# slope fit


@dataclass
class SlopeFit:
    points: list  # (log r, log p_hat) pairs used
    slope: float
    intercept: float
    slope_stderr: float
    n_excluded: int


def slope_fit(estimates) -> SlopeFit:
    """Weighted least squares of log p_hat against log r.

    Weights are inverse delta-method variances of log p_hat,
    p_hat * trials / (1 - p_hat); zero-success points are excluded and
    counted.
    """
    usable = [e for e in estimates if e.p_hat > 0]
    n_excluded = len(estimates) - len(usable)
    radii = {e.r for e in usable}
    if len(usable) < 3 or len(radii) < 3:
        raise ParameterError("slope fit needs >= 3 positive estimates at distinct radii")
    x = np.array([math.log(e.r) for e in usable])
    y = np.array([math.log(e.p_hat) for e in usable])
    def weight(e):
        # delta method: var(log p_hat) = stderr^2 / p_hat^2
        if e.stderr > 0 and e.metadata.get("per_trial_values"):
            return (e.p_hat / e.stderr) ** 2
        return e.p_hat * e.trials / max(1.0 - e.p_hat, 1e-12)

    w = np.array([weight(e) for e in usable], dtype=np.float64)
    sw = w.sum()
    xbar = (w * x).sum() / sw
    ybar = (w * y).sum() / sw
    sxx = (w * (x - xbar) ** 2).sum()
    slope = (w * (x - xbar) * (y - ybar)).sum() / sxx
    intercept = ybar - slope * xbar
    return SlopeFit(
        points=list(zip(x.tolist(), y.tolist())),
        slope=float(slope),
        intercept=float(intercept),
        slope_stderr=float(math.sqrt(1.0 / sxx)),
        n_excluded=n_excluded,
    )


# ---------------------------------------------------------------------------
# mixing covariance


@dataclass
class MixingResult:
    model: ModelSpec
    lam: float
    r: float
    x: np.ndarray
    trials: int
    covariance: float
    stderr: float
    p_first: float
    p_second: float
    seed: int


def mixing_covariance(
    model: ModelSpec, lam: float, r: float, x, trials: int, seed: int
) -> MixingResult:
    """Empirical covariance of the local crossing indicators G(0, r) and
    G(x*r, r) with a jackknife standard error.

    Vertices are sampled once per trial on a window containing both balls
    (shared environment for Cox/worm processes), then restricted to the two
    3r-balls; the local events depend on nothing else.
    """
    if trials < 2:
        raise ParameterError("mixing covariance needs >= 2 trials")
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.shape[0] == 1 and model.dimension > 1:
        x = np.concatenate([x, np.zeros(model.dimension - 1)])
    if x.shape[0] != model.dimension:
        raise ParameterError("x must be a point of the model dimension")
    window_kind = (
        "lattice-box" if model.vertex_process in ("lattice", "worm") else "continuum-ball"
    )
    probe = Window(window_kind, 1.0, model.dimension)
    xnorm = float(probe.norm(x[None, :])[0])
    if xnorm < 10:
        raise ParameterError("|x| must be at least 10 (mixing separation)")
    window = Window(window_kind, (xnorm + 3.0) * r, model.dimension)
    center2 = x * r

    a = np.empty(trials, dtype=np.float64)
    b = np.empty(trials, dtype=np.float64)
    for t in range(trials):
        tseed = _trial_seed(seed, t)
        vs = _sample_vertices(model, lam, window, tseed)
        # restrict to the two 3r-balls: G is measurable w.r.t. them
        if len(vs):
            rel1 = window.norm(vs.locations)
            rel2 = window.norm(vs.locations - center2)
            keep = (rel1 <= 3 * r) | (rel2 <= 3 * r)
            vs.locations = vs.locations[keep]
            vs.marks = vs.marks[keep]
            vs.extra = {k: v[keep] for k, v in vs.extra.items()}
        graph = build_graph(vs, model, tseed)
        a[t] = float(local_annulus_crossing(graph, np.zeros(model.dimension), r))
        b[t] = float(local_annulus_crossing(graph, center2, r))
    cov = float((a * b).mean() - a.mean() * b.mean())
    # jackknife over trials
    n = trials
    sab, sa, sb = (a * b).sum(), a.sum(), b.sum()
    loo = (sab - a * b) / (n - 1) - (sa - a) * (sb - b) / (n - 1) ** 2
    stderr = float(math.sqrt(max((n - 1) / n * ((loo - loo.mean()) ** 2).sum(), 0.0)))
    return MixingResult(
        model, lam, r, x, trials, cov, stderr, float(a.mean()), float(b.mean()), seed
    )


# ---------------------------------------------------------------------------
# radius sweep


def radius_sweep(
    model: ModelSpec,
    lam: float,
    event: str,
    radii,
    trials: int,
    seed: int,
    kappa: float | None = None,
    c: float = 1.0,
    estimator: str = "direct",
    csv_path=None,
    vertex_cap: int = VERTEX_CAP,
):
    """Map an estimator over a radius ladder with per-(r, trial) substreams."""
    radii = list(radii)
    if not radii:
        raise ParameterError("radius ladder must be nonempty")
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    out = []
    for r in radii:
        r_seed = _tag_int(f"sweep:{seed}:{_fmt(r)}")
        if estimator == "conditional":
            est = estimate_long_edge_conditional(
                model, lam, r, trials, r_seed, kappa or 8.0, c, vertex_cap
            )
        elif estimator == "direct":
            est = estimate_event(
                model, lam, event, r, trials, r_seed, kappa, c, vertex_cap=vertex_cap
            )
        else:
            raise ParameterError(f"unknown estimator {estimator!r}")
        out.append(est)
    if csv_path is not None:
        write_estimates_csv(out, csv_path)
    return out
