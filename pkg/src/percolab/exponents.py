"""Analytic and numeric computation of psi(mu), zeta, delta_eff.

psi(mu) is the limiting log-scale size of the truncated double mark
integral I(mu, r)/r^{2d}; zeta = sup{mu < 1 : mu < 2 + psi(mu)} governs the
polynomial decay (zeta < 0) or proliferation (zeta > 0) of long edges.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, ParameterError
from .geometry import unit_ball_volume
from .kernels import ModelSpec

_EPS = 1e-9
NEG_INF = float("-inf")


def _check_ranges(gamma, alpha, delta, profile):
    if not (0 <= gamma < 1):
        raise ParameterError("gamma must lie in [0, 1)")
    if not (0 <= alpha < 2 - gamma):
        raise ParameterError("alpha must lie in [0, 2 - gamma)")
    if profile == "long":
        if delta is None or delta <= 1:
            raise ParameterError("long-range profile needs delta > 1")
    elif profile != "short":
        raise ParameterError(f"unknown profile {profile!r}")


def psi_analytic(gamma, alpha, mu, delta=None, profile="long"):
    """Piecewise-exact psi(mu) for the interpolation model.

    Long-range: the maxima of chi over the corner points of its domain, per
    region of mu.  Short-range: minus the minimum of t_x + t_y subject to
    the kernel constraint (and -inf when no admissible marks exist).
    """
    _check_ranges(gamma, alpha, delta, profile)
    if mu >= 1:
        raise ParameterError("mu must be below 1")
    ag = gamma + alpha
    if profile == "short":
        if ag <= 0 or ag * (1 - mu) < 1:
            return NEG_INF
        if alpha > gamma:
            return -2.0 / ag
        if gamma * (1 - mu) >= 1:
            return -1.0 / gamma
        return -((1 - mu) + (1 - gamma * (1 - mu)) / alpha)

    thr1 = 1 - 1 / ag if ag > 0 else NEG_INF
    thr2 = 1 - 1 / gamma if gamma > 0 else NEG_INF
    if mu >= thr1:
        terms = [
            -delta,
            -delta + (ag * delta - 2) * (1 - mu),
            -delta + (delta * gamma - 1) * (1 - mu),
        ]
    elif mu > thr2:
        terms = [-delta, -2.0 / ag, -delta + (delta * gamma - 1) * (1 - mu)]
        if alpha > 0:
            terms.append(-1.0 / alpha + (gamma / alpha - 1) * (1 - mu))
    else:
        terms = [-delta]
        if ag > 0:
            terms.append(-2.0 / ag)
        if gamma > 0:
            terms.append(-1.0 / gamma)
    return max(terms)


# ---------------------------------------------------------------------------
# numeric psi: exact 1-D reduction of the double mark integral


def _branch_integral(c, e, t, v0, v1, delta, short):
    """integral over [v0, v1] of rho(c * v^e * t) for the unit-p profile,
    where rho is min(1, x^-delta) (long) or 1{x <= 1} (short)."""
    if v1 <= v0:
        return 0.0
    if e == 0:
        val = c * t
        if val <= 1.0:
            return v1 - v0
        return 0.0 if short else val**-delta * (v1 - v0)
    log_ct = math.log(c) + math.log(t)
    vstar = math.exp(min(-log_ct / e, 0.0))  # capped at 1 >= v1
    lo_cap = min(v1, max(v0, vstar))
    out = lo_cap - v0  # region where the profile is capped at 1
    if short or lo_cap >= v1:
        return out
    a, b = lo_cap, v1
    ed = e * delta
    if abs(ed - 1.0) < 1e-12:
        tail = math.log(b / a)
    else:
        tail = (b ** (1 - ed) - a ** (1 - ed)) / (1 - ed)
    return out + (c * t) ** -delta * tail


def _mark_row_integral(u, gamma, alpha, t, lo, delta, short):
    """integral over v in [lo, 1] of rho(g(u, v) * t) for fixed u."""
    mid = min(max(u, lo), 1.0)
    low = _branch_integral(u**alpha, gamma, t, lo, mid, delta, short)
    high = _branch_integral(u**gamma, alpha, t, mid, 1.0, delta, short)
    return low + high


def _piecewise_log_gauss(f, lo, hi, breaks, n):
    """Gauss-Legendre in log coordinates on each smooth piece."""
    pts = sorted({lo, hi, *(b for b in breaks if lo < b < hi)})
    nodes, weights = np.polynomial.legendre.leggauss(n)
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        la, lb = math.log(a), math.log(b)
        x = np.exp((nodes + 1) / 2 * (lb - la) + la)
        w = weights * (lb - la) / 2 * x
        total += float(sum(wk * f(xk) for xk, wk in zip(x, w)))
    return total


def _interpolation_mark_integral(gamma, alpha, p, t, lo, delta, short, n):
    """I(mu, r) = p * double integral of rho(g(u,v) * t) over [lo, 1]^2."""
    if lo >= 1.0:
        return 0.0
    # breakpoints computed in log space to survive extreme windows
    log_it, log_lo = -math.log(t), math.log(lo)
    log_breaks = []
    for expo in (gamma + alpha, gamma, alpha):
        if expo > 0:
            log_breaks.append(log_it / expo)
    for e_out, e_in in ((gamma, alpha), (alpha, gamma)):
        # u where the v-threshold (inv_t * u^-e_out)^(1/e_in) crosses lo or 1
        if e_in > 0 and e_out > 0:
            log_breaks.append((log_it - e_in * log_lo) / e_out)
            log_breaks.append(log_it / e_out)
    breaks = [math.exp(lb) for lb in log_breaks if log_lo < lb < 0.0]
    f = lambda u: _mark_row_integral(u, gamma, alpha, t, lo, delta, short)
    return p * _piecewise_log_gauss(f, lo, 1.0, breaks, n)


@dataclass(frozen=True)
class AnnealedInterference:
    """Descriptor of the annealed soft Boolean kernel with interference:
    phi_lambda(u, v, t) = (1 - e^-m)/m * min(1, w^{-gamma delta} t^-delta),
    w = min(u, v), m = lam * omega_d * w^-beta."""

    lam: float
    gamma: float
    delta: float
    beta: float
    dimension: int = 2

    def row(self, w, t):
        m = self.lam * unit_ball_volume(self.dimension) * w**-self.beta
        pref = -math.expm1(-m) / m if m > 1e-12 else 1.0 - m / 2
        return pref * min(1.0, w ** (-self.gamma * self.delta) * t**-self.delta)

    def mark_integral(self, t, lo, n):
        if lo >= 1.0:
            return 0.0
        # phi depends on the marks only through w = min(u, v)
        f = lambda w: self.row(w, t) * 2.0 * (1.0 - w)
        breaks = [t ** (-1.0 / (self.gamma * self.delta))] if self.gamma > 0 else []
        return _piecewise_log_gauss(f, lo, 1.0, breaks, n)


def _integral_at(model, mu, r):
    """The mark integral at radius r, with a node-doubling convergence check."""
    d = model.dimension if hasattr(model, "dimension") else 2
    t = float(r) ** d
    lo = float(r) ** (-d * (1 - mu))
    vals = []
    for n in (48, 96):
        if isinstance(model, AnnealedInterference):
            vals.append(model.mark_integral(t, lo, n))
        elif isinstance(model, ModelSpec):
            vals.append(
                _interpolation_mark_integral(
                    model.gamma,
                    model.alpha,
                    model.p,
                    t,
                    lo,
                    model.delta,
                    model.profile == "short",
                    n,
                )
            )
        else:  # generic callable phi(u, v, t): 2-D tensor quadrature
            vals.append(_tensor_mark_integral(model, t, lo, 256 * n // 48))
    a, b = vals
    if b == 0.0:
        return 0.0
    if a > 0 and abs(math.log(a / b)) > 1e-3:
        raise NumericError(
            "mark-integral quadrature did not converge",
            {"mu": mu, "r": r, "values": vals},
        )
    return b


def _tensor_mark_integral(phi, t, lo, n):
    nodes, weights = np.polynomial.legendre.leggauss(n)
    la = math.log(lo)
    x = np.exp((nodes + 1) / 2 * (-la) + la)
    w = weights * (-la) / 2 * x
    u, v = np.meshgrid(x, x)
    vals = phi(u, v, t)
    return float(w @ vals @ w)


def psi_numeric(model, mu, r_ladder=(1e2, 1e3, 1e4)):
    """Slope-stabilized numeric psi(mu) across a radius ladder.

    Computes log(I(mu, r)) / (d log r) at each ladder radius after the log
    substitution of the marks, then removes the constant prefactor by
    Richardson-style extrapolation in 1/log r (pairwise slopes, using the
    largest radii).
    """
    if mu >= 1:
        raise ParameterError("mu must be below 1")
    radii = sorted(float(r) for r in r_ladder)
    if len(radii) < 3 or radii[-1] / radii[0] < 100:
        raise ParameterError("radius ladder needs >= 3 points spanning >= 2 decades")
    d = model.dimension if hasattr(model, "dimension") else 2
    if mu > 0:
        # the mark window [r^{-d(1-mu)}, 1] narrows as mu -> 1; stretch the
        # ladder to keep the effective span (1-mu)*log r comparable
        cap = 250.0 / (d * math.log(radii[-1]))
        stretch = min(1.0 / (1.0 - mu), max(cap, 1.0))
        radii = [r**stretch for r in radii]
    logs = [math.log(r) for r in radii]
    ivals = [_integral_at(model, mu, r) for r in radii]
    if ivals[-1] == 0.0:
        return NEG_INF
    if any(v == 0.0 for v in ivals):
        # support appears only at the largest radii: report the raw exponent
        return math.log(ivals[-1]) / (d * logs[-1])
    slopes = [
        (math.log(ivals[k + 1]) - math.log(ivals[k])) / (d * (logs[k + 1] - logs[k]))
        for k in range(len(radii) - 1)
    ]
    if len(slopes) >= 3:
        d1 = slopes[-1] - slopes[-2]
        d2 = slopes[-2] - slopes[-3]
        if abs(d1 - d2) > 1e-15 and abs(d1) < abs(d2):
            return slopes[-1] - d1 * d1 / (d1 - d2)
    return slopes[-1]


def zeta_numeric(psi_eval, tol=1e-3):
    """Bisection for sup{mu < 1 : mu < 2 + psi(mu)} over [-10, 1]."""
    if tol <= 0:
        raise ParameterError("tol must be positive")
    lo, hi = -10.0, 1.0

    def cond(mu):
        return mu < 2 + psi_eval(mu)

    if cond(1 - tol):
        return 1 - tol
    if not cond(lo):
        return lo
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if cond(mid):
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class ZetaResult:
    value: float
    sign_class: str  # negative | zero | positive
    log_correction: bool = False


def zeta_closed_form(gamma, alpha, delta=None, profile="long"):
    """Closed-form zeta with sign classification for the interpolation model.

    Returns (value, sign_class); value is -inf for models without long
    edges at any polynomial order (e.g. the short-range gamma = alpha = 0
    Gilbert case).
    """
    _check_ranges(gamma, alpha, delta, profile)
    ag = gamma + alpha
    if profile == "long":
        on_boundary = (
            abs(delta - 2) <= _EPS
            or abs(gamma - (1 - 1 / delta)) <= _EPS
            or abs(alpha - (1 - gamma)) <= _EPS
        )
        in_neg = delta >= 2 - _EPS and gamma <= 1 - 1 / delta + _EPS and alpha <= 1 - gamma + _EPS
        log_corr = any(
            abs(x) <= _EPS for x in (delta * gamma - 1, delta * ag - 2, delta * alpha - 1)
        )
        if on_boundary and in_neg:
            return ZetaResult(0.0, "zero", log_corr)
        if delta > 2 and gamma < 1 - 1 / delta and alpha < 1 - gamma:
            terms = [2 - delta]
            if gamma > 0:
                terms += [1 - (delta - 1) / (gamma * delta), (ag - 1) / gamma]
            if ag > 0:
                terms.append(2 * (ag - 1) / ag)
            return ZetaResult(max(terms), "negative", log_corr)
        terms = [2 - delta]
        if gamma > 0:
            terms.append(1 - (delta - 1) / (gamma * delta))
        if delta * ag - 1 > _EPS:
            # for delta*(alpha+gamma) <= 1 this root lies outside mu < 1
            terms.append(delta * (ag - 1) / (delta * ag - 1))
        return ZetaResult(max(terms), "positive", log_corr)

    # short-range profile: delta -> infinity limits of the surviving terms
    on_boundary = abs(alpha - (1 - gamma)) <= _EPS
    if on_boundary:
        return ZetaResult(0.0, "zero")
    if alpha < 1 - gamma:
        terms = []
        if gamma > 0:
            terms += [1 - 1 / gamma, (ag - 1) / gamma]
        if ag > 0:
            terms.append(2 * (ag - 1) / ag)
        value = max(terms) if terms else NEG_INF
        return ZetaResult(value, "negative")
    terms = []
    if gamma > 0:
        terms.append(1 - 1 / gamma)
    if ag > 0:
        terms.append((ag - 1) / ag)
    return ZetaResult(max(terms), "positive")


def delta_eff(gamma, alpha, delta=None, profile="long"):
    """Effective decay exponent -psi(0).

    Returns a float when psi is continuous at 0; for the short-range
    profile with gamma + alpha = 1 the one-sided limits differ and the pair
    (left, right) of -psi(0 -/+) is returned instead.
    """
    _check_ranges(gamma, alpha, delta, profile)
    if profile == "long":
        return -psi_analytic(gamma, alpha, 0.0, delta, profile)
    ag = gamma + alpha
    if abs(ag - 1) <= _EPS:
        left = -psi_analytic(gamma, alpha, -1e-12, delta, profile)
        return (left, math.inf)
    return -psi_analytic(gamma, alpha, 0.0, delta, profile)


def translate_params(tau, alpha_other, sigma):
    """Kernel-based SRG parameters -> interpolation parameters
    (gamma, delta, alpha) = (1/(tau-1), alpha_other, sigma/(tau-1))."""
    if tau <= 1:
        raise ParameterError("tau must exceed 1")
    if sigma < 0:
        raise ParameterError("sigma must be nonnegative")
    gamma = 1.0 / (tau - 1.0)
    return gamma, alpha_other, sigma * gamma


def translate_params_inverse(gamma, delta, alpha):
    """Inverse of translate_params."""
    if gamma <= 0:
        raise ParameterError("gamma must be positive to invert")
    return 1.0 + 1.0 / gamma, delta, alpha / gamma


@dataclass
class PhaseScan:
    gammas: np.ndarray
    alphas: np.ndarray
    zeta: np.ndarray  # (n_gamma, n_alpha)
    sign: np.ndarray  # strings
    delta: float | None
    profile: str
    boundaries: dict = field(default_factory=dict)


def phase_scan(delta=None, profile="long", grid=100, alpha_max=1.0):
    """Sign classification of zeta over a (gamma, alpha) grid (Figure-style
    phase diagram) plus the analytic boundary polylines."""
    gammas = (np.arange(grid) + 0.5) / grid
    alphas = (np.arange(grid) + 0.5) / grid * alpha_max
    zeta = np.empty((grid, grid))
    sign = np.empty((grid, grid), dtype=object)
    for i, g in enumerate(gammas):
        for j, a in enumerate(alphas):
            if a >= 2 - g:
                zeta[i, j] = np.nan
                sign[i, j] = "invalid"
                continue
            res = zeta_closed_form(g, a, delta, profile)
            zeta[i, j] = res.value
            sign[i, j] = res.sign_class
    boundaries = {}
    gs = np.linspace(0.0, 1.0, 201)
    boundaries["alpha=1-gamma"] = np.stack([gs, 1.0 - gs], axis=1)
    if profile == "long" and delta is not None and delta > 2:
        gv = 1 - 1 / delta
        boundaries["gamma=1-1/delta"] = np.stack(
            [np.full(201, gv), np.linspace(0.0, 1.0, 201)], axis=1
        )
    return PhaseScan(gammas, alphas, zeta, sign, delta, profile, boundaries)


@dataclass
class ExponentReport:
    parameters: dict
    zeta_closed: float | None
    zeta_numeric: float | None
    sign_class: str | None
    delta_eff: object
    psi_samples: list
    tolerance: float
    log_correction: bool = False

    def to_dict(self):
        de = self.delta_eff
        if isinstance(de, tuple):
            de = {"left": de[0], "right": de[1]}
        return {
            "parameters": self.parameters,
            "zeta_closed": self.zeta_closed,
            "zeta_numeric": self.zeta_numeric,
            "sign_class": self.sign_class,
            "delta_eff": de,
            "psi_samples": [[m, p] for m, p in self.psi_samples],
            "tolerance": self.tolerance,
            "log_correction": self.log_correction,
        }


def exponent_report(
    gamma,
    alpha,
    delta=None,
    profile="long",
    mu_samples=(-2.0, -1.0, -0.5, 0.0, 0.5),
    numeric=True,
    tol=1e-3,
    dimension=2,
):
    """Bundle closed-form and numeric exponents for one parameter point."""
    closed = zeta_closed_form(gamma, alpha, delta, profile)
    znum = None
    psis = [(m, psi_analytic(gamma, alpha, m, delta, profile)) for m in mu_samples]
    if numeric:
        model = ModelSpec(
            "wdrcm-interpolation",
            gamma=gamma,
            alpha=alpha,
            profile=profile,
            delta=delta,
            dimension=dimension,
        )
        ladder = (1e3, 1e5, 1e7, 1e9, 1e11)
        znum = zeta_numeric(lambda m: psi_numeric(model, m, ladder), tol)
    return ExponentReport(
        parameters={
            "gamma": gamma,
            "alpha": alpha,
            "delta": delta,
            "profile": profile,
        },
        zeta_closed=closed.value,
        zeta_numeric=znum,
        sign_class=closed.sign_class,
        delta_eff=delta_eff(gamma, alpha, delta, profile),
        psi_samples=psis,
        tolerance=tol,
        log_correction=closed.log_correction,
    )
