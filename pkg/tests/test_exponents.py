"""psi / zeta machinery against independent discretized oracles."""

import math

import numpy as np
import pytest

from percolab import (
    ModelSpec,
    ParameterError,
    delta_eff,
    exponent_report,
    phase_scan,
    psi_analytic,
    psi_numeric,
    translate_params,
    translate_params_inverse,
    zeta_closed_form,
    zeta_numeric,
)

NEG_INF = float("-inf")


def _psi_grid_oracle(gamma, alpha, mu, delta=None, profile="long", n=1501):
    """Brute-force oracle for psi(mu).

    Marks u = r^{-d x} with x in [0, 1-mu] carry measure exponent -x, and
    the kernel argument g(u,v) r^d has exponent 1 - gamma*max(x,y) -
    alpha*min(x,y).  psi is the maximal total exponent over the (x, y) grid;
    the short profile instead demands a nonpositive kernel exponent.
    """
    span = 1.0 - mu
    x = np.linspace(0.0, span, n)
    xx, yy = np.meshgrid(x, x)
    kernel = 1.0 - gamma * np.maximum(xx, yy) - alpha * np.minimum(xx, yy)
    if profile == "short":
        feasible = kernel <= 1e-12
        if not feasible.any():
            return NEG_INF
        return float((-xx - yy)[feasible].max())
    value = -xx - yy - delta * np.maximum(kernel, 0.0)
    return float(value.max())


def _random_params(rng, profile):
    gamma = rng.uniform(0.0, 0.95)
    alpha = rng.uniform(0.0, min(1.2, 2 - gamma - 0.05))
    delta = rng.uniform(1.1, 4.0) if profile == "long" else None
    return gamma, alpha, delta


def test_psi_analytic_matches_grid_oracle():
    rng = np.random.default_rng(5)
    for profile in ("long", "short"):
        for _ in range(60):
            gamma, alpha, delta = _random_params(rng, profile)
            mu = rng.uniform(-2.0, 0.9)
            got = psi_analytic(gamma, alpha, mu, delta, profile)
            want = _psi_grid_oracle(gamma, alpha, mu, delta, profile)
            if want == NEG_INF:
                assert got == NEG_INF, (gamma, alpha, mu)
            else:
                # grid resolution limits the oracle, not the implementation
                step = (1.0 - mu) / 1500
                tol = 3 * step * (1 + (delta or 0) * (gamma + alpha) + gamma + alpha)
                assert got >= want - 1e-12, (gamma, alpha, delta, mu, profile)
                assert abs(got - want) < tol, (gamma, alpha, delta, mu, profile)


def test_psi_monotone_nonincreasing_in_mu():
    rng = np.random.default_rng(6)
    mus = np.linspace(-3.0, 0.95, 40)
    for profile in ("long", "short"):
        for _ in range(25):
            gamma, alpha, delta = _random_params(rng, profile)
            vals = [psi_analytic(gamma, alpha, m, delta, profile) for m in mus]
            finite = [v for v in vals if v > NEG_INF]
            assert all(b <= a + 1e-12 for a, b in zip(finite, finite[1:]))


def test_psi_numeric_tracks_analytic():
    cases = [
        (0.0, 0.0, 3.0, "long"),
        (0.5, 0.0, 2.5, "long"),
        (0.3, 0.6, 1.8, "long"),
        (0.6, 0.0, None, "short"),
        (0.4, 0.5, None, "short"),
    ]
    ladder = (1e3, 1e5, 1e7, 1e9)
    for gamma, alpha, delta, profile in cases:
        model = ModelSpec(
            "wdrcm-interpolation", gamma=gamma, alpha=alpha, delta=delta, profile=profile
        )
        for mu in (-1.5, -0.5, 0.25):
            got = psi_numeric(model, mu, ladder)
            want = psi_analytic(gamma, alpha, mu, delta, profile)
            if want == NEG_INF:
                assert got == NEG_INF
            else:
                assert abs(got - want) < 0.05, (gamma, alpha, delta, profile, mu)


def test_zeta_numeric_bisection():
    # exactly solvable condition: psi = -3 gives mu < -1, so zeta = -1
    assert zeta_numeric(lambda mu: -3.0, tol=1e-4) == pytest.approx(-1.0, abs=2e-4)
    assert zeta_numeric(lambda mu: 0.0, tol=1e-3) == pytest.approx(1.0 - 1e-3)
    assert zeta_numeric(lambda mu: -100.0, tol=1e-3) == -10.0
    with pytest.raises(ParameterError):
        zeta_numeric(lambda mu: 0.0, tol=0.0)


def test_zeta_closed_form_agrees_with_bisection_on_psi():
    rng = np.random.default_rng(7)
    checked = 0
    for profile in ("long", "short"):
        while checked < (40 if profile == "long" else 60):
            gamma, alpha, delta = _random_params(rng, profile)
            res = zeta_closed_form(gamma, alpha, delta, profile)
            if res.value == NEG_INF or res.value > 0.9:
                continue
            # skip points within 0.03 of the sign-class boundaries, where the
            # sup sits exactly at a kink of mu - 2 - psi(mu)
            if profile == "long" and (
                abs(delta - 2) < 0.03 or abs(gamma - (1 - 1 / delta)) < 0.03
            ):
                continue
            if abs(alpha - (1 - gamma)) < 0.03:
                continue
            num = zeta_numeric(
                lambda m: psi_analytic(gamma, alpha, m, delta, profile), tol=1e-4
            )
            assert abs(num - res.value) < 5e-4, (gamma, alpha, delta, profile)
            checked += 1


def test_zeta_sign_classes_and_boundaries():
    # deep in the negative region
    assert zeta_closed_form(0.2, 0.1, 4.0).sign_class == "negative"
    # the vertical boundary gamma = 1 - 1/delta gives zeta = 0
    res = zeta_closed_form(1 - 1 / 3.0, 0.1, 3.0)
    assert res.value == 0.0 and res.sign_class == "zero"
    # alpha = 1 - gamma boundary, both profiles
    assert zeta_closed_form(0.4, 0.6, 3.0).sign_class == "zero"
    assert zeta_closed_form(0.4, 0.6, None, "short").sign_class == "zero"
    # delta <= 2 is always positive
    assert zeta_closed_form(0.1, 0.1, 1.5).sign_class == "positive"
    # gamma = alpha = 0 short has no long edges at all
    res = zeta_closed_form(0.0, 0.0, None, "short")
    assert res.value == NEG_INF and res.sign_class == "negative"
    with pytest.raises(ParameterError):
        zeta_closed_form(0.5, 0.0, 1.0)


def test_zeta_log_correction_flag():
    # delta * gamma = 1 triggers the logarithmic-correction warning flag
    assert zeta_closed_form(0.5, 0.0, 2.0).log_correction
    assert zeta_closed_form(0.25, 0.25, 4.0).log_correction  # delta*(g+a) = 2
    assert not zeta_closed_form(0.3, 0.0, 4.0).log_correction


def test_delta_eff_values_and_jump():
    # gamma = alpha = 0 long: psi(0) = -delta
    assert delta_eff(0.0, 0.0, 3.0) == pytest.approx(3.0)
    # generic long point agrees with -psi(0)
    assert delta_eff(0.4, 0.3, 2.5) == pytest.approx(
        -psi_analytic(0.4, 0.3, 0.0, 2.5, "long")
    )
    # short profile on gamma + alpha = 1: one-sided limits differ
    de = delta_eff(0.6, 0.4, None, "short")
    assert isinstance(de, tuple)
    assert de[0] < de[1] == math.inf
    # off the line it is a plain float
    assert isinstance(delta_eff(0.6, 0.1, None, "short"), float)


def test_translate_params_roundtrip():
    gamma, delta, alpha = translate_params(3.0, 2.5, 0.8)
    assert gamma == pytest.approx(0.5)
    assert delta == 2.5
    assert alpha == pytest.approx(0.4)
    tau, d2, sigma = translate_params_inverse(gamma, delta, alpha)
    assert (tau, d2, sigma) == (pytest.approx(3.0), 2.5, pytest.approx(0.8))
    with pytest.raises(ParameterError):
        translate_params(1.0, 2.0, 0.5)
    with pytest.raises(ParameterError):
        translate_params(2.0, 2.0, -0.1)


def test_phase_scan_structure():
    scan = phase_scan(delta=3.0, grid=30)
    assert scan.zeta.shape == (30, 30)
    assert "gamma=1-1/delta" in scan.boundaries
    assert "alpha=1-gamma" in scan.boundaries
    # cells with alpha >= 2 - gamma are invalid
    assert (scan.sign == "invalid").sum() >= 0
    # low-gamma low-alpha corner is negative for delta = 3
    assert scan.sign[0, 0] == "negative"
    # near (1, 1) the class is positive
    assert scan.sign[-1, -1] == "positive"
    # scan signs agree with pointwise evaluation
    i, j = 10, 20
    res = zeta_closed_form(scan.gammas[i], scan.alphas[j], 3.0)
    assert scan.sign[i, j] == res.sign_class
    assert scan.zeta[i, j] == res.value


def test_exponent_report_roundtrip():
    rep = exponent_report(0.0, 0.0, 3.0, numeric=True, tol=1e-3)
    assert rep.zeta_closed == pytest.approx(-1.0)
    assert abs(rep.zeta_numeric - rep.zeta_closed) <= 1e-2
    d = rep.to_dict()
    assert d["parameters"]["delta"] == 3.0
    assert d["sign_class"] == "negative"
    assert len(d["psi_samples"]) == 5
    # the tuple-valued effective exponent serializes as left/right
    rep2 = exponent_report(0.6, 0.4, None, profile="short", numeric=False)
    assert rep2.to_dict()["delta_eff"] == {
        "left": rep2.delta_eff[0],
        "right": math.inf,
    }
