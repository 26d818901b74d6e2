import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pjump.errors import HypothesisError, ParameterError
from pjump.forcing import ForcingSpec
from pjump.jumping import aux_v, derive_params
from pjump.reduction import (big_f, big_f_quad, dyadic_grid, estimate_scan, g_scaled, generating_s, h1,
                             hypothesis_check, loglog_fit, mean_potential, mean_potential_closed,
                             mean_potential_derivs, mean_potential_fd, orbit_moment, orbit_moment_quad)

PAR = derive_params(8.0, 1.0, 3.0)
REF = ForcingSpec(1.0, 0.4, ((1, 0.5, 0.0),))
FREE = ForcingSpec.unperturbed()

# independent mpmath evaluation
J_14 = 8.64799953285867885
FBAR_1E3 = 15.2485913830800639


def test_big_f_examples():
    fs = ForcingSpec(1.0, 0.5)
    assert big_f(fs, 0.0) == 0.0
    assert big_f(fs, 4.0) == pytest.approx(8.0 / 1.5, rel=1e-15)
    assert big_f(fs, -4.0) == big_f(fs, 4.0)


@settings(max_examples=40, deadline=None)
@given(x=st.floats(-1e3, 1e3))
def test_big_f_matches_quadrature(x):
    assert big_f(REF, x) == pytest.approx(big_f_quad(REF, x), rel=1e-10, abs=1e-12)


def test_g_scaled_identity():
    for r in (1e2, 1e4, 1e6):
        for th in (0.3, 2.0, 4.5):
            for t in (0.0, 1.7):
                g = g_scaled(PAR, REF, r, th, t)
                h = PAR.omega * r + h1(PAR, REF, r, th, t)
                assert PAR.omega * r + r ** (1 / 3) * g == pytest.approx(h, rel=1e-14)
    assert g_scaled(PAR, FREE, 100.0, 1.0, 0.0) == 0.0


def test_orbit_moment():
    assert orbit_moment(PAR, 1.4) == pytest.approx(J_14, rel=1e-14)
    assert orbit_moment_quad(PAR, 1.4) == pytest.approx(J_14, rel=1e-10)


def test_mean_potential_frozen_and_closed_form():
    assert mean_potential(PAR, REF, 1e3) == pytest.approx(FBAR_1E3, rel=1e-10)
    for h in (1e2, 1e4, 1e5):
        assert mean_potential(PAR, REF, h) == pytest.approx(mean_potential_closed(PAR, REF, h), rel=1e-9)
    assert mean_potential(PAR, FREE, 1e3) == 0.0


def test_mean_potential_homogeneity():
    for h in (1e2, 3e3):
        ratio = mean_potential(PAR, REF, 2 * h) / mean_potential(PAR, REF, h)
        assert ratio == pytest.approx(2 ** (1.4 / 3), rel=1e-8)


def test_mean_potential_ignores_e():
    assert mean_potential(PAR, REF, 1e3) == mean_potential(PAR, REF.without_e(), 1e3)


@pytest.mark.parametrize("k", [1, 2])
def test_derivs_analytic_vs_fd(k):
    a = mean_potential_derivs(PAR, REF, 1e4, k)
    assert mean_potential_fd(PAR, REF, 1e4, k) == pytest.approx(a, rel=1e-6)


def test_derivative_signs():
    for h in np.logspace(2, 5, 10):
        assert mean_potential_derivs(PAR, REF, h, 1) > 0
        assert mean_potential_derivs(PAR, REF, h, 2) < 0
    with pytest.raises(ParameterError):
        mean_potential_derivs(PAR, REF, 1e3, 3)


def test_generating_function_endpoints():
    for h in (1e2, 1e4):
        assert generating_s(PAR, REF, h, 0.0) == 0.0
        assert abs(generating_s(PAR, REF, h, PAR.period)) < 1e-9 * mean_potential(PAR, REF, h)
    assert generating_s(PAR, FREE, 1e3, 2.0) == 0.0
    with pytest.raises(ParameterError):
        generating_s(PAR, REF, 1e3, -0.1)


def test_generating_function_derivative():
    # dS/dtheta = omega^-p (F(...) - Fbar)
    h, th, eps = 1e3, 1.1, 1e-5
    ds = (generating_s(PAR, REF, h, th + eps) - generating_s(PAR, REF, h, th - eps)) / (2 * eps)
    x = (PAR.d * h / PAR.omega) ** (1 / 3) * float(aux_v(PAR, th))
    expect = PAR.omega ** -3 * (big_f(REF, x) - mean_potential(PAR, REF, h))
    assert ds == pytest.approx(expect, rel=1e-6)


def test_hypothesis_examples():
    rep = hypothesis_check(REF, 3.0)
    assert rep.passed and rep.beta1 == 1.0 and rep.beta2 == pytest.approx(0.4)
    assert hypothesis_check(ForcingSpec(0.0, 0.4), 3.0).passed is False
    bad = hypothesis_check(ForcingSpec(1.0, 0.5), 3.0)
    assert not bad.passed and any("H1" in f for f in bad.failures)
    with pytest.raises(HypothesisError):
        bad.raise_if_failed()


@settings(max_examples=40, deadline=None)
@given(p=st.floats(2.0, 6.0), frac=st.floats(0.01, 0.99), beta=st.floats(0.1, 10.0))
def test_hypothesis_power_law_range(p, frac, beta):
    gamma = frac / (p - 1)
    assert hypothesis_check(ForcingSpec(beta, gamma), p).passed


def test_dyadic_grid_and_fit():
    g = dyadic_grid(1e2, 1e5)
    assert g[0] == 1e2 and g[-1] >= 1e5 and np.all(g[1:] / g[:-1] == 2.0)
    slope, c = loglog_fit(g, 3.0 * g ** 0.7)
    assert slope == pytest.approx(0.7) and c == pytest.approx(3.0)


@pytest.mark.parametrize("which,k", [("F", 0), ("F", 1), ("F", 2), ("g", 0), ("h-linearity", 0),
                                     ("r-of-h", 0), ("r-of-h", 1), ("remainder", 0),
                                     ("mean-potential", 1)])
def test_estimate_scans_pass(which, k):
    rep = estimate_scan(PAR, REF, which, dyadic_grid(1e2, 1e5), k=k)
    assert rep.passed, (rep.fitted_slope, rep.claimed_slope)


def test_h_linearity_constants():
    rep = estimate_scan(PAR, REF, "h-linearity", dyadic_grid(1e2, 1e5))
    assert 0 < rep.extra["c1"] <= rep.extra["c2"]


def test_scan_validation():
    with pytest.raises(ParameterError):
        estimate_scan(PAR, REF, "F", dyadic_grid(1e2, 1e4))
    with pytest.raises(ParameterError):
        estimate_scan(PAR, REF, "nope", dyadic_grid(1e2, 1e5))
    with pytest.raises(ParameterError):
        estimate_scan(PAR, REF, "F", dyadic_grid(1e2, 1e5), k=3)


def test_mean_potential_derivative_slope():
    grid = dyadic_grid(1e2, 1e5)
    slope, _ = loglog_fit(grid, [mean_potential_derivs(PAR, REF, h, 1) for h in grid])
    assert abs(slope - (-1 + 1.4 / 3)) < 0.02
