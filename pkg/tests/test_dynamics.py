import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pjump.dynamics import (ActionAngle, PhaseState, from_action_angle, hamiltonian_H, hamiltonian_h,
                            integrate, poincare_map, solve_r_of_h, to_action_angle, unperturbed_energy,
                            vector_field)
from pjump.errors import DomainError, IntegrationError, InversionError, ParameterError
from pjump.forcing import ForcingSpec
from pjump.jumping import aux_zeros, derive_params

PAR = derive_params(8.0, 1.0, 3.0)
REF = ForcingSpec(1.0, 0.4, ((1, 0.5, 0.0),))
FREE = ForcingSpec.unperturbed()


@settings(max_examples=80, deadline=None)
@given(logr=st.floats(-3, 8), theta=st.floats(0.0, 1.0, exclude_max=True))
def test_chart_roundtrip(logr, theta):
    r = 10.0 ** logr
    th = theta * PAR.period
    x, y = from_action_angle(PAR, ActionAngle(r, th))
    aa = to_action_angle(PAR, x, y)
    assert aa.r == pytest.approx(r, rel=1e-13)
    d = (aa.theta - th + PAR.pi_p) % PAR.period - PAR.pi_p
    assert abs(d) < 1e-12


def test_chart_jacobian_is_one():
    rng = np.random.default_rng(1)
    zeros = np.array(aux_zeros(PAR))
    n = 0
    while n < 40:
        th = rng.uniform(0, PAR.period)
        if np.min(np.abs(th - zeros)) < 0.05:
            continue
        r = 10 ** rng.uniform(0, 3)
        ht, hr = 1e-6, 1e-6 * r
        xp, yp = from_action_angle(PAR, ActionAngle(r, th + ht))
        xm, ym = from_action_angle(PAR, ActionAngle(r, th - ht))
        xr, yr = from_action_angle(PAR, ActionAngle(r + hr, th))
        xl, yl = from_action_angle(PAR, ActionAngle(r - hr, th))
        det = ((xp - xm) * (yr - yl) - (yp - ym) * (xr - xl)) / (4 * ht * hr)
        assert det == pytest.approx(1.0, abs=1e-6)
        n += 1


def test_energy_equals_action():
    r = np.array([0.5, 3.0, 1e4])
    th = np.array([0.3, 2.0, 5.0])
    x, y = from_action_angle(PAR, ActionAngle(r, th))
    np.testing.assert_allclose(unperturbed_energy(PAR, x, y), r, rtol=1e-14)


def test_origin_excluded():
    with pytest.raises(DomainError):
        to_action_angle(PAR, 0.0, 0.0)
    with pytest.raises(DomainError):
        from_action_angle(PAR, ActionAngle(0.0, 1.0))
    with pytest.raises(DomainError):
        PhaseState(math.inf, 0.0)


def test_vector_field_frozen():
    # x' = -omega phi_q(y), y' = omega a1 phi_p(x+) + omega^(1-p) (f(x) - e(t))
    dx, dy = vector_field(PAR, REF, PhaseState(2.0, -1.0, 0.0))
    w = 4.0 / 3.0
    assert dx == pytest.approx(w, rel=1e-15)
    assert dy == pytest.approx(w * 3.375 * 4.0 + w ** -2 * (2.0 ** 0.4 - 0.5), rel=1e-15)


def test_unperturbed_flow_is_rigid_rotation():
    r0, th0 = 200.0, 1.0
    x, y = from_action_angle(PAR, ActionAngle(r0, th0))
    ts = np.linspace(0.5, 10.0, 20)
    orb = integrate(PAR, FREE, PhaseState(float(x), float(y)), 10.0, samples=ts)
    aa = to_action_angle(PAR, orb.x, orb.y)
    np.testing.assert_allclose(aa.r, r0, rtol=1e-9)
    expect = (th0 - PAR.omega * ts) % PAR.period
    d = (aa.theta - expect + PAR.pi_p) % PAR.period - PAR.pi_p
    assert np.max(np.abs(d)) < 1e-9


def test_unperturbed_poincare_drift():
    x, y = from_action_angle(PAR, ActionAngle(500.0, 1.0))
    sec = poincare_map(PAR, FREE, PhaseState(float(x), float(y)), 300)
    assert len(sec) == 301
    assert np.max(np.abs(sec.r - 500.0)) / 500.0 < 1e-8


def test_autonomous_hamiltonian_conserved():
    # with e = 0 the perturbed system is autonomous and H is a first integral
    st0 = PhaseState(3.0, -2.0)
    nof = ForcingSpec(1.0, 0.4)
    orb = integrate(PAR, nof, st0, 20.0, samples=np.linspace(1, 20, 20))
    H = hamiltonian_H(PAR, nof, orb.x, orb.y, orb.t)
    H0 = hamiltonian_H(PAR, nof, st0.x, st0.y, 0.0)
    assert np.max(np.abs(H - H0)) / abs(H0) < 1e-9


def test_peaks_track_amplitude():
    x, y = from_action_angle(PAR, ActionAngle(100.0, 0.0))
    orb = integrate(PAR, FREE, PhaseState(float(x), float(y)), PAR.period,
                    samples=np.linspace(0.1, 1, 10) * PAR.period)
    xd = -PAR.omega * np.sign(orb.y) * np.abs(orb.y) ** (PAR.q - 1)
    assert np.all(orb.peaks >= np.abs(orb.x) + np.abs(xd) - 1e-9)


def test_integrate_validation():
    st0 = PhaseState(1.0, 0.0)
    with pytest.raises(ParameterError):
        integrate(PAR, FREE, st0, -1.0)
    with pytest.raises(ParameterError):
        integrate(PAR, FREE, st0, 1.0, tol=0.0)
    with pytest.raises(ParameterError):
        integrate(PAR, FREE, st0, 1.0, samples=[0.5, 0.2])
    with pytest.raises(IntegrationError):
        integrate(PAR, FREE, st0, 1e6, max_steps=10)


@pytest.mark.parametrize("h", [1e2, 1e3, 1e4, 1e5])
def test_inversion(h):
    for th in (np.arange(8) + 0.5) * PAR.period / 8:
        for t in np.arange(4) * PAR.period / 4:
            r = solve_r_of_h(PAR, REF, h, t, th)
            assert abs(hamiltonian_h(PAR, REF, ActionAngle(r, th), t) - h) < 1e-12 * h


def test_inversion_rejects_bad_h():
    with pytest.raises(InversionError):
        solve_r_of_h(PAR, REF, -1.0, 0.0, 0.3)
    with pytest.raises(InversionError):
        solve_r_of_h(PAR, REF, math.nan, 0.0, 0.3)


def test_hamiltonians_agree():
    aa = ActionAngle(300.0, 2.0)
    x, y = from_action_angle(PAR, aa)
    assert hamiltonian_h(PAR, REF, aa, 0.7) == pytest.approx(hamiltonian_H(PAR, REF, x, y, 0.7), rel=1e-13)


def test_peaks_match_exact_orbit_maximum():
    # max over the closed orbit of (d r)^(1/p) (|v| + omega |v'|), located independently
    from scipy import optimize

    from pjump.jumping import aux_orbit

    r = 1e4

    def neg_amp(th):
        v, u = aux_orbit(PAR, th)
        return -(PAR.d * r) ** (1 / 3) * (abs(v) + PAR.omega * abs(u) ** 0.5)

    th = np.linspace(0, PAR.period, 20001)
    i = int(np.argmin(neg_amp(th)))
    exact = -optimize.minimize_scalar(neg_amp, bracket=(th[i - 1], th[i], th[i + 1]), tol=1e-14).fun
    assert exact == pytest.approx(59.17700025292686, rel=1e-12)
    x, y = from_action_angle(PAR, ActionAngle(r, 0.5))
    orb = integrate(PAR, FREE, PhaseState(float(x), float(y)), 10 * PAR.period,
                    samples=PAR.period * np.arange(1, 11))
    np.testing.assert_allclose(orb.peaks, exact, rtol=1e-8)
