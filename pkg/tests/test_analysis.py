import numpy as np
import pytest

from pjump.analysis import (amplitude_to_action, boundedness_experiment, detect_invariant_curve,
                            rotation_number, sample_initial_conditions, twist_diagnostic)
from pjump.dynamics import ActionAngle, PhaseState, from_action_angle
from pjump.errors import ParameterError
from pjump.forcing import ForcingSpec
from pjump.jumping import derive_params
from pjump.reduction import dyadic_grid

PAR = derive_params(8.0, 1.0, 3.0)
GENERIC = derive_params(8.0, 2.0, 3.0)  # irrational omega
REF = ForcingSpec(1.0, 0.4, ((1, 0.5, 0.0),))
FREE = ForcingSpec.unperturbed()


def _state(par, r, th):
    x, y = from_action_angle(par, ActionAngle(r, th))
    return PhaseState(float(x), float(y))


def test_rotation_integrable_baseline():
    est = rotation_number(PAR, FREE, _state(PAR, 500.0, 1.0), 1000)
    assert est.value == pytest.approx(1.0 / 3.0, abs=1e-6)
    assert est.residual < 1e-6 and est.converged
    assert est.mean_advance == pytest.approx(PAR.period * PAR.omega, rel=1e-9)


def test_rotation_generic_omega():
    est = rotation_number(GENERIC, FREE, _state(GENERIC, 50.0, 0.2), 200)
    assert est.value == pytest.approx(GENERIC.omega - 1.0, abs=1e-6)


def test_rotation_additivity_on_curve():
    st = _state(GENERIC, 1e5, 0.4)
    n1 = rotation_number(GENERIC, REF, st, 400)
    n2 = rotation_number(GENERIC, REF, st, 800)
    assert n1.converged and n2.converged
    assert abs(n1.value - n2.value) <= 2 * n1.residual + 1e-12


def test_rotation_requires_iterates():
    with pytest.raises(ParameterError):
        rotation_number(PAR, FREE, _state(PAR, 10.0, 0.0), 50)


def test_twist_zero_without_forcing():
    rep = twist_diagnostic(PAR, FREE, dyadic_grid(1e2, 1e4), n_theta=2, window=16)
    assert rep.extra["direction"] == "flat"
    assert not rep.passed


def test_twist_monotone_decreasing():
    rep = twist_diagnostic(PAR, REF.without_e(), dyadic_grid(1e2, 1e4), n_theta=4, window=32, threads=2)
    assert rep.extra["direction"] == "decreasing"
    assert abs(rep.fitted_slope - rep.claimed_slope) < 0.2
    assert rep.passed


def test_twist_grid_validation():
    with pytest.raises(ParameterError):
        twist_diagnostic(PAR, REF, [1e2, 1e3])
    with pytest.raises(ParameterError):
        twist_diagnostic(PAR, REF, [1e2, 2e2, 5e2])


def test_curve_integrable():
    v = detect_invariant_curve(GENERIC, FREE, _state(GENERIC, 300.0, 1.0), 1000, check_confinement=True)
    assert v.is_curve and v.residual < 1e-6 and v.confined


def test_curve_rational_rotation_does_not_fill():
    # omega = 4/3: the unperturbed map is periodic of order 3 and cannot fill the circle
    v = detect_invariant_curve(PAR, FREE, _state(PAR, 300.0, 1.0), 1000)
    assert v.verdict == "no-curve" and "angles do not fill the circle" in v.reasons


def test_curve_perturbed_generic():
    ics = sample_initial_conditions(GENERIC, 3, seed=7)
    for ic in ics:
        v = detect_invariant_curve(GENERIC, REF, ic, 1000, check_confinement=True)
        assert v.is_curve and v.residual < 1e-3 and v.confined


def test_curve_requires_iterates():
    with pytest.raises(ParameterError):
        detect_invariant_curve(PAR, FREE, _state(PAR, 10.0, 0.0), 999)


def test_boundedness_integrable():
    ics = [_state(PAR, 1e4, th) for th in (0.5, 3.0)]
    recs = boundedness_experiment(PAR, FREE, ics, 200)
    for rec in recs:
        assert rec.second_half_max == pytest.approx(rec.first_half_max, rel=1e-6)
        assert rec.sup_norm == max(rec.first_half_max, rec.second_half_max)


def test_boundedness_perturbed_and_threads():
    ics = sample_initial_conditions(GENERIC, 4, seed=3)
    a = boundedness_experiment(GENERIC, REF, ics, 200)
    b = boundedness_experiment(GENERIC, REF, ics, 200, threads=4)
    assert a == b
    assert all(r.second_half_max <= 1.5 * r.first_half_max for r in a)


def test_boundedness_edge_cases():
    assert boundedness_experiment(PAR, REF, [], 200) == []
    with pytest.raises(ParameterError):
        boundedness_experiment(PAR, REF, [], 100)


def test_sampling_amplitudes_and_determinism():
    ics = sample_initial_conditions(PAR, 50, seed=11)
    amp = np.array([abs(s.x) + PAR.omega * abs(s.y) ** (PAR.q - 1) for s in ics])
    assert np.all(amp >= 1e2 * (1 - 1e-12)) and np.all(amp <= 1e3 * (1 + 1e-12))
    assert ics == sample_initial_conditions(PAR, 50, seed=11)
    assert ics != sample_initial_conditions(PAR, 50, seed=12)


def test_amplitude_to_action_homogeneous():
    r1 = amplitude_to_action(PAR, 100.0, 1.3)
    r2 = amplitude_to_action(PAR, 200.0, 1.3)
    assert r2 / r1 == pytest.approx(2.0 ** 3, rel=1e-13)
    x, y = from_action_angle(PAR, ActionAngle(r1, 1.3))
    assert abs(x) + PAR.omega * abs(y) ** 0.5 == pytest.approx(100.0, rel=1e-13)
