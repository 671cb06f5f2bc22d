import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from starflow import Parameters
from starflow.classical import (FlowError, MeasureState, PointState, VectorFieldSpec,
                                evolution_property_residual, integrate_flow,
                                integrate_timedep, linear_hamiltonian, open_evolve_measure,
                                open_evolve_pure, radial_collapse_points, rotation_const,
                                rotation_radial, timedep_embedding)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0, 4))
def test_rotation_rk4_matches_closed_form(x, y, t):
    spec = rotation_const(1.3)
    rk = integrate_flow(spec, [x, y], t, h=1e-3, use_exact=False)
    assert np.max(np.abs(rk - integrate_flow(spec, [x, y], t))) < 1e-8


@pytest.mark.parametrize("xS,xB,t", [(1.0, 0.0, 0.5), (0.3, -0.8, 2.0)])
def test_rotation_const_open_evolution(xS, xB, t):
    got = open_evolve_pure(rotation_const(), xS, xB, t)
    assert abs(got[0] - (xS * math.cos(t) - xB * math.sin(t))) < 1e-12


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_radial_collapse(t):
    a, b = radial_collapse_points(t)
    spec = rotation_radial()
    ya = open_evolve_pure(spec, a, 0.0, t)
    yb = open_evolve_pure(spec, b, 0.0, t)
    assert abs(ya[0]) < 1e-6 and abs(yb[0]) < 1e-6
    yb_rk = integrate_flow(spec, [b, 0.0], t, h=1e-3, use_exact=False)[0]
    assert abs(yb_rk) < 1e-6


def test_evolution_property_holds_for_rotations():
    for spec in (rotation_const(0.7), rotation_radial()):
        for s, t in [(0.2, 0.5), (1.0, 0.3)]:
            assert evolution_property_residual(spec, 0.6, -0.4, s, t) < 1e-6


def test_linear_hamiltonian_rk4_agrees_with_flow_matrix():
    spec = linear_hamiltonian(Parameters(1.0, 1.0, 1.5))
    x0 = [0.2, 0.1, -0.3, 0.5]
    rk = integrate_flow(spec, x0, 1.4, h=1e-3, use_exact=False)
    assert np.max(np.abs(rk - integrate_flow(spec, x0, 1.4))) < 1e-9


def test_timedep_embedding_matches_closed_form():
    X_t = lambda t, x: t * x
    spec = timedep_embedding(X_t, 1)
    for x0, t in [(1.0, 1.0), (-0.5, 1.5)]:
        emb = open_evolve_pure(spec, x0, 0.0, t, h=1e-3)[0]
        direct = integrate_timedep(X_t, [x0], 0.0, t, h=1e-3)[0]
        assert abs(emb - x0 * math.exp(t * t / 2)) < 1e-6
        assert abs(emb - direct) < 1e-6


def test_measure_state_mixes_point_evolutions():
    spec = rotation_const()
    state = MeasureState((0.25, 0.75), ((0.0,), (1.0,)))
    f = open_evolve_measure(spec, lambda y: y[0], state, 0.6)
    want = 0.25 * open_evolve_pure(spec, 0.4, 0.0, 0.6)[0] + \
        0.75 * open_evolve_pure(spec, 0.4, 1.0, 0.6)[0]
    assert abs(f([0.4]) - want) < 1e-12


def test_measure_state_validation():
    with pytest.raises(ValueError):
        MeasureState((0.5, 0.6), ((0.0,), (1.0,)))
    with pytest.raises(ValueError):
        MeasureState((1.5, -0.5), ((0.0,), (1.0,)))
    with pytest.raises(ValueError):
        PointState((float("nan"),))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_blowup_raises_flow_error():
    spec = VectorFieldSpec(1, 1, lambda x: x ** 3)
    with pytest.raises(FlowError):
        integrate_flow(spec, [10.0, 10.0], 5.0, h=1e-2)


def test_radial_collapse_needs_positive_time():
    with pytest.raises(ValueError):
        radial_collapse_points(0.0)
