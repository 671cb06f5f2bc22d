import numpy as np
import pytest
import sympy as sp
from scipy.linalg import expm

from starflow import (DARBOUX, FormalSeries, Parameters, flow_matrix, hamiltonian_catalog,
                      heisenberg_evolve, parse_expression, poisson_bracket)
from starflow.dynamics import (classical_pullback, delta_h_system_reference,
                               golden_total_evolution, hamiltonian_generator,
                               heisenberg_residual, reference_formula_h_system,
                               reference_formula_ps, reference_formula_qs,
                               wick_picture_evolve)
from starflow.star import apply_laplacian, laplacian

PARAMS = [Parameters(1.0, 1.0, 1.5, beta=1.0), Parameters(2.0, 0.5, 0.3),
          Parameters(0.7, 1.3, 0.0)]


@pytest.mark.parametrize("params", PARAMS)
@pytest.mark.parametrize("t", [0.0, 0.4, 1.7, 5.2])
def test_flow_matrix_is_matrix_exponential(params, t):
    want = expm(t * hamiltonian_generator(params))
    assert np.max(np.abs(flow_matrix(t, params).as_array() - want)) < 1e-12


def test_flow_matrix_solves_hamilton_equations_symbolically():
    t, m, nu, k = sp.symbols("t m nu kappa", positive=True)
    nk = sp.sqrt(nu ** 2 + 2 * k / m)
    c1, c2, s1, s2 = sp.cos(nu * t), sp.cos(nk * t), sp.sin(nu * t), sp.sin(nk * t)
    ap, am = s1 / (m * nu) + s2 / (m * nk), s1 / (m * nu) - s2 / (m * nk)
    bp, bm = -m * (nu * s1 + nk * s2), -m * (nu * s1 - nk * s2)
    M = sp.Matrix([[c1 + c2, ap, c1 - c2, am], [bp, c1 + c2, bm, c1 - c2],
                   [c1 - c2, am, c1 + c2, ap], [bm, c1 - c2, bp, c1 + c2]]) / 2
    Q = sp.diag(m * nu ** 2 + k, 1 / m, m * nu ** 2 + k, 1 / m)
    Q[0, 2] = Q[2, 0] = -k
    J = sp.Matrix([[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]])
    residual = (M.diff(t) - J * Q * M).applyfunc(sp.simplify)
    assert residual == sp.zeros(4, 4)
    assert M.subs(t, 0) == sp.eye(4)


def test_pullback_derivative_is_poisson_bracket():
    params = PARAMS[0]
    H = hamiltonian_catalog(params, 2).total
    f = parse_expression("qS^2*pB + pS", order=2).to_backend("float")
    t, dt = 0.8, 1e-5
    fd = (classical_pullback(f, t + dt, params) - classical_pullback(f, t - dt, params)).scale(
        1 / (2 * dt))
    assert fd.max_deviation(poisson_bracket(classical_pullback(f, t, params), H)) < 1e-7


@pytest.mark.parametrize("name", ["qS", "pS", "H_System"])
def test_heisenberg_residual_small(name):
    params = PARAMS[0]
    f = (hamiltonian_catalog(params, 4).system if name == "H_System"
         else FormalSeries.variable(name, DARBOUX, 4))
    assert max(heisenberg_residual(f, 1.1, params=params)) < 1e-6


def test_quadratic_evolution_has_no_quantum_correction():
    params = PARAMS[0]
    for name in ("qS", "pB", "H_System", "H_total"):
        f = golden_total_evolution(name, 0.0, params, 4)
        got = heisenberg_evolve(f, 0.9, params)
        assert got.max_deviation(golden_total_evolution(name, 0.9, params, 4)) < 1e-10


def test_energy_conserved():
    params = PARAMS[1]
    H = hamiltonian_catalog(params, 3).total
    assert heisenberg_evolve(H, 2.3, params).max_deviation(H) < 1e-10


def test_wick_picture_is_classical_pullback():
    params = PARAMS[0]
    f = parse_expression("qS^3 + qB*pS^2", order=4).to_backend("float")
    assert wick_picture_evolve(f, 0.6, params).max_deviation(
        classical_pullback(f, 0.6, params)) < 1e-10


@pytest.mark.parametrize("t", [0.0, 0.5, 2.0])
def test_laplacian_of_evolved_h_system_is_constant(t):
    params = PARAMS[0]
    H = golden_total_evolution("H_System", t, params, 2)
    lap = apply_laplacian(H, laplacian("total", params))
    assert abs(complex(lap.coeff(0).constant_term()) - delta_h_system_reference(params)) < 1e-10


def test_printed_qs_formula_agrees():
    params = PARAMS[0]
    assert reference_formula_qs(0.7, params).max_deviation(
        golden_total_evolution("qS", 0.7, params)) < 1e-12


def test_printed_ps_formula_disagrees_by_sin_cos():
    params = PARAMS[0]
    gap = reference_formula_ps(0.7, params).max_deviation(golden_total_evolution("pS", 0.7, params))
    assert gap > 1e-3


def test_printed_h_system_qs_pb_coefficient():
    params = Parameters(2.0, 0.5, 0.3)
    m, nu, nk, t = params.m, params.nu, params.nu_kappa, 0.7
    gold = golden_total_evolution("H_System", t, params)
    printed = reference_formula_h_system(t, params)
    key = (0, (1, 0, 0, 1))
    gap = complex(printed.terms.get(key, 0)) - complex(gold.terms.get(key, 0))
    c1, c2 = np.cos(nu * t), np.cos(nk * t)
    s1, s2 = np.sin(nu * t), np.sin(nk * t)
    want = -(c1 - c2) * ((s1 / (m * nu) + s2 / (m * nk)) - (nu * s1 + nk * s2)) / 4
    assert abs(gap - want) < 1e-12
