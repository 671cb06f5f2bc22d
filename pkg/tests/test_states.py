import math
import random
import threading
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from scipy import integrate

from starflow import (BathState, Parameters, Sign, parse_expression, partition_function,
                      positivity_check, state_moments)
from starflow.sampling import random_bath_series, random_series
from starflow.star import MatrixObservable
from starflow.states import (GaussianFamilyFunction, cp_sample_check, normalized_trace,
                             polynomial_star_gaussian, sech_coefficients,
                             star_exponential_beta_derivative, star_exponential_closed_form,
                             tanh_over_x_coefficients, trace_pairing, x_coth_coefficients,
                             x_over_sinh_coefficients)

X, H = sp.symbols("x hbar", positive=True)
FLOAT = Parameters(1.0, 1.0, 1.5, beta=1.0)


def _taylor(expr, var, n):
    s = sp.series(expr, var, 0, n + 1).removeO()
    return [sp.nsimplify(s.coeff(var, k)) for k in range(n + 1)]


@pytest.mark.parametrize("fn,expr", [
    (sech_coefficients, 1 / sp.cosh(X)),
    (tanh_over_x_coefficients, sp.tanh(X) / X),
    (x_over_sinh_coefficients, X / sp.sinh(X)),
    (x_coth_coefficients, X * sp.coth(X)),
])
def test_taylor_coefficients_match_sympy(fn, expr):
    want = _taylor(expr, X, 10)
    got = fn(10)
    assert [sp.Rational(c.numerator, c.denominator) for c in got[:11]] == want


def _series_values(s):
    return [complex(v) for v in s.constant_values()]


@pytest.mark.parametrize("beta,nu", [(1.0, 1.0), (0.5, 2.0), (2.0, 0.7)])
def test_partition_function_matches_sympy_expansion(beta, nu):
    x = H * beta * nu / 2
    expr = 2 * sp.pi * H * sp.exp(-x) / (1 - sp.exp(-2 * x))
    want = [float(c) for c in _taylor(expr, H, 6)]
    mu, Z = partition_function(beta, Parameters(1.0, nu, 0.0), 6)
    assert np.max(np.abs(np.array(_series_values(mu)) - want)) < 1e-10
    assert abs(Z.principal_part - 1 / (beta * nu)) < 1e-12


def test_kms_second_moments_match_sympy():
    m, nu, beta = 2.0, 0.5, 1.3
    params = Parameters(m, nu, 0.0, beta=beta)
    state = BathState.kms(params)
    x = H * beta * nu / 2
    q2 = _taylor(H / (2 * m * nu * sp.tanh(x)), H, 6)
    p2 = _taylor(H * m * nu / (2 * sp.tanh(x)), H, 6)
    assert np.allclose(_series_values(state_moments(state, (2, 0))), [float(c) for c in q2],
                       atol=1e-10)
    assert np.allclose(_series_values(state_moments(state, (0, 2))), [float(c) for c in p2],
                       atol=1e-10)


def test_kms_classical_limit_is_gibbs_integral():
    m, nu, beta = 1.5, 0.8, 0.9
    state = BathState.kms(Parameters(m, nu, 0.0, beta=beta))

    def gibbs(f):
        w = lambda p, q: f(q, p) * math.exp(-beta * (p * p / (2 * m) + m * nu * nu * q * q / 2))
        return integrate.dblquad(w, -12, 12, -12, 12)[0]

    z = gibbs(lambda q, p: 1.0)
    for (i, j) in [(2, 0), (0, 2), (4, 0), (2, 2)]:
        want = gibbs(lambda q, p: q ** i * p ** j) / z
        assert abs(complex(state_moments(state, (i, j)).constant_values()[0]) - want) < 1e-7


def test_kms_odd_moments_vanish():
    state = BathState.kms(FLOAT)
    for mono in [(1, 0), (0, 1), (1, 2), (3, 0), (1, 1)]:
        assert state_moments(state, mono).is_zero(1e-12)


def test_kms_exact_backend_is_exact(exact_params):
    state = BathState.kms(exact_params)
    vals = state_moments(state, (2, 0)).constant_values()
    # x coth x with x = hbar/2: 1 + x^2/3 - ...
    assert vals[0] == 1 and vals[1] == 0 and vals[2] == Fraction(1, 12)


def test_star_exponential_order_zero_is_boltzmann():
    G = star_exponential_closed_form(1.0, FLOAT, 4)
    for q, p in [(0.0, 0.0), (0.7, -1.2), (2.0, 0.3)]:
        assert abs(G.evaluate(q, p)[0] - math.exp(-(p * p / 2 + q * q / 2))) < 1e-12


def test_star_exponential_beta_derivative_by_finite_difference():
    d = 1e-5
    for q, p in [(0.3, -0.4), (1.1, 0.9)]:
        hi = star_exponential_closed_form(1.0 + d, FLOAT, 4).evaluate(q, p)
        lo = star_exponential_closed_form(1.0 - d, FLOAT, 4).evaluate(q, p)
        got = star_exponential_beta_derivative(1.0, FLOAT, 4).evaluate(q, p)
        assert np.max(np.abs((np.array(hi) - np.array(lo)) / (2 * d) - np.array(got))) < 1e-7


def test_star_exponential_solves_ode():
    H_B = parse_expression("qB^2/2 + pB^2/2", order=4).to_backend("float")
    G = star_exponential_closed_form(0.8, FLOAT, 4)
    residual = star_exponential_beta_derivative(0.8, FLOAT, 4) + polynomial_star_gaussian(H_B, G)
    for q, p in [(0.0, 0.0), (0.5, 1.5), (-2.0, 0.1)]:
        assert max(abs(v) for v in residual.evaluate(q, p)) < 1e-12


def test_trace_of_star_product_equals_trace_of_product():
    G = star_exponential_closed_form(1.0, FLOAT, 4)
    rng = random.Random(8)
    for _ in range(5):
        f = random_bath_series(rng, 3, order=4, backend="float")
        left = trace_pairing(polynomial_star_gaussian(f, G))
        right = trace_pairing(polynomial_star_gaussian(f, G, reverse=True))
        plain = trace_pairing(G, f)
        assert left.max_deviation(plain) < 1e-10 and right.max_deviation(plain) < 1e-10


def test_normalized_trace_of_plain_gaussian():
    g = GaussianFamilyFunction(parse_expression("qB^2*pB^2", order=2).to_backend("float"), 2.0, 0.5)
    # <q^2> = 1/(2a), <p^2> = 1/(2b)
    assert abs(complex(normalized_trace(g).constant_values()[0]) - 0.25) < 1e-12


def test_deformed_delta_moments(exact_params):
    state = BathState.deformed_delta(exact_params, Fraction(1, 2), -1)
    assert state_moments(state, (2, 0)) == parse_expression("1/4 + hbar/2")
    assert state_moments(state, (0, 2)) == parse_expression("1 + hbar/2")
    assert state_moments(state, (1, 1)) == parse_expression("-1/2")


def test_delta_fails_positivity_on_zb(exact_params):
    zB = parse_expression("qB + i*pB")
    assert positivity_check(BathState.delta(exact_params), zB) is Sign.NEGATIVE
    assert positivity_check(BathState.deformed_delta(exact_params), zB) is not Sign.NEGATIVE
    assert positivity_check(BathState.kms(exact_params), zB) is Sign.POSITIVE


def test_positivity_random_bath_polynomials(exact_params):
    rng = random.Random(12)
    states = [BathState.deformed_delta(exact_params, 1, -1), BathState.kms(exact_params)]
    for _ in range(30):
        f = random_bath_series(rng, 3, order=4)
        for state in states:
            assert positivity_check(state, f) is not Sign.NEGATIVE


def test_cp_sample_check_random_matrices(exact_params):
    rng = random.Random(13)
    state = BathState.kms(exact_params, order=3)
    F = MatrixObservable([[random_series(rng, 2, order=3) for _ in range(2)] for _ in range(2)])
    assert cp_sample_check(state, F, [(0.0, 0.0), (0.5, -1.0)]).ok


def test_state_moments_rejects_system_variables():
    with pytest.raises(ValueError, match="system variables"):
        state_moments(BathState.kms(FLOAT), (1, 0, 2, 0))


def test_kms_requires_positive_beta():
    with pytest.raises(ValueError, match="beta"):
        BathState.kms(Parameters(1.0, 1.0, 0.0))
    with pytest.raises(ValueError, match="beta must be positive"):
        BathState.kms(Parameters(1.0, 1.0, 0.0), beta=-1.0)


def test_moment_cache_is_thread_safe():
    state = BathState.kms(FLOAT)
    results = []

    def work():
        results.append(state_moments(state, (4, 2)))

    threads = [threading.Thread(target=work) for _ in range(8)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    assert all(r.equals(results[0]) for r in results)
