import random

import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from starflow import (DARBOUX, EXACT, FormalSeries, MatrixObservable, apply_exp_laplacian,
                      laplacian, matrix_star, parse_expression, square_preserving_witness,
                      star_commutator, star_product, weyl_star, wick_star)
from starflow.frames import get_frame
from starflow.sampling import random_bath_series, random_series

from conftest import HB, VARS, to_sympy

LEFT = sp.symbols("a0:4")
RIGHT = sp.symbols("b0:4")


def moyal_oracle(f, g, order):
    """Weyl-Moyal product by repeated application of the Poisson bidifferential operator."""
    fl = f.subs(dict(zip(VARS, LEFT)), simultaneous=True)
    gr = g.subs(dict(zip(VARS, RIGHT)), simultaneous=True)
    term = fl * gr
    total = term
    for n in range(1, order + 1):
        term = sum(sp.diff(term, LEFT[2 * k], RIGHT[2 * k + 1])
                   - sp.diff(term, LEFT[2 * k + 1], RIGHT[2 * k]) for k in range(2))
        total += (sp.I * HB / 2) ** n / sp.factorial(n) * term
    back = dict(zip(LEFT, VARS)) | dict(zip(RIGHT, VARS))
    out = sp.expand(total.subs(back, simultaneous=True))
    poly = sp.Poly(out, HB)
    return sp.expand(sum(c * HB ** m[0] for m, c in zip(poly.monoms(), poly.coeffs())
                         if m[0] <= order))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_weyl_matches_moyal_oracle(seed):
    rng = random.Random(seed)
    f, g = (random_series(rng, 3, order=4, max_terms=3) for _ in range(2))
    got = to_sympy(weyl_star(f, g))
    assert sp.expand(got - moyal_oracle(to_sympy(f), to_sympy(g), 4)) == 0


def test_canonical_commutator():
    q, p = parse_expression("qS"), parse_expression("pS")
    assert star_commutator(q, p) == parse_expression("i*hbar")
    assert star_commutator(parse_expression("qB"), parse_expression("pB")) == parse_expression(
        "i*hbar")
    assert star_commutator(q, parse_expression("pB")).is_zero()


def test_wick_factorized_normal_ordering(exact_params):
    frame = get_frame("factorized", exact_params)
    z = parse_expression("zS", frame, exact_params)
    zb = parse_expression("zbS", frame, exact_params)
    assert wick_star(z, zb, "factorized", exact_params) == z * zb + parse_expression(
        "2*hbar", frame, exact_params)
    assert wick_star(zb, z, "factorized", exact_params) == z * zb


def test_wick_total_scaled_mode(exact_params):
    # w = lam (qS + qB) + i (pS + pB) with lam = m nu_kappa = 2
    w = parse_expression("2*(qS + qB) + i*(pS + pB)")
    star = star_product("wick-total", exact_params)
    assert star.commutator(w, w.conj()) == parse_expression("8*hbar")


def test_unit_and_hermiticity_float(float_params):
    rng = random.Random(1)
    star = star_product("wick-total", float_params)
    one = FormalSeries.one(DARBOUX, 4)
    for _ in range(5):
        f, g = (random_series(rng, 3, order=4).to_backend("float") for _ in range(2))
        assert star(f, g).conj().equals(star(g.conj(), f.conj()), 1e-12)
        assert star(one.to_backend("float"), f).equals(f, 1e-12)


def test_laplacian_intertwines_weyl_and_wick(exact_params):
    rng = random.Random(5)
    spec = laplacian("total", exact_params)
    wick = star_product("wick-total", exact_params)
    for _ in range(10):
        f, g = (random_series(rng, 3, order=4) for _ in range(2))
        S = lambda h: apply_exp_laplacian(h, spec)
        assert S(weyl_star(f, g)) == wick(S(f), S(g))


def test_exp_laplacian_inverse(exact_params):
    spec = laplacian("bath", exact_params)
    f = random_series(random.Random(2), 4, order=5)
    assert apply_exp_laplacian(apply_exp_laplacian(f, spec, +1), spec, -1) == f


def test_bath_laplacian_on_quadratic(exact_params):
    spec = laplacian("bath", exact_params)
    got = apply_exp_laplacian(parse_expression("qB^2 + pB^2"), spec)
    assert got == parse_expression("qB^2 + pB^2 + hbar")


def test_square_preserving_witness_exact(exact_params):
    rng = random.Random(3)
    spec = laplacian("bath", exact_params)
    for _ in range(10):
        f = random_bath_series(rng, 3, order=4)
        assert square_preserving_witness(f, spec).ok


def test_matrix_star_identity():
    rng = random.Random(4)
    A = MatrixObservable([[random_series(rng, 2, order=3) for _ in range(2)] for _ in range(2)])
    one = MatrixObservable.identity(2, order=3, backend=EXACT)
    assert matrix_star(A, one).equals(A)
    assert matrix_star(one, A).equals(A)
