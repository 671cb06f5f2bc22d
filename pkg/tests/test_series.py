import random
from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from starflow import DARBOUX, EXACT, FLOAT, FormalSeries
from starflow.sampling import random_series
from starflow.scalars import GaussianRational
from starflow.series import substitute

from conftest import HB, to_sympy


def _rand(seed, **kw):
    return random_series(random.Random(seed), 3, order=4, **kw)


def _truncate(expr, order):
    poly = sp.Poly(sp.expand(expr), HB)
    return sp.expand(sum(c * HB ** m[0] for m, c in zip(poly.monoms(), poly.coeffs())
                         if m[0] <= order))


def test_gaussian_rational_matches_complex():
    a, b = GaussianRational(Fraction(1, 3), 2), GaussianRational(-1, Fraction(1, 2))
    for got, want in [(a + b, complex(a) + complex(b)), (a * b, complex(a) * complex(b)),
                      (a / b, complex(a) / complex(b)), (a ** 3, complex(a) ** 3)]:
        assert abs(complex(got) - want) < 1e-12
    assert (a * a.reciprocal()) == 1
    assert a.conjugate().imag == -a.imag


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(0, 10 ** 6), st.integers(0, 10 ** 6))
def test_ring_laws(s1, s2, s3):
    f, g, h = _rand(s1), _rand(s2), _rand(s3)
    assert (f + g) == (g + f)
    assert (f * g) == (g * f)
    assert ((f * g) * h) == (f * (g * h))
    assert (f * (g + h)) == (f * g + f * h)
    assert (f - f).is_zero()


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(0, 10 ** 6))
def test_product_matches_sympy(s1, s2):
    f, g = _rand(s1), _rand(s2)
    assert sp.expand(to_sympy(f * g) - _truncate(to_sympy(f) * to_sympy(g), 4)) == 0


def test_product_truncates_hbar_order():
    h = FormalSeries.hbar(DARBOUX, 3, EXACT)
    assert (h ** 3).min_hbar_power() == 3
    assert (h ** 4).is_zero()


def test_inverse_of_unit():
    one = FormalSeries.one(DARBOUX, 5, EXACT)
    u = one + FormalSeries.hbar(DARBOUX, 5, EXACT).scale(3)
    assert (u * u.inverse()) == one


def test_lower_divides_by_hbar():
    f = _rand(7).shift(2)
    assert f.lower(2).shift(2) == f


def test_json_round_trip_exact_and_float():
    for backend in (EXACT, FLOAT):
        f = random_series(random.Random(3), 3, order=5, backend=backend)
        assert FormalSeries.from_json(f.to_json(), DARBOUX) == f


def test_derivative_matches_sympy():
    f = _rand(11)
    for i, v in enumerate(sp.symbols("qS pS qB pB")):
        assert sp.expand(to_sympy(f.derivative(i)) - sp.diff(to_sympy(f), v)) == 0


def test_substitute_linear_images():
    f = _rand(5)
    order = f.order
    x = [FormalSeries.variable(n, DARBOUX, order, EXACT) for n in ("qS", "pS", "qB", "pB")]
    images = [x[1], x[0], x[3], x[2]]
    qS, pS, qB, pB = sp.symbols("qS pS qB pB")
    want = to_sympy(f).subs({qS: pS, pS: qS, qB: pB, pB: qB}, simultaneous=True)
    assert sp.expand(to_sympy(substitute(f, images, DARBOUX)) - want) == 0


def test_evaluate_at_point():
    f = _rand(9)
    pt = [Fraction(1, 2), -1, 2, Fraction(1, 3)]
    qS, pS, qB, pB = sp.symbols("qS pS qB pB")
    sub = {qS: sp.Rational(1, 2), pS: -1, qB: 2, pB: sp.Rational(1, 3)}
    assert sp.expand(to_sympy(f.evaluate(pt)) - to_sympy(f).subs(sub)) == 0


def test_negative_order_rejected():
    with pytest.raises(ValueError):
        FormalSeries.zero(DARBOUX, -1)
