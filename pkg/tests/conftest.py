from fractions import Fraction

import pytest
import sympy as sp

from starflow.checks import EXACT_PARAMS, FLOAT_PARAMS

HB = sp.Symbol("hbar")
QS, PS, QB, PB = sp.symbols("qS pS qB pB")
VARS = (QS, PS, QB, PB)


def to_sympy(f):
    """Darboux series as a sympy polynomial in ``qS, pS, qB, pB, hbar``."""
    out = 0
    for (k, mono), c in f.to_darboux().items():
        if hasattr(c, "real") and isinstance(getattr(c, "real"), Fraction):
            coeff = sp.Rational(c.real.numerator, c.real.denominator) + sp.I * sp.Rational(
                c.imag.numerator, c.imag.denominator)
        else:
            z = complex(c)
            coeff = sp.Float(z.real) + sp.I * sp.Float(z.imag)
        term = coeff * HB ** k
        for v, e in zip(VARS, mono):
            term *= v ** e
        out += term
    return sp.expand(out)


@pytest.fixture
def exact_params():
    return EXACT_PARAMS


@pytest.fixture
def float_params():
    return FLOAT_PARAMS


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_line():
    """Print a criterion line and keep it for the end-of-run summary."""
    def emit(line):
        print(line)
        ACCEPTANCE_LINES.append(line)
    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
