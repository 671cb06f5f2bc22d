import pytest

from starflow import DARBOUX, FormalSeries, ParseError, parse_expression
from starflow.frames import get_frame
from starflow.parser import MAX_EXPONENT


def test_parse_matches_construction():
    q = FormalSeries.variable("qS", DARBOUX)
    p = FormalSeries.variable("pB", DARBOUX)
    h = FormalSeries.hbar(DARBOUX)
    want = q * q * p + h.scale(3) - q
    assert parse_expression("qS^2*pB + 3*hbar - qS") == want


def test_rational_literal_and_precedence():
    assert parse_expression("1/2*qS") + parse_expression("1/2*qS") == parse_expression("qS")
    assert parse_expression("-qS^2") == -parse_expression("qS*qS")
    assert parse_expression("(qS + pS)^2") == parse_expression("qS^2 + 2*qS*pS + pS^2")


def test_imaginary_unit():
    assert parse_expression("i*i") == parse_expression("-1")


def test_complex_variable_in_darboux(exact_params):
    z = parse_expression("zS", get_frame("factorized", exact_params), exact_params)
    assert z.to_darboux() == parse_expression("qS + i*pS")


def test_error_positions():
    with pytest.raises(ParseError) as err:
        parse_expression("qS + * 2")
    assert err.value.pos == 5
    with pytest.raises(ParseError) as err:
        parse_expression("qS + foo")
    assert err.value.pos == 5
    with pytest.raises(ParseError) as err:
        parse_expression("(qS")
    assert err.value.pos == 3


def test_exponent_limit():
    parse_expression(f"qS^{MAX_EXPONENT}", order=0)
    with pytest.raises(ParseError):
        parse_expression(f"qS^{MAX_EXPONENT + 1}")


def test_division_only_by_nonzero_constants():
    with pytest.raises(ParseError):
        parse_expression("1/qS")
    with pytest.raises(ParseError):
        parse_expression("qS/0")


def test_frame_variables_need_params():
    with pytest.raises(ParseError):
        parse_expression("zS")
