"""Frame-aware calculus on formal series and the ordered-ring sign of R[[hbar]]."""

from __future__ import annotations

import enum
from fractions import Fraction
from typing import Sequence

from . import scalars
from .frames import (DARBOUX, BATH_INDICES, CoordinateFrame, _mat_mul, frame_of_variable,
                     get_frame, linear_map_series, matrix_backend)
from .scalars import EXACT, FLOAT
from .series import FormalSeries, Polynomial, substitute, sum_series

# (q index, p index) pairs of the Darboux frame
CANONICAL_PAIRS = ((0, 1), (2, 3))


def _frame_for_variable(var: str, f: FormalSeries, frame: CoordinateFrame | None) -> CoordinateFrame:
    name = frame_of_variable(var)
    if name == "darboux":
        return DARBOUX
    params = None
    if frame is not None and frame.params is not None:
        params = frame.params
    elif f.frame.params is not None:
        params = f.frame.params
    if params is None:
        raise ValueError(f"variable {var!r} needs model parameters; pass a parametrised frame")
    return get_frame(name, params)


def differentiate(f: FormalSeries, var: str, frame: CoordinateFrame | None = None) -> FormalSeries:
    """Partial derivative of ``f`` with respect to ``var``.

    If ``var`` belongs to another frame than ``f``, the chain rule through the
    Darboux coordinates is applied and the result stays in ``f``'s frame.

    Raises:
        KeyError: for an unknown variable name.
    """
    if var in f.frame:
        return f.derivative(f.frame.index(var))
    target = _frame_for_variable(var, f, frame)
    # d/dvar = sum_j T_B[j][var] d/dx_j and d/dx_j = sum_i W_A[i][j] d/dw_i
    direction = _mat_mul(f.frame.W, tuple((c,) for c in target.derivative_direction(var)))
    return directional_derivative(f, [row[0] for row in direction])


def directional_derivative(f: FormalSeries, coeffs: Sequence) -> FormalSeries:
    parts = []
    for i, c in enumerate(coeffs):
        if c:
            parts.append(f.derivative(i).scale(c))
    backend = scalars.join_backends(f.backend, *(scalars.backend_of(c) for c in coeffs if c))
    return sum_series(parts, f.frame, f.order, backend)


def substitute_linear(f: FormalSeries, matrix, offset=None) -> FormalSeries:
    """Pull back ``f`` along ``x -> matrix @ x + offset`` in ``f``'s own frame.

    Variable ``x_i`` is replaced by ``sum_j matrix[i][j] x_j + offset[i]``.
    The composite of substituting ``B`` and then ``A`` equals substituting
    the matrix product ``B @ A``.

    Raises:
        ValueError: if the map does not match the frame dimension.
    """
    backend = scalars.join_backends(f.backend, matrix_backend(matrix, offset))
    mat = [[scalars.to_scalar(x, backend) for x in row] for row in matrix]
    off = None if offset is None else [scalars.to_scalar(x, backend) for x in offset]
    images = linear_map_series(mat, off, f.frame, f.order, backend)
    return substitute(f.to_backend(backend), images, f.frame, f.order)


def evaluation_embedding(bath_point: Sequence, backend: str | None = None):
    """Matrix and offset of ``(qS, pS, qB, pB) -> (qS, pS, q0, p0)`` in Darboux coordinates."""
    matrix = [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]]
    offset = [0, 0, bath_point[0], bath_point[1]]
    return matrix, offset


def _common_frame(f: FormalSeries, g: FormalSeries):
    if f.frame == g.frame:
        return f.frame
    return DARBOUX


def poisson_bracket(f: FormalSeries, g: FormalSeries) -> FormalSeries:
    """Canonical bracket ``{f, g} = sum_i df/dq_i dg/dp_i - df/dp_i dg/dq_i``."""
    out_frame = _common_frame(f, g)
    a, b = f.to_darboux(), g.to_darboux()
    order = min(a.order, b.order)
    parts = []
    for qi, pi in CANONICAL_PAIRS:
        parts.append(a.derivative(qi) * b.derivative(pi))
        parts.append(-(a.derivative(pi) * b.derivative(qi)))
    backend = scalars.join_backends(a.backend, b.backend)
    return sum_series(parts, DARBOUX, order, backend).to_frame(out_frame)


class Sign(str, enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    ZERO = "zero-at-truncation"
    INDEFINITE = "indefinite"

    def __str__(self) -> str:
        return self.value


def series_sign(a: FormalSeries, tol: float | None = None) -> Sign:
    """Sign of a real constant series in the ordered ring ``R[[hbar]]``.

    The series is positive when its lowest non-zero coefficient is positive.
    Under the float backend a lowest coefficient that is non-zero but within
    ``tol`` of zero makes the answer ``INDEFINITE`` unless every coefficient
    is within ``tol``, in which case the series counts as zero.

    Raises:
        ValueError: for non-constant or non-real coefficients.
    """
    if tol is None:
        tol = scalars.default_tol()
    values = a.constant_values()
    exact = a.backend == EXACT
    for v in values:
        im = v.imag
        if (im != 0) if exact else abs(im) > tol:
            raise ValueError(f"series has a non-real coefficient {v}")
    reals = [v.real for v in values]
    if exact:
        for r in reals:
            if r > 0:
                return Sign.POSITIVE
            if r < 0:
                return Sign.NEGATIVE
        return Sign.ZERO
    if all(abs(r) <= tol for r in reals):
        return Sign.ZERO
    for r in reals:
        if r > tol:
            return Sign.POSITIVE
        if r < -tol:
            return Sign.NEGATIVE
        if r != 0:
            return Sign.INDEFINITE
    return Sign.ZERO  # pragma: no cover - unreachable


def _double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def normalized_moment_1d(power: int, a, backend: str):
    """``<x^power>`` for the normalised density proportional to ``exp(-a x^2)``."""
    if power % 2:
        return scalars.to_scalar(0, backend)
    k = power // 2
    if backend == EXACT:
        return scalars.to_scalar(Fraction(_double_factorial(2 * k - 1)) / (2 * Fraction(a)) ** k,
                                 EXACT)
    return complex(_double_factorial(2 * k - 1) / (2.0 * float(a)) ** k)


def gaussian_moment(poly, a, b):
    """Normalised Gaussian expectation of a bath polynomial.

    Returns ``int poly exp(-a qB^2 - b pB^2) / int exp(-a qB^2 - b pB^2)``.

    Raises:
        ValueError: for non-positive ``a`` or ``b``, or system variables in ``poly``.
    """
    if not a > 0 or not b > 0:
        raise ValueError("Gaussian width parameters must be positive")
    if isinstance(poly, FormalSeries):
        if poly.frame != DARBOUX:
            poly = poly.to_darboux()
        if any(k for (k, _) in poly.terms):
            raise ValueError("gaussian_moment expects an hbar-free polynomial")
        poly = poly.coeff(0)
    if poly.frame != DARBOUX:
        raise ValueError("gaussian_moment expects a polynomial in Darboux coordinates")
    backend = poly.backend
    if isinstance(a, float) or isinstance(b, float):
        backend = FLOAT
    total = scalars.to_scalar(0, backend)
    for m, c in poly.terms.items():
        if any(m[i] for i in range(DARBOUX.dim) if i not in BATH_INDICES):
            raise ValueError("gaussian_moment: polynomial contains system variables")
        total = total + scalars.to_scalar(c, backend) * normalized_moment_1d(m[2], a, backend) \
            * normalized_moment_1d(m[3], b, backend)
    return total


def split_system_bath(mono: Sequence[int]):
    """Split a Darboux exponent vector into system and bath parts."""
    sys_part = tuple(e if i not in BATH_INDICES else 0 for i, e in enumerate(mono))
    bath_part = tuple(mono[i] for i in BATH_INDICES)
    return sys_part, bath_part


def polynomial_from_series(f: FormalSeries) -> Polynomial:
    return f.coeff(0)
