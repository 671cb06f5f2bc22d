"""Coefficient scalars: exact Gaussian rationals and float64 complex numbers.

Two backends are supported. ``"exact"`` stores coefficients as
:class:`GaussianRational` (a pair of :class:`fractions.Fraction`), so every
algebraic identity can be checked with ``==``. ``"float"`` stores plain
Python ``complex`` values and compares with an absolute tolerance.
"""

from __future__ import annotations

import math
import os
from fractions import Fraction
from numbers import Rational

from gmpy2 import mpq

EXACT = "exact"
FLOAT = "float"
BACKENDS = (EXACT, FLOAT)

_DEFAULT_TOL = 1e-10


def default_tol() -> float:
    """Absolute tolerance for float comparisons (``STARFLOW_TOL`` overrides)."""
    raw = os.environ.get("STARFLOW_TOL")
    if raw is None:
        return _DEFAULT_TOL
    try:
        value = float(raw)
    except ValueError:
        raise ValueError(f"STARFLOW_TOL must be a number, got {raw!r}") from None
    if not value > 0:
        raise ValueError(f"STARFLOW_TOL must be positive, got {raw!r}")
    return value


class GaussianRational:
    """Exact complex number ``re + i*im`` with rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if type(re) is _MPQ else mpq(re)
        self.im = im if type(im) is _MPQ else mpq(im)

    @staticmethod
    def _coerce(other):
        if type(other) is GaussianRational:
            return other
        if isinstance(other, (int, Fraction, _MPQ)) or isinstance(other, Rational):
            return GaussianRational(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return complex(self) + other
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return complex(self) - other
        return GaussianRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return other - complex(self)
        return GaussianRational(o.re - self.re, o.im - self.im)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return complex(self) * other
        if not o.im:
            return GaussianRational(self.re * o.re, self.im * o.re)
        if not self.im:
            return GaussianRational(self.re * o.re, self.re * o.im)
        return GaussianRational(self.re * o.re - self.im * o.im,
                                self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return complex(self) / other
        return self * o.reciprocal()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return other / complex(self)
        return o * self.reciprocal()

    def __pow__(self, n):
        if not isinstance(n, int):
            return complex(self) ** n
        if n < 0:
            return self.reciprocal() ** (-n)
        result = GaussianRational(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def reciprocal(self) -> "GaussianRational":
        norm = self.re * self.re + self.im * self.im
        if not norm:
            raise ZeroDivisionError("division by exact zero")
        return GaussianRational(self.re / norm, -self.im / norm)

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __pos__(self):
        return self

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    @property
    def real(self) -> Fraction:
        return Fraction(self.re.numerator, self.re.denominator)

    @property
    def imag(self) -> Fraction:
        return Fraction(self.im.numerator, self.im.denominator)

    def __abs__(self) -> float:
        return math.hypot(float(self.re), float(self.im))

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            if isinstance(other, (float, complex)):
                return complex(self) == other
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if not self.im:
            return hash(self.re)
        return hash((self.re, self.im))

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __repr__(self) -> str:
        return f"GaussianRational({self.re}, {self.im})"

    def __str__(self) -> str:
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}*i"
        sign = "+" if self.im > 0 else "-"
        return f"({self.re} {sign} {abs(self.im)}*i)"


_MPQ = type(mpq(0))
I = GaussianRational(0, 1)


def to_scalar(value, backend: str):
    """Convert ``value`` to the coefficient type of ``backend``."""
    if backend == FLOAT:
        return complex(value)
    if backend != EXACT:
        raise ValueError(f"unknown scalar backend {backend!r}")
    if type(value) is GaussianRational:
        return value
    if isinstance(value, bool):
        return GaussianRational(int(value))
    if isinstance(value, (int, Fraction, _MPQ)):
        return GaussianRational(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r}")
        return GaussianRational(Fraction(value))
    if isinstance(value, complex):
        return GaussianRational(Fraction(value.real), Fraction(value.imag))
    if isinstance(value, str):
        return GaussianRational(Fraction(value))
    raise TypeError(f"cannot convert {type(value).__name__} to an exact scalar")


def backend_of(value) -> str:
    if type(value) is GaussianRational or isinstance(value, (int, Fraction, _MPQ)):
        return EXACT
    return FLOAT


def join_backends(*backends: str) -> str:
    """Float wins: mixing an exact and a float operand yields a float result."""
    return FLOAT if FLOAT in backends else EXACT


def real_value(value, backend: str):
    """Scalar parameter value in the backend's real type (Fraction or float)."""
    if backend == EXACT:
        if isinstance(value, float):
            return Fraction(value)
        return Fraction(value)
    return float(value)


def exact_sqrt(value: Fraction) -> Fraction:
    """Square root of a non-negative rational that is a perfect square.

    Raises:
        ValueError: if ``value`` is negative or its root is irrational.
    """
    value = Fraction(value)
    if value < 0:
        raise ValueError(f"square root of negative value {value}")
    num, den = value.numerator, value.denominator
    rn, rd = math.isqrt(num), math.isqrt(den)
    if rn * rn != num or rd * rd != den:
        raise ValueError(
            f"sqrt({value}) is irrational; use the float backend or pick "
            "parameters whose square roots are rational")
    return Fraction(rn, rd)


def sqrt_real(value, backend: str):
    if backend == EXACT:
        return exact_sqrt(value)
    return math.sqrt(float(value))


def is_close(a, b, tol: float | None = None) -> bool:
    """Exact equality for two exact scalars, ``|a - b| <= tol`` otherwise."""
    if type(a) is not complex and type(b) is not complex \
            and not isinstance(a, float) and not isinstance(b, float):
        return a == b
    if tol is None:
        tol = default_tol()
    return abs(complex(a) - complex(b)) <= tol


def format_scalar(value) -> str:
    if type(value) is GaussianRational:
        return str(value)
    value = complex(value)
    if value.imag == 0:
        return repr(value.real)
    return repr(value)
