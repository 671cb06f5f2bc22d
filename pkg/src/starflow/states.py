"""Bath states: point evaluation, coherent (deformed delta) and KMS states.

The KMS functional of the bath oscillator is ``f -> tr(Exp(-beta H_B) * f)``
for the Weyl-Moyal product, with ``tr`` the Liouville integral. Because
``tr(f * g) = tr(f g)`` it reduces to Gaussian moments of the closed-form
star exponential, which lives in the family ``P(qB, pB) exp(-a qB^2 - b pB^2)``
implemented here by :class:`GaussianFamilyFunction`.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import scalars
from .algebra import Sign, series_sign
from .frames import BATH_INDICES, DARBOUX, SYSTEM_INDICES, Parameters
from .scalars import EXACT, FLOAT
from .series import DEFAULT_ORDER, FormalSeries, sum_series
from .star import MatrixObservable, apply_exp_laplacian, laplacian, matrix_star, weyl_star

VARIANTS = ("delta", "deformed-delta", "kms")
PSD_FLOOR = -1e-9
_Q, _P = BATH_INDICES


# ---------------------------------------------------------------------------- scalar series helpers


def _taylor_div(num: Sequence[Fraction], den: Sequence[Fraction], n: int) -> list[Fraction]:
    """Taylor coefficients of ``num / den`` up to degree ``n``; ``den[0]`` must be nonzero."""
    out = []
    for k in range(n + 1):
        acc = num[k] if k < len(num) else Fraction(0)
        for j in range(1, k + 1):
            if j < len(den):
                acc -= den[j] * out[k - j]
        out.append(acc / den[0])
    return out


def _cosh_coeffs(n: int) -> list[Fraction]:
    return [Fraction(1, math.factorial(k)) if k % 2 == 0 else Fraction(0) for k in range(n + 1)]


def _sinh_over_x_coeffs(n: int) -> list[Fraction]:
    return [Fraction(1, math.factorial(k + 1)) if k % 2 == 0 else Fraction(0) for k in range(n + 1)]


def sech_coefficients(n: int) -> list[Fraction]:
    """Taylor coefficients of ``sech x``."""
    return _taylor_div([Fraction(1)], _cosh_coeffs(n), n)


def tanh_over_x_coefficients(n: int) -> list[Fraction]:
    """Taylor coefficients of ``tanh(x) / x``."""
    return _taylor_div(_sinh_over_x_coeffs(n), _cosh_coeffs(n), n)


def x_over_sinh_coefficients(n: int) -> list[Fraction]:
    """Taylor coefficients of ``x / sinh x``."""
    return _taylor_div([Fraction(1)], _sinh_over_x_coeffs(n), n)


def bernoulli_numbers(n: int) -> list[Fraction]:
    """``B_0 .. B_n`` with ``B_1 = -1/2``."""
    B = [Fraction(0)] * (n + 1)
    B[0] = Fraction(1)
    for k in range(1, n + 1):
        B[k] = -sum(math.comb(k + 1, j) * B[j] for j in range(k)) / (k + 1)
    return B


def x_coth_coefficients(n: int) -> list[Fraction]:
    """Taylor coefficients of ``x coth x = sum 4^k B_2k x^2k / (2k)!`` (Bernoulli form)."""
    B = bernoulli_numbers(n)
    return [Fraction(4 ** (k // 2)) * B[k] / math.factorial(k) if k % 2 == 0 else Fraction(0)
            for k in range(n + 1)]


def _real(value, backend):
    return scalars.real_value(value, backend)


def hbar_series(coeffs: Sequence[Fraction], w, order: int, backend: str) -> FormalSeries:
    """Constant series ``sum_k coeffs[k] (w hbar)^k``."""
    w = _real(w, backend)
    vals = [_real(coeffs[k], backend) * w ** k for k in range(order + 1)]
    return FormalSeries.from_scalars(vals, DARBOUX, order, backend)


def _series_exp_nilpotent(u: FormalSeries) -> FormalSeries:
    """``exp(u)`` for a series whose order-0 coefficient vanishes."""
    if u.coeff(0).terms:
        raise ValueError("exponent must vanish at order 0")
    total = FormalSeries.one(u.frame, u.order, u.backend)
    term = total
    for n in range(1, u.order + 1):
        term = (term * u).scale(Fraction(1, n) if u.backend == EXACT else 1.0 / n)
        if term.is_zero(0):
            break
        total = total + term
    return total


def _order0(s: FormalSeries):
    return s.constant_values()[0].real


def series_power(s: FormalSeries, alpha: float) -> FormalSeries:
    """``s**alpha`` for a constant series with positive order-0 part (float result)."""
    s = s.to_backend(FLOAT)
    s0 = _order0(s)
    if not s0 > 0:
        raise ValueError("series power needs a positive order-0 part")
    u = s.scale(1 / s0) - 1
    total = FormalSeries.one(s.frame, s.order, FLOAT)
    term = total
    coeff = 1.0
    for n in range(1, s.order + 1):
        coeff *= (alpha - n + 1) / n
        term = term * u
        total = total + term.scale(coeff)
    return total.scale(s0 ** alpha)


# ---------------------------------------------------------------------------- Gaussian family


def _as_constant(value, order: int, backend: str) -> FormalSeries:
    if isinstance(value, FormalSeries):
        return value.with_order(order) if value.order > order else value
    return FormalSeries.constant(value, DARBOUX, order, backend)


@dataclass(frozen=True)
class GaussianFamilyFunction:
    """``P(qB, pB) exp(-a qB^2 - b pB^2)`` with series coefficients.

    Attributes:
        prefactor: Darboux series in the bath variables.
        a: constant series, positive at order 0.
        b: constant series, positive at order 0.
    """

    prefactor: FormalSeries
    a: FormalSeries
    b: FormalSeries

    def __post_init__(self):
        pre = self.prefactor.to_darboux()
        if pre.variables_used() & set(SYSTEM_INDICES):
            raise ValueError("the Gaussian prefactor must only depend on bath variables")
        order = pre.order
        a = _as_constant(self.a, order, pre.backend)
        b = _as_constant(self.b, order, pre.backend)
        if not a.is_constant() or not b.is_constant():
            raise ValueError("exponent coefficients must be constant series")
        if not _order0(a) > 0 or not _order0(b) > 0:
            raise ValueError("exponent coefficients need positive order-0 parts (integrability)")
        object.__setattr__(self, "prefactor", pre)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def order(self) -> int:
        return self.prefactor.order

    @property
    def backend(self) -> str:
        return scalars.join_backends(self.prefactor.backend, self.a.backend, self.b.backend)

    def _with(self, prefactor: FormalSeries) -> "GaussianFamilyFunction":
        return GaussianFamilyFunction(prefactor, self.a, self.b)

    def __add__(self, other: "GaussianFamilyFunction") -> "GaussianFamilyFunction":
        self._check_same_exponent(other)
        return self._with(self.prefactor + other.prefactor)

    def __sub__(self, other: "GaussianFamilyFunction") -> "GaussianFamilyFunction":
        self._check_same_exponent(other)
        return self._with(self.prefactor - other.prefactor)

    def _check_same_exponent(self, other):
        if not (self.a.equals(other.a) and self.b.equals(other.b)):
            raise ValueError("Gaussian family members have different exponents")

    def times(self, f) -> "GaussianFamilyFunction":
        """Pointwise product with a bath polynomial series or a scalar."""
        if isinstance(f, FormalSeries):
            f = f.to_darboux()
            if f.variables_used() & set(SYSTEM_INDICES):
                raise ValueError("only bath polynomials act on the Gaussian family")
        return self._with(self.prefactor * f)

    def derivative(self, index: int) -> "GaussianFamilyFunction":
        """``d/dqB`` (index 2) or ``d/dpB`` (index 3)."""
        if index not in BATH_INDICES:
            raise ValueError("Gaussian family functions depend on qB and pB only")
        P = self.prefactor
        width = self.a if index == _Q else self.b
        var = FormalSeries.variable(DARBOUX.variables[index], DARBOUX, P.order, P.backend)
        return self._with(P.derivative(index) - (P * var * width).scale(2))

    def multi_derivative(self, nq: int, np_: int) -> "GaussianFamilyFunction":
        g = self
        for _ in range(nq):
            g = g.derivative(_Q)
        for _ in range(np_):
            g = g.derivative(_P)
        return g

    def evaluate(self, qB: float, pB: float) -> list[complex]:
        """Per-order values at a bath point (float)."""
        a = self.a.to_backend(FLOAT)
        b = self.b.to_backend(FLOAT)
        a0, b0 = _order0(a), _order0(b)
        weight = math.exp(-a0 * qB ** 2 - b0 * pB ** 2)
        rest = _series_exp_nilpotent((a - a0).scale(-qB ** 2) + (b - b0).scale(-pB ** 2))
        pre = self.prefactor.to_backend(FLOAT).evaluate([0.0, 0.0, float(qB), float(pB)])
        return [weight * complex(v) for v in (pre * rest).constant_values()]


def _weyl_bath_terms(left_derivs, right_derivs, order: int, backend: str, combine):
    """``sum_r (i hbar/2)^r / r! sum_j C(r,j) (-1)^j L(r-j, j) R(j, r-j)`` on the bath pair."""
    half_i = scalars.GaussianRational(0, Fraction(1, 2)) if backend == EXACT else 0.5j
    parts = []
    for r in range(order + 1):
        weight = half_i ** r * scalars.to_scalar(Fraction(1, math.factorial(r)), backend)
        for j in range(r + 1):
            left = left_derivs(r - j, j)
            if left is None:
                continue
            c = weight * scalars.to_scalar((-1) ** j * math.comb(r, j), backend)
            parts.append(combine(left, right_derivs(j, r - j), c, r))
    return parts


def _degree_bounded(f: FormalSeries):
    def derivs(nq, np_):
        if nq > f.degree_in(_Q) or np_ > f.degree_in(_P):
            return None
        d = f.derivative(_Q, nq) if nq else f
        return d.derivative(_P, np_) if np_ else d
    return derivs


def polynomial_star_gaussian(f: FormalSeries, g: GaussianFamilyFunction,
                             reverse: bool = False) -> GaussianFamilyFunction:
    """``f * g`` (or ``g * f`` when ``reverse``) for the Weyl-Moyal product on the bath.

    ``f`` is a bath polynomial, so only finitely many derivatives of it are
    nonzero and the bidifferential sum terminates.
    """
    f = f.to_darboux()
    if f.variables_used() & set(SYSTEM_INDICES):
        raise ValueError("only bath polynomials act on the Gaussian family")
    order = min(f.order, g.order)
    backend = scalars.join_backends(f.backend, g.backend)
    f = f.with_order(order).to_backend(backend)
    poly = _degree_bounded(f)
    cache: dict = {}

    def gauss(nq, np_):
        if (nq, np_) not in cache:
            cache[(nq, np_)] = g.multi_derivative(nq, np_).prefactor
        return cache[(nq, np_)]

    if not reverse:
        def combine(df, dg, c, r):
            return (df * dg).scale(c).shift(r)
        parts = _weyl_bath_terms(poly, gauss, order, backend, combine)
    else:
        # g * f: g takes the left slot; only f's derivative counts decide termination
        def left(nq, np_):
            return gauss(nq, np_) if poly(np_, nq) is not None else None

        def combine(dg, df, c, r):
            return (dg * df).scale(c).shift(r)
        parts = _weyl_bath_terms(left, poly, order, backend, combine)
    pre = sum_series(parts, DARBOUX, order, backend)
    return GaussianFamilyFunction(pre, g.a, g.b)


def _double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def normalized_trace(g: GaussianFamilyFunction, f: FormalSeries | None = None) -> FormalSeries:
    """``int g f / int exp(-a qB^2 - b pB^2)`` as a constant series.

    Stays exact when ``g`` and ``f`` are exact.
    """
    pre = g.prefactor if f is None else g.times(f).prefactor
    order = pre.order
    backend = scalars.join_backends(pre.backend, g.backend)
    inv2a = g.a.to_backend(backend).scale(2).inverse()
    inv2b = g.b.to_backend(backend).scale(2).inverse()
    powers_a = [FormalSeries.one(DARBOUX, order, backend)]
    powers_b = [FormalSeries.one(DARBOUX, order, backend)]
    parts = []
    for (k, mono), c in pre.terms.items():
        i, j = mono[_Q], mono[_P]
        if i % 2 or j % 2:
            continue
        while len(powers_a) <= i // 2:
            powers_a.append(powers_a[-1] * inv2a)
        while len(powers_b) <= j // 2:
            powers_b.append(powers_b[-1] * inv2b)
        factor = scalars.to_scalar(_double_factorial(i - 1) * _double_factorial(j - 1), backend)
        parts.append((powers_a[i // 2] * powers_b[j // 2]).scale(c * factor).shift(k))
    return sum_series(parts, DARBOUX, order, backend)


def gaussian_norm(g: GaussianFamilyFunction) -> FormalSeries:
    """``int exp(-a qB^2 - b pB^2) dqB dpB = pi / sqrt(a b)`` (float)."""
    return series_power(g.a.to_backend(FLOAT) * g.b.to_backend(FLOAT), -0.5).scale(math.pi)


def trace_pairing(g: GaussianFamilyFunction, f: FormalSeries | None = None) -> FormalSeries:
    """``tr(g f) = int g f dqB dpB``, which equals ``tr(g * f)`` for the Weyl-Moyal product.

    Raises:
        ValueError: for non-positive exponent coefficients (divergent integral).
    """
    return normalized_trace(g, f).to_backend(FLOAT) * gaussian_norm(g)


# ---------------------------------------------------------------------------- star exponential


def _bath_hamiltonian(params: Parameters, order: int, backend: str) -> FormalSeries:
    m, nu = _real(params.m, backend), _real(params.nu, backend)
    return FormalSeries({(0, (0, 0, 0, 2)): 1 / (2 * m), (0, (0, 0, 2, 0)): m * nu * nu / 2},
                        DARBOUX, order, backend)


def _check_beta(beta, backend):
    if beta is None:
        raise ValueError("beta is required for the KMS state")
    b = _real(beta, backend)
    if not b > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    return b


def star_exponential_prefactor(beta, params: Parameters, order: int = DEFAULT_ORDER) -> FormalSeries:
    """Polynomial ``P`` with ``Exp(-beta H_B) = P exp(-beta H_B)``.

    ``P = sech(x) exp(beta H_B (1 - tanh(x)/x))`` with ``x = hbar beta nu / 2``;
    at ``beta = 0`` it is ``1``.
    """
    backend = params.backend
    beta = _real(beta, backend)
    if beta < 0:
        raise ValueError(f"beta must be non-negative, got {beta}")
    w = beta * _real(params.nu, backend) / 2
    sech = hbar_series(sech_coefficients(order), w, order, backend)
    one_minus = FormalSeries.one(DARBOUX, order, backend) \
        - hbar_series(tanh_over_x_coefficients(order), w, order, backend)
    u = (_bath_hamiltonian(params, order, backend) * one_minus).scale(beta)
    return sech * _series_exp_nilpotent(u)


def star_exponential_closed_form(beta, params: Parameters,
                                 order: int = DEFAULT_ORDER) -> GaussianFamilyFunction:
    """``Exp(-beta H_B) = sech(x) exp(-(2 H_B / hbar nu) tanh x)`` as a Gaussian family member.

    Raises:
        ValueError: for non-positive ``beta``.
    """
    backend = params.backend
    b = _check_beta(beta, backend)
    m, nu = _real(params.m, backend), _real(params.nu, backend)
    pre = star_exponential_prefactor(b, params, order)
    return GaussianFamilyFunction(pre, b * m * nu * nu / 2, b / (2 * m))


def star_exponential_beta_derivative(beta, params: Parameters,
                                     order: int = DEFAULT_ORDER) -> GaussianFamilyFunction:
    """``d/dbeta Exp(-beta H_B) = -((hbar nu/2) tanh x + H_B sech^2 x) Exp(-beta H_B)``."""
    backend = params.backend
    b = _check_beta(beta, backend)
    nu = _real(params.nu, backend)
    w = b * nu / 2
    G = star_exponential_closed_form(b, params, order)
    # (hbar nu / 2) tanh x = hbar^2 (nu w / 2) tanh(x)/x
    tanh_part = hbar_series(tanh_over_x_coefficients(order), w, order, backend) \
        .scale(nu * w / 2).shift(2)
    sech = hbar_series(sech_coefficients(order), w, order, backend)
    factor = tanh_part + _bath_hamiltonian(params, order, backend) * sech * sech
    return G.times(-factor)


def star_exp_ode_residual(beta, params: Parameters, points: Sequence[Sequence[float]],
                          order: int = DEFAULT_ORDER) -> list[float]:
    """Per-order ``max |d/dbeta Exp(-beta H) + H * Exp(-beta H)|`` over bath sample points.

    This is the defining equation ``d/dbeta Exp(beta H) = H * Exp(beta H)``
    written for ``-beta``.
    """
    if any(not all(math.isfinite(float(x)) for x in pt) for pt in points):
        raise ValueError("sample points must be finite")
    H = _bath_hamiltonian(params, order, params.backend)
    G = star_exponential_closed_form(beta, params, order)
    residual = star_exponential_beta_derivative(beta, params, order) \
        + polynomial_star_gaussian(H, G)
    out = [0.0] * (order + 1)
    for q, p in points:
        for k, v in enumerate(residual.evaluate(float(q), float(p))):
            out[k] = max(out[k], abs(v))
    return out


# ---------------------------------------------------------------------------- partition function


@dataclass(frozen=True)
class LaurentSeries:
    """``hbar^(-pole) * series`` with a single pole of order ``pole``."""

    series: FormalSeries
    pole: int = 1

    @property
    def principal_part(self):
        """Coefficient of ``hbar^-pole``."""
        return self.series.constant_values()[0]

    def coefficient(self, k: int):
        """Coefficient of ``hbar^k`` for ``-pole <= k <= order - pole``."""
        return self.series.constant_values()[k + self.pole]

    def __str__(self) -> str:
        vals = self.series.constant_values()
        return " + ".join(f"{scalars.format_scalar(v)}*hbar^{k - self.pole}"
                          for k, v in enumerate(vals) if v)


def partition_function(beta, params: Parameters,
                       order: int = DEFAULT_ORDER) -> tuple[FormalSeries, LaurentSeries]:
    """``mu_KMS(1) = tr(Exp(-beta H_B))`` and ``Z = mu_KMS(1) / (2 pi hbar)``."""
    G = star_exponential_closed_form(beta, params, order)
    mu = trace_pairing(G)
    return mu, LaurentSeries(mu.scale(1 / (2 * math.pi)), 1)


def partition_reference(beta, nu, order: int = DEFAULT_ORDER) -> FormalSeries:
    """Expansion of ``2 pi hbar e^(-x) / (1 - e^(-2x)) = pi hbar / sinh x``, ``x = hbar beta nu / 2``."""
    w = float(beta) * float(nu) / 2
    return hbar_series(x_over_sinh_coefficients(order), w, order, FLOAT).scale(math.pi / w)


def kms_quadratic_reference(params: Parameters, order: int = DEFAULT_ORDER,
                            factor: int = 1) -> dict[str, FormalSeries]:
    """``omega(qB^2) = factor hbar / (2 m nu tanh x)`` and ``omega(pB^2) = factor hbar m nu / (2 tanh x)``.

    Built from the Bernoulli expansion of ``x coth x``. ``factor=3`` gives the
    values with the extra factor 3 of the printed closed form.
    """
    backend = params.backend
    beta = _check_beta(params.beta, backend)
    m, nu = _real(params.m, backend), _real(params.nu, backend)
    xcoth = hbar_series(x_coth_coefficients(order), beta * nu / 2, order, backend)
    return {"qB^2": xcoth.scale(factor / (m * nu * nu * beta)),
            "pB^2": xcoth.scale(factor * m / beta)}


# ---------------------------------------------------------------------------- states


@dataclass
class BathState:
    """A state of the bath oscillator.

    Attributes:
        variant: ``delta``, ``deformed-delta`` or ``kms``.
        params: model parameters; ``kms`` needs ``params.beta``.
        q0: bath position of the (deformed) delta functional.
        p0: bath momentum of the (deformed) delta functional.
        order: truncation order of cached moments.
    """

    variant: str
    params: Parameters
    q0: object = 0
    p0: object = 0
    order: int = DEFAULT_ORDER
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False,
                                  compare=False)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown state variant {self.variant!r}; choose from {VARIANTS}")
        if self.variant == "kms":
            _check_beta(self.params.beta, self.params.backend)
        for name in ("q0", "p0"):
            v = getattr(self, name)
            if not math.isfinite(float(v)):
                raise ValueError(f"{name} must be finite")
            if self.backend == FLOAT:
                setattr(self, name, float(v))
            else:
                setattr(self, name, Fraction(repr(v)) if isinstance(v, float) else Fraction(v))

    @classmethod
    def delta(cls, params: Parameters, q0=0, p0=0, order: int = DEFAULT_ORDER) -> "BathState":
        return cls("delta", params, q0, p0, order)

    @classmethod
    def deformed_delta(cls, params: Parameters, q0=0, p0=0,
                       order: int = DEFAULT_ORDER) -> "BathState":
        return cls("deformed-delta", params, q0, p0, order)

    @classmethod
    def kms(cls, params: Parameters, beta=None, order: int = DEFAULT_ORDER) -> "BathState":
        if beta is not None:
            params = params.with_beta(beta)
        return cls("kms", params, 0, 0, order)

    @property
    def backend(self) -> str:
        return self.params.backend

    def label(self) -> str:
        if self.variant == "kms":
            return f"kms(beta={self.params.beta})"
        return f"{self.variant}({self.q0},{self.p0})"

    # ------------------------------------------------------------------ moments

    def moment(self, i: int, j: int, order: int | None = None) -> FormalSeries:
        """``omega(qB^i pB^j)`` as a constant Darboux series."""
        order = self.order if order is None else order
        key = (i, j, order)
        with self._lock:
            cached = self._cache.get(key)
            if cached is None:
                cached = self._compute_moment(i, j, order)
                self._cache[key] = cached
        return cached

    def _compute_moment(self, i: int, j: int, order: int) -> FormalSeries:
        backend = self.backend
        if self.variant == "delta":
            v = scalars.to_scalar(self.q0, backend) ** i * scalars.to_scalar(self.p0, backend) ** j
            return FormalSeries.constant(v, DARBOUX, order, backend)
        mono = FormalSeries({(0, (0, 0, i, j)): 1}, DARBOUX, order, backend)
        if self.variant == "deformed-delta":
            smono = apply_exp_laplacian(mono, laplacian("bath", self.params), +1)
            return smono.evaluate([0, 0, self.q0, self.p0]).to_backend(backend)
        G = self._gibbs(order)
        norm = self._gibbs_norm(order)
        return normalized_trace(G, mono) * norm

    def _gibbs(self, order: int) -> GaussianFamilyFunction:
        key = ("G", order)
        if key not in self._cache:
            self._cache[key] = star_exponential_closed_form(self.params.beta, self.params, order)
        return self._cache[key]

    def _gibbs_norm(self, order: int) -> FormalSeries:
        key = ("norm", order)
        if key not in self._cache:
            self._cache[key] = normalized_trace(self._gibbs(order)).inverse()
        return self._cache[key]

    def expectation(self, f: FormalSeries) -> FormalSeries:
        """``omega(f)`` for a bath series; a constant series."""
        g = f.to_darboux()
        if g.variables_used() & set(SYSTEM_INDICES):
            raise ValueError("state_moments: expression contains system variables")
        return self.reduce(g)

    def reduce(self, f: FormalSeries) -> FormalSeries:
        """``(id x omega) f``: replace every bath monomial by its moment (Darboux result)."""
        g = f.to_darboux()
        order = g.order
        backend = scalars.join_backends(g.backend, self.backend)
        terms: dict = {}
        for (k, mono), c in g.terms.items():
            sys_mono = (mono[0], mono[1], 0, 0)
            mom = self.moment(mono[_Q], mono[_P], order)
            for kk, v in enumerate(mom.constant_values()):
                if not v or k + kk > order:
                    continue
                key = (k + kk, sys_mono)
                val = scalars.to_scalar(c, backend) * scalars.to_scalar(v, backend)
                terms[key] = terms.get(key, 0) + val
        return FormalSeries(terms, DARBOUX, order, backend)

    def __call__(self, f: FormalSeries) -> FormalSeries:
        return self.expectation(f)


def state_moments(state: BathState, mono: Sequence[int]) -> FormalSeries:
    """``omega`` of a bath monomial given as ``(i, j)`` or a Darboux exponent vector.

    Raises:
        ValueError: if the monomial contains system variables.
    """
    mono = tuple(mono)
    if len(mono) == DARBOUX.dim:
        if any(mono[i] for i in SYSTEM_INDICES):
            raise ValueError("state_moments: monomial contains system variables")
        mono = (mono[_Q], mono[_P])
    if len(mono) != 2 or any(e < 0 for e in mono):
        raise ValueError(f"not a bath monomial: {mono}")
    return state.moment(*mono)


# ---------------------------------------------------------------------------- positivity


def positivity_check(state: BathState, f: FormalSeries, tol: float | None = None) -> Sign:
    """``series_sign(omega(conj(f) * f))`` with the Weyl-Moyal product."""
    g = f.to_darboux()
    if g.variables_used() & set(SYSTEM_INDICES):
        raise ValueError("positivity_check expects a bath observable")
    return series_sign(state.expectation(weyl_star(g.conj(), g)), tol)


@dataclass(frozen=True)
class CPReport:
    """Outcome of :func:`cp_sample_check`.

    ``min_eigenvalues`` and ``lowest_orders`` hold one entry per sample point.
    """

    ok: bool
    min_eigenvalues: tuple
    lowest_orders: tuple


def cp_sample_check(state: BathState, F: MatrixObservable, points: Sequence[Sequence[float]],
                    floor: float = PSD_FLOOR, zero_tol: float = 1e-12) -> CPReport:
    """Check that ``(id x omega)(F^* * F)`` is positive at sample system points.

    At each point the lowest ``hbar`` order with a nonvanishing matrix must
    be positive semidefinite up to the eigenvalue floor.
    """
    G = matrix_star(F.adjoint(), F, "weyl")
    reduced = [[state.reduce(G[i, j]) for j in range(G.n)] for i in range(G.n)]
    mins, lows = [], []
    for qS, pS in points:
        vals = [[reduced[i][j].evaluate([qS, pS, 0, 0]).constant_values()
                 for j in range(G.n)] for i in range(G.n)]
        order = len(vals[0][0])
        lowest, min_eig = None, 0.0
        for k in range(order):
            M = np.array([[complex(vals[i][j][k]) for j in range(G.n)] for i in range(G.n)])
            if np.max(np.abs(M)) > zero_tol:
                lowest = k
                min_eig = float(np.min(np.linalg.eigvalsh((M + M.conj().T) / 2)))
                break
        mins.append(min_eig)
        lows.append(lowest)
    return CPReport(all(e >= floor for e in mins), tuple(mins), tuple(lows))
