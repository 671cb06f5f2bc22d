"""Sparse polynomials and truncated formal power series in hbar.

A :class:`FormalSeries` is stored as one sparse dictionary keyed by
``(hbar_power, exponents)``. Every operation truncates uniformly at the
series order ``N``. The coefficient ring is either exact Gaussian
rationals or float64 complex numbers (see :mod:`starflow.scalars`).
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from . import scalars
from .scalars import EXACT, FLOAT, GaussianRational

DEFAULT_ORDER = 6
MAX_ORDER = 16


def _check_order(order: int) -> int:
    if not isinstance(order, int) or order < 0 or order > MAX_ORDER:
        raise ValueError(f"truncation order must be an integer in 0..{MAX_ORDER}, got {order!r}")
    return order


def mono_degree(mono: Sequence[int]) -> int:
    return sum(mono)


def mono_key(mono: Sequence[int]):
    """Graded lexicographic sort key (low degree first, first variable dominant)."""
    return (sum(mono), tuple(-e for e in mono))


def mono_str(mono: Sequence[int], names: Sequence[str]) -> str:
    parts = []
    for name, e in zip(names, mono):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return "*".join(parts) if parts else "1"


def parse_mono(text: str, names: Sequence[str]) -> tuple[int, ...]:
    exps = [0] * len(names)
    text = text.strip()
    if text in ("", "1"):
        return tuple(exps)
    index = {n: i for i, n in enumerate(names)}
    for factor in text.split("*"):
        name, _, power = factor.strip().partition("^")
        if name not in index:
            raise ValueError(f"unknown variable {name!r} in monomial {text!r}")
        exps[index[name]] += int(power) if power else 1
    return tuple(exps)


class Polynomial:
    """Sparse polynomial over the variables of one coordinate frame."""

    __slots__ = ("terms", "frame", "backend")

    def __init__(self, terms: Mapping[tuple, object], frame, backend: str = FLOAT):
        self.terms = {m: c for m, c in terms.items() if c}
        self.frame = frame
        self.backend = backend

    def __add__(self, other: "Polynomial") -> "Polynomial":
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, 0) + c
        return Polynomial(terms, self.frame, scalars.join_backends(self.backend, other.backend))

    def __neg__(self) -> "Polynomial":
        return Polynomial({m: -c for m, c in self.terms.items()}, self.frame, self.backend)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            terms: dict = {}
            for m1, c1 in self.terms.items():
                for m2, c2 in other.terms.items():
                    m = tuple(a + b for a, b in zip(m1, m2))
                    terms[m] = terms.get(m, 0) + c1 * c2
            return Polynomial(terms, self.frame, scalars.join_backends(self.backend, other.backend))
        return Polynomial({m: c * other for m, c in self.terms.items()}, self.frame, self.backend)

    __rmul__ = __mul__

    def conj(self) -> "Polynomial":
        perm = self.frame.conj_perm
        return Polynomial({tuple(m[perm[i]] for i in range(len(m))): c.conjugate()
                           for m, c in self.terms.items()}, self.frame, self.backend)

    def degree(self) -> int:
        return max((sum(m) for m in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(m) for m in self.terms)

    def constant_term(self):
        zero = (0,) * self.frame.dim
        return self.terms.get(zero, 0)

    def evaluate(self, point: Sequence):
        total = 0
        for m, c in self.terms.items():
            v = c
            for x, e in zip(point, m):
                if e:
                    v = v * x ** e
            total = total + v
        return total

    def items(self):
        return sorted(self.terms.items(), key=lambda kv: mono_key(kv[0]))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"{scalars.format_scalar(c)}*{mono_str(m, self.frame.variables)}"
                          for m, c in self.items())

    __repr__ = __str__


class FormalSeries:
    """Truncated power series ``sum_k hbar^k f_k`` with polynomial coefficients.

    Instances are immutable; all arithmetic returns new series truncated at
    the smaller of the operand orders. Binary operations on series from
    different coordinate frames transport both operands to the Darboux frame.
    """

    __slots__ = ("_terms", "frame", "order", "backend")

    def __init__(self, terms: Mapping[tuple, object], frame, order: int = DEFAULT_ORDER,
                 backend: str = FLOAT):
        _check_order(order)
        if backend not in scalars.BACKENDS:
            raise ValueError(f"unknown scalar backend {backend!r}")
        clean = {}
        for key, c in terms.items():
            k, mono = key
            if k > order or not c:
                continue
            if len(mono) != frame.dim:
                raise ValueError(f"monomial {mono} does not match frame {frame.name} "
                                 f"of dimension {frame.dim}")
            clean[(k, tuple(mono))] = scalars.to_scalar(c, backend)
        self._terms = clean
        self.frame = frame
        self.order = order
        self.backend = backend

    @classmethod
    def _raw(cls, terms: dict, frame, order: int, backend: str) -> "FormalSeries":
        obj = object.__new__(cls)
        obj._terms = {k: c for k, c in terms.items() if c and k[0] <= order}
        obj.frame = frame
        obj.order = order
        obj.backend = backend
        return obj

    # ------------------------------------------------------------------ builders

    @classmethod
    def zero(cls, frame, order: int = DEFAULT_ORDER, backend: str = FLOAT) -> "FormalSeries":
        return cls({}, frame, order, backend)

    @classmethod
    def constant(cls, value, frame, order: int = DEFAULT_ORDER, backend: str = FLOAT,
                 hbar_power: int = 0) -> "FormalSeries":
        return cls({(hbar_power, (0,) * frame.dim): value}, frame, order, backend)

    @classmethod
    def one(cls, frame, order: int = DEFAULT_ORDER, backend: str = FLOAT) -> "FormalSeries":
        return cls.constant(1, frame, order, backend)

    @classmethod
    def hbar(cls, frame, order: int = DEFAULT_ORDER, backend: str = FLOAT) -> "FormalSeries":
        return cls.constant(1, frame, order, backend, hbar_power=1)

    @classmethod
    def variable(cls, name: str, frame, order: int = DEFAULT_ORDER,
                 backend: str = FLOAT) -> "FormalSeries":
        idx = frame.index(name)
        mono = tuple(1 if i == idx else 0 for i in range(frame.dim))
        return cls({(0, mono): 1}, frame, order, backend)

    @classmethod
    def from_scalars(cls, values: Sequence, frame, order: int | None = None,
                     backend: str = FLOAT) -> "FormalSeries":
        """Constant series whose ``k``-th coefficient is ``values[k]``."""
        if order is None:
            order = len(values) - 1
        zero = (0,) * frame.dim
        return cls({(k, zero): v for k, v in enumerate(values) if k <= order},
                   frame, order, backend)

    @classmethod
    def from_polynomials(cls, polys: Sequence[Polynomial], order: int | None = None) -> "FormalSeries":
        if not polys:
            raise ValueError("need at least one coefficient polynomial")
        frame = polys[0].frame
        backend = scalars.join_backends(*(p.backend for p in polys))
        terms = {}
        for k, p in enumerate(polys):
            for m, c in p.terms.items():
                terms[(k, m)] = c
        return cls(terms, frame, len(polys) - 1 if order is None else order, backend)

    # ------------------------------------------------------------------ basics

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return sorted(self._terms.items(), key=lambda kv: (kv[0][0], mono_key(kv[0][1])))

    def coeff(self, k: int) -> Polynomial:
        return Polynomial({m: c for (j, m), c in self._terms.items() if j == k},
                          self.frame, self.backend)

    def coeffs(self) -> list[Polynomial]:
        return [self.coeff(k) for k in range(self.order + 1)]

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self, tol: float | None = None) -> bool:
        if self.backend == EXACT or tol == 0:
            return not self._terms
        if tol is None:
            tol = scalars.default_tol()
        return all(abs(c) <= tol for c in self._terms.values())

    def degree(self) -> int:
        return max((sum(m) for (_, m) in self._terms), default=0)

    def degree_in(self, index: int) -> int:
        return max((m[index] for (_, m) in self._terms), default=0)

    def variables_used(self) -> set[int]:
        used = set()
        for (_, m) in self._terms:
            used.update(i for i, e in enumerate(m) if e)
        return used

    def is_constant(self) -> bool:
        return all(not any(m) for (_, m) in self._terms)

    def min_hbar_power(self) -> int | None:
        return min((k for (k, _) in self._terms), default=None)

    def constant_values(self) -> list:
        """Per-order scalar coefficients of a constant series."""
        if not self.is_constant():
            raise ValueError("series has non-constant coefficients")
        out = [scalars.to_scalar(0, self.backend)] * (self.order + 1)
        for (k, _), c in self._terms.items():
            out[k] = c
        return out

    def with_order(self, order: int) -> "FormalSeries":
        _check_order(order)
        return FormalSeries._raw(self._terms, self.frame, order, self.backend)

    def to_backend(self, backend: str) -> "FormalSeries":
        if backend == self.backend:
            return self
        return FormalSeries(self._terms, self.frame, self.order, backend)

    def to_frame(self, frame) -> "FormalSeries":
        if frame == self.frame:
            return self
        return self.frame.transport(self, frame)

    def to_darboux(self) -> "FormalSeries":
        return self.to_frame(self.frame.darboux)

    def map_coefficients(self, fn) -> "FormalSeries":
        return FormalSeries._raw({k: fn(c) for k, c in self._terms.items()},
                                 self.frame, self.order, self.backend)

    def chop(self, tol: float | None = None) -> "FormalSeries":
        """Drop float coefficients with modulus below ``tol``; exact series are returned as is."""
        if self.backend == EXACT:
            return self
        if tol is None:
            tol = scalars.default_tol()

        def clean(c):
            re = c.real if abs(c.real) > tol else 0.0
            im = c.imag if abs(c.imag) > tol else 0.0
            return complex(re, im)
        return FormalSeries._raw({k: clean(c) for k, c in self._terms.items()},
                                 self.frame, self.order, self.backend)

    # ------------------------------------------------------------------ arithmetic

    def _align(self, other: "FormalSeries"):
        a, b = self, other
        if a.frame != b.frame:
            a, b = a.to_darboux(), b.to_darboux()
        backend = scalars.join_backends(a.backend, b.backend)
        return a.to_backend(backend), b.to_backend(backend), min(a.order, b.order)

    def _lift(self, value) -> "FormalSeries":
        if isinstance(value, FormalSeries):
            return value
        if isinstance(value, Polynomial):
            return FormalSeries({(0, m): c for m, c in value.terms.items()},
                                value.frame, self.order, value.backend)
        backend = scalars.join_backends(self.backend, scalars.backend_of(value))
        return FormalSeries.constant(value, self.frame, self.order, backend)

    def __add__(self, other) -> "FormalSeries":
        a, b, order = self._align(self._lift(other))
        terms = dict(a._terms)
        for key, c in b._terms.items():
            if key[0] <= order:
                terms[key] = terms.get(key, 0) + c
        return FormalSeries._raw(terms, a.frame, order, a.backend)

    __radd__ = __add__

    def __neg__(self) -> "FormalSeries":
        return FormalSeries._raw({k: -c for k, c in self._terms.items()},
                                 self.frame, self.order, self.backend)

    def __sub__(self, other) -> "FormalSeries":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "FormalSeries":
        return self._lift(other) + (-self)

    def scale(self, value) -> "FormalSeries":
        backend = scalars.join_backends(self.backend, scalars.backend_of(value))
        value = scalars.to_scalar(value, backend)
        src = self.to_backend(backend)
        return FormalSeries._raw({k: c * value for k, c in src._terms.items()},
                                 self.frame, self.order, backend)

    def __mul__(self, other) -> "FormalSeries":
        if not isinstance(other, (FormalSeries, Polynomial)):
            return self.scale(other)
        a, b, order = self._align(self._lift(other))
        terms: dict = {}
        for (k1, m1), c1 in a._terms.items():
            for (k2, m2), c2 in b._terms.items():
                k = k1 + k2
                if k > order:
                    continue
                key = (k, tuple(x + y for x, y in zip(m1, m2)))
                terms[key] = terms.get(key, 0) + c1 * c2
        return FormalSeries._raw(terms, a.frame, order, a.backend)

    def __rmul__(self, other) -> "FormalSeries":
        if isinstance(other, (FormalSeries, Polynomial)):
            return self._lift(other) * self
        return self.scale(other)

    def __truediv__(self, other) -> "FormalSeries":
        if isinstance(other, FormalSeries):
            return self * other.inverse()
        backend = scalars.join_backends(self.backend, scalars.backend_of(other))
        return self.scale(1 / scalars.to_scalar(other, backend))

    def __pow__(self, n: int) -> "FormalSeries":
        if not isinstance(n, int) or n < 0:
            raise ValueError("series powers must be non-negative integers")
        result = FormalSeries.one(self.frame, self.order, self.backend)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def shift(self, k: int) -> "FormalSeries":
        """Multiply by ``hbar**k`` (``k >= 0``), truncating at the same order."""
        if k < 0:
            return self.lower(-k)
        return FormalSeries._raw({(j + k, m): c for (j, m), c in self._terms.items()},
                                 self.frame, self.order, self.backend)

    def lower(self, k: int, tol: float | None = None) -> "FormalSeries":
        """Divide by ``hbar**k``; the orders below ``k`` must vanish.

        The result has order ``self.order - k`` since the top ``k`` orders
        of the quotient are unknown.
        """
        if k > self.order:
            raise ValueError("cannot divide by a power of hbar above the truncation order")
        low = FormalSeries._raw({key: c for key, c in self._terms.items() if key[0] < k},
                                self.frame, self.order, self.backend)
        if not low.is_zero(tol):
            raise ValueError(f"orders below hbar^{k} do not vanish")
        return FormalSeries._raw({(j - k, m): c for (j, m), c in self._terms.items() if j >= k},
                                 self.frame, self.order - k, self.backend)

    def inverse(self) -> "FormalSeries":
        """Multiplicative inverse; needs an invertible constant order-0 coefficient."""
        c0 = self.coeff(0)
        if not c0.is_constant() or not c0.constant_term():
            raise ZeroDivisionError("series is not invertible: order-0 coefficient "
                                    "is not a nonzero constant")
        inv0 = 1 / c0.constant_term()
        one = FormalSeries.one(self.frame, self.order, self.backend)
        parts = [self.coeff(k) for k in range(self.order + 1)]
        result = [FormalSeries.constant(inv0, self.frame, self.order, self.backend)]
        for n in range(1, self.order + 1):
            acc = FormalSeries.zero(self.frame, self.order, self.backend)
            for k in range(1, n + 1):
                if parts[k].terms:
                    acc = acc + one._lift(parts[k]) * result[n - k]
            result.append(acc.scale(-inv0))
        total = FormalSeries.zero(self.frame, self.order, self.backend)
        for n, r in enumerate(result):
            total = total + r.shift(n)
        return total

    def conj(self) -> "FormalSeries":
        perm = self.frame.conj_perm
        terms = {}
        for (k, m), c in self._terms.items():
            terms[(k, tuple(m[perm[i]] for i in range(len(m))))] = c.conjugate()
        return FormalSeries._raw(terms, self.frame, self.order, self.backend)

    # ------------------------------------------------------------------ calculus

    def derivative(self, index: int, times: int = 1) -> "FormalSeries":
        """Partial derivative in the ``index``-th variable of the own frame."""
        terms = {}
        for (k, m), c in self._terms.items():
            e = m[index]
            if e < times:
                continue
            factor = math.perm(e, times)
            nm = m[:index] + (e - times,) + m[index + 1:]
            terms[(k, nm)] = c * factor
        return FormalSeries._raw(terms, self.frame, self.order, self.backend)

    def multi_derivative(self, alpha: Sequence[int]) -> "FormalSeries":
        terms = {}
        for (k, m), c in self._terms.items():
            factor = 1
            nm = []
            ok = True
            for e, a in zip(m, alpha):
                if e < a:
                    ok = False
                    break
                if a:
                    factor *= math.perm(e, a)
                nm.append(e - a)
            if ok:
                terms[(k, tuple(nm))] = c * factor
        return FormalSeries._raw(terms, self.frame, self.order, self.backend)

    def evaluate(self, point: Sequence) -> "FormalSeries":
        """Evaluate all variables at ``point``; returns a constant series."""
        if len(point) != self.frame.dim:
            raise ValueError(f"point has {len(point)} coordinates, frame needs {self.frame.dim}")
        backend = self.backend
        if any(isinstance(x, (float, complex)) for x in point):
            backend = FLOAT
        pt = [scalars.to_scalar(x, backend) for x in point]
        vals = [0] * (self.order + 1)
        for (k, m), c in self._terms.items():
            v = c
            for x, e in zip(pt, m):
                if e:
                    v = v * x ** e
            vals[k] = vals[k] + v
        return FormalSeries.from_scalars(vals, self.frame, self.order, backend)

    def evaluate_orders(self, point: Sequence) -> list:
        return self.evaluate(point).constant_values()

    # ------------------------------------------------------------------ comparison

    def deviation(self, other: "FormalSeries") -> list[float]:
        """Per-order maximal coefficient modulus of ``self - other``."""
        diff = self - other
        out = [0.0] * (diff.order + 1)
        for (k, _), c in diff._terms.items():
            out[k] = max(out[k], abs(complex(c)))
        return out

    def max_deviation(self, other: "FormalSeries") -> float:
        return max(self.deviation(other), default=0.0)

    def equals(self, other, tol: float | None = None) -> bool:
        if not isinstance(other, FormalSeries):
            other = self._lift(other)
        diff = self - other
        if diff.backend == EXACT:
            return diff.is_zero()
        return diff.is_zero(tol)

    def __eq__(self, other) -> bool:
        if not isinstance(other, (FormalSeries, Polynomial, int, float, complex, Fraction,
                                  GaussianRational)):
            return NotImplemented
        return self.equals(other)

    __hash__ = None

    # ------------------------------------------------------------------ display / io

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for (k, m), c in self.items():
            factors = []
            if k == 1:
                factors.append("hbar")
            elif k > 1:
                factors.append(f"hbar^{k}")
            ms = mono_str(m, self.frame.variables)
            if ms != "1":
                factors.append(ms)
            text = scalars.format_scalar(c)
            parts.append("*".join([f"({text})"] + factors) if factors else f"({text})")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"FormalSeries[{self.frame.name}, N={self.order}, {self.backend}]({self})"

    def to_dict(self) -> dict:
        coeffs = []
        for k in range(self.order + 1):
            row = []
            for m, c in self.coeff(k).items():
                entry = {"mono": mono_str(m, self.frame.variables),
                         "re": float(c.real), "im": float(c.imag)}
                if self.backend == EXACT:
                    entry["re_exact"] = str(c.real)
                    entry["im_exact"] = str(c.imag)
                row.append(entry)
            coeffs.append(row)
        return {"order": self.order, "frame": self.frame.name, "backend": self.backend,
                "coeffs": coeffs}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict, frame) -> "FormalSeries":
        order = int(data["order"])
        exact = data.get("backend") == EXACT
        backend = EXACT if exact else FLOAT
        terms = {}
        for k, row in enumerate(data["coeffs"]):
            for entry in row:
                mono = parse_mono(entry["mono"], frame.variables)
                if exact:
                    c = GaussianRational(Fraction(entry["re_exact"]), Fraction(entry["im_exact"]))
                else:
                    c = complex(entry["re"], entry["im"])
                terms[(k, mono)] = terms.get((k, mono), 0) + c
        return cls(terms, frame, order, backend)

    @classmethod
    def from_json(cls, text: str, frame) -> "FormalSeries":
        return cls.from_dict(json.loads(text), frame)


def substitute(f: FormalSeries, images: Sequence[FormalSeries], frame, order: int | None = None) -> FormalSeries:
    """Replace the ``i``-th variable of ``f`` by ``images[i]`` (all in ``frame``)."""
    if len(images) != f.frame.dim:
        raise ValueError(f"need {f.frame.dim} images, got {len(images)}")
    if order is None:
        order = min([f.order] + [g.order for g in images])
    backend = scalars.join_backends(f.backend, *(g.backend for g in images))
    images = [g.to_backend(backend).with_order(order) for g in images]
    one = FormalSeries.one(frame, order, backend)
    power_cache: dict[tuple[int, int], FormalSeries] = {}

    def power(i: int, e: int) -> FormalSeries:
        if e == 0:
            return one
        key = (i, e)
        if key not in power_cache:
            power_cache[key] = images[i] if e == 1 else power(i, e - 1) * images[i]
        return power_cache[key]

    terms: dict = {}
    src = f.to_backend(backend)
    for (k, m), c in src._terms.items():
        if k > order:
            continue
        piece = one
        for i, e in enumerate(m):
            if e:
                piece = piece * power(i, e)
        for (j, mm), cc in piece._terms.items():
            if j + k <= order:
                key = (j + k, mm)
                terms[key] = terms.get(key, 0) + c * cc
    return FormalSeries._raw(terms, frame, order, backend)


def sum_series(items: Iterable[FormalSeries], frame, order: int, backend: str) -> FormalSeries:
    terms: dict = {}
    out_backend = backend
    items = list(items)
    for s in items:
        out_backend = scalars.join_backends(out_backend, s.backend)
    for s in items:
        s = s.to_backend(out_backend)
        for key, c in s._terms.items():
            if key[0] <= order:
                terms[key] = terms.get(key, 0) + c
    return FormalSeries._raw(terms, frame, order, out_backend)
