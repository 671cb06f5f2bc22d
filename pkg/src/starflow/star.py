"""Star products with constant bivectors, the equivalence ``exp(hbar*Delta)`` and matrix extension.

Every product here has the form

    f * g = sum_r hbar^r / r! (sum_ij B_ij d_i (x) d_j)^r (f, g)

for a constant complex matrix ``B`` on the Darboux coordinates. The
Weyl-Moyal product has ``B = (i/2) J``-type entries on each canonical pair.
A Wick product adds the symmetric part ``2 * Delta`` where ``Delta`` is
the Laplacian ``sum_k d^2/dz_k dzbar_k`` of the chosen oscillator modes.
Working in Darboux coordinates keeps all coefficients rational as long as
``m * nu`` and ``m * nu_kappa`` are rational, even when the complex frame
itself needs square roots.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import scalars
from .algebra import CANONICAL_PAIRS
from .frames import (DARBOUX, CoordinateFrame, Mode, Parameters, get_frame, mode_for_variable,
                     modes)
from .scalars import EXACT, FLOAT
from .series import FormalSeries, sum_series

PRODUCT_NAMES = ("weyl", "wick-total", "wick-system", "wick-bath", "wick-factorized")
CLI_PRODUCTS = ("weyl", "wick-total", "wick-system", "wick-bath")


def _half(backend):
    return Fraction(1, 2) if backend == EXACT else 0.5


def _add(mat: dict, i: int, j: int, value):
    if value:
        mat[(i, j)] = mat.get((i, j), 0) + value


def _mode_symmetric(mode: Mode, backend: str, weight) -> dict:
    """``weight * s * [(1/lam) u u^T + lam v v^T]`` as a sparse matrix."""
    out: dict = {}
    lam, s = mode.mass_freq, mode.scale
    u, v = mode.q_dir, mode.p_dir
    for i in range(4):
        for j in range(4):
            val = weight * s * (u[i] * u[j] / lam + lam * v[i] * v[j])
            _add(out, i, j, scalars.to_scalar(val, backend) if val else 0)
    return out


def _merge(*mats: dict) -> dict:
    out: dict = {}
    for m in mats:
        for (i, j), c in m.items():
            _add(out, i, j, c)
    return {k: c for k, c in out.items() if c}


# ---------------------------------------------------------------------------- Laplacians


@dataclass(frozen=True)
class LaplacianSpec:
    """``Delta = sum_k d^2/(dz_k dzbar_k)`` over the listed complex-variable pairs.

    Attributes:
        pairs: ``(holomorphic, antiholomorphic)`` variable names, all from one
            complex frame.
        params: model parameters fixing the complex structure.
        scale: power of ``hbar`` multiplying ``Delta`` in ``exp(hbar^scale Delta)``.
    """

    pairs: tuple
    params: Parameters
    scale: int = 1

    def __post_init__(self):
        frames = set()
        for hol, anti in self.pairs:
            mode, kind = mode_for_variable(hol, self.params)
            mode2, kind2 = mode_for_variable(anti, self.params)
            if mode2 != mode or kind != 0 or kind2 != 1:
                raise ValueError(f"({hol}, {anti}) is not a holomorphic/antiholomorphic pair")
            frames.add("complex" if hol in ("z1", "z2") else "factorized")
        if len(frames) > 1:
            raise ValueError("Laplacian pairs must come from a single complex frame")
        if self.scale != 1:
            raise ValueError("only hbar^1 weighted Laplacians are supported")

    @property
    def frame(self) -> CoordinateFrame:
        name = "complex" if self.pairs and self.pairs[0][0] in ("z1", "z2") else "factorized"
        return get_frame(name, self.params)

    @property
    def modes(self) -> tuple:
        return tuple(mode_for_variable(h, self.params)[0] for h, _ in self.pairs)

    @functools.cached_property
    def matrix(self) -> dict:
        """Symmetric ``D`` with ``Delta = sum_ij D_ij d_i d_j`` in Darboux coordinates."""
        quarter = Fraction(1, 4) if self.params.backend == EXACT else 0.25
        return _merge(*(_mode_symmetric(m, self.params.backend, quarter) for m in self.modes))


def laplacian(kind: str, params: Parameters) -> LaplacianSpec:
    """Laplacian of ``S`` (``total``), ``S_System`` (``system``), ``S_Bath`` (``bath``)."""
    pairs = {
        "total": (("z1", "zb1"), ("z2", "zb2")),
        "system": (("zS", "zbS"),),
        "bath": (("zB", "zbB"),),
        "factorized": (("zS", "zbS"), ("zB", "zbB")),
    }
    if kind not in pairs:
        raise ValueError(f"unknown Laplacian {kind!r}; choose from {sorted(pairs)}")
    return LaplacianSpec(pairs[kind], params)


def apply_laplacian(f: FormalSeries, spec: LaplacianSpec) -> FormalSeries:
    """``Delta f`` (no hbar weight), returned in ``f``'s frame."""
    g = f.to_darboux()
    parts = []
    for (i, j), c in spec.matrix.items():
        if i == j:
            parts.append(g.derivative(i, 2).scale(c))
        elif i < j:
            parts.append(g.derivative(i).derivative(j).scale(2 * c))
    backend = scalars.join_backends(g.backend, spec.params.backend)
    return sum_series(parts, DARBOUX, g.order, backend).to_frame(f.frame)


def apply_exp_laplacian(f: FormalSeries, spec: LaplacianSpec, sign: int = 1) -> FormalSeries:
    """``exp(sign * hbar * Delta) f``; the sum is finite because ``Delta`` lowers degree by 2."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    g = f.to_darboux()
    backend = scalars.join_backends(g.backend, spec.params.backend)
    g = g.to_backend(backend)
    total = g
    term = g
    for k in range(1, g.order + 1):
        term = apply_laplacian(term, spec).shift(1).scale(Fraction(sign, k) if backend == EXACT
                                                         else sign / k)
        if term.is_zero(0):
            break
        total = total + term
    return total.to_frame(f.frame)


# ---------------------------------------------------------------------------- products


def _directional(f: FormalSeries, w) -> FormalSeries:
    parts = [f.derivative(i).scale(c) for i, c in enumerate(w) if c]
    return sum_series(parts, f.frame, f.order, f.backend)


def _bidifferential(f: FormalSeries, g: FormalSeries, rank_one: list) -> FormalSeries:
    """Apply ``sum_r hbar^r/r! (sum_k c_k a_k (x) b_k)^r`` to ``(f, g)`` in Darboux coordinates.

    The ``r``-th power is expanded multinomially over the rank-one terms, so
    each level needs only iterated directional derivatives of ``f`` and ``g``.
    """
    order = min(f.order, g.order)
    backend = scalars.join_backends(f.backend, g.backend,
                                    *(scalars.backend_of(c) for c, _, _ in rank_one))
    f, g = f.to_backend(backend), g.to_backend(backend)
    if not f._terms or not g._terms:
        return FormalSeries.zero(DARBOUX, order, backend)
    max_r = min(f.degree(), g.degree(), order - f.min_hbar_power() - g.min_hbar_power())
    K = len(rank_one)
    one = scalars.to_scalar(1, backend)
    zero_n = (0,) * K
    # multi-index n -> (weight prod c_k^n_k / n_k!, A^n f, B^n g)
    level = {zero_n: (one, f, g)}
    parts = [f * g]
    for r in range(1, max_r + 1):
        nxt = {}
        for n, (weight, fa, gb) in level.items():
            last = max((k for k in range(K) if n[k]), default=0)
            for k in range(last, K):
                c, a, b = rank_one[k]
                da = _directional(fa, a)
                if not da._terms:
                    continue
                db = _directional(gb, b)
                if not db._terms:
                    continue
                n2 = n[:k] + (n[k] + 1,) + n[k + 1:]
                div = Fraction(1, n2[k]) if backend == EXACT else 1.0 / n2[k]
                nxt[n2] = (weight * c * div, da, db)
        if not nxt:
            break
        items = [(fa * gb).scale(weight) for weight, fa, gb in nxt.values()]
        parts.append(sum_series(items, DARBOUX, order, backend).shift(r))
        level = nxt
    return sum_series(parts, DARBOUX, order, backend)


def _unit(i: int):
    return tuple(1 if j == i else 0 for j in range(4))


def _weyl_rank_one(backend: str) -> list:
    half_i = scalars.to_scalar(1j, backend) * _half(backend)
    out = []
    for q, p in CANONICAL_PAIRS:
        out.append((half_i, _unit(q), _unit(p)))
        out.append((-half_i, _unit(p), _unit(q)))
    return out


def _wick_rank_one(mode: Mode, backend: str) -> tuple:
    """``(s / 2 lam) (u - i lam v) (x) (u + i lam v)``: the Wick bivector of one mode."""
    unit = scalars.to_scalar(1j, backend)
    lam = mode.mass_freq
    a = tuple(scalars.to_scalar(u, backend) - unit * scalars.to_scalar(lam * v, backend)
              for u, v in zip(mode.q_dir, mode.p_dir))
    b = tuple(x.conjugate() for x in a)
    return scalars.to_scalar(mode.scale / (2 * lam), backend), a, b


def _to_matrix(rank_one: list) -> dict:
    out: dict = {}
    for c, a, b in rank_one:
        for i in range(4):
            for j in range(4):
                if a[i] and b[j]:
                    _add(out, i, j, c * a[i] * b[j])
    return {k: v for k, v in out.items() if v}


class StarProduct:
    """A named constant-bivector star product on the coupled phase space.

    Args:
        name: one of ``weyl``, ``wick-total``, ``wick-system``, ``wick-bath``,
            ``wick-factorized``. ``wick-system`` is the Wick product in
            ``zS`` tensored with the Weyl-Moyal product of the bath, and
            ``wick-bath`` the other way round.
        params: required for Wick products.
    """

    def __init__(self, name: str, params: Parameters | None = None):
        if name not in PRODUCT_NAMES:
            raise ValueError(f"unknown star product {name!r}; choose from {list(PRODUCT_NAMES)}")
        self.name = name
        self.params = params
        if name == "weyl":
            backend = EXACT if params is None else params.backend
            self.rank_one = _weyl_rank_one(backend)
            self.laplacian = None
        else:
            if params is None:
                raise ValueError(f"star product {name!r} needs model parameters")
            kind = name.split("-", 1)[1]
            self.laplacian = laplacian(kind, params)
            wick = [_wick_rank_one(m, params.backend) for m in self.laplacian.modes]
            # a factor without its own Wick structure keeps the Weyl-Moyal product
            covered = {i for m in self.laplacian.modes for i in range(4)
                       if m.q_dir[i] or m.p_dir[i]}
            weyl = [t for t in _weyl_rank_one(params.backend) if not any(
                t[1][i] for i in covered)]
            self.rank_one = wick + weyl
        self.bivector = _to_matrix(self.rank_one)

    @property
    def is_wick(self) -> bool:
        return self.laplacian is not None

    def __call__(self, f: FormalSeries, g: FormalSeries) -> FormalSeries:
        out_frame = f.frame if f.frame == g.frame else DARBOUX
        result = _bidifferential(f.to_darboux(), g.to_darboux(), self.rank_one)
        return result.to_frame(out_frame)

    def commutator(self, f: FormalSeries, g: FormalSeries) -> FormalSeries:
        return self(f, g) - self(g, f)

    def __repr__(self) -> str:
        return f"StarProduct({self.name!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, StarProduct) and (self.name, self.params) == (other.name,
                                                                                other.params)

    def __hash__(self):
        return hash((self.name, self.params))


@functools.lru_cache(maxsize=None)
def star_product(name: str, params: Parameters | None = None) -> StarProduct:
    if name == "weyl" and params is not None and params.backend == EXACT:
        params = None
    return StarProduct(name, params)


def _params_of(*series: FormalSeries, params: Parameters | None = None) -> Parameters:
    if params is not None:
        return params
    for s in series:
        if s.frame.params is not None:
            return s.frame.params
    raise ValueError("Wick products need model parameters; pass params or use a complex frame")


def weyl_star(f: FormalSeries, g: FormalSeries) -> FormalSeries:
    """Weyl-Moyal product, e.g. ``qS * pS = qS pS + i hbar/2``."""
    return star_product("weyl")(f, g)


_WICK_FRAMES = {"complex": "wick-total", "total": "wick-total", "factorized": "wick-factorized",
                "system": "wick-system", "bath": "wick-bath"}


def wick_star(f: FormalSeries, g: FormalSeries, frame="total",
              params: Parameters | None = None) -> FormalSeries:
    """Wick product ``sum_r (2 hbar)^r / r! d_z^r f d_zbar^r g`` for the chosen complex structure.

    Args:
        frame: ``total`` (or the ``complex`` frame), ``system``, ``bath``,
            ``factorized``, or a complex :class:`CoordinateFrame`.

    Raises:
        ValueError: for a non-complex frame.
    """
    if isinstance(frame, CoordinateFrame):
        if not frame.is_complex:
            raise ValueError(f"Wick products need a complex frame, got {frame.name!r}")
        params = params or frame.params
        frame = frame.name
    if frame not in _WICK_FRAMES:
        raise ValueError(f"Wick products need a complex frame, got {frame!r}")
    return star_product(_WICK_FRAMES[frame], _params_of(f, g, params=params))(f, g)


def star_commutator(f: FormalSeries, g: FormalSeries, star: StarProduct | str = "weyl",
                    params: Parameters | None = None) -> FormalSeries:
    """``[f, g] = f * g - g * f`` for the given product (default Weyl-Moyal)."""
    if isinstance(star, str):
        star = star_product(star, None if star == "weyl" else _params_of(f, g, params=params))
    return star.commutator(f, g)


# ---------------------------------------------------------------------------- square preservation


@dataclass
class WitnessReport:
    """Both sides of ``S(conj(f) * g) = sum_r hbar^r sum_I conj(D_rI f) D_rI g``."""

    left: FormalSeries
    right: FormalSeries
    deviation: float
    terms: int

    @property
    def ok(self) -> bool:
        if self.left.backend == EXACT and self.right.backend == EXACT:
            return self.deviation == 0
        return self.deviation <= scalars.default_tol()


def _antiholomorphic_direction(mode: Mode, backend: str):
    """``w`` and ``c^2`` with ``d/dzbar = c * (w . grad)``, ``w = u + i*lam*v``, ``c^2 = s/(4 lam)``."""
    unit = scalars.to_scalar(1j, backend)
    lam = mode.mass_freq
    w = [scalars.to_scalar(u, backend) + unit * scalars.to_scalar(lam * v, backend)
         for u, v in zip(mode.q_dir, mode.p_dir)]
    c2 = mode.scale / (4 * lam)
    return w, scalars.to_scalar(c2, backend)


def square_preserving_witness(f: FormalSeries, spec: LaplacianSpec,
                              g: FormalSeries | None = None) -> WitnessReport:
    """Check that ``S = exp(hbar Delta)`` maps Weyl-Moyal squares to sums of squares.

    The operators are ``D_{r,I} = sqrt(2^r / r!) d^r/(dzbar_{i1} ... dzbar_{ir}) o S``.
    The left side is ``S(conj(f) *_weyl g)``; the right side is the
    explicit sum of products. Taking ``g = f`` (the default) gives the
    square-preservation statement itself.
    """
    if g is None:
        g = f
    star = star_product("weyl")
    backend = scalars.join_backends(f.backend, g.backend, spec.params.backend)
    fd = f.to_darboux().to_backend(backend)
    gd = g.to_darboux().to_backend(backend)
    order = min(fd.order, gd.order)
    left = apply_exp_laplacian(star(fd.conj(), gd), spec, +1)
    sf = apply_exp_laplacian(fd, spec, +1)
    sg = apply_exp_laplacian(gd, spec, +1)
    directions = [_antiholomorphic_direction(m, backend) for m in spec.modes]
    # level r holds (weight, D_I Sf, D_I Sg) before the sqrt(2^r/r!) normalisation
    level = [(scalars.to_scalar(1, backend), sf, sg)]
    parts = [sf.conj() * sg]
    terms = 1
    for r in range(1, order + 1):
        nxt = []
        for weight, a, b in level:
            for w, c2 in directions:
                da, db = _directional(a, w), _directional(b, w)
                if da._terms and db._terms:
                    nxt.append((weight * c2, da, db))
        if not nxt:
            break
        norm = scalars.to_scalar(Fraction(2 ** r, math.factorial(r)), backend)
        items = [(a.conj() * b).scale(weight * norm) for weight, a, b in nxt]
        terms += len(items)
        parts.append(sum_series(items, DARBOUX, order, backend).shift(r))
        level = nxt
    right = sum_series(parts, DARBOUX, order, backend)
    return WitnessReport(left, right, left.max_deviation(right), terms)


# ---------------------------------------------------------------------------- matrices


class MatrixObservable:
    """Square matrix of formal series with the entrywise star-product algebra."""

    def __init__(self, entries: Sequence[Sequence[FormalSeries]]):
        rows = [list(r) for r in entries]
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise ValueError("matrix observables must be square and non-empty")
        orders = {e.order for r in rows for e in r}
        if len(orders) != 1:
            order = min(orders)
            rows = [[e.with_order(order) for e in r] for r in rows]
        self.n = n
        self.entries = rows

    @classmethod
    def identity(cls, n: int, frame=DARBOUX, order: int = 6, backend: str = EXACT):
        return cls([[FormalSeries.one(frame, order, backend) if i == j else
                     FormalSeries.zero(frame, order, backend) for j in range(n)]
                    for i in range(n)])

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def adjoint(self) -> "MatrixObservable":
        return MatrixObservable([[self.entries[j][i].conj() for j in range(self.n)]
                                 for i in range(self.n)])

    def equals(self, other: "MatrixObservable", tol: float | None = None) -> bool:
        return self.n == other.n and all(self.entries[i][j].equals(other.entries[i][j], tol)
                                         for i in range(self.n) for j in range(self.n))

    def map(self, fn) -> "MatrixObservable":
        return MatrixObservable([[fn(e) for e in row] for row in self.entries])

    def __repr__(self) -> str:
        return f"MatrixObservable(n={self.n})"


def matrix_star(A: MatrixObservable, B: MatrixObservable,
                star: StarProduct | str = "weyl") -> MatrixObservable:
    """Entry ``(i, k)`` is ``sum_j A[i, j] * B[j, k]``.

    Raises:
        ValueError: on a size mismatch.
    """
    if A.n != B.n:
        raise ValueError(f"matrix sizes differ: {A.n} and {B.n}")
    if isinstance(star, str):
        star = star_product(star)
    n = A.n
    out = []
    for i in range(n):
        row = []
        for k in range(n):
            acc = None
            for j in range(n):
                term = star(A.entries[i][j], B.entries[j][k])
                acc = term if acc is None else acc + term
            row.append(acc)
        out.append(row)
    return MatrixObservable(out)
