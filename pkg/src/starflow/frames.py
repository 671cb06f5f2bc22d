"""Model parameters and linear coordinate frames on the coupled phase space.

All frames are linear coordinate systems on ``R^4`` with Darboux
coordinates ``(qS, pS, qB, pB)``:

* ``darboux``: ``qS pS qB pB``
* ``normal``: ``q1 p1 q2 p2`` with ``q1 = (qS + qB)/sqrt2`` etc.
* ``complex``: ``z1 zb1 z2 zb2``, annihilation-type coordinates of the
  two normal modes with frequencies ``nu`` and ``nu_kappa``
* ``factorized``: ``zS zbS zB zbB``, the same for the uncoupled system
  and bath oscillators

A frame stores ``W`` (frame coordinates = ``W @ darboux``) and its inverse
``T`` (darboux = ``T @ frame coordinates``). Entries are exact when every
square root involved is rational, otherwise the exact backend refuses the
frame and the float backend must be used.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import scalars
from .scalars import EXACT, FLOAT, GaussianRational

DARBOUX_VARS = ("qS", "pS", "qB", "pB")
FRAME_VARIABLES = {
    "darboux": DARBOUX_VARS,
    "normal": ("q1", "p1", "q2", "p2"),
    "complex": ("z1", "zb1", "z2", "zb2"),
    "factorized": ("zS", "zbS", "zB", "zbB"),
}
VARIABLE_FRAME = {v: name for name, vs in FRAME_VARIABLES.items() for v in vs}

SYSTEM_INDICES = (0, 1)
BATH_INDICES = (2, 3)


@dataclass(frozen=True)
class Parameters:
    """Mass ``m``, frequency ``nu``, coupling ``kappa`` and inverse temperature ``beta``.

    ``nu_kappa`` may be given instead of being derived from ``kappa``; the
    identity ``nu_kappa**2 == nu**2 + 2*kappa/m`` is checked either way. Pass
    ``kappa=None`` to derive it from ``nu_kappa``.
    """

    m: object = 1
    nu: object = 1
    kappa: object = 0
    beta: object = None
    nu_kappa: object = None
    backend: str = FLOAT

    def __post_init__(self):
        b = self.backend
        if b not in scalars.BACKENDS:
            raise ValueError(f"unknown scalar backend {b!r}")
        m = scalars.real_value(self.m, b)
        nu = scalars.real_value(self.nu, b)
        if not m > 0:
            raise ValueError(f"m must be positive, got {self.m}")
        if not nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if self.kappa is None:
            if self.nu_kappa is None:
                raise ValueError("either kappa or nu_kappa is required")
            nk = scalars.real_value(self.nu_kappa, b)
            kappa = m * (nk * nk - nu * nu) / 2
        else:
            kappa = scalars.real_value(self.kappa, b)
            if self.nu_kappa is None:
                nk = scalars.sqrt_real(nu * nu + 2 * kappa / m, b)
            else:
                nk = scalars.real_value(self.nu_kappa, b)
        if kappa < 0:
            raise ValueError(f"kappa must be non-negative, got {kappa}")
        if not nk > 0:
            raise ValueError(f"nu_kappa must be positive, got {nk}")
        residual = nk * nk - nu * nu - 2 * kappa / m
        if b == EXACT and residual != 0:
            raise ValueError("nu_kappa**2 != nu**2 + 2*kappa/m")
        if b == FLOAT and abs(residual) > scalars.default_tol() * max(1.0, nk * nk):
            raise ValueError(f"nu_kappa**2 - nu**2 - 2*kappa/m = {residual:g}")
        beta = None
        if self.beta is not None:
            beta = scalars.real_value(self.beta, b)
            if not beta > 0:
                raise ValueError(f"beta must be positive, got {self.beta}")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "nu_kappa", nk)
        object.__setattr__(self, "beta", beta)

    def with_beta(self, beta) -> "Parameters":
        return Parameters(self.m, self.nu, self.kappa, beta, self.nu_kappa, self.backend)

    def as_float(self) -> "Parameters":
        if self.backend == FLOAT:
            return self
        return Parameters(float(self.m), float(self.nu), float(self.kappa),
                          None if self.beta is None else float(self.beta),
                          float(self.nu_kappa), FLOAT)

    def require_beta(self):
        if self.beta is None:
            raise ValueError("beta is required for KMS states")
        return self.beta


@dataclass(frozen=True)
class Mode:
    """One oscillator mode: ``Q = sqrt(scale) * q_dir.x`` and ``P = sqrt(scale) * p_dir.x``.

    ``mass_freq`` is ``m * frequency``. The holomorphic coordinate is
    ``z = sqrt(mass_freq) Q + i P / sqrt(mass_freq)``.
    """

    q_dir: tuple
    p_dir: tuple
    scale: object
    mass_freq: object
    names: tuple = field(default=("z", "zb"))


def modes(kind: str, params: Parameters) -> tuple[Mode, ...]:
    """Oscillator modes behind the complex frames: ``total``, ``system`` or ``bath``."""
    half = Fraction(1, 2) if params.backend == EXACT else 0.5
    one = 1 if params.backend == EXACT else 1.0
    m, nu, nk = params.m, params.nu, params.nu_kappa
    if kind == "total":
        return (Mode((1, 0, 1, 0), (0, 1, 0, 1), half, m * nu, ("z1", "zb1")),
                Mode((1, 0, -1, 0), (0, 1, 0, -1), half, m * nk, ("z2", "zb2")))
    if kind == "system":
        return (Mode((1, 0, 0, 0), (0, 1, 0, 0), one, m * nu, ("zS", "zbS")),)
    if kind == "bath":
        return (Mode((0, 0, 1, 0), (0, 0, 0, 1), one, m * nu, ("zB", "zbB")),)
    if kind == "factorized":
        return modes("system", params) + modes("bath", params)
    raise ValueError(f"unknown mode set {kind!r}")


def mode_for_variable(name: str, params: Parameters) -> tuple[Mode, int]:
    """Mode carrying the complex variable ``name`` and 0 (holomorphic) or 1 (anti)."""
    for kind in ("total", "factorized"):
        for mode in modes(kind, params):
            if name in mode.names:
                return mode, mode.names.index(name)
    raise KeyError(name)


def _mat_mul(a, b):
    n, k, p = len(a), len(b), len(b[0])
    return tuple(tuple(sum((a[i][j] * b[j][c] for j in range(k)), 0 * a[0][0]) for c in range(p))
                 for i in range(n))


def _mat_inverse(mat):
    n = len(mat)
    exact = all(type(x) is GaussianRational or isinstance(x, (int, Fraction))
                for row in mat for x in row)
    one = GaussianRational(1) if exact else 1.0 + 0j
    zero = one * 0
    a = [[(GaussianRational(x) if exact and type(x) is not GaussianRational else
           (x if exact else complex(x))) for x in row] + [one if i == j else zero for j in range(n)]
         for i, row in enumerate(mat)]
    for col in range(n):
        pivot = max(range(col, n), key=lambda r: abs(a[r][col]))
        if not a[pivot][col] or (not exact and abs(a[pivot][col]) < 1e-300):
            raise ValueError("coordinate change is singular")
        a[col], a[pivot] = a[pivot], a[col]
        inv = 1 / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return tuple(tuple(row[n:]) for row in a)


class CoordinateFrame:
    """Linear frame: variable names plus the maps to and from Darboux coordinates."""

    def __init__(self, name: str, variables: Sequence[str], W, T, params: Parameters | None,
                 conj_perm: Sequence[int], backend: str):
        self.name = name
        self.variables = tuple(variables)
        self.dim = len(self.variables)
        self.W = W
        self.T = T
        self.params = params
        self.conj_perm = tuple(conj_perm)
        self.backend = backend
        self._index = {v: i for i, v in enumerate(self.variables)}

    @property
    def darboux(self) -> "CoordinateFrame":
        return DARBOUX

    @property
    def is_complex(self) -> bool:
        return self.name in ("complex", "factorized")

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"variable {name!r} is not in frame {self.name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def __eq__(self, other) -> bool:
        if not isinstance(other, CoordinateFrame):
            return NotImplemented
        return self.name == other.name and (self.name == "darboux" or self.params == other.params)

    def __hash__(self):
        return hash((self.name, None if self.name == "darboux" else self.params))

    def __repr__(self) -> str:
        return f"CoordinateFrame({self.name!r})"

    def transport(self, f, target: "CoordinateFrame"):
        """Rewrite ``f`` (a series in this frame) in the ``target`` frame."""
        from .series import FormalSeries, substitute

        if target == self:
            return f
        M = _mat_mul(self.W, target.T)
        backend = scalars.join_backends(f.backend, self.backend, target.backend)
        images = []
        for row in M:
            terms = {}
            for j, c in enumerate(row):
                if c:
                    mono = tuple(1 if i == j else 0 for i in range(target.dim))
                    terms[(0, mono)] = c
            images.append(FormalSeries(terms, target, f.order, backend))
        return substitute(f.to_backend(backend), images, target, f.order)

    def variable_in_darboux(self, name: str) -> tuple:
        """Coefficients of this frame's variable ``name`` as a combination of Darboux variables."""
        return self.W[self.index(name)]

    def derivative_direction(self, name: str) -> tuple:
        """Chain rule: ``d/d(name) = sum_j T[j][i] d/dx_j`` in Darboux coordinates."""
        i = self.index(name)
        return tuple(self.T[j][i] for j in range(DARBOUX.dim))


def _identity(n: int):
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


DARBOUX = CoordinateFrame("darboux", DARBOUX_VARS, _identity(4), _identity(4), None,
                          range(4), EXACT)


def _complex_rows(mode_list, params: Parameters):
    b = params.backend
    rows = []
    for mode in mode_list:
        a = scalars.sqrt_real(mode.mass_freq * mode.scale, b)
        c = scalars.sqrt_real(mode.scale / mode.mass_freq, b)
        unit = 1j if b == FLOAT else scalars.I
        z = [scalars.to_scalar(a * u, b) + scalars.to_scalar(c * v, b) * unit
             for u, v in zip(mode.q_dir, mode.p_dir)]
        rows.append(tuple(z))
        rows.append(tuple(x.conjugate() for x in z))
    return tuple(rows)


@functools.lru_cache(maxsize=None)
def get_frame(name: str, params: Parameters | None = None) -> CoordinateFrame:
    """Frame ``name`` for ``params`` (``darboux`` needs no parameters)."""
    if name == "darboux":
        return DARBOUX
    if name not in FRAME_VARIABLES:
        raise ValueError(f"unknown frame {name!r}; choose from {sorted(FRAME_VARIABLES)}")
    if params is None:
        raise ValueError(f"frame {name!r} depends on the model parameters")
    b = params.backend
    if name == "normal":
        r = scalars.sqrt_real(Fraction(1, 2) if b == EXACT else 0.5, b)
        W = ((r, 0, r, 0), (0, r, 0, r), (r, 0, -r, 0), (0, r, 0, -r))
        W = tuple(tuple(scalars.to_scalar(x, b) for x in row) for row in W)
        conj = range(4)
    elif name == "complex":
        W = _complex_rows(modes("total", params), params)
        conj = (1, 0, 3, 2)
    else:
        W = _complex_rows(modes("factorized", params), params)
        conj = (1, 0, 3, 2)
    T = _mat_inverse(W)
    return CoordinateFrame(name, FRAME_VARIABLES[name], W, T, params, conj, b)


def frame_of_variable(name: str) -> str:
    try:
        return VARIABLE_FRAME[name]
    except KeyError:
        raise KeyError(f"unknown variable {name!r}") from None


def linear_map_series(matrix, offset, frame: CoordinateFrame, order: int, backend: str):
    """Images ``x_i -> sum_j matrix[i][j] x_j + offset[i]`` as series in ``frame``."""
    from .series import FormalSeries

    images = []
    n = frame.dim
    if len(matrix) != n or any(len(row) != n for row in matrix):
        raise ValueError(f"linear map must be {n}x{n} for frame {frame.name!r}")
    if offset is None:
        offset = (0,) * n
    if len(offset) != n:
        raise ValueError(f"offset must have {n} entries")
    for i in range(n):
        terms = {}
        for j in range(n):
            c = matrix[i][j]
            if c:
                terms[(0, tuple(1 if k == j else 0 for k in range(n)))] = c
        if offset[i]:
            terms[(0, (0,) * n)] = offset[i]
        images.append(FormalSeries(terms, frame, order, backend))
    return images


def is_float_value(x) -> bool:
    return isinstance(x, (float, complex)) and not isinstance(x, bool) or (
        hasattr(x, "dtype") and getattr(x.dtype, "kind", "") in "fc")


def matrix_backend(matrix, offset=None) -> str:
    vals = [x for row in matrix for x in row] + list(offset or ())
    return FLOAT if any(is_float_value(x) for x in vals) else EXACT
