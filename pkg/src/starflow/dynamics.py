"""Coupled harmonic oscillators: Hamiltonians, the classical flow and quantum Heisenberg evolution.

The total Hamiltonian on ``(qS, pS, qB, pB)`` is

    H = pS^2/2m + m nu^2 qS^2/2 + pB^2/2m + m nu^2 qB^2/2 + kappa/2 (qS - qB)^2.

Its flow is linear, ``Phi_t^* x_i = sum_j M_ij(t) x_j``. The quantum
evolution for the Weyl-Moyal product is ``A_t = S^-1 o Phi_t^* o S`` with
``S = exp(hbar Delta)`` the Wick equivalence of the normal modes, because in
the Wick picture the evolution is exactly classical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import scalars
from .algebra import substitute_linear
from .frames import DARBOUX, Parameters, get_frame
from .scalars import EXACT, FLOAT
from .series import DEFAULT_ORDER, FormalSeries
from .star import apply_exp_laplacian, apply_laplacian, laplacian, star_commutator

DARBOUX_INDEX = {"qS": 0, "pS": 1, "qB": 2, "pB": 3}


class HamiltonianInvariantError(ValueError):
    """A defining identity of the Hamiltonian set failed; ``identity`` names it."""

    def __init__(self, identity: str, deviation: float):
        super().__init__(f"Hamiltonian identity {identity!r} violated (deviation {deviation:.3e})")
        self.identity = identity
        self.deviation = deviation


# ---------------------------------------------------------------------------- flow


@dataclass(frozen=True)
class FlowMatrix:
    """``Phi_t`` as a 4x4 matrix on ``(qS, pS, qB, pB)``: ``Phi_t^* x_i = sum_j M_ij x_j``."""

    t: object
    entries: tuple
    params: Parameters

    def as_array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.entries])

    def __matmul__(self, other: "FlowMatrix") -> np.ndarray:
        return self.as_array() @ other.as_array()

    def symplectic_defect(self) -> float:
        """``max |M^T J M - J|``."""
        M = self.as_array()
        return float(np.max(np.abs(M.T @ SYMPLECTIC_J @ M - SYMPLECTIC_J)))


SYMPLECTIC_J = np.array([[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]], dtype=float)


def flow_matrix(t, params: Parameters) -> FlowMatrix:
    """Closed-form flow of the coupled oscillators.

    Entries are cosines and sines of ``nu t`` and ``nu_kappa t`` with an
    overall factor 1/2. At ``t = 0`` an exact identity is returned for the
    exact backend.
    """
    if t == 0 and params.backend == EXACT:
        entries = tuple(tuple(1 if i == j else 0 for j in range(4)) for i in range(4))
        return FlowMatrix(0, entries, params)
    t = float(t)
    m, nu, nk = float(params.m), float(params.nu), float(params.nu_kappa)
    c1, c2 = math.cos(nu * t), math.cos(nk * t)
    s1, s2 = math.sin(nu * t), math.sin(nk * t)
    a_plus = s1 / (m * nu) + s2 / (m * nk)
    a_minus = s1 / (m * nu) - s2 / (m * nk)
    b_plus = -m * (nu * s1 + nk * s2)
    b_minus = -m * (nu * s1 - nk * s2)
    rows = (
        (c1 + c2, a_plus, c1 - c2, a_minus),
        (b_plus, c1 + c2, b_minus, c1 - c2),
        (c1 - c2, a_minus, c1 + c2, a_plus),
        (b_minus, c1 - c2, b_plus, c1 + c2),
    )
    return FlowMatrix(t, tuple(tuple(0.5 * x for x in row) for row in rows), params)


def quadratic_forms(params: Parameters) -> dict[str, np.ndarray]:
    """Symmetric ``Q`` with ``H = x^T Q x / 2`` for each Hamiltonian (float)."""
    m, nu, k = float(params.m), float(params.nu), float(params.kappa)
    system = np.diag([m * nu ** 2, 1 / m, 0, 0])
    bath = np.diag([0, 0, m * nu ** 2, 1 / m])
    inter = np.zeros((4, 4))
    inter[np.ix_([0, 2], [0, 2])] = k * np.array([[1, -1], [-1, 1]])
    return {"H_System": system, "H_Bath": bath, "H_Interaction": inter,
            "H_total": system + bath + inter}


def hamiltonian_generator(params: Parameters) -> np.ndarray:
    """``J Q`` with ``x' = J Q x`` the Hamiltonian vector field of the total Hamiltonian."""
    return SYMPLECTIC_J @ quadratic_forms(params)["H_total"]


# ---------------------------------------------------------------------------- Hamiltonians


def _quadratic_series(coeffs: dict, order: int, backend: str) -> FormalSeries:
    terms = {}
    for names, c in coeffs.items():
        mono = [0, 0, 0, 0]
        for n in names.split("*"):
            mono[DARBOUX_INDEX[n]] += 1
        terms[(0, tuple(mono))] = c
    return FormalSeries(terms, DARBOUX, order, backend)


@dataclass(frozen=True)
class HamiltonianSet:
    """``H_System``, ``H_Bath``, ``H_Interaction`` and their sum, in Darboux coordinates."""

    system: FormalSeries
    bath: FormalSeries
    interaction: FormalSeries
    total: FormalSeries
    params: Parameters
    skipped_checks: tuple = ()

    def __getitem__(self, name: str) -> FormalSeries:
        return {"H_System": self.system, "H_Bath": self.bath,
                "H_Interaction": self.interaction, "H_total": self.total}[name]


def _check(identity: str, a: FormalSeries, b: FormalSeries, tol: float | None = None):
    if not a.equals(b, tol):
        raise HamiltonianInvariantError(identity, a.max_deviation(b))


def _normal_form_check(total: FormalSeries, params: Parameters, order: int):
    """``H = (p1^2 + p2^2)/2m + m nu^2 q1^2/2 + m nu_kappa^2 q2^2/2``."""
    m, nu, nk = params.m, params.nu, params.nu_kappa
    half = Fraction(1, 2) if params.backend == EXACT else 0.5
    coeffs = {(0, (0, 2, 0, 0)): half / m, (0, (0, 0, 0, 2)): half / m,
              (0, (2, 0, 0, 0)): half * m * nu * nu, (0, (0, 0, 2, 0)): half * m * nk * nk}
    try:
        normal = get_frame("normal", params)
    except ValueError:
        normal = None
    if normal is not None:
        expected = FormalSeries(coeffs, normal, order, params.backend).to_darboux()
    else:
        # exact backend: x -> sqrt(2) x scales a quadratic form by 2, so use the
        # integer matrix q1 = qS + qB, ... and halve
        A = [[1, 0, 1, 0], [0, 1, 0, 1], [1, 0, -1, 0], [0, 1, 0, -1]]
        placeholder = FormalSeries(coeffs, DARBOUX, order, params.backend)
        expected = substitute_linear(placeholder, A).scale(half)
    _check("normal form", total, expected)


def _complex_form_check(total: FormalSeries, params: Parameters, order: int) -> bool:
    """``H = (nu/2) z1 zb1 + (nu_kappa/2) z2 zb2``; skipped when the frame is irrational."""
    try:
        frame = get_frame("complex", params)
    except ValueError:
        return False
    half = Fraction(1, 2) if params.backend == EXACT else 0.5
    expected = FormalSeries({(0, (1, 1, 0, 0)): half * params.nu,
                             (0, (0, 0, 1, 1)): half * params.nu_kappa}, frame, order,
                            params.backend)
    _check("complex normal form", total.to_frame(frame), expected)
    return True


def hamiltonian_catalog(params: Parameters, order: int = DEFAULT_ORDER) -> HamiltonianSet:
    """Build the four Hamiltonians and verify their defining identities.

    Raises:
        HamiltonianInvariantError: naming the identity that failed.
    """
    b = params.backend
    half = Fraction(1, 2) if b == EXACT else 0.5
    m, nu, k = params.m, params.nu, params.kappa
    system = _quadratic_series({"pS*pS": half / m, "qS*qS": half * m * nu * nu}, order, b)
    bath = _quadratic_series({"pB*pB": half / m, "qB*qB": half * m * nu * nu}, order, b)
    inter = _quadratic_series({"qS*qS": half * k, "qS*qB": -k, "qB*qB": half * k}, order, b)
    total = system + bath + inter
    qs, qb = (FormalSeries.variable(v, DARBOUX, order, b) for v in ("qS", "qB"))
    _check("H_Interaction = kappa/2 (qS - qB)^2", inter, ((qs - qb) ** 2).scale(half * k))
    _check("H_total = H_System + H_Bath + H_Interaction", total,
           system + bath + inter)
    _normal_form_check(total, params, order)
    skipped = () if _complex_form_check(total, params, order) else ("complex normal form",)
    return HamiltonianSet(system, bath, inter, total, params, skipped)


def delta_h_system_reference(params: Parameters):
    """``(nu + nu_kappa - kappa/(m nu_kappa)) / 4``."""
    return (params.nu + params.nu_kappa - params.kappa / (params.m * params.nu_kappa)) / 4


# ---------------------------------------------------------------------------- quantum evolution


def _params_for(f: FormalSeries, params: Parameters | None) -> Parameters:
    if params is not None:
        return params
    if f.frame.params is not None:
        return f.frame.params
    raise ValueError("model parameters are required (pass params or use a parametrised frame)")


def classical_pullback(f: FormalSeries, t, params: Parameters) -> FormalSeries:
    """``Phi_t^* f`` in Darboux coordinates, returned in ``f``'s frame."""
    if t != 0 and params.backend == EXACT:
        params = params.as_float()
    M = flow_matrix(t, params)
    return substitute_linear(f.to_darboux(), M.entries).to_frame(f.frame)


def heisenberg_evolve(f: FormalSeries, t, params: Parameters | None = None) -> FormalSeries:
    """``A_t f = S^-1 Phi_t^* S f`` for the Weyl-Moyal product.

    The float backend is used for ``t != 0`` since the flow involves
    trigonometric values.
    """
    params = _params_for(f, params)
    if t != 0 and params.backend == EXACT:
        params = params.as_float()
    spec = laplacian("total", params)
    g = apply_exp_laplacian(f.to_darboux(), spec, +1)
    g = substitute_linear(g, flow_matrix(t, params).entries)
    g = apply_exp_laplacian(g, spec, -1)
    return g.to_frame(f.frame)


def wick_picture_evolve(f: FormalSeries, t, params: Parameters | None = None) -> FormalSeries:
    """``S A_t S^-1 f``; equals the classical pullback ``Phi_t^* f``."""
    params = _params_for(f, params)
    if t != 0 and params.backend == EXACT:
        params = params.as_float()
    spec = laplacian("total", params)
    return apply_exp_laplacian(heisenberg_evolve(apply_exp_laplacian(f, spec, -1), t, params),
                               spec, +1)


def heisenberg_residual(f: FormalSeries, t: float, dt: float = 1e-4,
                        params: Parameters | None = None, tol: float | None = None) -> list[float]:
    """Per-order deviation of ``d/dt A_t f`` from ``(i/hbar) [H, A_t f]``.

    The time derivative is a central difference with step ``dt``. The
    commutator's order-0 part must vanish; dividing by ``hbar`` then leaves
    orders ``0..N-1`` to compare.

    Raises:
        ValueError: if the commutator has a non-vanishing order-0 part.
    """
    params = _params_for(f, params)
    if params.backend == EXACT:
        params = params.as_float()
    if not dt > 0:
        raise ValueError("dt must be positive")
    f = f.to_darboux().to_backend(FLOAT)
    H = hamiltonian_catalog(params, f.order).total
    At = heisenberg_evolve(f, t, params)
    deriv = (heisenberg_evolve(f, t + dt, params) - heisenberg_evolve(f, t - dt, params)) \
        .scale(1 / (2 * dt))
    comm = star_commutator(H, At, "weyl")
    if tol is None:
        tol = scalars.default_tol()
    try:
        rhs = comm.lower(1, tol).scale(1j)
    except ValueError:
        raise ValueError("commutator has a non-vanishing order-0 part; the star product is broken") \
            from None
    return deriv.with_order(rhs.order).deviation(rhs)


# ---------------------------------------------------------------------------- references


def golden_total_evolution(name: str, t, params: Parameters, order: int = DEFAULT_ORDER) -> FormalSeries:
    """``Phi_t^*`` of a coordinate or Hamiltonian, built with numpy from the flow matrix.

    Linear observables use a row of ``M``; quadratic ones ``x^T M^T Q M x / 2``.
    This is independent of the series machinery and serves as a reference.
    """
    M = flow_matrix(t, params.as_float()).as_array()
    if name in DARBOUX_INDEX:
        row = M[DARBOUX_INDEX[name]]
        terms = {(0, tuple(1 if j == i else 0 for j in range(4))): complex(c)
                 for i, c in enumerate(row) if c}
        return FormalSeries(terms, DARBOUX, order, FLOAT)
    Q = quadratic_forms(params)[name]
    P = M.T @ Q @ M
    terms = {}
    for i in range(4):
        for j in range(i, 4):
            c = P[i, i] / 2 if i == j else P[i, j]
            if c:
                mono = [0] * 4
                mono[i] += 1
                mono[j] += 1
                terms[(0, tuple(mono))] = complex(c)
    return FormalSeries(terms, DARBOUX, order, FLOAT)


def _trig(t, params):
    p = params.as_float()
    m, nu, nk = p.m, p.nu, p.nu_kappa
    return (m, nu, nk, math.cos(nu * t), math.cos(nk * t), math.sin(nu * t), math.sin(nk * t))


def reference_formula_ps(t, params: Parameters, order: int = DEFAULT_ORDER) -> FormalSeries:
    """The printed closed form of ``A_t pS``, including its ``cos`` in the ``qB`` coefficient.

    The flow matrix has ``-m/2 (nu sin(nu t) - nu_kappa sin(nu_kappa t))`` there.
    """
    m, nu, nk, c1, c2, s1, s2 = _trig(t, params)
    coeffs = {"qS": -m / 2 * (nu * s1 + nk * s2), "pS": (c1 + c2) / 2,
              "qB": -m / 2 * (nu * c1 - nk * c2), "pB": (c1 - c2) / 2}
    return _quadratic_series(coeffs, order, FLOAT)


def reference_formula_qs(t, params: Parameters, order: int = DEFAULT_ORDER) -> FormalSeries:
    """The printed closed form of ``A_t qS``."""
    m, nu, nk, c1, c2, s1, s2 = _trig(t, params)
    coeffs = {"qS": (c1 + c2) / 2, "pS": s1 / (2 * m * nu) + s2 / (2 * m * nk),
              "qB": (c1 - c2) / 2, "pB": s1 / (2 * m * nu) - s2 / (2 * m * nk)}
    return _quadratic_series(coeffs, order, FLOAT)


def reference_formula_h_system(t, params: Parameters, order: int = DEFAULT_ORDER) -> FormalSeries:
    """The printed closed form of ``A_t H_System``, term by term.

    Its ``qS pB`` coefficient starts with ``-(c1 - c2)(s1/(m nu) + s2/(m nk))/4``;
    the flow matrix gives ``-(c1 - c2)(nu s1 + nk s2)/4`` instead.
    """
    m, nu, nk, c1, c2, s1, s2 = _trig(t, params)
    A = s1 / (m * nu) + s2 / (m * nk)
    B = s1 / (m * nu) - s2 / (m * nk)
    sp_, sm = nu * s1 + nk * s2, nu * s1 - nk * s2
    w = m * nu * nu
    coeffs = {
        "qS*qS": m / 8 * sp_ ** 2 + w / 8 * (c1 + c2) ** 2,
        "pS*pS": (c1 + c2) ** 2 / (8 * m) + w / 8 * A ** 2,
        "qB*qB": m / 8 * sm ** 2 + w / 8 * (c1 - c2) ** 2,
        "pB*pB": (c1 - c2) ** 2 / (8 * m) + w / 8 * B ** 2,
        "qS*pS": -sp_ * (c1 + c2) / 4 + w / 4 * A * (c1 + c2),
        "qS*qB": m / 4 * sp_ * sm + w / 4 * (c1 + c2) * (c1 - c2),
        "qS*pB": -(c1 - c2) * A / 4 + w / 4 * (c1 + c2) * B,
        "pS*qB": -(c1 + c2) * sm / 4 + w / 4 * (c1 - c2) * A,
        "pS*pB": (c1 + c2) * (c1 - c2) / (4 * m) + w / 4 * A * B,
        "qB*pB": -sm * (c1 - c2) / 4 + w / 4 * (c1 - c2) * B,
    }
    return _quadratic_series(coeffs, order, FLOAT)
