"""Classical open time evolution on R^m x R^n.

A total flow ``Psi_t`` of a vector field on system x bath induces the open
evolution ``Phi_t^xB = pr_S o Psi_t o iota_xB`` of the system alone. This
module integrates flows (closed form where known, RK4 otherwise) and checks
the structural properties of the induced open evolutions numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

DEFAULT_STEP = 1e-3
MAX_STEPS = 10_000_000


class FlowError(ValueError):
    """Raised for step-count overflow or a non-finite trajectory."""


@dataclass(frozen=True)
class VectorFieldSpec:
    """Time-independent vector field on ``R^m x R^n`` (system first, then bath).

    Attributes:
        m: system dimension.
        n: bath dimension.
        evaluator: ``x -> X(x)`` on arrays of length ``m + n``.
        tag: builtin name or ``"custom"``.
        exact_flow: optional closed form ``(x0, t) -> Psi_t(x0)``; used instead of RK4.
    """

    m: int
    n: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    tag: str = "custom"
    exact_flow: Callable[[np.ndarray, float], np.ndarray] | None = field(default=None,
                                                                           compare=False)

    @property
    def dim(self) -> int:
        return self.m + self.n

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.evaluator(np.asarray(x, dtype=float)), dtype=float)


def _rotation(x: np.ndarray, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([x[0] * c - x[1] * s, x[0] * s + x[1] * c])


def rotation_const(nu: float = 1.0) -> VectorFieldSpec:
    """Rigid rotation ``(xS, xB) -> (-nu xB, nu xS)`` of ``R x R``."""
    nu = float(nu)
    return VectorFieldSpec(1, 1, lambda x: np.array([-nu * x[1], nu * x[0]]),
                           f"rotation-const({nu:g})",
                           lambda x0, t: _rotation(np.asarray(x0, float), nu * t))


def rotation_radial() -> VectorFieldSpec:
    """Rotation with angular speed ``xS^2 + xB^2``; the radius is conserved along the flow."""
    def evaluator(x):
        w = x[0] ** 2 + x[1] ** 2
        return np.array([-w * x[1], w * x[0]])

    def flow(x0, t):
        x0 = np.asarray(x0, float)
        return _rotation(x0, (x0[0] ** 2 + x0[1] ** 2) * t)

    return VectorFieldSpec(1, 1, evaluator, "rotation-radial", flow)


def linear_hamiltonian(params) -> VectorFieldSpec:
    """Hamiltonian vector field of the coupled oscillators on ``(qS, pS, qB, pB)``."""
    from .dynamics import flow_matrix, hamiltonian_generator

    A = hamiltonian_generator(params)
    return VectorFieldSpec(2, 2, lambda x: A @ x, "linear-hamiltonian",
                           lambda x0, t: flow_matrix(t, params).as_array() @ np.asarray(x0, float))


def timedep_embedding(X_t: Callable[[float, np.ndarray], np.ndarray], m: int) -> VectorFieldSpec:
    """Autonomous field ``(x, tau) -> (X_tau(x), 1)`` on ``R^m x R``.

    The bath coordinate is a clock, so the open evolution from bath point
    ``0`` is the time-dependent flow of ``X_t``.
    """
    def evaluator(y):
        out = np.empty(m + 1)
        out[:m] = X_t(y[m], y[:m])
        out[m] = 1.0
        return out

    return VectorFieldSpec(m, 1, evaluator, "timedep-embedding")


BUILTIN_FIELDS = ("rotation-const", "rotation-radial", "linear-hamiltonian", "timedep-embedding")


def _check_finite(x: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise FlowError("trajectory left the finite range")
    return x


def integrate_flow(spec: VectorFieldSpec, x0, t: float, h: float = DEFAULT_STEP,
                   use_exact: bool = True) -> np.ndarray:
    """``Psi_t(x0)``: closed form when the field has one, classical RK4 otherwise.

    Raises:
        FlowError: if ``|t|/h`` exceeds ten million steps or the state is not finite.
    """
    x = _check_finite(np.array(x0, dtype=float))
    if x.shape != (spec.dim,):
        raise ValueError(f"expected a point of dimension {spec.dim}, got shape {x.shape}")
    t = float(t)
    if not math.isfinite(t):
        raise FlowError("time must be finite")
    if t == 0:
        return x
    if use_exact and spec.exact_flow is not None:
        return _check_finite(np.asarray(spec.exact_flow(x, t), dtype=float))
    if not h > 0:
        raise ValueError("step size must be positive")
    steps = max(1, math.ceil(abs(t) / h - 1e-9))
    if steps > MAX_STEPS:
        raise FlowError(f"{steps} RK4 steps exceed the limit of {MAX_STEPS}")
    dt = t / steps
    for _ in range(steps):
        k1 = spec(x)
        k2 = spec(x + 0.5 * dt * k1)
        k3 = spec(x + 0.5 * dt * k2)
        k4 = spec(x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return _check_finite(x)


def integrate_timedep(X_t: Callable[[float, np.ndarray], np.ndarray], x0, t0: float, t: float,
                      h: float = DEFAULT_STEP) -> np.ndarray:
    """Non-autonomous RK4 for ``x' = X_t(x)`` from time ``t0`` to ``t0 + t``."""
    x = _check_finite(np.atleast_1d(np.array(x0, dtype=float)))
    if t == 0:
        return x
    steps = max(1, math.ceil(abs(t) / h - 1e-9))
    if steps > MAX_STEPS:
        raise FlowError(f"{steps} RK4 steps exceed the limit of {MAX_STEPS}")
    dt = t / steps
    tau = float(t0)
    for _ in range(steps):
        k1 = np.asarray(X_t(tau, x), dtype=float)
        k2 = np.asarray(X_t(tau + dt / 2, x + 0.5 * dt * k1), dtype=float)
        k3 = np.asarray(X_t(tau + dt / 2, x + 0.5 * dt * k2), dtype=float)
        k4 = np.asarray(X_t(tau + dt, x + dt * k3), dtype=float)
        x = x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        tau += dt
    return _check_finite(x)


def open_evolve_pure(spec: VectorFieldSpec, xS, xB, t: float, h: float = DEFAULT_STEP) -> np.ndarray:
    """``Phi_t^xB(xS) = pr_S(Psi_t(xS, xB))``."""
    xS = np.atleast_1d(np.asarray(xS, dtype=float))
    xB = np.atleast_1d(np.asarray(getattr(xB, "coords", xB), dtype=float))
    if xS.shape != (spec.m,) or xB.shape != (spec.n,):
        raise ValueError(f"expected system/bath points of dimensions {spec.m}/{spec.n}")
    return integrate_flow(spec, np.concatenate([xS, xB]), t, h)[:spec.m]


def evolution_property_residual(spec: VectorFieldSpec, xS, xB, s: float, t: float,
                                h: float = DEFAULT_STEP) -> float:
    """``|Phi_s^{pr_B Psi_t(xS, xB)}(Phi_t^xB(xS)) - Phi_{s+t}^xB(xS)|``."""
    xS = np.atleast_1d(np.asarray(xS, dtype=float))
    xB = np.atleast_1d(np.asarray(getattr(xB, "coords", xB), dtype=float))
    mid = integrate_flow(spec, np.concatenate([xS, xB]), t, h)
    left = open_evolve_pure(spec, mid[:spec.m], mid[spec.m:], s, h)
    right = open_evolve_pure(spec, xS, xB, s + t, h)
    return float(np.max(np.abs(left - right)))


@dataclass(frozen=True)
class PointState:
    """Bath point ``xB``."""

    coords: tuple

    def __post_init__(self):
        coords = tuple(float(c) for c in np.atleast_1d(self.coords))
        if not all(math.isfinite(c) for c in coords):
            raise ValueError("bath point coordinates must be finite")
        object.__setattr__(self, "coords", coords)


@dataclass(frozen=True)
class MeasureState:
    """Finite convex combination of bath point masses."""

    weights: tuple
    points: tuple

    def __post_init__(self, tol: float = 1e-12):
        weights = tuple(float(w) for w in self.weights)
        points = tuple(p if isinstance(p, PointState) else PointState(p) for p in self.points)
        if len(weights) != len(points) or not weights:
            raise ValueError("need one weight per point and at least one point")
        if any(w < 0 for w in weights):
            raise ValueError("weights must be non-negative")
        if abs(sum(weights) - 1.0) > tol:
            raise ValueError(f"weights must sum to 1, got {sum(weights)}")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "points", points)

    @classmethod
    def point_mass(cls, xB) -> "MeasureState":
        return cls((1.0,), (PointState(xB),))


def open_evolve_measure(spec: VectorFieldSpec, observable: Callable[[np.ndarray], float],
                        state: MeasureState, t: float, h: float = DEFAULT_STEP):
    """Pullback of ``observable`` under the open evolution of a mixed bath state.

    Returns the function ``xS -> sum_k w_k observable(pr_S Psi_t(xS, xB_k))``.
    """
    def evolved(xS):
        total = 0.0
        for w, p in zip(state.weights, state.points):
            if w:
                total += w * observable(open_evolve_pure(spec, xS, p.coords, t, h))
        return total

    return evolved


def radial_collapse_points(t: float) -> tuple[float, float]:
    """Two distinct system points with the same image under ``Phi_t^0`` of the radial rotation."""
    if not t > 0:
        raise ValueError("t must be positive")
    return 0.0, math.sqrt(math.pi / (2 * t))


def evolution_grid_residuals(spec: VectorFieldSpec, xS, xB, grid: Sequence[float],
                             h: float = DEFAULT_STEP) -> float:
    """Largest evolution-property residual over all ``(s, t)`` pairs of ``grid``."""
    return max(evolution_property_residual(spec, xS, xB, s, t, h) for s in grid for t in grid)
