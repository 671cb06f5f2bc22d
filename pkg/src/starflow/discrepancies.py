"""Known disagreements between printed closed forms and independent recomputation.

Each check evaluates a printed formula next to the value derived from the
flow matrix or the Gaussian-moment oracle and reports the gap. A flag is a
report entry, never an error.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dynamics import (golden_total_evolution, reference_formula_h_system, reference_formula_ps)
from .frames import Parameters
from .series import DEFAULT_ORDER


@dataclass(frozen=True)
class Discrepancy:
    """One printed-versus-derived comparison.

    Attributes:
        key: short stable identifier.
        description: what differs.
        printed: printed expression.
        derived: expression the oracle supports.
        deviation: largest coefficient gap at the probe point.
    """

    key: str
    description: str
    printed: str
    derived: str
    deviation: float

    @property
    def present(self) -> bool:
        return self.deviation > 1e-9

    def line(self) -> str:
        return (f"FLAG {self.key}: {self.description} | printed {self.printed} | "
                f"derived {self.derived} | gap {self.deviation:.6g}")


def kms_factor_three(params: Parameters, order: int = DEFAULT_ORDER) -> Discrepancy:
    """Extra factor 3 in the printed KMS second moments (and the final ``3 hbar/16`` bracket)."""
    from .states import BathState, kms_quadratic_reference, state_moments

    state = BathState.kms(params, order=order)
    printed = kms_quadratic_reference(params, order, factor=3)["qB^2"]
    gap = state_moments(state, (2, 0)).max_deviation(printed)
    return Discrepancy("kms-factor-3", "KMS moment omega(qB^2) carries an extra factor 3",
                       "3 hbar / (2 m nu tanh(hbar beta nu/2))",
                       "hbar / (2 m nu tanh(hbar beta nu/2))", gap)


def ps_sin_cos(params: Parameters, t: float = 0.7) -> Discrepancy:
    """``cos`` printed where the flow gives ``sin`` in the ``qB`` coefficient of ``A_t pS``."""
    gap = reference_formula_ps(t, params).max_deviation(golden_total_evolution("pS", t, params))
    return Discrepancy("ps-sin-cos", "qB coefficient of the evolved pS uses cos instead of sin",
                       "-m/2 (nu cos(nu t) - nu_k cos(nu_k t))",
                       "-m/2 (nu sin(nu t) - nu_k sin(nu_k t))", gap)


def h_system_qs_pb(params: Parameters, t: float = 0.7) -> Discrepancy:
    """Wrong first summand of the ``qS pB`` coefficient of the evolved ``H_System``."""
    gap = reference_formula_h_system(t, params).max_deviation(
        golden_total_evolution("H_System", t, params))
    return Discrepancy("h-system-qs-pb", "qS*pB coefficient of the evolved H_System",
                       "-(c1 - c2)(s1/(m nu) + s2/(m nu_k))/4 + ...",
                       "-(c1 - c2)(nu s1 + nu_k s2)/4 + ...", gap)


def delta_correction_square(params: Parameters, t: float = 0.7) -> Discrepancy:
    """Unsquared ``2 nu (cos - cos)`` in the coherent-state correction of ``H_System``.

    The derived value is the ``hbar`` coefficient of the flow-matrix pullback
    with the coherent-state moments substituted.
    """
    from .open_evolution import correction_bracket, golden_open_evolution
    from .states import BathState

    state = BathState.deformed_delta(params.as_float(), 0.0, 0.0)
    golden = golden_open_evolution("H_System", t, state).coeff(1).constant_term()
    gap = abs(complex(golden) - correction_bracket(t, params, squared=False) / 16)
    return Discrepancy("delta-correction-square",
                       "hbar/16 correction term 2 nu (cos(nu t) - cos(nu_k t)) is not squared",
                       "2 nu (c1 - c2)", "2 nu (c1 - c2)^2", gap)


def all_discrepancies(params: Parameters | None = None, t: float = 0.7) -> list[Discrepancy]:
    """Every known flag evaluated at ``params`` (default ``m=1, nu=1, nu_kappa=2, beta=1``)."""
    if params is None:
        params = Parameters(1.0, 1.0, None, beta=1.0, nu_kappa=2.0)
    if params.beta is None:
        params = params.with_beta(1.0)
    return [kms_factor_three(params), ps_sin_cos(params, t), h_system_qs_pb(params, t),
            delta_correction_square(params, t)]
