"""Deformation-quantized open time evolution of two coupled harmonic oscillators.

The package builds star products on the phase space ``(qS, pS, qB, pB)``,
evolves observables with the classical flow and the Heisenberg equation,
and reduces them with bath states (point evaluation, coherent and KMS).
"""

from .algebra import Sign, differentiate, gaussian_moment, poisson_bracket, series_sign
from .classical import (MeasureState, PointState, VectorFieldSpec, integrate_flow,
                        open_evolve_measure, open_evolve_pure)
from .dynamics import (flow_matrix, hamiltonian_catalog, heisenberg_evolve, heisenberg_residual)
from .frames import DARBOUX, Parameters, get_frame
from .open_evolution import (ReducedObservable, open_evolve, partial_reduce, reference_compare,
                             semigroup_defect)
from .parser import ParseError, parse_expression
from .scalars import EXACT, FLOAT, GaussianRational
from .series import FormalSeries, Polynomial
from .star import (MatrixObservable, StarProduct, apply_exp_laplacian, laplacian, matrix_star,
                   square_preserving_witness, star_commutator, star_product, weyl_star, wick_star)
from .states import (BathState, GaussianFamilyFunction, cp_sample_check, partition_function,
                     positivity_check, star_exp_ode_residual, star_exponential_closed_form,
                     state_moments, trace_pairing)

__version__ = "0.1.0"

__all__ = [
    "Sign", "differentiate", "gaussian_moment", "poisson_bracket", "series_sign",
    "MeasureState", "PointState", "VectorFieldSpec", "integrate_flow", "open_evolve_measure",
    "open_evolve_pure", "flow_matrix", "hamiltonian_catalog", "heisenberg_evolve",
    "heisenberg_residual", "DARBOUX", "Parameters", "get_frame", "ReducedObservable",
    "open_evolve", "partial_reduce", "reference_compare", "semigroup_defect", "ParseError",
    "parse_expression", "EXACT", "FLOAT", "GaussianRational", "FormalSeries", "Polynomial",
    "MatrixObservable", "StarProduct", "apply_exp_laplacian", "laplacian", "matrix_star",
    "square_preserving_witness", "star_commutator", "star_product", "weyl_star", "wick_star",
    "BathState", "GaussianFamilyFunction", "cp_sample_check", "partition_function",
    "positivity_check", "star_exp_ode_residual", "star_exponential_closed_form",
    "state_moments", "trace_pairing",
]
