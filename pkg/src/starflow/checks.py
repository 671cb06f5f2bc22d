"""Self-contained batteries behind ``starflow selftest``.

Every check returns a :class:`CheckResult` whose detail string depends only
on the inputs and the seed, so repeated runs print identical reports.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import classical
from .algebra import Sign
from .discrepancies import all_discrepancies, kms_factor_three
from .dynamics import (delta_h_system_reference, flow_matrix, golden_total_evolution,
                       hamiltonian_catalog, heisenberg_evolve, heisenberg_residual)
from .frames import DARBOUX, Parameters, get_frame
from .open_evolution import (golden_open_evolution, open_evolve, printed_open_evolution,
                             semigroup_defect)
from .parser import parse_expression
from .sampling import random_bath_series, random_series
from .scalars import EXACT, FLOAT
from .series import FormalSeries
from .star import (MatrixObservable, apply_exp_laplacian, apply_laplacian, laplacian,
                   star_commutator, star_product)
from .states import (BathState, cp_sample_check, kms_quadratic_reference, partition_function,
                     partition_reference, positivity_check, star_exp_ode_residual,
                     star_exponential_closed_form, state_moments)

EXACT_PARAMS = Parameters(1, 1, Fraction(3, 2), beta=1, backend=EXACT)  # nu_kappa = 2
FLOAT_PARAMS = Parameters(1.0, 1.0, 1.5, beta=1.0)
T_GRID = tuple(0.15 * k for k in range(20))


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'} {self.name}: {self.detail}"


def _fmt(x: float) -> str:
    return f"{x:.3e}"


# ---------------------------------------------------------------------------- star algebra


def check_star_laws(trials: int = 200, seed: int = 42, max_degree: int = 4,
                    order: int = 6) -> CheckResult:
    """Associativity, Hermiticity and unit for Weyl and Wick, exact arithmetic."""
    rng = random.Random(seed)
    failures = {}
    one = FormalSeries.one(DARBOUX, order, EXACT)
    for name in ("weyl", "wick-total"):
        star = star_product(name, EXACT_PARAMS)
        bad = 0
        for _ in range(trials):
            f, g, h = (random_series(rng, max_degree, order=order, max_terms=3) for _ in range(3))
            if not star(star(f, g), h).equals(star(f, star(g, h))):
                bad += 1
            if not star(f, g).conj().equals(star(g.conj(), f.conj())):
                bad += 1
            if not (star(one, f).equals(f) and star(f, one).equals(f)):
                bad += 1
        failures[name] = bad
    ok = all(v == 0 for v in failures.values())
    return CheckResult("star-algebra-laws", ok,
                       f"{trials} triples, deviations " + ", ".join(
                           f"{k}={v}" for k, v in failures.items()))


def check_commutators() -> CheckResult:
    """``[qS, pS]_weyl = i hbar`` and ``[z, zbar]_wick = 2 hbar`` exactly."""
    P = EXACT_PARAMS
    qS = FormalSeries.variable("qS", DARBOUX, 6, EXACT)
    pS = FormalSeries.variable("pS", DARBOUX, 6, EXACT)
    ihbar = FormalSeries.hbar(DARBOUX, 6, EXACT).scale(1j)
    weyl_ok = star_commutator(qS, pS, "weyl").equals(ihbar)
    fact = get_frame("factorized", P)
    wick_ok = True
    for var, prod in (("zS", "wick-factorized"), ("zB", "wick-factorized"),
                      ("zS", "wick-system"), ("zB", "wick-bath")):
        z = parse_expression(var, fact, P)
        wick_ok &= star_commutator(z, z.conj(), prod, P).equals(
            FormalSeries.hbar(fact, 6, EXACT).scale(2))
    # sqrt(2) z1 of the total modes has rational Darboux coefficients
    for lam, sign in ((P.m * P.nu, 1), (P.m * P.nu_kappa, -1)):
        w = parse_expression(f"qS + {sign}*qB", DARBOUX, P).scale(lam) \
            + parse_expression(f"pS + {sign}*pB", DARBOUX, P).scale(1j)
        # w = sqrt(2 lam) z, so [w, wbar] = 2 lam [z, zbar] = 4 lam hbar
        wick_ok &= star_commutator(w, w.conj(), "wick-total", P).equals(
            FormalSeries.hbar(DARBOUX, 6, EXACT).scale(4 * lam))
    return CheckResult("canonical-commutators", weyl_ok and wick_ok,
                       f"weyl {'exact' if weyl_ok else 'wrong'}, wick {'exact' if wick_ok else 'wrong'}")


def check_intertwining(trials: int = 100, seed: int = 43, max_degree: int = 3) -> CheckResult:
    """``S(f *weyl g) = Sf *wick Sg`` with ``S = exp(hbar Delta)``, exact."""
    rng = random.Random(seed)
    spec = laplacian("total", EXACT_PARAMS)
    weyl = star_product("weyl", EXACT_PARAMS)
    wick = star_product("wick-total", EXACT_PARAMS)
    bad = 0
    for _ in range(trials):
        f = random_series(rng, max_degree, max_terms=3)
        g = random_series(rng, max_degree, max_terms=3)
        left = apply_exp_laplacian(weyl(f, g), spec)
        right = wick(apply_exp_laplacian(f, spec), apply_exp_laplacian(g, spec))
        bad += not left.equals(right)
    return CheckResult("equivalence-intertwining", bad == 0, f"{trials} pairs, {bad} mismatches")


# ---------------------------------------------------------------------------- dynamics


def check_flow_matrix() -> CheckResult:
    P = FLOAT_PARAMS
    sym = max(flow_matrix(t, P).symplectic_defect() for t in T_GRID)
    group = 0.0
    for s in T_GRID[::4]:
        for t in T_GRID:
            lhs = flow_matrix(s, P) @ flow_matrix(t, P)
            group = max(group, float(np.max(np.abs(lhs - flow_matrix(s + t, P).as_array()))))
    ident = flow_matrix(0, EXACT_PARAMS).entries == tuple(
        tuple(1 if i == j else 0 for j in range(4)) for i in range(4))
    ok = sym < 1e-10 and group < 1e-10 and ident
    return CheckResult("flow-matrix", ok, f"symplectic {_fmt(sym)}, group law {_fmt(group)}, "
                       f"t=0 identity {'exact' if ident else 'wrong'}")


def check_heisenberg(times=(0.0, 0.3, 1.1, 2.7), dt: float = 1e-4) -> CheckResult:
    P = FLOAT_PARAMS
    H = hamiltonian_catalog(P, 6)
    obs = {"qS": FormalSeries.variable("qS", DARBOUX, 6, FLOAT),
           "pS": FormalSeries.variable("pS", DARBOUX, 6, FLOAT),
           "qS^2": parse_expression("qS^2", DARBOUX, P, backend=FLOAT),
           "H_System": H.system}
    worst = 0.0
    for f in obs.values():
        for t in times:
            worst = max(worst, max(heisenberg_residual(f, t, dt, P)))
    return CheckResult("heisenberg-equation", worst < 1e-6, f"max residual {_fmt(worst)}")


def check_energy() -> CheckResult:
    P = FLOAT_PARAMS
    H = hamiltonian_catalog(P, 6)
    energy = max(heisenberg_evolve(H.total, t, P).max_deviation(H.total) for t in T_GRID)
    hs = max(heisenberg_evolve(H.system, t, P).max_deviation(
        golden_total_evolution("H_System", t, P)) for t in T_GRID)
    return CheckResult("energy-conservation", energy < 1e-10 and hs < 1e-9,
                       f"H_total {_fmt(energy)}, H_System vs flow {_fmt(hs)}")


def check_delta_h_system() -> CheckResult:
    P = FLOAT_PARAMS
    H = hamiltonian_catalog(P, 6)
    spec = laplacian("total", P)
    ref = float(delta_h_system_reference(P))
    worst = 0.0
    for t in T_GRID:
        d = apply_laplacian(golden_total_evolution("H_System", t, P), spec)
        if not d.is_constant():
            worst = math.inf
            break
        worst = max(worst, abs(complex(d.constant_values()[0]) - ref))
    base = apply_laplacian(H.system, spec).constant_values()[0]
    worst = max(worst, abs(complex(base) - ref))
    return CheckResult("laplacian-of-evolved-H_System", worst < 1e-10,
                       f"constant {ref:.6f}, deviation {_fmt(worst)}")


# ---------------------------------------------------------------------------- states


def check_partition() -> CheckResult:
    worst = 0.0
    for beta, nu in ((1.0, 1.0), (0.5, 2.0)):
        P = Parameters(1.0, nu, 0.0, beta=beta)
        mu, Z = partition_function(beta, P, 6)
        worst = max(worst, mu.max_deviation(partition_reference(beta, nu, 6)),
                    abs(complex(Z.principal_part) - 1 / (beta * nu)))
    return CheckResult("partition-function", worst < 1e-10, f"max deviation {_fmt(worst)}")


def check_star_exponential(seed: int = 44) -> CheckResult:
    rng = random.Random(seed)
    P = Parameters(1.0, 1.0, 0.0, beta=1.0)
    points = [(rng.uniform(-2, 2), rng.uniform(-2, 2)) for _ in range(10)]
    ode = max(star_exp_ode_residual(1.0, P, points, 6))
    G = star_exponential_closed_form(1.0, P, 6)
    classical_gap = max(abs(G.evaluate(q, p)[0] - math.exp(-(p * p + q * q) / 2))
                        for q, p in points)
    ok = ode < 1e-8 and classical_gap < 1e-12
    return CheckResult("star-exponential", ok,
                       f"ODE residual {_fmt(ode)}, order-0 gap {_fmt(classical_gap)}")


def check_kms_moments() -> CheckResult:
    P = FLOAT_PARAMS
    state = BathState.kms(P)
    odd = max(state_moments(state, m).max_deviation(FormalSeries.zero(DARBOUX, 6, FLOAT))
              for m in ((1, 0), (0, 1), (1, 1), (3, 0), (2, 1), (0, 3), (1, 2)))
    ref = kms_quadratic_reference(P, 6)
    quad = max(state_moments(state, (2, 0)).max_deviation(ref["qB^2"]),
               state_moments(state, (0, 2)).max_deviation(ref["pB^2"]))
    flag = kms_factor_three(P)
    ok = odd < 1e-12 and quad < 1e-10 and flag.present
    return CheckResult("kms-moments", ok, f"odd {_fmt(odd)}, quadratic {_fmt(quad)}, "
                       f"factor-3 flag {'reported' if flag.present else 'missing'}")


def check_deformed_delta_h_system(q0: float = 0.4, p0: float = -0.3) -> CheckResult:
    P = FLOAT_PARAMS
    state = BathState.deformed_delta(P, q0, p0)
    H = hamiltonian_catalog(P, 6).system
    t0 = open_evolve(H, 0.0, state).series
    at_zero = max(abs(complex(c)) for (k, _), c in t0.terms.items() if k > 0) \
        if any(k > 0 for (k, _) in t0.terms) else 0.0
    gold = max(open_evolve(H, t, state).series.max_deviation(
        golden_open_evolution("H_System", t, state)) for t in T_GRID)
    ok = at_zero < 1e-12 and gold < 1e-9
    return CheckResult("coherent-open-H_System", ok,
                       f"correction at t=0 {_fmt(at_zero)}, vs golden {_fmt(gold)}")


def check_kms_open_evolution() -> CheckResult:
    P = FLOAT_PARAMS
    state = BathState.kms(P)
    worst = 0.0
    for name in ("qS", "pS"):
        f = FormalSeries.variable(name, DARBOUX, 6, FLOAT)
        for t in T_GRID:
            worst = max(worst, open_evolve(f, t, state).series.max_deviation(
                printed_open_evolution(name, t, state)))
    return CheckResult("kms-open-qS-pS", worst < 1e-9, f"max deviation {_fmt(worst)}")


def check_positivity(seed: int = 45, trials: int = 100, cp_trials: int = 25) -> CheckResult:
    rng = random.Random(seed)
    P = EXACT_PARAMS
    zB = parse_expression("zB", get_frame("factorized", P), P)
    delta = BathState.delta(P)
    witness = delta.expectation(star_product("weyl")(zB.conj().to_darboux(), zB.to_darboux()))
    witness_ok = positivity_check(delta, zB) is Sign.NEGATIVE and witness.equals(
        FormalSeries.hbar(DARBOUX, 6, EXACT).scale(-1))
    negatives = {}
    for state in (BathState.deformed_delta(P, Fraction(1, 2), Fraction(-1, 3)), BathState.kms(P)):
        negatives[state.variant] = sum(
            positivity_check(state, random_bath_series(rng, 3, order=4)) is Sign.NEGATIVE
            for _ in range(trials))
    points = [(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)) for _ in range(5)]
    cp_fail = 0
    for state in (BathState.deformed_delta(P.as_float(), 0.5, -0.3), BathState.kms(P.as_float())):
        for _ in range(cp_trials):
            F = MatrixObservable([[random_series(rng, 2, order=3, backend=FLOAT, max_terms=3)
                                   for _ in range(2)] for _ in range(2)])
            cp_fail += not cp_sample_check(state, F, points).ok
    ok = witness_ok and not any(negatives.values()) and cp_fail == 0
    return CheckResult("positivity", ok,
                       f"delta witness {witness}, negatives {negatives}, cp failures {cp_fail}")


# ---------------------------------------------------------------------------- classical


def check_classical() -> CheckResult:
    rot = classical.rotation_const(1.3)
    ote = 0.0
    for t in (0.0, 0.4, 1.7, 3.1):
        for xS, xB in ((1.0, 0.0), (0.3, -0.8), (-1.2, 0.5)):
            got = classical.open_evolve_pure(rot, xS, xB, t)[0]
            ote = max(ote, abs(got - (xS * math.cos(1.3 * t) - xB * math.sin(1.3 * t))))
    radial = classical.rotation_radial()
    collapse = max(abs(classical.open_evolve_pure(radial, math.sqrt(math.pi / (2 * t)), 0.0, t)[0])
                   for t in (0.5, 1.0, 2.0))
    grid = (0.0, 0.35, 0.9)
    evo = max(classical.evolution_grid_residuals(f, (0.6,) * f.m, (-0.4,) * f.n, grid)
              for f in (rot, radial, classical.linear_hamiltonian(FLOAT_PARAMS)))

    def X_t(t, x):
        return np.array([t * x[0]])

    # x' = t x has the flow x0 exp(t^2 / 2)
    emb = classical.timedep_embedding(X_t, 1)
    td = 0.0
    for t in (0.5, 1.3):
        via_embedding = classical.open_evolve_pure(emb, [0.7], [0.0], t, h=1e-3)
        direct = classical.integrate_timedep(X_t, [0.7], 0.0, t, h=1e-3)
        td = max(td, float(np.max(np.abs(via_embedding - direct))),
                 abs(via_embedding[0] - 0.7 * math.exp(t * t / 2)))
    evo = max(evo, classical.evolution_grid_residuals(emb, (0.7,), (0.0,), grid))
    ok = ote < 1e-9 and collapse < 1e-6 and evo < 1e-6 and td < 1e-6
    return CheckResult("classical-open-evolution", ok,
                       f"closed form {_fmt(ote)}, collapse {_fmt(collapse)}, "
                       f"evolution property {_fmt(evo)}, time-dependent {_fmt(td)}")


def check_semigroup() -> CheckResult:
    qS = FormalSeries.variable("qS", DARBOUX, 6, FLOAT)
    decoupled = semigroup_defect(qS, 0.5, 0.5, BathState.delta(Parameters(1.0, 1.0, 0.0)))
    P = Parameters(1.0, 1.0, None, nu_kappa=2.0)
    coupled = semigroup_defect(qS, 0.5, 0.5, BathState.deformed_delta(P, 0.0, 0.0))
    ok = decoupled <= 1e-10 and coupled > 1e-3
    return CheckResult("semigroup-defect", ok,
                       f"kappa=0 {_fmt(decoupled)}, kappa>0 {_fmt(coupled)}")


CHECKS: dict[str, Callable[..., CheckResult]] = {
    "star-algebra-laws": check_star_laws,
    "canonical-commutators": check_commutators,
    "equivalence-intertwining": check_intertwining,
    "flow-matrix": check_flow_matrix,
    "heisenberg-equation": check_heisenberg,
    "energy-conservation": check_energy,
    "laplacian-of-evolved-H_System": check_delta_h_system,
    "partition-function": check_partition,
    "star-exponential": check_star_exponential,
    "kms-moments": check_kms_moments,
    "coherent-open-H_System": check_deformed_delta_h_system,
    "kms-open-qS-pS": check_kms_open_evolution,
    "positivity": check_positivity,
    "classical-open-evolution": check_classical,
    "semigroup-defect": check_semigroup,
}

_SEEDED = {"star-algebra-laws": 0, "equivalence-intertwining": 1, "star-exponential": 2,
           "positivity": 3}


def selftest(seed: int = 42, trials: int | None = None) -> tuple[bool, str]:
    """Run every battery and return ``(all passed, report text)``.

    Seeded batteries derive their seeds from ``seed``. ``trials`` caps the
    random trial counts (the default uses the full counts).
    """
    lines = [f"starflow selftest (generator: random.Random, seed {seed})"]
    ok = True
    for name, fn in CHECKS.items():
        kwargs = {}
        if name in _SEEDED:
            kwargs["seed"] = seed + _SEEDED[name]
        if trials is not None and name in ("star-algebra-laws", "equivalence-intertwining",
                                           "positivity"):
            kwargs["trials"] = trials
        result = fn(**kwargs)
        ok &= result.ok
        lines.append(result.line())
    flags = [d for d in all_discrepancies() if d.present]
    lines.append(f"discrepancy flags: {len(flags)}")
    lines.extend(d.line() for d in flags)
    lines.append(f"summary: {'PASS' if ok else 'FAIL'}")
    return ok, "\n".join(lines) + "\n"
