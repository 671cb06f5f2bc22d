import math

import numpy as np
import pytest

from starflow import BathState, DARBOUX, FormalSeries, Parameters, parse_expression
from starflow.discrepancies import all_discrepancies
from starflow.dynamics import flow_matrix, hamiltonian_catalog
from starflow.open_evolution import (ReducedObservable, correction_bracket,
                                     golden_open_evolution, open_evolve,
                                     open_positivity_battery, printed_open_evolution,
                                     reference_compare, semigroup_defect)

PARAMS = Parameters(1.0, 1.0, 1.5, beta=1.0)
GRID = [0.0, 0.35, 1.2, 2.6]


def test_open_evolution_of_qs_is_flow_row_with_bath_mean():
    state = BathState.delta(PARAMS, 0.3, -0.2)
    t = 0.9
    M = flow_matrix(t, PARAMS).as_array()
    got = open_evolve(parse_expression("qS"), t, state).series
    want = {(0, (1, 0, 0, 0)): M[0, 0], (0, (0, 1, 0, 0)): M[0, 1],
            (0, (0, 0, 0, 0)): M[0, 2] * 0.3 + M[0, 3] * -0.2}
    assert got.max_deviation(FormalSeries(want, DARBOUX, got.order, "float")) < 1e-12


@pytest.mark.parametrize("variant", ["deformed-delta", "kms"])
@pytest.mark.parametrize("name", ["qS", "pS", "H_System"])
def test_matches_golden(variant, name):
    state = BathState("deformed-delta", PARAMS, 0.4, -0.3) if variant != "kms" else \
        BathState.kms(PARAMS)
    report = reference_compare(name, GRID, state)
    assert report.max_golden < 1e-9


def test_coherent_h_system_correction_vanishes_at_zero():
    state = BathState.deformed_delta(PARAMS, 0.4, -0.3)
    H = hamiltonian_catalog(PARAMS).system
    got = open_evolve(H, 0.0, state).series
    assert got.coeff(1).is_zero()
    assert abs(correction_bracket(0.0, PARAMS)) < 1e-15


def test_coherent_correction_is_bracket_over_sixteen():
    state = BathState.deformed_delta(PARAMS, 0.0, 0.0)
    for t in GRID:
        gold = golden_open_evolution("H_System", t, state).coeff(1).constant_term()
        assert abs(complex(gold) - correction_bracket(t, PARAMS) / 16) < 1e-12


def test_kms_qs_ps_have_no_bath_terms_and_match_printed():
    state = BathState.kms(PARAMS)
    for name in ("qS", "pS"):
        for t in GRID:
            got = open_evolve(parse_expression(name), t, state).series
            assert got.max_deviation(printed_open_evolution(name, t, state)) < 1e-9


def test_kms_h_system_printed_form_flagged():
    report = reference_compare("H_System", GRID, BathState.kms(PARAMS))
    assert report.flags and report.flags[0].key == "kms-factor-3"


def test_reduced_observable_rejects_bath_variables():
    with pytest.raises(ValueError):
        ReducedObservable(parse_expression("qB"))
    with pytest.raises(ValueError):
        open_evolve(parse_expression("pB"), 0.3, BathState.kms(PARAMS))


def test_rows_layout():
    out = open_evolve(parse_expression("qS"), 0.5, BathState.kms(PARAMS), "qS")
    rows = out.rows()
    assert all(len(r) == 5 and r[0] == 0.5 for r in rows)


def test_semigroup_defect_zero_without_coupling():
    params = Parameters(1.0, 1.0, 0.0)
    state = BathState.delta(params)
    assert semigroup_defect(parse_expression("qS^2 + pS"), 0.4, 0.9, state) < 1e-10


def test_semigroup_defect_witness_with_coupling():
    state = BathState.delta(PARAMS)
    assert semigroup_defect(parse_expression("qS"), 0.4, 0.9, state) > 1e-3


def test_open_positivity_battery():
    for state in (BathState.deformed_delta(PARAMS, 0.2, 0.1), BathState.kms(PARAMS)):
        assert open_positivity_battery(state, 0.8, trials=20).ok


def test_discrepancy_flags_present():
    flags = all_discrepancies()
    assert [f.key for f in flags] == ["kms-factor-3", "ps-sin-cos", "h-system-qs-pb",
                                      "delta-correction-square"]
    assert all(f.present for f in flags)
    assert abs(flags[0].deviation - 2.0) < 1e-9  # printed is 3x the derived leading term 1


def test_correction_bracket_squared_versus_unsquared():
    t = 0.7
    m, nu, nk = PARAMS.m, PARAMS.nu, PARAMS.nu_kappa
    c = math.cos(nu * t) - math.cos(nk * t)
    gap = correction_bracket(t, PARAMS) - correction_bracket(t, PARAMS, squared=False)
    assert np.isclose(gap, 2 * nu * (c * c - c))
