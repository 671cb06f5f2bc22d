"""One test per acceptance criterion, each printing a single PASS/FAIL line."""

import pytest

from starflow import checks

CRITERIA = [
    ("01 star-algebra laws", "star-algebra-laws"),
    ("02 canonical commutators", "canonical-commutators"),
    ("03 equivalence intertwining", "equivalence-intertwining"),
    ("04 flow matrix", "flow-matrix"),
    ("05 heisenberg residual", "heisenberg-equation"),
    ("06 energy conservation", "energy-conservation"),
    ("07 laplacian of evolved H_System", "laplacian-of-evolved-H_System"),
    ("08 partition function", "partition-function"),
    ("09 star exponential", "star-exponential"),
    ("10 kms moments", "kms-moments"),
    ("11 coherent open H_System", "coherent-open-H_System"),
    ("12 kms open qS pS", "kms-open-qS-pS"),
    ("13 positivity batteries", "positivity"),
    ("14 classical open evolution", "classical-open-evolution"),
    ("15 semigroup defect", "semigroup-defect"),
]


@pytest.mark.parametrize("label,key", CRITERIA, ids=[c[0] for c in CRITERIA])
def test_criterion(label, key, acceptance_line):
    result = checks.CHECKS[key]()
    acceptance_line(f"{'PASS' if result.ok else 'FAIL'} {label}: {result.detail}")
    assert result.ok, result.detail


def test_criterion_16_selftest_determinism(acceptance_line):
    ok1, first = checks.selftest(seed=42)
    ok2, second = checks.selftest(seed=42)
    same = first == second
    acceptance_line(f"{'PASS' if same else 'FAIL'} 16 selftest determinism: "
          f"{len(first.encode())} bytes, identical={same}")
    assert same
    assert ok1 and ok2


def test_kms_factor_three_is_reported_not_failed():
    flag = checks.kms_factor_three(checks.FLOAT_PARAMS)
    print(flag.line())
    assert flag.present
    assert checks.CHECKS["kms-moments"]().ok
