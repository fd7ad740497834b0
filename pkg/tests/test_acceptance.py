"""Acceptance suite: one test per criterion, each printing a pass/fail line.

The criteria are implemented in topospectra.checks (shared with the CLI
``check`` command); every test here runs one criterion at its stated
tolerance and fails if the criterion fails or exceeds its runtime budget.
"""

import pytest

from topospectra import checks

RUNTIME_BUDGETS = {
    "reduced_ho_euler_integral": 1.0,
    "canonical_spectrum_recovery": 0.1,
    "kepler_annulus_vs_boundary_term": 5.0,
    "dynamical_equivalence": 10.0,
}


@pytest.mark.parametrize(
    "criterion", checks.CRITERIA, ids=lambda fn: fn.__name__.replace("check_", "")
)
def test_criterion(criterion):
    result = criterion()
    status = "PASS" if result.passed else "FAIL"
    print(f"\n{status}  {result.name}: {result.detail} [{result.seconds:.2f}s]")
    assert result.passed, f"{result.name}: {result.detail}"
    budget = RUNTIME_BUDGETS.get(result.name)
    if budget is not None:
        assert result.seconds < budget, (
            f"{result.name} took {result.seconds:.2f}s, budget {budget}s"
        )
