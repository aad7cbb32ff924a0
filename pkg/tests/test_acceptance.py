"""Acceptance suite: every exit criterion at its stated tolerance.

Each test prints its one-line pass/fail verdict (visible with ``pytest -s``
or in the CLI ``report`` command, which runs the same registry).
"""

import pytest

from branchlab.acceptance import CRITERIA, run_criterion

_NAMES = {
    1: "single_type_oracle",
    2: "extinction_moment_asymptotics",
    3: "survival_asymptotics",
    4: "phi_solver",
    5: "final_stage_law",
    6: "yaglom_limit",
    7: "conditional_law_regimes",
    8: "exponent_arbitration",
    9: "constants_identities",
    10: "scalar_recursion",
    11: "total_progeny_scaling",
    12: "monte_carlo_vs_exact",
}


@pytest.mark.parametrize(
    "cid", sorted(CRITERIA), ids=[f"c{c:02d}_{_NAMES[c]}" for c in sorted(CRITERIA)]
)
def test_criterion(cid):
    result = run_criterion(cid)
    print(result.line())
    detail = "\n".join(result.details)
    assert result.passed, f"criterion {cid} failed:\n{detail}"
