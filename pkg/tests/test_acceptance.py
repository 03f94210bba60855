"""One check per acceptance criterion, at full (non-quick) settings.

Each test prints a single ``[PASS]``/``[FAIL]`` line with the measured
value next to the required tolerance.
"""

import pytest

from wignerflow import validation as v

CRITERIA = [
    (1, v.check_normalization),
    (2, v.check_purity),
    (3, v.check_marginal),
    (4, v.check_oracle),
    (5, v.check_energy),
    (6, v.check_stationarity),
    (7, v.check_classical_limit),
    (8, v.check_zero_nodes),
    (9, v.check_alpha_suppression),
    (10, v.check_winding),
    (11, v.check_trajectory),
    (12, v.check_bounce),
]


@pytest.mark.slow
@pytest.mark.parametrize("number, check", CRITERIA, ids=[f"criterion_{n:02d}" for n, _ in CRITERIA])
def test_criterion(number, check, capsys):
    res = check(quick=False)
    assert res.number == number
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.line()
