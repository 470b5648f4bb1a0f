from datetime import date

import numpy as np
import pytest

from dqchart.published import CENTER_A_MU, CENTER_A_SIGMA, SIGNS, center_a
from dqchart.ucl_sim import UclConfig, ucl_table


@pytest.fixture(scope="session")
def est_a():
    return center_a()


@pytest.fixture(scope="session")
def table_a():
    """Coarse center-A table (20 outer replicates) shared by chart/MYT tests."""
    cfg = UclConfig(m=19, n_bar=20, inner_reps=2000, outer_reps=20, seed=7)
    return ucl_table(CENTER_A_MU, CENTER_A_SIGMA, cfg, SIGNS)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def d(day: int) -> date:
    return date(2018, 1, day)


# acceptance criteria register their verdicts here; printed after the run
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
