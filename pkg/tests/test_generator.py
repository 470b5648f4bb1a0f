import json
from dataclasses import replace
from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dqchart.generator import FaultSpec, ScenarioConfig, generate_study, missing_fraction, study_calendar
from dqchart.ingest import StudyDataset, daily_summary
from dqchart.published import CENTER_A_MU, CENTER_A_SIGMA, SIGNS
from dqchart.weighting import weight_matrix


def cfg(**kw):
    base = dict(mu=CENTER_A_MU, sigma=CENTER_A_SIGMA, n=24, n_days=50, seed=0)
    base.update(kw)
    return ScenarioConfig(**base)


def test_complete_dataset():
    data = generate_study(cfg())
    assert len(data.cells) == 24 * 50 * 5
    per_sign, overall = missing_fraction(data)
    assert overall == 0.0 and set(per_sign.values()) == {0.0}


def test_complete_weights_are_one_over_n():
    data = generate_study(cfg(n_days=5))
    for day in data.days:
        np.testing.assert_array_equal(weight_matrix(daily_summary(data, day)).entries,
                                      np.full((5, 5), 1 / 24))


def test_cap_fault():
    c = cfg(faults=(FaultSpec("cap", "SBP", 136.0, study_calendar(date(2018, 1, 1), 50)[29]),))
    data = generate_study(c)
    cut = c.calendar[29]
    late = [v for (d, s, _), v in data.cells.items() if s == "SBP" and d >= cut]
    early = [v for (d, s, _), v in data.cells.items() if s == "SBP" and d < cut]
    assert max(late) <= 136.0
    assert max(early) > 137.0
    clean = generate_study(replace(c, faults=()))
    assert all(data.cells[k] == clean.cells[k] for k in data.cells if k[0] < cut)


def test_fix_and_shift():
    day = date(2018, 1, 10)
    c = cfg(n_days=10, faults=(FaultSpec("fix", "DBP", 120.0, day, day),
                               FaultSpec("shift", "HR", 5.0, day, day)))
    data = generate_study(c)
    clean = generate_study(replace(c, faults=()))
    assert set(data.day_values(day, "DBP").values()) == {120.0}
    for pid, v in data.day_values(day, "HR").items():
        assert v == clean.cells[(day, "HR", pid)] + 5.0


def test_faults_compose_in_order():
    day = date(2018, 1, 2)
    c = cfg(n_days=2, faults=(FaultSpec("fix", "HR", 100.0, day), FaultSpec("cap", "HR", 90.0, day)))
    assert set(generate_study(c).day_values(day, "HR").values()) == {90.0}
    c2 = replace(c, faults=tuple(reversed(c.faults)))
    assert set(generate_study(c2).day_values(day, "HR").values()) == {100.0}


def test_q_day_fraction():
    _, overall = missing_fraction(generate_study(cfg(q_day=0.15)))
    assert 0.10 <= overall <= 0.20


def test_q_day_center_a_level():
    _, overall = missing_fraction(generate_study(cfg(q_day=0.103, seed=3)))
    assert abs(overall - 0.103) <= 0.03


def test_one_sign_absent():
    data = generate_study(cfg(n_days=3))
    cells = {k: v for k, v in data.cells.items() if k[1] != "SpO2"}
    per_sign, overall = missing_fraction(data.with_cells(cells))
    assert per_sign["SpO2"] == 1.0 and per_sign["BT"] == 0.0
    assert overall == pytest.approx(0.2)


def test_missing_fraction_empty():
    with pytest.raises(ValueError):
        missing_fraction(StudyDataset(SIGNS, (), (), {}))


def test_join_windows():
    data = generate_study(cfg(n=3, n_days=10, windows={0: (5, 9)}))
    days = sorted({d for (d, _, pid) in data.cells if pid == "P01"})
    assert days == list(data.days[5:])


def test_weekday_calendar():
    cal = study_calendar(date(2018, 1, 5), 3)
    assert cal == (date(2018, 1, 5), date(2018, 1, 8), date(2018, 1, 9))
    assert len(study_calendar(date(2018, 1, 5), 3, weekdays_only=False)) == 3


@pytest.mark.parametrize("kw", [
    dict(q_day=1.0), dict(q_sign=-0.1), dict(sigma=np.eye(4)),
    dict(faults=(FaultSpec("cap", "XX", 1.0, date(2018, 1, 1)),)),
    dict(faults=(FaultSpec("cap", "SBP", 1.0, date(2030, 1, 1)),)),
])
def test_invalid_config(kw):
    with pytest.raises(ValueError):
        cfg(**kw)


def test_bad_fault_spec():
    with pytest.raises(ValueError):
        FaultSpec("drop", "SBP", 1.0, date(2018, 1, 1))
    with pytest.raises(ValueError):
        FaultSpec("cap", "SBP", 1.0, date(2018, 1, 2), date(2018, 1, 1))


def test_non_pd_sigma():
    bad = CENTER_A_SIGMA.copy()
    bad[0, 1] = bad[1, 0] = 100.0
    with pytest.raises(ValueError, match="positive definite"):
        generate_study(cfg(sigma=bad, n_days=2))


def test_config_roundtrip(tmp_path):
    c = cfg(q_day=0.1, q_sign=0.05, windows={2: (3, 40)},
            faults=(FaultSpec("cap", "SBP", 136.0, date(2018, 2, 1)),))
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(c.to_dict()))
    back = ScenarioConfig.load(path)
    assert back.to_dict() == c.to_dict()
    assert generate_study(back).cells == generate_study(c).cells


@given(seed=st.integers(0, 2 ** 63 - 1), q_day=st.floats(0, 0.5), q_sign=st.floats(0, 0.5))
@settings(max_examples=20, deadline=None)
def test_deterministic(seed, q_day, q_sign):
    c = cfg(n=6, n_days=8, seed=seed, q_day=q_day, q_sign=q_sign)
    assert generate_study(c).cells == generate_study(c).cells


@given(seed=st.integers(0, 2 ** 32 - 1), start=st.integers(0, 9), length=st.integers(0, 9),
       kind=st.sampled_from(["cap", "fix", "shift"]), sign=st.sampled_from(SIGNS))
@settings(max_examples=30, deadline=None)
def test_fault_locality(seed, start, length, kind, sign):
    base = cfg(n=5, n_days=10, seed=seed, q_day=0.1, q_sign=0.1)
    cal = base.calendar
    fault = FaultSpec(kind, sign, 100.0, cal[start], cal[min(start + length, 9)])
    faulty = generate_study(replace(base, faults=(fault,)))
    clean = generate_study(base)
    assert faulty.cells.keys() == clean.cells.keys()
    for key, v in clean.cells.items():
        if not (key[1] == sign and fault.active(key[0])):
            assert faulty.cells[key] == v
