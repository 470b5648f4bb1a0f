import io
from datetime import date

import pytest
from hypothesis import given, settings, strategies as st

from dqchart.ingest import (IngestError, PlausibilityRanges, StudyDataset, clean, daily_summary,
                            parse_long_csv, write_long_csv, write_removal_report)

HEADER = "date,participant,sign,value\n"


def csv_bytes(rows):
    return (HEADER + "".join(r + "\n" for r in rows)).encode()


def test_parse_small_day():
    data = parse_long_csv(csv_bytes([
        "2018-01-02,a,SBP,120",
        "2018-01-02,a,DBP,80",
        "2018-01-02,b,SBP,131.5",
    ]), ["SBP", "DBP"])
    assert len(data.cells) == 3
    assert data.days == (date(2018, 1, 2),)
    assert data.participants == ("a", "b")
    assert ("2018-01-02", "DBP", "b") not in data.cells


def test_parse_accepts_text_stream_and_path(tmp_path):
    text = HEADER + "2018-01-02,a,SBP,120\n"
    assert len(parse_long_csv(io.StringIO(text), ["SBP"]).cells) == 1
    path = tmp_path / "x.csv"
    path.write_text(text)
    assert len(parse_long_csv(path, ["SBP"]).cells) == 1


def test_duplicate_cell_names_both_lines():
    with pytest.raises(IngestError, match=r"lines 2 and 4"):
        parse_long_csv(csv_bytes([
            "2018-01-02,a,SBP,120",
            "2018-01-02,b,SBP,121",
            "2018-01-02,a,SBP,119",
        ]), ["SBP"])


def test_unknown_sign():
    with pytest.raises(IngestError, match="unknown sign 'XYZ'"):
        parse_long_csv(csv_bytes(["2018-01-02,a,XYZ,1"]), ["SBP", "DBP"])


@pytest.mark.parametrize("row,msg", [
    ("2018-01-02,a,SBP", "line 2: expected 4 fields"),
    ("02/01/2018,a,SBP,120", "line 2: bad date"),
    ("2018-01-02,a,SBP,high", "line 2: bad value"),
    ("2018-01-02,a,SBP,nan", "line 2: non-finite"),
])
def test_malformed_rows_report_line(row, msg):
    with pytest.raises(IngestError, match=msg):
        parse_long_csv(csv_bytes([row]), ["SBP"])


def test_empty_input():
    with pytest.raises(IngestError, match="empty"):
        parse_long_csv(b"", ["SBP"])
    with pytest.raises(IngestError, match="empty"):
        parse_long_csv(HEADER.encode(), ["SBP"])


def test_bad_header():
    with pytest.raises(IngestError, match="header"):
        parse_long_csv(b"day,id,sign,value\n2018-01-02,a,SBP,1\n", ["SBP"])


def test_calendar_keeps_empty_days():
    cal = [date(2018, 1, 2), date(2018, 1, 3)]
    data = parse_long_csv(csv_bytes(["2018-01-02,a,SBP,120"]), ["SBP"], calendar=cal)
    assert data.days == tuple(cal)
    inferred = parse_long_csv(csv_bytes(["2018-01-02,a,SBP,120"]), ["SBP"])
    assert inferred.days == (date(2018, 1, 2),)
    with pytest.raises(IngestError, match="not in the supplied calendar"):
        parse_long_csv(csv_bytes(["2018-01-05,a,SBP,120"]), ["SBP"], calendar=cal)


def _ds(cells, signs=("BT", "SBP", "DBP", "HR", "SpO2")):
    pids = {k[2] for k in cells}
    days = {k[0] for k in cells}
    return StudyDataset(signs, tuple(pids), tuple(days), cells)


def test_clean_removes_zero_heart_rate():
    day = date(2018, 1, 2)
    data = _ds({(day, "HR", "a"): 0.0, (day, "HR", "b"): 72.0, (day, "SBP", "a"): 120.0})
    ranges = PlausibilityRanges.default().override({"HR": [30, 220]})
    cleaned, report = clean(data, ranges)
    assert len(report) == 1
    assert (report[0].participant, report[0].sign, report[0].value) == ("a", "HR", 0.0)
    assert (day, "HR", "a") not in cleaned.cells
    assert len(cleaned.cells) == 2


def test_clean_identity_when_all_plausible():
    day = date(2018, 1, 2)
    data = _ds({(day, "HR", "a"): 60.0, (day, "SpO2", "a"): 97.0})
    cleaned, report = clean(data, PlausibilityRanges.default())
    assert report == []
    assert cleaned.cells == data.cells


def test_clean_upper_boundary():
    day = date(2018, 1, 2)
    data = _ds({(day, "SpO2", "a"): 101.0, (day, "SpO2", "b"): 100.0, (day, "SpO2", "c"): 70.0})
    cleaned, report = clean(data, PlausibilityRanges.default().override({"SpO2": [70, 100]}))
    assert [r.participant for r in report] == ["a"]
    assert set(k[2] for k in cleaned.cells) == {"b", "c"}


def test_removal_report_format():
    day = date(2018, 1, 2)
    _, report = clean(_ds({(day, "HR", "a"): 0.0}), PlausibilityRanges.default())
    text = write_removal_report(report)
    lines = text.splitlines()
    assert lines[0] == "date,participant,sign,value,reason"
    assert lines[1].startswith("2018-01-02,a,HR,0.0,below")


def test_ranges_validation():
    with pytest.raises(ValueError):
        PlausibilityRanges({"HR": (50.0, 50.0)})
    with pytest.raises(ValueError, match="no plausibility range"):
        clean(_ds({(date(2018, 1, 2), "HR", "a"): 1.0}), PlausibilityRanges({"BT": (30, 45)}))


def test_daily_summary_table1_pattern():
    # participant 2 absent, participant 1 lacks sign 1
    n = 6
    day = date(2018, 1, 2)
    signs = ("BT", "SBP", "DBP")
    cells = {}
    for k in range(1, n + 1):
        for j, s in enumerate(signs):
            if k == 2 or (k == 1 and j == 0):
                continue
            cells[(day, s, f"p{k}")] = 1.0 + j + k
    data = StudyDataset(signs, tuple(f"p{k}" for k in range(1, n + 1)), (day,), cells)
    summ = daily_summary(data, day)
    assert summ.counts.tolist() == [n - 2, n - 1, n - 1]
    assert summ.overlaps[0, 1] == n - 2
    assert summ.overlaps[1, 2] == n - 1


def test_daily_summary_complete_day():
    day = date(2018, 1, 2)
    signs = ("SBP", "DBP")
    cells = {(day, s, f"p{k}"): 100.0 + k for s in signs for k in range(5)}
    summ = daily_summary(StudyDataset(signs, tuple(f"p{k}" for k in range(5)), (day,), cells), day)
    assert summ.counts.tolist() == [5, 5]
    assert (summ.overlaps == 5).all()
    assert summ.means.tolist() == [102.0, 102.0]


def test_daily_summary_overlap_arithmetic():
    day = date(2018, 1, 2)
    cells = {(day, "SBP", "a"): 1.0, (day, "SBP", "b"): 2.0,
             (day, "DBP", "b"): 3.0, (day, "DBP", "c"): 4.0}
    summ = daily_summary(StudyDataset(("SBP", "DBP"), ("a", "b", "c"), (day,), cells), day)
    assert summ.overlaps[0, 1] == 1
    assert summ.means.tolist() == [1.5, 3.5]


def test_daily_summary_unknown_day():
    with pytest.raises(KeyError):
        daily_summary(_ds({(date(2018, 1, 2), "HR", "a"): 60.0}), date(2018, 1, 3))


signs_st = ("BT", "SBP", "DBP")
cell_keys = st.tuples(st.integers(1, 5), st.sampled_from(signs_st), st.sampled_from(list("abcdef")))
finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@st.composite
def datasets(draw):
    cells = draw(st.dictionaries(cell_keys, finite, min_size=1, max_size=40))
    cells = {(date(2018, 1, k[0]), k[1], k[2]): v for k, v in cells.items()}
    return StudyDataset(signs_st, tuple({k[2] for k in cells}), tuple({k[0] for k in cells}), cells)


@given(datasets())
@settings(max_examples=60, deadline=None)
def test_round_trip(data):
    again = parse_long_csv(write_long_csv(data).encode(), signs_st)
    assert again.cells == data.cells
    assert again.days == data.days
    assert again.participants == data.participants


@given(datasets(), st.floats(-100, 100), st.floats(1, 200))
@settings(max_examples=60, deadline=None)
def test_clean_idempotent(data, lo, width):
    ranges = PlausibilityRanges({s: (lo, lo + width) for s in signs_st})
    once, _ = clean(data, ranges)
    twice, report = clean(once, ranges)
    assert twice.cells == once.cells
    assert report == []


@given(datasets())
@settings(max_examples=60, deadline=None)
def test_count_and_overlap_bounds(data):
    for day in data.days:
        summ = daily_summary(data, day)
        assert ((0 <= summ.counts) & (summ.counts <= data.n)).all()
        assert (summ.overlaps.diagonal() == summ.counts).all()
        assert (summ.overlaps <= summ.counts[:, None]).all()
        assert (summ.overlaps <= summ.counts[None, :]).all()
