import io
from collections import defaultdict

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sigmoidlife.ingestion import (
    ActivitySeries,
    DataError,
    EventRecord,
    FormatError,
    ObservationWindow,
    RowParseError,
    bin_monthly,
    bin_occurrences,
    month_label,
    month_ordinal,
    parse_events,
    parse_month,
    parse_occurrences,
    window_for,
)


def test_parse_single_row():
    recs = parse_events("entity_id,timestamp\nC1,2006-03-15\n")
    assert recs == [EventRecord("C1", month_ordinal(2006, 3))]


def test_header_only_gives_nothing():
    assert parse_events("entity_id,timestamp\n") == []


def test_bad_date_reports_line_number():
    with pytest.raises(RowParseError) as info:
        parse_events("entity_id,timestamp\nC1,not-a-date\n")
    assert info.value.errors[0][0] == 2


def test_row_errors_accumulate():
    text = "entity_id,timestamp\nC1,2006-01\nC2,xx\nC3,2006-13-01\nC4,2007-02\n"
    with pytest.raises(RowParseError) as info:
        parse_events(text)
    assert [line for line, _ in info.value.errors] == [3, 4]


def test_bad_header():
    with pytest.raises(FormatError):
        parse_events("id,when\nC1,2006-01-01\n")
    with pytest.raises(FormatError):
        parse_events("")


def test_crlf_and_month_only():
    recs = parse_events(io.StringIO("entity_id,timestamp\r\nA,2010-12\r\nB,2011-01-31T10:00\r\n"))
    assert [r.month for r in recs] == [month_ordinal(2010, 12), month_ordinal(2011, 1)]


def test_month_roundtrip():
    for m in (0, 1, 11, 12, 24095, 24096):
        assert parse_month(month_label(m)) == m


def test_bin_counts_example():
    ev = [EventRecord("C1", month_ordinal(2006, 3))] * 2 + [EventRecord("C1", month_ordinal(2006, 5))]
    s = bin_monthly(ev, ObservationWindow(month_ordinal(2006, 1), month_ordinal(2006, 6)))["C1"]
    assert s.start_month == month_ordinal(2006, 3)
    assert s.counts.tolist() == [2, 0, 1, 0]


def test_bin_single_event_at_end():
    end = month_ordinal(2010, 6)
    s = bin_monthly([EventRecord("X", end)], ObservationWindow(end - 5, end))["X"]
    assert s.counts.tolist() == [1]
    assert s.insufficient_history


def test_event_outside_window():
    with pytest.raises(DataError):
        bin_monthly([EventRecord("X", 10)], ObservationWindow(0, 5))


def _rebin_one(events, end):
    # naive oracle: one entity at a time, month by month
    months = [e.month for e in events]
    start = min(months)
    return [sum(1 for m in months if m == k) for k in range(start, end + 1)]


def test_interleaved_entities_match_per_entity_rebin(rng):
    ev = [EventRecord(f"E{rng.integers(3)}", int(rng.integers(100, 160))) for _ in range(400)]
    window = window_for(ev)
    got = bin_monthly(ev, window)
    by_entity = defaultdict(list)
    for e in ev:
        by_entity[e.entity_id].append(e)
    assert sorted(got) == sorted(by_entity)
    for eid, evs in by_entity.items():
        assert got[eid].counts.tolist() == _rebin_one(evs, window.end_month)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("abcd"), st.integers(0, 40)), min_size=1, max_size=80))
def test_conservation(pairs):
    ev = [EventRecord(e, m) for e, m in pairs]
    series = bin_monthly(ev, window_for(ev))
    for eid, s in series.items():
        assert s.total == sum(1 for e, _ in pairs if e == eid)
        assert s.counts[0] > 0


def test_occurrences_sum_over_states():
    text = "entity_id,month,count,state\nT,2010-01,2,CA\nT,2010-01,3,NY\nT,2010-03,1,CA\n"
    recs = parse_occurrences(text)
    s = bin_occurrences(recs, window_for(recs))["T"]
    assert s.counts.tolist() == [5, 0, 1]
    assert s.counts.dtype == np.int64


def test_occurrence_negative_count_rejected():
    with pytest.raises(RowParseError):
        parse_occurrences("entity_id,month,count\nT,2010-01,-1\n")


def test_truncate_and_last_active():
    s = ActivitySeries("e", 100, np.array([1, 0, 3, 0, 0]))
    assert s.end_month == 104
    assert s.last_active_month == 102
    assert s.truncate(101).counts.tolist() == [1, 0]
    with pytest.raises(ValueError):
        ActivitySeries("e", 0, np.array([0, 1]))
