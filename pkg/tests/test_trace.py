import io
import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geburst.errors import NoCrossing, TraceParseError, ValidationError
from geburst.trace import (LatencyTrace, crossing_point, dump_trace, ecdf, evaluate,
                           interpolate, load_trace)

from conftest import make_trace


def csv_bytes(text):
    return io.BytesIO(text.encode())


class TestLoadTrace:
    def test_plain_rows(self):
        t = load_trace(csv_bytes("seq,latency_ms\n1,4.0\n2,5.0\n3,6.0\n"), period=100)
        assert len(t) == 3
        assert t.latency.tolist() == [4.0, 5.0, 6.0]
        assert not t.lost.any()
        assert t.period == 100

    def test_gap_becomes_lost(self):
        t = load_trace(csv_bytes("seq,latency_ms\n1,4\n2,5\n4,7\n"), period=100)
        assert t.seq.tolist() == [1, 2, 3, 4]
        assert math.isinf(t.latency[2])
        assert t.gap_filled.tolist() == [False, False, True, False]

    def test_lost_token(self):
        t = load_trace(csv_bytes("seq,latency_ms\n1,LOST\n2,3\n"), period=10)
        assert t.lost.tolist() == [True, False]
        assert not t.gap_filled.any()

    def test_malformed_row_names_line(self):
        with pytest.raises(TraceParseError) as e:
            load_trace(csv_bytes("1;abc\n"), period=100)
        assert e.value.line == 1
        assert "line 1" in str(e.value)

    def test_bad_latency_line_number_counts_comments(self):
        with pytest.raises(TraceParseError, match="line 4"):
            load_trace(csv_bytes("# label=x\nseq,latency_ms\n1,2\n2,abc\n"), period=100)

    def test_negative_latency_rejected(self):
        with pytest.raises(TraceParseError):
            load_trace(csv_bytes("seq,latency_ms\n1,-3\n"), period=100)

    def test_non_monotonic(self):
        with pytest.raises(ValidationError, match="strictly increasing"):
            load_trace(csv_bytes("seq,latency_ms\n2,1\n1,1\n"), period=100)

    def test_empty(self):
        with pytest.raises(ValidationError):
            load_trace(csv_bytes("seq,latency_ms\n"), period=100)

    def test_metadata(self):
        t = load_trace(csv_bytes("# period_ms=50\n# label=wifi\nseq,latency_ms\n1,2\n"))
        assert t.period == 50 and t.label == "wifi"

    def test_period_flag_overrides_metadata(self, caplog):
        with caplog.at_level(logging.WARNING):
            t = load_trace(csv_bytes("# period_ms=50\nseq,latency_ms\n1,2\n"), period=100)
        assert t.period == 100
        assert "overrides" in caplog.text

    def test_missing_period(self):
        with pytest.raises(ValidationError, match="period"):
            load_trace(csv_bytes("seq,latency_ms\n1,2\n"))

    def test_label_from_filename(self, tmp_path):
        p = tmp_path / "lte_run.csv"
        p.write_text("seq,latency_ms\n1,2\n")
        assert load_trace(p, period=100).label == "lte_run"

    def test_round_trip(self):
        t = make_trace([1.5, None, 3.25], label="x")
        buf = io.StringIO()
        dump_trace(t, buf)
        back = load_trace(io.StringIO(buf.getvalue()))
        assert back.latency.tolist() == t.latency.tolist()
        assert back.label == "x" and back.period == t.period

    def test_trace_is_immutable(self):
        t = make_trace([1.0, 2.0])
        with pytest.raises(ValueError):
            t.latency[0] = 5.0


class TestEcdf:
    def test_counting(self):
        c = ecdf(make_trace([5, 5, 10, 20]))
        assert evaluate(c, 5) == 0.5
        assert evaluate(c, 10) == 0.75
        assert evaluate(c, 20) == 1.0

    def test_loss(self):
        c = ecdf(make_trace([5, None]))
        assert evaluate(c, 5) == 0.5
        assert c.loss_fraction == 0.5
        assert evaluate(c, 1e300) == 0.5

    def test_all_lost(self):
        c = ecdf(make_trace([None, None]))
        assert c.loss_fraction == 1.0
        assert evaluate(c, 1e9) == 0.0

    def test_empty_trace(self):
        t = LatencyTrace(np.array([], dtype=int), np.array([]), 100.0)
        with pytest.raises(ValidationError):
            ecdf(t)

    def test_exponential_samples(self, rng):
        lat = rng.exponential(scale=10.0, size=10_000)   # rate 0.1 / ms
        c = ecdf(make_trace(lat))
        for theta in (5, 10, 30):
            assert abs(evaluate(c, theta) - (1 - math.exp(-0.1 * theta))) < 0.02


class TestEvaluate:
    def test_step(self):
        assert evaluate(ecdf(make_trace([5, 10])), 7) == 0.5

    def test_below_support(self):
        assert evaluate(ecdf(make_trace([3, 4])), 0) == 0.0

    def test_right_continuous(self):
        assert evaluate(ecdf(make_trace([5, 10])), 10) == 1.0

    def test_vectorized(self):
        c = ecdf(make_trace([5, 10]))
        assert evaluate(c, np.array([0, 5, 9.9, 10])).tolist() == [0, 0.5, 0.5, 1.0]


def brute_force_crossings(a_lat, b_lat):
    """Independent scan: direct counting at every merged support point, then a
    linear solve wherever the difference flips sign between neighbours."""
    pts = sorted(set(a_lat) | set(b_lat))
    fa = [sum(x <= t for x in a_lat) / len(a_lat) for t in pts]
    fb = [sum(x <= t for x in b_lat) / len(b_lat) for t in pts]
    d = [x - y for x, y in zip(fa, fb)]
    out = []
    last = None
    for i, v in enumerate(d):
        if v == 0:
            continue
        if last is not None and (d[last] > 0) != (v > 0):
            if i == last + 1:
                frac = d[last] / (d[last] - v)
                out.append(pts[last] + frac * (pts[i] - pts[last]))
            else:
                out.append(pts[last + 1])
        last = i
    return out


class TestCrossing:
    def test_simple(self):
        a, b = ecdf(make_trace([10, 10])), ecdf(make_trace([5, 15]))
        xs = crossing_point(a, b)
        assert len(xs) == 1
        assert xs[0].theta == pytest.approx(7.5)
        assert xs[0].reliability == pytest.approx(0.5)
        assert brute_force_crossings([10, 10], [5, 15]) == pytest.approx([7.5])

    def test_identical(self):
        a = ecdf(make_trace([1, 2, 3]))
        with pytest.raises(NoCrossing):
            crossing_point(a, a)

    def test_dominated(self):
        with pytest.raises(NoCrossing):
            crossing_point(ecdf(make_trace([1, 2])), ecdf(make_trace([3, 4])))

    def test_multiple_sorted(self):
        a = [1, 1, 10, 10]
        b = [5, 5, 5, 20]
        xs = crossing_point(ecdf(make_trace(a)), ecdf(make_trace(b)))
        assert [x.theta for x in xs] == pytest.approx(brute_force_crossings(a, b))
        assert [x.theta for x in xs] == sorted(x.theta for x in xs)

    @settings(max_examples=150, deadline=None)
    @given(st.lists(st.integers(0, 30), min_size=1, max_size=12),
           st.lists(st.integers(0, 30), min_size=1, max_size=12))
    def test_matches_brute_force_and_symmetric(self, a, b):
        ca, cb = ecdf(make_trace(a)), ecdf(make_trace(b))
        expected = brute_force_crossings(a, b)
        if not expected:
            with pytest.raises(NoCrossing):
                crossing_point(ca, cb)
            return
        ab = [x.theta for x in crossing_point(ca, cb)]
        ba = [x.theta for x in crossing_point(cb, ca)]
        assert ab == ba
        assert ab == pytest.approx(expected)
        grid = np.union1d(ca.support, cb.support)
        for x in crossing_point(ca, cb):
            assert abs(interpolate(ca, grid, x.theta) - interpolate(cb, grid, x.theta)) < 1e-12
            assert x.reliability == pytest.approx(interpolate(ca, grid, x.theta), abs=1e-12)


latency = st.one_of(st.none(), st.floats(0, 1e4, allow_nan=False))


@settings(max_examples=200, deadline=None)
@given(st.lists(latency, min_size=1, max_size=50))
def test_ecdf_properties(lat):
    t = make_trace(lat)
    c = ecdf(t)
    assert np.all(np.diff(c.cumulative) >= 0)
    assert np.all(c.cumulative <= 1.0)
    finite = [x for x in lat if x is not None]
    if finite:
        assert evaluate(c, max(finite)) == 1 - c.loss_fraction
        assert evaluate(c, min(finite) - 1e-9 if min(finite) > 0 else -1.0) == 0.0
