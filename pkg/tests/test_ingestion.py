import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rvdlm import (ConfigError, CsvSchema, DataError, OhlcBar, apply_split,
                   build_series, parse_csv, rogers_satchell, write_csv)

D0 = dt.date(2020, 1, 2)


def write_text(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def mk_bars(n, start=D0, base=100.0, seed=0):
    rng = np.random.default_rng(seed)
    bars, d, c = [], start, base
    while len(bars) < n:
        if d.weekday() < 5:
            o = c
            c = o * float(np.exp(rng.normal(0.0, 0.01)))
            h = max(o, c) * float(np.exp(abs(rng.normal(0.0, 0.004))))
            l = min(o, c) * float(np.exp(-abs(rng.normal(0.0, 0.004))))
            bars.append(OhlcBar(d, o, h, l, c))
        d += dt.timedelta(days=1)
    return bars


class TestParseCsv:
    def test_well_formed(self, tmp_path):
        path = write_text(tmp_path / "a.csv",
                          "date,open,high,low,close\n"
                          "2020-01-02,100,101,99,100.5\n"
                          "2020-01-03,100.5,102,100,101\n"
                          "2020-01-06,101,101.5,99.5,100\n")
        bars = parse_csv(path)
        assert len(bars) == 3
        assert bars[0].date == D0 and bars[2].close == 100.0

    def test_duplicate_date_named(self, tmp_path):
        path = write_text(tmp_path / "a.csv",
                          "date,open,high,low,close\n"
                          "2020-01-02,100,101,99,100.5\n"
                          "2020-01-02,100.5,102,100,101\n")
        with pytest.raises(DataError) as excinfo:
            parse_csv(path)
        assert "2020-01-02" in str(excinfo.value)

    def test_reordered_and_extra_columns(self, tmp_path):
        path = write_text(tmp_path / "a.csv",
                          "volume,close,date,low,high,open\n"
                          "123,100.5,2020-01-02,99,101,100\n")
        bars = parse_csv(path)
        assert bars[0] == OhlcBar(D0, 100.0, 101.0, 99.0, 100.5)

    def test_unsorted_input_is_sorted(self, tmp_path):
        path = write_text(tmp_path / "a.csv",
                          "date,open,high,low,close\n"
                          "2020-01-03,100.5,102,100,101\n"
                          "2020-01-02,100,101,99,100.5\n")
        bars = parse_csv(path)
        assert [b.date.day for b in bars] == [2, 3]

    def test_missing_field_line_number(self, tmp_path):
        path = write_text(tmp_path / "a.csv",
                          "date,open,high,low,close\n"
                          "2020-01-02,100,101,99,100.5\n"
                          "2020-01-03,100.5,,100,101\n")
        with pytest.raises(DataError) as excinfo:
            parse_csv(path)
        assert ":3:" in str(excinfo.value)

    def test_unparseable_price(self, tmp_path):
        path = write_text(tmp_path / "a.csv",
                          "date,open,high,low,close\n2020-01-02,abc,101,99,100.5\n")
        with pytest.raises(DataError):
            parse_csv(path)

    def test_missing_column(self, tmp_path):
        path = write_text(tmp_path / "a.csv", "date,open,high,close\n")
        with pytest.raises(DataError):
            parse_csv(path)

    def test_custom_schema(self, tmp_path):
        path = write_text(tmp_path / "a.csv",
                          "Day,O,H,L,Last\n2020-01-02,100,101,99,100.5\n"
                          "2020-01-03,1,2,0.5,1\n")
        schema = CsvSchema(date="Day", open="O", high="H", low="L", close="Last")
        assert len(parse_csv(path, schema)) == 2

    def test_missing_file(self):
        with pytest.raises(DataError):
            parse_csv("/nonexistent/file.csv")

    def test_round_trip_idempotent(self, tmp_path):
        bars = mk_bars(10)
        p1 = tmp_path / "w1.csv"
        write_csv(p1, bars)
        again = parse_csv(p1)
        assert again == bars
        p2 = tmp_path / "w2.csv"
        write_csv(p2, again)
        assert p1.read_text() == p2.read_text()


class TestBuildSeries:
    def test_flat_bars_floor(self):
        bars = [OhlcBar(D0, 100, 100, 100, 100),
                OhlcBar(D0 + dt.timedelta(days=1), 100, 100, 100, 100)]
        frame = build_series(bars, floor_eps=1e-12)
        assert len(frame) == 1
        assert frame.y[0] == pytest.approx(math.log(100.0))
        assert frame.y_prev[0] == pytest.approx(math.log(100.0))
        assert frame.z[0] == 1e-12
        assert frame.x[0] == pytest.approx(1e-6)

    def test_row_count_and_lag_alignment(self):
        bars = mk_bars(40)
        frame = build_series(bars)
        assert len(frame) == len(bars) - 1
        np.testing.assert_array_equal(frame.y_prev[1:], frame.y[:-1])
        np.testing.assert_array_equal(frame.x_prev[1:], frame.x[:-1])
        assert frame.dates[0] == bars[1].date

    def test_rv_columns_match_per_bar_recomputation(self):
        bars = mk_bars(25, seed=3)
        frame = build_series(bars)
        for t, bar in enumerate(bars[1:]):
            assert frame.z[t] == pytest.approx(max(rogers_satchell(bar), 1e-12), rel=1e-14)
            assert frame.x[t] == pytest.approx(math.sqrt(frame.z[t]), rel=1e-14)

    def test_needs_two_bars(self):
        with pytest.raises(DataError):
            build_series(mk_bars(1))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(3, 60), st.integers(0, 1000))
    def test_lag_alignment_property(self, n, seed):
        frame = build_series(mk_bars(n, seed=seed))
        np.testing.assert_array_equal(frame.y_prev[1:], frame.y[:-1])
        np.testing.assert_array_equal(frame.x_prev[1:], frame.x[:-1])


class TestApplySplit:
    def test_markers_and_counts(self):
        bars = mk_bars(30)
        frame = build_series(bars)
        mid = frame.dates[14]
        nxt = frame.dates[15]
        out = apply_split(frame, mid, nxt)
        assert out.n_train == 15
        assert out.n_eval == len(frame) - 15
        assert out.n_train + out.n_eval == len(frame)

    def test_eval_from_first_date(self):
        frame = build_series(mk_bars(10))
        out = apply_split(frame, frame.dates[0] - dt.timedelta(days=1), frame.dates[0])
        assert out.n_eval == len(frame)

    def test_train_to_last_date_warns_empty_eval(self):
        frame = build_series(mk_bars(10))
        with pytest.warns(UserWarning):
            out = apply_split(frame, frame.dates[-1],
                              frame.dates[-1] + dt.timedelta(days=1))
        assert out.n_eval == 0

    def test_out_of_range_rejected(self):
        frame = build_series(mk_bars(10))
        with pytest.raises(ConfigError):
            apply_split(frame, frame.dates[-1] + dt.timedelta(days=5),
                        frame.dates[-1] + dt.timedelta(days=9))
        with pytest.raises(ConfigError):
            apply_split(frame, frame.dates[0] - dt.timedelta(days=9),
                        frame.dates[0] - dt.timedelta(days=5))
        with pytest.raises(ConfigError):
            apply_split(frame, frame.dates[5], frame.dates[5])
