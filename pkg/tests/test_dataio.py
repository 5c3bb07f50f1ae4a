import io
import json
import logging

import numpy as np
import pandas as pd
import pytest

from fsrm.dataio import (
    SCHEMA_HEADER,
    ingest_csv,
    read_path_csv,
    read_prices,
    sha256_digest,
    synthetic_timestamps,
    write_csv,
    write_json,
    write_path_csv,
    write_price_csv,
    write_prices_csv,
)
from fsrm.errors import ConfigError, DataError
from fsrm.models import SamplePath

from conftest import OSC_DAYS, OSC_R


def _csv(rows, header="timestamp,price"):
    return io.StringIO("\n".join([header, *rows]) + "\n")


def _day_rows(day, n, start=100.0):
    stamps = pd.Timestamp(day) + pd.Timedelta(hours=9, minutes=30) + pd.to_timedelta(np.arange(n), unit="min")
    return [f"{s:%Y-%m-%dT%H:%M:%S},{start + k}" for k, s in enumerate(stamps)]


def test_ingest_minute_bars(tmp_path):
    path = tmp_path / "two_days.csv"
    prices = 100.0 + np.arange(2 * 391) * 0.01
    write_prices_csv(path, synthetic_timestamps(2, 391), prices)

    log_prices, closes, r = ingest_csv(path)
    assert r == 391
    assert closes.tolist() == pytest.approx([prices[390], prices[781]])
    np.testing.assert_allclose(log_prices.values, np.log(prices), rtol=1e-15)
    assert log_prices.dt == pytest.approx(1 / 391)


def test_synthetic_timestamps():
    stamps = synthetic_timestamps(2, 391)
    assert stamps[0] == pd.Timestamp("2000-01-03 09:30")
    assert stamps[390] == pd.Timestamp("2000-01-03 16:00")
    assert stamps[391] == pd.Timestamp("2000-01-04 09:30")
    assert synthetic_timestamps(1, 1000)[1] == pd.Timestamp("2000-01-03 00:01:26")


def test_comments_and_blank_lines_are_skipped():
    text = "# exported\n\ntimestamp,price\n2020-01-02T09:30:00,10\n# pause\n2020-01-02T09:31:00,11\n"
    frame = read_prices(io.StringIO(text))
    assert frame["price"].tolist() == [10.0, 11.0]


@pytest.mark.parametrize(
    "row, message",
    [
        ("2020-01-02T09:32:00,abc", "io:4: cannot parse price"),
        ("yesterday,12", "io:4: cannot parse timestamp"),
        ("2020-01-02T09:32:00,-1", "io:4: price must be positive"),
        ("2020-01-02T09:30:30,12", "io:4: timestamps must be strictly increasing"),
        ("2020-01-02T09:32:00,12,7", "io:4: expected 2 fields"),
    ],
)
def test_malformed_row_reports_line(row, message):
    source = _csv(["2020-01-02T09:30:00,10", "2020-01-02T09:31:00,11", row])
    source.name = "io"
    with pytest.raises(DataError, match=message):
        read_prices(source)


def test_bad_header_and_empty_input():
    with pytest.raises(DataError, match="expected header"):
        read_prices(_csv(["2020-01-02T09:30:00,10"], header="time,close"))
    with pytest.raises(DataError, match="empty file"):
        read_prices(io.StringIO("# nothing\n"))
    with pytest.raises(DataError, match="no data rows"):
        read_prices(io.StringIO("timestamp,price\n"))


def test_missing_file(tmp_path):
    with pytest.raises(DataError, match="not found"):
        ingest_csv(tmp_path / "missing.csv")


def test_short_days_dropped_long_days_truncated(caplog):
    rows = (
        _day_rows("2020-01-02", 8)
        + _day_rows("2020-01-03", 8)
        + _day_rows("2020-01-06", 5)
        + _day_rows("2020-01-07", 10, start=200.0)
    )
    with caplog.at_level(logging.WARNING, logger="fsrm.dataio"):
        log_prices, closes, r = ingest_csv(_csv(rows))
    assert r == 8
    assert len(log_prices) == 24
    assert closes.tolist() == [107.0, 107.0, 209.0]
    assert np.exp(log_prices.values[16]) == pytest.approx(202.0)
    assert "Dropping 1 day(s)" in caplog.text
    assert "Truncating 1 day(s)" in caplog.text


def test_explicit_r():
    rows = _day_rows("2020-01-02", 8) + _day_rows("2020-01-03", 8)
    _, closes, r = ingest_csv(_csv(rows), r=4)
    assert r == 4
    assert closes.tolist() == [107.0, 107.0]
    with pytest.raises(ConfigError):
        ingest_csv(_csv(rows), r=3)
    with pytest.raises(DataError):
        ingest_csv(_csv(rows), r=9)


def test_price_file_round_trip(tmp_path, oscillating_path):
    path = tmp_path / "prices.csv"
    write_price_csv(path, oscillating_path, OSC_R)
    log_prices, closes, r = ingest_csv(path)
    assert r == OSC_R
    assert closes.size == OSC_DAYS
    np.testing.assert_allclose(log_prices.values, oscillating_path.values, rtol=1e-12, atol=1e-15)


def test_write_csv_layout(tmp_path):
    path = tmp_path / "out" / "table.csv"
    write_csv(path, ["a", "b"], [(1, 0.1), (2, None)])
    lines = path.read_text().splitlines()
    assert lines[0] == SCHEMA_HEADER
    assert lines[1] == "a,b"
    assert lines[2] == "1,0.10000000000000001"
    assert lines[3] == "2,"
    assert [p.name for p in path.parent.iterdir()] == ["table.csv"]


def test_write_csv_to_stdout(capsys):
    write_csv("-", ["x"], [(3,)])
    assert capsys.readouterr().out == f"{SCHEMA_HEADER}\nx\n3\n"


def test_write_json(tmp_path):
    path = tmp_path / "doc.json"
    write_json(path, {"b": np.float64(0.5), "a": np.arange(3), "p": tmp_path})
    text = path.read_text()
    doc = json.loads(text)
    assert doc == {"fsrm_schema": 1, "a": [0, 1, 2], "b": 0.5, "p": str(tmp_path)}
    assert text.index('"a"') < text.index('"b"')


def test_path_csv_round_trip(tmp_path):
    sample = SamplePath(values=np.array([0.0, 0.25, -1.5]), dt=0.1, origin=2.0)
    path = tmp_path / "path.csv"
    write_path_csv(path, sample)
    back = read_path_csv(path)
    assert back.values.tolist() == sample.values.tolist()
    assert back.dt == pytest.approx(0.1)
    assert back.origin == 2.0


def test_path_csv_needs_uniform_grid():
    with pytest.raises(DataError, match="uniform"):
        read_path_csv(io.StringIO("t,value\n0,1\n1,2\n3,4\n"))


def test_sha256_digest(tmp_path):
    path = tmp_path / "blob"
    path.write_bytes(b"abc")
    expected = "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    assert sha256_digest(path) == expected
    assert sha256_digest(b"abc") == expected
