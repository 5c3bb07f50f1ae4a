"""CSV ingestion of intraday prices and atomic, schema-tagged output files."""

from __future__ import annotations

import hashlib
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np
import pandas as pd

from fsrm.errors import ConfigError, DataError
from fsrm.models import SamplePath

logger = logging.getLogger("fsrm.dataio")

SCHEMA_VERSION = 1
SCHEMA_HEADER = f"# fsrm-schema: {SCHEMA_VERSION}"
FLOAT_FORMAT = "%.17g"
PRICE_COLUMNS = ["timestamp", "price"]
PATH_COLUMNS = ["t", "value"]
SESSION_OPEN = pd.Timedelta(hours=9, minutes=30)
SESSION_MINUTES = 870
SYNTHETIC_START = "2000-01-03"

Source = str | Path | TextIO | None


def _read_text(source: Source) -> tuple[str, str]:
    """Text of a file, of stdin for None or "-", or of an open handle, with a display name."""
    if hasattr(source, "read"):
        return source.read(), getattr(source, "name", "<stream>")
    if source is None or str(source) == "-":
        return sys.stdin.read(), "<stdin>"
    path = Path(source)
    if not path.exists():
        raise DataError(f"input file not found: {path}")
    return path.read_text(), str(path)


def _data_lines(text: str) -> list[tuple[int, str]]:
    """Non-blank, non-comment lines with their 1-based line numbers."""
    return [
        (n, line.strip())
        for n, line in enumerate(text.splitlines(), start=1)
        if line.strip() and not line.lstrip().startswith("#")
    ]


def _parse_table(source: Source, columns: list[str]) -> tuple[pd.DataFrame, np.ndarray, str]:
    text, name = _read_text(source)
    lines = _data_lines(text)
    if not lines:
        raise DataError(f"{name}: empty file")
    header_no, header = lines[0]
    if [c.strip() for c in header.split(",")] != columns:
        raise DataError(f"{name}:{header_no}: expected header '{','.join(columns)}', got '{header}'")
    rows = lines[1:]
    if not rows:
        raise DataError(f"{name}: no data rows")
    for n, line in rows:
        if line.count(",") != len(columns) - 1:
            raise DataError(f"{name}:{n}: expected {len(columns)} fields, got '{line}'")

    body = "\n".join(line for _, line in lines)
    frame = pd.read_csv(io.StringIO(body), dtype=str, skipinitialspace=True)
    return frame, np.array([n for n, _ in rows]), name


def _first_bad(mask: np.ndarray, line_numbers: np.ndarray) -> int | None:
    bad = np.flatnonzero(mask)
    return int(line_numbers[bad[0]]) if bad.size else None


def read_prices(source: Source) -> pd.DataFrame:
    """Parse a `timestamp,price` CSV into a frame with datetime and float columns.

    Timestamps are naive ISO-8601 and must increase strictly; prices must be positive.
    """
    frame, line_numbers, name = _parse_table(source, PRICE_COLUMNS)
    stamps = pd.to_datetime(frame["timestamp"], format="ISO8601", errors="coerce")
    prices = pd.to_numeric(frame["price"], errors="coerce")

    if (line := _first_bad(stamps.isna().to_numpy(), line_numbers)) is not None:
        raise DataError(f"{name}:{line}: cannot parse timestamp")
    if (line := _first_bad(prices.isna().to_numpy(), line_numbers)) is not None:
        raise DataError(f"{name}:{line}: cannot parse price")
    if (line := _first_bad((prices <= 0).to_numpy(), line_numbers)) is not None:
        raise DataError(f"{name}:{line}: price must be positive")
    steps = np.diff(stamps.to_numpy())
    if (line := _first_bad(np.concatenate([[False], steps <= np.timedelta64(0)]), line_numbers)) is not None:
        raise DataError(f"{name}:{line}: timestamps must be strictly increasing")

    return pd.DataFrame({"timestamp": stamps, "price": prices.astype(float)})


def ingest_csv(source: Source, r: int | None = None) -> tuple[SamplePath, np.ndarray, int]:
    """Intraday log-prices, daily closing prices and observations per day.

    r defaults to the modal number of rows per calendar day. Days with fewer rows
    are dropped; days with more keep their last r rows.
    """
    prices = read_prices(source)
    day = prices["timestamp"].dt.normalize()
    counts = day.value_counts(sort=False).sort_index()
    if r is None:
        r = int(counts.mode().max())
        logger.info("Inferred r = %d observations per day", r)
    if r < 4:
        raise ConfigError(f"r must be at least 4, got {r}")

    short = counts[counts < r]
    if not short.empty:
        logger.warning("Dropping %d day(s) with fewer than %d observations", len(short), r)
    long = counts[counts > r]
    if not long.empty:
        logger.warning("Truncating %d day(s) with more than %d observations to their last %d", len(long), r, r)

    kept = prices[day.isin(counts.index[counts >= r])]
    kept = kept.groupby(kept["timestamp"].dt.normalize(), sort=True).tail(r)
    if kept.empty:
        raise DataError(f"no day has at least {r} observations")

    values = kept["price"].to_numpy()
    closes = values[r - 1 :: r]
    logger.info("Ingested %d days of %d observations", closes.size, r)
    return SamplePath(values=np.log(values), dt=1.0 / r), closes, r


def read_path_csv(source: Source) -> SamplePath:
    """A `t,value` file on a uniform time grid."""
    frame, line_numbers, name = _parse_table(source, PATH_COLUMNS)
    t = pd.to_numeric(frame["t"], errors="coerce")
    v = pd.to_numeric(frame["value"], errors="coerce")
    if (line := _first_bad((t.isna() | v.isna()).to_numpy(), line_numbers)) is not None:
        raise DataError(f"{name}:{line}: cannot parse number")
    t = t.to_numpy(dtype=float)
    if t.size < 2:
        return SamplePath(values=v.to_numpy(dtype=float), dt=1.0, origin=float(t[0]))
    steps = np.diff(t)
    dt = float(np.mean(steps))
    if dt <= 0 or not np.allclose(steps, dt, rtol=1e-9, atol=0.0):
        raise DataError(f"{name}: time column is not a uniform increasing grid")
    return SamplePath(values=v.to_numpy(dtype=float), dt=dt, origin=float(t[0]))


def _atomic_write(path: str | Path | None, write) -> None:
    """Call write(handle) on a temp file renamed over path; None or "-" writes to stdout."""
    if path is None or str(path) == "-":
        write(sys.stdout)
        sys.stdout.flush()
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            write(handle)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def write_csv(path: str | Path | None, columns: list[str], rows: Iterable) -> None:
    """Schema header line, then CSV with floats at 17 significant digits and empty cells for None."""
    frame = pd.DataFrame(list(rows), columns=columns)

    def write(handle):
        handle.write(SCHEMA_HEADER + "\n")
        frame.to_csv(handle, index=False, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n")

    _atomic_write(path, write)


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")


def write_json(path: str | Path | None, payload: dict) -> None:
    document = {"fsrm_schema": SCHEMA_VERSION, **payload}

    def write(handle):
        json.dump(document, handle, indent=2, sort_keys=True, default=_json_default)
        handle.write("\n")

    _atomic_write(path, write)


def write_path_csv(path: str | Path | None, sample: SamplePath) -> None:
    write_csv(path, PATH_COLUMNS, zip(sample.times, sample.values))


def synthetic_timestamps(n_days: int, r: int) -> pd.DatetimeIndex:
    """r timestamps per business day from 2000-01-03.

    Minute bars from 09:30 when they fit in the day, otherwise an even split of
    the day in whole seconds.
    """
    if r > 86_400:
        raise ConfigError(f"cannot place {r} observations in one day at one-second resolution")
    days = pd.bdate_range(SYNTHETIC_START, periods=n_days)
    if r <= SESSION_MINUTES:
        offsets = SESSION_OPEN + pd.to_timedelta(np.arange(r), unit="min")
    else:
        offsets = pd.to_timedelta(np.arange(r) * (86_400 // r), unit="s")
    return pd.DatetimeIndex((days.values[:, None] + offsets.values[None, :]).ravel())


def write_prices_csv(path: str | Path | None, timestamps, prices) -> None:
    stamps = pd.DatetimeIndex(timestamps).strftime("%Y-%m-%dT%H:%M:%S")
    write_csv(path, PRICE_COLUMNS, zip(stamps, np.asarray(prices, dtype=float)))


def write_price_csv(path: str | Path | None, log_prices: SamplePath, r: int) -> None:
    """Prices exp(log_prices) on synthetic business-day timestamps."""
    n_days = len(log_prices) // r
    if n_days < 1:
        raise DataError(f"path of {len(log_prices)} values holds no complete day of {r}")
    values = log_prices.values[: n_days * r]
    write_prices_csv(path, synthetic_timestamps(n_days, r), np.exp(values))


def sha256_digest(source: str | Path | bytes) -> str:
    h = hashlib.sha256()
    if isinstance(source, bytes):
        h.update(source)
    else:
        with open(source, "rb") as f:
            for chunk in iter(lambda: f.read(1 << 20), b""):
                h.update(chunk)
    return h.hexdigest()
