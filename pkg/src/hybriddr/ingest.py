"""Loading raw price/load CSV files onto a uniform, masked time grid."""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta, timezone
from typing import IO, Iterable, NamedTuple, Sequence

import numpy as np

from .exceptions import AlignmentError, EmptySeriesError, RowError, SchemaError

DEFAULT_INTERVAL = 15
MINUTES_PER_DAY = 24 * 60


@dataclass(frozen=True)
class RawRecord:
    timestamp: datetime
    price: float
    load: float


@dataclass(frozen=True)
class CsvSchema:
    timestamp: str = "timestamp"
    price: str = "price"
    load: str = "load"


class ParsedCsv(NamedTuple):
    records: list
    errors: list


def _readonly(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class AlignedSeries:
    """Prices and loads sampled on a gap-free grid ``start + i * interval``.

    Invalid (missing or filtered out) slots keep their grid position and are
    flagged ``False`` in ``mask``; their price/load entries are NaN when the
    slot was never observed.
    """

    start: datetime
    prices: np.ndarray
    loads: np.ndarray
    mask: np.ndarray = None
    interval: int = DEFAULT_INTERVAL

    def __post_init__(self):
        prices = _readonly(self.prices)
        loads = _readonly(self.loads)
        if prices.ndim != 1 or prices.shape != loads.shape:
            raise ValueError("prices and loads must be 1-d vectors of equal length")
        if len(prices) < 1:
            raise EmptySeriesError("series must contain at least one sample")
        if int(self.interval) != self.interval or self.interval <= 0:
            raise ValueError("interval must be a positive integer number of minutes")
        if self.mask is None:
            mask = np.isfinite(prices) & np.isfinite(loads)
        else:
            mask = np.asarray(self.mask, dtype=bool)
            if mask.shape != prices.shape:
                raise ValueError("mask length must match the series")
            mask = mask & np.isfinite(prices) & np.isfinite(loads)
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "loads", loads)
        object.__setattr__(self, "mask", _readonly(mask, bool))
        object.__setattr__(self, "interval", int(self.interval))

    def __len__(self):
        return len(self.prices)

    def __eq__(self, other):
        """Same grid, same mask, and same values at every valid slot.

        Values stored under masked slots carry no information and are ignored.
        """
        if not isinstance(other, AlignedSeries):
            return NotImplemented
        if (self.start, self.interval, len(self)) != (other.start, other.interval, len(other)):
            return False
        m = self.mask
        return (
            np.array_equal(m, other.mask)
            and np.array_equal(self.prices[m], other.prices[m])
            and np.array_equal(self.loads[m], other.loads[m])
        )

    __hash__ = None

    @property
    def n_valid(self):
        return int(self.mask.sum())

    @property
    def samples_per_day(self):
        return MINUTES_PER_DAY // self.interval

    def timestamp(self, i):
        return self.start + timedelta(minutes=self.interval * int(i))

    def timestamps(self):
        return [self.timestamp(i) for i in range(len(self))]

    def minutes_of_day(self):
        """Clock time of every sample, in minutes after midnight."""
        offset = self.start.hour * 60 + self.start.minute
        return (offset + self.interval * np.arange(len(self))) % MINUTES_PER_DAY

    def day_index(self):
        """Whole days elapsed since midnight of the start date, per sample."""
        offset = self.start.hour * 60 + self.start.minute
        return (offset + self.interval * np.arange(len(self))) // MINUTES_PER_DAY

    def dates(self):
        first = self.start.date()
        return [first + timedelta(days=int(d)) for d in self.day_index()]

    def masked_prices(self):
        """Prices with invalid slots replaced by NaN."""
        return np.where(self.mask, self.prices, np.nan)

    def masked_loads(self):
        return np.where(self.mask, self.loads, np.nan)

    def with_mask(self, mask):
        """Copy of the series with ``mask`` AND-ed into the validity flags."""
        return AlignedSeries(self.start, self.prices, self.loads, self.mask & np.asarray(mask, bool), self.interval)

    def to_records(self):
        return [
            RawRecord(self.timestamp(i), float(self.prices[i]), float(self.loads[i]))
            for i in np.flatnonzero(self.mask)
        ]

    def slice(self, lo, hi):
        lo, hi, _ = slice(lo, hi).indices(len(self))
        return AlignedSeries(self.timestamp(lo), self.prices[lo:hi], self.loads[lo:hi], self.mask[lo:hi], self.interval)


def parse_timestamp(text, tz_mode="local"):
    """Parse ``YYYY-MM-DD HH:MM`` or an RFC-3339-style stamp.

    With ``tz_mode="local"`` an explicit offset is dropped and the wall-clock
    reading kept (market local time, no DST handling); ``"utc"`` converts
    offset-carrying stamps to naive UTC.
    """
    text = text.strip()
    if text.endswith("Z") or text.endswith("z"):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is not None:
        if tz_mode == "utc":
            ts = ts.astimezone(timezone.utc).replace(tzinfo=None)
        else:
            ts = ts.replace(tzinfo=None)
    return ts


def _open_text(source):
    if isinstance(source, (str, os.PathLike)):
        return open(source, "r", encoding="utf-8", newline=""), True
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(bytes(source).decode("utf-8")), False
    if isinstance(source, io.TextIOBase):
        return source, False
    # binary stream
    return io.TextIOWrapper(source, encoding="utf-8", newline=""), False


def _parse_row(row, idx, line, interval, tz_mode):
    ts_text = row[idx[0]] if idx[0] < len(row) else ""
    try:
        ts = parse_timestamp(ts_text, tz_mode)
    except ValueError:
        raise RowError(line, f"unparseable timestamp {ts_text!r}") from None
    if ts.second or ts.microsecond or (ts.hour * 60 + ts.minute) % interval:
        raise RowError(line, f"timestamp {ts_text!r} is not on the {interval}-minute grid")
    values = []
    for name, j in zip(("price", "load"), idx[1:]):
        text = row[j].strip() if j < len(row) else ""
        try:
            v = float(text)
        except ValueError:
            raise RowError(line, f"unparseable {name} {text!r}") from None
        if not math.isfinite(v):
            raise RowError(line, f"non-finite {name} {text!r}")
        values.append(v)
    price, load = values
    if load < 0:
        raise RowError(line, f"negative load {load}")
    return RawRecord(ts, price, load)


def parse_csv(source, schema=CsvSchema(), interval=DEFAULT_INTERVAL, lenient=False, tz_mode="local"):
    """Read price/load records from a headed UTF-8 CSV.

    Parameters
    ----------
    source : path, bytes, or text/binary stream
    schema : CsvSchema
        Column names for the timestamp, price and load fields.
    interval : int
        Sampling interval in minutes; timestamps off this grid are row errors.
    lenient : bool
        If True, malformed rows are collected in ``errors`` instead of raising.

    Returns
    -------
    ParsedCsv
        ``records`` in file order and the list of ``RowError`` diagnostics.
    """
    fh, owned = _open_text(source)
    try:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError("empty file: header row required") from None
        cols = (schema.timestamp, schema.price, schema.load)
        missing = [c for c in cols if c not in header]
        if missing:
            raise SchemaError(f"missing column(s) {missing}; header has {header}")
        idx = [header.index(c) for c in cols]
        records, errors = [], []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            try:
                records.append(_parse_row(row, idx, line, interval, tz_mode))
            except RowError as err:
                if not lenient:
                    raise
                errors.append(err)
        return ParsedCsv(records, errors)
    finally:
        if owned:
            fh.close()


def align(records: Sequence[RawRecord], interval: int = DEFAULT_INTERVAL) -> AlignedSeries:
    """Place records on the grid starting at the earliest timestamp.

    Grid points without a record become masked slots; duplicate timestamps
    and timestamps off the grid raise ``AlignmentError``.
    """
    if not records:
        raise EmptySeriesError("no records to align")
    step = timedelta(minutes=interval)
    start = min(r.timestamp for r in records)
    end = max(r.timestamp for r in records)
    n = (end - start) // step + 1
    prices = np.full(n, np.nan)
    loads = np.full(n, np.nan)
    seen = np.zeros(n, dtype=bool)
    for r in records:
        k, rem = divmod(r.timestamp - start, step)
        if rem:
            raise AlignmentError(f"timestamp {r.timestamp} is off the {interval}-minute grid")
        if seen[k]:
            raise AlignmentError(f"duplicate timestamp {r.timestamp}")
        seen[k] = True
        prices[k] = r.price
        loads[k] = r.load
    return AlignedSeries(start, prices, loads, seen, interval)


def load_csv(path, schema=CsvSchema(), interval=DEFAULT_INTERVAL, lenient=False, tz_mode="local"):
    parsed = parse_csv(path, schema, interval, lenient, tz_mode)
    return align(parsed.records, interval), parsed.errors


def write_csv(series: AlignedSeries, fh: IO[str], schema=CsvSchema(), include_masked=False):
    """Write valid samples (or all, with empty cells) in the format ``parse_csv`` reads."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow([schema.timestamp, schema.price, schema.load])
    for i in range(len(series)):
        if series.mask[i]:
            w.writerow([series.timestamp(i).strftime("%Y-%m-%d %H:%M"), repr(float(series.prices[i])),
                        repr(float(series.loads[i]))])
        elif include_masked:
            w.writerow([series.timestamp(i).strftime("%Y-%m-%d %H:%M"), "", ""])


@dataclass(frozen=True)
class WorkdayCalendar:
    """Weekday numbers (Monday = 0) treated as weekend, plus explicit holidays."""

    weekend: frozenset = frozenset({5, 6})
    holidays: frozenset = field(default_factory=frozenset)

    def is_workday(self, d: date) -> bool:
        return d.weekday() not in self.weekend and d not in self.holidays


def filter_workdays(series: AlignedSeries, calendar: WorkdayCalendar | Iterable[date] | None = None) -> AlignedSeries:
    """Mask samples on weekends and holidays; grid positions are untouched."""
    if calendar is None:
        calendar = WorkdayCalendar()
    elif not isinstance(calendar, WorkdayCalendar):
        calendar = WorkdayCalendar(holidays=frozenset(calendar))
    days = series.day_index()
    first = series.start.date()
    keep_day = {d: calendar.is_workday(first + timedelta(days=int(d))) for d in np.unique(days)}
    keep = np.fromiter((keep_day[d] for d in days), dtype=bool, count=len(days))
    return series.with_mask(keep)


def parse_clock(value) -> int:
    """Clock time as minutes after midnight; accepts ``time``, ``"HH:MM"`` or ``"24:00"``."""
    if isinstance(value, time):
        return value.hour * 60 + value.minute
    if isinstance(value, (int, np.integer)):
        return int(value)
    hh, mm = str(value).strip().split(":")
    minutes = int(hh) * 60 + int(mm)
    if not 0 <= minutes <= MINUTES_PER_DAY or not 0 <= int(mm) < 60:
        raise ValueError(f"invalid clock time {value!r}")
    return minutes


def time_of_day_mask(series: AlignedSeries, start_tod, end_tod) -> np.ndarray:
    lo, hi = parse_clock(start_tod), parse_clock(end_tod)
    if lo >= hi:
        raise ValueError(f"time-of-day window must satisfy start < end (got {start_tod}-{end_tod})")
    tod = series.minutes_of_day()
    return (tod >= lo) & (tod < hi)


def window_by_time_of_day(series: AlignedSeries, start_tod, end_tod) -> AlignedSeries:
    """Mask samples whose clock time falls outside ``[start_tod, end_tod)``."""
    return series.with_mask(time_of_day_mask(series, start_tod, end_tod))
