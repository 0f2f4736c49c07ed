"""Per-organization daily frame-usage series and rolled proportions.

A FrameSeries stores dense day-indexed count arrays so rolled proportions at
arbitrary dates reduce to prefix-sum lookups. Rolling uses a centered window
and pools counts across the window (ratio of sums, not mean of daily ratios);
a window with no posts yields Missing rather than 0.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import date, timedelta

import numpy as np

from .frames import FRAMES

FRAME_INDEX = {f: i for i, f in enumerate(FRAMES)}


@dataclass
class FrameSeries:
    """Daily totals and per-frame post counts for one org.

    total[i] and counts[k, i] cover the day start + i. After roll() the
    series carries window_days and prefix sums, and rolled proportions can be
    evaluated at any date, including dates outside the stored span (days with
    no stored data contribute nothing to the window).
    """

    org: str
    start: date | None
    total: np.ndarray
    counts: np.ndarray
    window_days: int | None = None
    _cum_total: np.ndarray | None = field(default=None, repr=False)
    _cum_counts: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_days(self) -> int:
        return int(self.total.shape[0])

    @property
    def end(self) -> date | None:
        if self.start is None:
            return None
        return self.start + timedelta(days=self.n_days - 1)

    def day_index(self, d: date) -> int:
        if self.start is None:
            raise ValueError("empty series has no date axis")
        return (d - self.start).days

    def rolled_values_at(self, day_indices) -> np.ndarray:
        """Rolled proportions at the given day indices.

        Returns an array of shape (n_frames, n_indices) with nan for Missing.
        Indices may fall outside the stored span.
        """
        if self.window_days is None:
            raise ValueError("series not rolled; call roll() first")
        idx = np.atleast_1d(np.asarray(day_indices, dtype=np.int64))
        h = (self.window_days - 1) // 2
        n = self.n_days
        lo = np.clip(idx - h, 0, n)
        hi = np.clip(idx + h + 1, 0, n)
        denom = self._cum_total[hi] - self._cum_total[lo]
        num = self._cum_counts[:, hi] - self._cum_counts[:, lo]
        out = np.full(num.shape, np.nan)
        np.divide(num, denom, out=out, where=denom > 0)
        return out

    def rolled_value(self, d: date, frame: str) -> float | None:
        """Rolled proportion of one frame on one date; None when Missing."""
        if self.start is None:
            return None
        v = self.rolled_values_at([self.day_index(d)])[FRAME_INDEX[frame], 0]
        return None if np.isnan(v) else float(v)


def daily_counts(posts, org: str | None = None) -> FrameSeries:
    """Aggregate labeled posts of a single org into a daily count series.

    The series spans min..max post date; days without posts carry zeros.
    Every post must be labeled and share one org. With no posts an empty
    series is returned (org taken from the argument, if given).
    """
    posts = list(posts)
    orgs = {p.org for p in posts}
    if len(orgs) > 1:
        raise ValueError(f"posts span multiple orgs: {sorted(orgs)}")
    if org is None:
        org = next(iter(orgs)) if orgs else ""
    elif orgs and org not in orgs:
        raise ValueError(f"posts belong to {next(iter(orgs))!r}, not {org!r}")
    if not posts:
        return FrameSeries(
            org=org,
            start=None,
            total=np.zeros(0, dtype=np.int64),
            counts=np.zeros((len(FRAMES), 0), dtype=np.int64),
        )
    for p in posts:
        if p.labels is None:
            raise ValueError(f"unlabeled post {p.post_id!r}")
    start = min(p.date for p in posts)
    n = (max(p.date for p in posts) - start).days + 1
    total = np.zeros(n, dtype=np.int64)
    counts = np.zeros((len(FRAMES), n), dtype=np.int64)
    for p in posts:
        i = (p.date - start).days
        total[i] += 1
        for k, f in enumerate(FRAMES):
            if p.labels.get(f):
                counts[k, i] += 1
    return FrameSeries(org=org, start=start, total=total, counts=counts)


def from_counts(org: str, start: date | None, total, counts) -> FrameSeries:
    """Build a series directly from day-indexed count arrays."""
    total = np.asarray(total, dtype=np.int64)
    counts = np.asarray(counts, dtype=np.int64)
    if counts.shape != (len(FRAMES), total.shape[0]):
        raise ValueError("counts must have shape (n_frames, n_days)")
    if np.any(counts > total[None, :]):
        raise ValueError("frame count exceeds total posts on some day")
    return FrameSeries(org=org, start=start, total=total, counts=counts)


def roll(series: FrameSeries, window_days: int = 5) -> FrameSeries:
    """Return a rolled copy of the series. window_days must be odd and >= 1."""
    if window_days < 1 or window_days % 2 == 0:
        raise ValueError(f"window_days must be odd and positive, got {window_days}")
    return FrameSeries(
        org=series.org,
        start=series.start,
        total=series.total,
        counts=series.counts,
        window_days=window_days,
        _cum_total=np.concatenate(([0], np.cumsum(series.total))),
        _cum_counts=np.concatenate(
            (np.zeros((len(FRAMES), 1), dtype=np.int64), np.cumsum(series.counts, axis=1)),
            axis=1,
        ),
    )


def write_series_csv(series: FrameSeries, path) -> None:
    """Dump a rolled series as org,date,frame,count,total,rolled rows."""
    if series.window_days is None:
        raise ValueError("write_series_csv needs a rolled series")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["org", "date", "frame", "count", "total", "rolled"])
        if series.start is None:
            return
        rolled = series.rolled_values_at(np.arange(series.n_days))
        for i in range(series.n_days):
            d = (series.start + timedelta(days=i)).isoformat()
            for k, f in enumerate(FRAMES):
                v = rolled[k, i]
                w.writerow(
                    [
                        series.org,
                        d,
                        f,
                        int(series.counts[k, i]),
                        int(series.total[i]),
                        "" if np.isnan(v) else repr(float(v)),
                    ]
                )
