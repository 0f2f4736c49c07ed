"""Pre/post-event frame usage, pseudo-event baselines, and change patterns.

For each (case, org) election instance we average rolled frame proportions
over a pre window (7 to 3 days before) and a post window (3 to 7 days after),
subtract a baseline estimated from pseudo-events placed in election-free
periods, and classify the pre-to-post offset against pooled quartile
thresholds.

Baseline periods are found by tiling 18-day spans left-to-right across the
study range, skipping any span that would contain an election date of the
outcome under analysis; the pseudo-event sits at the span midpoint (day 9 of
18). An 18-day span is exactly wide enough that both event windows, after
rolling with the default 5-day window, stay clear of the span's neighbors.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from datetime import date, timedelta
from enum import Enum

import numpy as np

from .frames import FRAMES
from .ingest import Outcome
from .stats import percentile
from .timeseries import FrameSeries

log = logging.getLogger(__name__)


def _nanmean(a: np.ndarray, axis: int) -> np.ndarray:
    # like np.nanmean but silent on all-nan slices (they yield nan)
    mask = ~np.isnan(a)
    cnt = mask.sum(axis=axis)
    s = np.where(mask, a, 0.0).sum(axis=axis)
    return np.divide(s, cnt, out=np.full(cnt.shape, np.nan, dtype=float), where=cnt > 0)


class Pattern(str, Enum):
    DECREASE = "decrease"
    STABLE = "stable"
    INCREASE = "increase"
    UNCLASSIFIED = "unclassified"


@dataclass(frozen=True)
class WindowSpec:
    """Event-relative day windows and the baseline span length.

    pre and post are inclusive day-offset ranges; both must exclude day 0
    (the election day itself) and each other.
    """

    pre: tuple[int, int] = (-7, -3)
    post: tuple[int, int] = (3, 7)
    baseline_span: int = 18

    def __post_init__(self):
        a, b = self.pre
        c, d = self.post
        if a > b or c > d:
            raise ValueError("window bounds must satisfy lo <= hi")
        if a <= 0 <= b or c <= 0 <= d:
            raise ValueError("event windows must exclude day 0")
        if max(a, c) <= min(b, d):
            raise ValueError("pre and post windows overlap")
        if self.baseline_span < 1:
            raise ValueError("baseline_span must be positive")

    def offsets(self, side: str) -> np.ndarray:
        if side == "pre":
            lo, hi = self.pre
        elif side == "post":
            lo, hi = self.post
        else:
            raise ValueError(f"side must be 'pre' or 'post', got {side!r}")
        return np.arange(lo, hi + 1)

    @property
    def midpoint_offset(self) -> int:
        # day ceil(span/2) of the span, 1-indexed; day 9 for the 18-day default
        return (self.baseline_span - 1) // 2


def _window_matrix(series: FrameSeries, event_dates, offsets: np.ndarray) -> np.ndarray:
    """Mean rolled proportion per frame per event over the offset window.

    Shape (n_frames, n_events); nan where every day in the window is Missing.
    """
    n_events = len(event_dates)
    if n_events == 0:
        return np.zeros((len(FRAMES), 0))
    if series.start is None:
        return np.full((len(FRAMES), n_events), np.nan)
    base = np.array([series.day_index(d) for d in event_dates], dtype=np.int64)
    idx = (base[:, None] + offsets[None, :]).ravel()
    vals = series.rolled_values_at(idx).reshape(len(FRAMES), n_events, len(offsets))
    return _nanmean(vals, axis=2)


def window_usage(series: FrameSeries, event_date: date, side: str, spec: WindowSpec) -> dict:
    """Per-frame mean rolled usage over one event window; None when Missing."""
    m = _window_matrix(series, [event_date], spec.offsets(side))
    return {
        f: (None if np.isnan(m[k, 0]) else float(m[k, 0]))
        for k, f in enumerate(FRAMES)
    }


def find_baseline_periods(org, outcome, events, study_range, spec: WindowSpec) -> list[date]:
    """Pseudo-event dates from election-free spans within the study range.

    Spans of length baseline_span are tiled greedily from the left; a span
    containing an election date of the given outcome for this org is skipped
    by restarting the tiling the day after that election. Only same-outcome
    elections block a span: win baselines exclude wins, loss baselines losses.
    """
    range_start, range_end = study_range
    excluded = sorted(
        {
            e.election_date
            for e in events
            if e.org == org and e.outcome == outcome
        }
    )
    span = spec.baseline_span
    mid = spec.midpoint_offset
    out = []
    s = range_start
    while s + timedelta(days=span - 1) <= range_end:
        span_end = s + timedelta(days=span - 1)
        blocker = next((d for d in excluded if s <= d <= span_end), None)
        if blocker is not None:
            s = blocker + timedelta(days=1)
            continue
        out.append(s + timedelta(days=mid))
        s = s + timedelta(days=span)
    return out


def _baseline_vectors(series: FrameSeries, pseudo_events, spec: WindowSpec):
    """Per-frame baseline vectors (pre, post), each shape (n_frames,), nan = Missing.

    Unweighted mean over pseudo-events of the per-event window usage; a
    pseudo-event whose window is entirely Missing is skipped.
    """
    if not pseudo_events:
        return (np.full(len(FRAMES), np.nan), np.full(len(FRAMES), np.nan))
    pre = _nanmean(_window_matrix(series, pseudo_events, spec.offsets("pre")), axis=1)
    post = _nanmean(_window_matrix(series, pseudo_events, spec.offsets("post")), axis=1)
    return pre, post


def baseline_usage(series: FrameSeries, pseudo_events, spec: WindowSpec) -> dict:
    """Per-frame {"pre": value, "post": value} baselines; None when Missing."""
    pre, post = _baseline_vectors(series, pseudo_events, spec)
    return {
        f: {
            "pre": None if np.isnan(pre[k]) else float(pre[k]),
            "post": None if np.isnan(post[k]) else float(post[k]),
        }
        for k, f in enumerate(FRAMES)
    }


def detrend(u_b, u_a, baseline: dict):
    """Subtract side baselines from raw window usage; Missing propagates."""
    b_pre = baseline.get("pre")
    b_post = baseline.get("post")
    u_b_d = None if u_b is None or b_pre is None else u_b - b_pre
    u_a_d = None if u_a is None or b_post is None else u_a - b_post
    return u_b_d, u_a_d


def offset(u_b_d, u_a_d):
    if u_b_d is None or u_a_d is None:
        return None
    return u_a_d - u_b_d


def classify_change(o, p25: float, p75: float) -> Pattern:
    """Decrease below p25, Increase above p75, Stable in between (inclusive)."""
    if o is None:
        return Pattern.UNCLASSIFIED
    if o < p25:
        return Pattern.DECREASE
    if o > p75:
        return Pattern.INCREASE
    return Pattern.STABLE


@dataclass(frozen=True)
class FrameResult:
    u_b: float | None
    u_a: float | None
    u_b_baseline: float | None
    u_a_baseline: float | None
    u_b_d: float | None
    u_a_d: float | None
    o: float | None
    pattern: Pattern | None = None


@dataclass
class EventStudyInstance:
    case_id: str
    org: str
    outcome: Outcome
    election_date: date
    frames: dict[str, FrameResult]
    n_pseudo_events: int = 0


@dataclass(frozen=True)
class DroppedInstance:
    case_id: str
    org: str
    outcome: Outcome
    reason: str


def _float_or_none(x) -> float | None:
    return None if np.isnan(x) else float(x)


def build_instances(
    series_by_org: dict,
    outcomes,
    spec: WindowSpec = WindowSpec(),
    study_ranges: dict | None = None,
) -> tuple[list[EventStudyInstance], list[DroppedInstance]]:
    """Compute raw, baseline, and detrended usage for every outcome instance.

    series_by_org maps org -> rolled FrameSeries. study_ranges optionally maps
    org -> (start, end) for baseline tiling; by default each org's own series
    span is used. Instances whose pre or post side is Missing on every frame,
    or whose org has no baseline periods, are dropped with a logged reason.
    """
    by_org: dict[str, list] = {}
    for inst in outcomes:
        by_org.setdefault(inst.org, []).append(inst)

    instances: list[EventStudyInstance] = []
    dropped: list[DroppedInstance] = []
    for org in sorted(by_org):
        events = sorted(by_org[org], key=lambda e: (e.case_id, e.outcome))
        series = series_by_org.get(org)
        if series is None or series.start is None:
            for e in events:
                dropped.append(DroppedInstance(e.case_id, e.org, e.outcome, "no posts for org"))
                log.info("dropped %s/%s: no posts for org", e.case_id, e.org)
            continue
        if study_ranges is not None and org in study_ranges:
            study_range = study_ranges[org]
        else:
            study_range = (series.start, series.end)

        for outcome in (Outcome.WIN, Outcome.LOSS):
            group = [e for e in events if e.outcome == outcome]
            if not group:
                continue
            pseudo = find_baseline_periods(org, outcome, group, study_range, spec)
            b_pre, b_post = _baseline_vectors(series, pseudo, spec)
            dates = [e.election_date for e in group]
            u_b = _window_matrix(series, dates, spec.offsets("pre"))
            u_a = _window_matrix(series, dates, spec.offsets("post"))
            u_b_d = u_b - b_pre[:, None]
            u_a_d = u_a - b_post[:, None]
            o = u_a_d - u_b_d
            for j, e in enumerate(group):
                if not pseudo:
                    dropped.append(
                        DroppedInstance(e.case_id, e.org, e.outcome, "no baseline periods")
                    )
                    log.info("dropped %s/%s: no baseline periods", e.case_id, e.org)
                    continue
                if np.all(np.isnan(u_b[:, j])) or np.all(np.isnan(u_a[:, j])):
                    side = "pre" if np.all(np.isnan(u_b[:, j])) else "post"
                    dropped.append(
                        DroppedInstance(e.case_id, e.org, e.outcome, f"{side} window empty")
                    )
                    log.info("dropped %s/%s: %s window empty", e.case_id, e.org, side)
                    continue
                frames = {}
                for k, f in enumerate(FRAMES):
                    frames[f] = FrameResult(
                        u_b=_float_or_none(u_b[k, j]),
                        u_a=_float_or_none(u_a[k, j]),
                        u_b_baseline=_float_or_none(b_pre[k]),
                        u_a_baseline=_float_or_none(b_post[k]),
                        u_b_d=_float_or_none(u_b_d[k, j]),
                        u_a_d=_float_or_none(u_a_d[k, j]),
                        o=_float_or_none(o[k, j]),
                    )
                instances.append(
                    EventStudyInstance(
                        case_id=e.case_id,
                        org=e.org,
                        outcome=e.outcome,
                        election_date=e.election_date,
                        frames=frames,
                        n_pseudo_events=len(pseudo),
                    )
                )
    return instances, dropped


def classify_instances(instances) -> dict:
    """Assign change patterns in place; return per-frame (p25, p75) thresholds.

    Thresholds come from the pooled offset distribution across both outcomes.
    A frame with no defined offsets anywhere gets None thresholds and every
    instance Unclassified for that frame.
    """
    thresholds: dict[str, tuple[float, float] | None] = {}
    for f in FRAMES:
        pool = [i.frames[f].o for i in instances if i.frames[f].o is not None]
        thresholds[f] = (percentile(pool, 25.0), percentile(pool, 75.0)) if pool else None
    for inst in instances:
        for f in FRAMES:
            th = thresholds[f]
            if th is None:
                pattern = Pattern.UNCLASSIFIED
            else:
                pattern = classify_change(inst.frames[f].o, th[0], th[1])
            inst.frames[f] = replace(inst.frames[f], pattern=pattern)
    return thresholds


_INSTANCE_COLUMNS = (
    "case_id,org,outcome,frame,U_b,U_a,U_b_baseline,U_a_baseline,U_b_D,U_a_D,O,pattern"
)


def write_instances_csv(instances, path) -> None:
    def fmt(x):
        return "" if x is None else repr(x)

    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(_INSTANCE_COLUMNS + "\n")
        for inst in sorted(instances, key=lambda i: (i.case_id, i.org, i.outcome)):
            for f in FRAMES:
                r = inst.frames[f]
                fh.write(
                    ",".join(
                        [
                            inst.case_id,
                            inst.org,
                            inst.outcome.value,
                            f,
                            fmt(r.u_b),
                            fmt(r.u_a),
                            fmt(r.u_b_baseline),
                            fmt(r.u_a_baseline),
                            fmt(r.u_b_d),
                            fmt(r.u_a_d),
                            fmt(r.o),
                            r.pattern.value if r.pattern is not None else "",
                        ]
                    )
                    + "\n"
                )
