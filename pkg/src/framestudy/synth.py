"""Synthetic corpora with known ground truth.

Daily post counts are Poisson; labels are independent Bernoulli per frame,
with additive probability shifts applied on configured event-relative days.
Day-level frame counts are always computed from the same label draws whether
or not post objects are materialized, so the fast counts-only path and the
posts-on-disk path see identical randomness.

In "phrases" text mode each true frame contributes one phrase from a fixed
pool matching the bundled lexicon, so lexicon classification reproduces the
generated labels exactly.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from datetime import date, timedelta

import numpy as np

from .frames import FRAMES, FrameLabels
from .ingest import Outcome, OutcomeInstance, Post, write_posts
from .stats import rng_stream
from .timeseries import FrameSeries, from_counts

# phrase pools per frame; the bundled lexicon is generated from these, and
# filler vocabulary is disjoint from every pool
PHRASES = {
    "diagnostic": ("unfair conditions", "management problem", "wage theft"),
    "prognostic": ("bargaining plan", "proposed solution", "contract demands"),
    "motivational": ("join the fight", "act now", "stand up"),
    "community": ("solidarity forever", "union family", "stronger together"),
    "engagement": ("share this post", "tag a coworker", "tell us below"),
}

FILLERS = (
    "weekly update from the local office",
    "photos from the hall this afternoon",
    "reminder about the schedule change",
    "newsletter archive link in bio",
)


def default_lexicon() -> dict[str, list[str]]:
    return {f: [re.escape(p) for p in PHRASES[f]] for f in FRAMES}


@dataclass(frozen=True)
class Effect:
    """Additive shift of one frame's label probability on event-relative days."""

    outcome: Outcome
    frame: str
    days: tuple[int, int]
    delta: float


@dataclass(frozen=True)
class ScenarioConfig:
    n_orgs: int
    n_days: int
    cases_per_org: int
    daily_rate: float = 2.0
    start: date = date(2018, 1, 1)
    base_probs: dict = field(
        default_factory=lambda: {
            "diagnostic": 0.30,
            "prognostic": 0.20,
            "motivational": 0.15,
            "community": 0.30,
            "engagement": 0.20,
        }
    )
    win_fraction: float = 0.5
    effects: tuple = ()
    seed: int = 0
    correlated: float = 0.0

    def validate(self) -> None:
        if self.n_orgs < 1 or self.n_days < 1 or self.cases_per_org < 1:
            raise ValueError("n_orgs, n_days, cases_per_org must be positive")
        if self.daily_rate <= 0:
            raise ValueError("daily_rate must be positive")
        if not 0.0 <= self.win_fraction <= 1.0:
            raise ValueError("win_fraction must be in [0, 1]")
        if not 0.0 <= self.correlated <= 1.0:
            raise ValueError("correlated must be in [0, 1]")
        for f in FRAMES:
            p = self.base_probs.get(f)
            if p is None or not 0.0 <= p <= 1.0:
                raise ValueError(f"base_probs[{f!r}] must be in [0, 1]")
        for e in self.effects:
            if e.frame not in FRAMES:
                raise ValueError(f"unknown frame in effect: {e.frame!r}")
            if e.days[0] > e.days[1]:
                raise ValueError("effect day range reversed")


@dataclass
class Scenario:
    config: ScenarioConfig
    series: dict
    posts: list | None
    case_rows: list
    outcomes: list
    truth: dict


def _org_id(i: int) -> str:
    return f"org-{i:02d}"


def _election_plan(config: ScenarioConfig):
    """Per org: evenly spaced election dates with seeded outcome assignment."""
    spacing = config.n_days // (config.cases_per_org + 1)
    warnings = []
    if spacing < 19:
        warnings.append(
            f"elections every {spacing} days leave no room for 18-day baseline spans"
        )
    n_wins = round(config.cases_per_org * config.win_fraction)
    plan = {}
    for i in range(config.n_orgs):
        org = _org_id(i)
        outcomes = [Outcome.WIN] * n_wins + [Outcome.LOSS] * (config.cases_per_org - n_wins)
        order = rng_stream(config.seed, "outcomes", org).permutation(len(outcomes))
        plan[org] = [
            (
                f"{org}-case-{j:03d}",
                spacing * (j + 1),
                outcomes[order[j]],
            )
            for j in range(config.cases_per_org)
        ]
    return plan, warnings


def generate_scenario(
    config: ScenarioConfig,
    *,
    materialize_posts: bool = True,
    text_mode: str = "phrases",
) -> Scenario:
    """Generate one scenario; deterministic given config.seed.

    With materialize_posts=False only day-level count series are built; the
    label draws (and therefore the counts) are identical either way.
    """
    config.validate()
    if text_mode not in ("phrases", "placeholder"):
        raise ValueError(f"unknown text_mode {text_mode!r}")
    plan, warnings = _election_plan(config)
    base = np.array([config.base_probs[f] for f in FRAMES])

    series: dict[str, FrameSeries] = {}
    posts: list[Post] | None = [] if materialize_posts else None
    case_rows = []
    outcomes = []
    for i in range(config.n_orgs):
        org = _org_id(i)
        probs = np.tile(base, (config.n_days, 1))
        for case_id, day_idx, outcome in plan[org]:
            d = config.start + timedelta(days=day_idx)
            case_rows.append((case_id, d, org, outcome == Outcome.WIN))
            outcomes.append(OutcomeInstance(case_id, org, outcome, d))
            for e in config.effects:
                if e.outcome != outcome:
                    continue
                lo = max(0, day_idx + e.days[0])
                hi = min(config.n_days - 1, day_idx + e.days[1])
                if lo <= hi:
                    probs[lo : hi + 1, FRAMES.index(e.frame)] += e.delta
        np.clip(probs, 0.0, 1.0, out=probs)

        rng = rng_stream(config.seed, "gen", org)
        totals = rng.poisson(config.daily_rate, config.n_days)
        n = int(totals.sum())
        day_of_post = np.repeat(np.arange(config.n_days), totals)
        if config.correlated > 0.0:
            z = rng.random(n)
            mix = rng.random((n, len(FRAMES))) < config.correlated
            u = np.where(mix, z[:, None], rng.random((n, len(FRAMES))))
        else:
            u = rng.random((n, len(FRAMES)))
        labels = u < probs[day_of_post]

        counts = np.zeros((config.n_days, len(FRAMES)), dtype=np.int64)
        np.add.at(counts, day_of_post, labels)
        series[org] = from_counts(org, config.start, totals, counts.T)

        if posts is not None:
            if text_mode == "phrases":
                pool = min(len(PHRASES[f]) for f in FRAMES)
                phrase_idx = rng.integers(0, pool, size=(n, len(FRAMES)))
                filler_idx = rng.integers(0, len(FILLERS), size=n)
            for k in range(n):
                if text_mode == "phrases":
                    parts = [FILLERS[filler_idx[k]]]
                    parts.extend(
                        PHRASES[f][phrase_idx[k, j]]
                        for j, f in enumerate(FRAMES)
                        if labels[k, j]
                    )
                    text = ". ".join(parts)
                else:
                    text = f"synthetic post {k}"
                posts.append(
                    Post(
                        post_id=f"{org}-p{k:06d}",
                        org=org,
                        date=config.start + timedelta(days=int(day_of_post[k])),
                        text=text,
                        labels=FrameLabels(*(bool(b) for b in labels[k])),
                    )
                )

    truth = {
        "seed": config.seed,
        "n_orgs": config.n_orgs,
        "n_days": config.n_days,
        "cases_per_org": config.cases_per_org,
        "daily_rate": config.daily_rate,
        "base_probs": {f: config.base_probs[f] for f in FRAMES},
        "correlated": config.correlated,
        "effects": [
            {
                "outcome": e.outcome.value,
                "frame": e.frame,
                "days": list(e.days),
                "delta": e.delta,
            }
            for e in config.effects
        ],
        "elections": {
            org: [
                {
                    "case_id": case_id,
                    "date": (config.start + timedelta(days=day_idx)).isoformat(),
                    "outcome": outcome.value,
                }
                for case_id, day_idx, outcome in plan[org]
            ]
            for org in sorted(plan)
        },
        "warnings": warnings,
    }
    return Scenario(
        config=config,
        series=series,
        posts=posts,
        case_rows=case_rows,
        outcomes=outcomes,
        truth=truth,
    )


def write_scenario(scenario: Scenario, outdir, *, strip_labels: bool = False) -> dict:
    """Write posts.jsonl, elections.csv, rules.jsonl, and truth.json."""
    import os
    from dataclasses import replace

    if scenario.posts is None:
        raise ValueError("scenario was generated without posts")
    os.makedirs(outdir, exist_ok=True)
    paths = {
        "posts": os.path.join(outdir, "posts.jsonl"),
        "elections": os.path.join(outdir, "elections.csv"),
        "rules": os.path.join(outdir, "rules.jsonl"),
        "truth": os.path.join(outdir, "truth.json"),
    }
    posts = scenario.posts
    if strip_labels:
        posts = [replace(p, labels=None) for p in posts]
    write_posts(posts, paths["posts"])
    with open(paths["elections"], "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["case_id", "election_date", "union_raw", "is_winner"])
        for case_id, d, org, is_winner in scenario.case_rows:
            w.writerow([case_id, d.isoformat(), org, "true" if is_winner else "false"])
    with open(paths["rules"], "w", encoding="utf-8") as fh:
        for i in range(scenario.config.n_orgs):
            org = _org_id(i)
            fh.write(json.dumps({"pattern": f"^{re.escape(org)}$", "canonical": org}) + "\n")
    with open(paths["truth"], "w", encoding="utf-8") as fh:
        json.dump(scenario.truth, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths
