"""Election-case and post ingestion: parsing, name canonicalization, outcomes.

Source records are manually entered and noisy, so parsing rejects rows (with a
machine-readable reason) rather than aborting the load. All dates are
timezone-free calendar dates.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from datetime import date
from enum import Enum

from .frames import FrameLabels


class Outcome(str, Enum):
    WIN = "win"
    LOSS = "loss"


ELECTION_COLUMNS = ("case_id", "election_date", "union_raw", "is_winner")


@dataclass(frozen=True)
class ElectionCase:
    case_id: str
    election_date: date
    participants: tuple[str, ...]  # sorted; raw or canonical depending on stage
    winner_raw: str | None = None


@dataclass
class Reject:
    reason: str
    line: int | None = None
    case_id: str | None = None
    row: dict | None = None

    def to_dict(self) -> dict:
        d = {"reason": self.reason}
        if self.line is not None:
            d["line"] = self.line
        if self.case_id is not None:
            d["case_id"] = self.case_id
        if self.row is not None:
            d["row"] = self.row
        return d


@dataclass
class ElectionParseResult:
    cases: list[ElectionCase]
    rejects: list[Reject]
    warnings: list[str]


def _parse_winner_flag(raw: str):
    v = raw.strip().lower()
    if v == "":
        return None
    if v == "true":
        return True
    if v == "false":
        return False
    raise ValueError(f"bad is_winner value {raw!r}")


def parse_elections(path, schema: dict | None = None) -> ElectionParseResult:
    """Parse an elections CSV (one row per case-union pair) into ElectionCases.

    ``schema`` maps the logical column names (case_id, election_date,
    union_raw, is_winner) to the file's actual headers. Rows of the same case
    are merged into one case with a sorted participant tuple, so parsing is
    insensitive to row order. Malformed rows (or internally inconsistent
    cases) land in the rejects list with a reason.
    """
    colmap = {c: c for c in ELECTION_COLUMNS}
    if schema:
        colmap.update(schema)

    rejects: list[Reject] = []
    warnings: list[str] = []
    # case_id -> {dates: set, unions: set, winners: set}
    groups: dict[str, dict] = {}

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [colmap[c] for c in ELECTION_COLUMNS if colmap[c] not in header]
        if missing:
            raise ValueError(f"elections file missing required columns: {missing}")

        for line_no, row in enumerate(reader, start=2):
            case_id = (row.get(colmap["case_id"]) or "").strip()
            union = (row.get(colmap["union_raw"]) or "").strip()
            if not case_id:
                rejects.append(Reject("missing case_id", line=line_no, row=row))
                continue
            if not union:
                rejects.append(
                    Reject("missing union", line=line_no, case_id=case_id, row=row)
                )
                continue
            try:
                when = date.fromisoformat((row.get(colmap["election_date"]) or "").strip())
            except ValueError:
                rejects.append(
                    Reject("bad date", line=line_no, case_id=case_id, row=row)
                )
                continue
            try:
                is_winner = _parse_winner_flag(row.get(colmap["is_winner"]) or "")
            except ValueError:
                rejects.append(
                    Reject("bad is_winner", line=line_no, case_id=case_id, row=row)
                )
                continue

            g = groups.setdefault(case_id, {"dates": set(), "unions": set(), "winners": set()})
            g["dates"].add(when)
            g["unions"].add(union)
            if is_winner:
                g["winners"].add(union)

    cases = []
    for case_id in sorted(groups):
        g = groups[case_id]
        if len(g["dates"]) > 1:
            rejects.append(Reject("conflicting election dates", case_id=case_id))
            continue
        if len(g["winners"]) > 1:
            rejects.append(Reject("conflicting winners", case_id=case_id))
            continue
        participants = tuple(sorted(g["unions"]))
        if len(participants) > 3:
            warnings.append(
                f"case {case_id}: {len(participants)} participants (expected at most 3)"
            )
        winner = next(iter(g["winners"])) if g["winners"] else None
        cases.append(
            ElectionCase(
                case_id=case_id,
                election_date=next(iter(g["dates"])),
                participants=participants,
                winner_raw=winner,
            )
        )
    return ElectionParseResult(cases=cases, rejects=rejects, warnings=warnings)


@dataclass(frozen=True)
class NormalizationRule:
    pattern: re.Pattern
    canonical: str


@dataclass(frozen=True)
class Unmatched:
    """A raw name no rule matched; carried as a value for reporting."""

    raw: str


def compile_rules(rows) -> list[NormalizationRule]:
    """Compile ordered {pattern, canonical} records; first match wins."""
    rules = []
    for row in rows:
        canonical = row["canonical"]
        if not canonical:
            raise ValueError("rule with empty canonical id")
        rules.append(
            NormalizationRule(re.compile(row["pattern"], re.IGNORECASE), canonical)
        )
    return rules


def load_rules(path) -> list[NormalizationRule]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return compile_rules(rows)


def normalize_name(raw: str, rules: list[NormalizationRule]):
    """Map a raw organization name to the canonical id of the first matching rule."""
    for rule in rules:
        if rule.pattern.search(raw):
            return rule.canonical
    return Unmatched(raw)


def normalize_cases(cases, rules):
    """Canonicalize participant and winner names across cases.

    Names no rule matches are kept verbatim (they can never join a tracked-org
    analysis) and reported. Participants that collapse onto one canonical id
    are deduplicated.
    """
    out = []
    unmatched: set[str] = set()

    def _norm(raw: str) -> str:
        got = normalize_name(raw, rules)
        if isinstance(got, Unmatched):
            unmatched.add(raw)
            return raw
        return got

    for case in cases:
        participants = tuple(sorted({_norm(p) for p in case.participants}))
        winner = _norm(case.winner_raw) if case.winner_raw is not None else None
        out.append(
            ElectionCase(
                case_id=case.case_id,
                election_date=case.election_date,
                participants=participants,
                winner_raw=winner,
            )
        )
    return out, sorted(unmatched)


@dataclass(frozen=True)
class OutcomeInstance:
    case_id: str
    org: str
    outcome: Outcome
    election_date: date


def derive_outcomes(case: ElectionCase, tracked_orgs) -> list[OutcomeInstance]:
    """Emit one win/loss instance per tracked participant of a case.

    A participant wins only when it equals the case winner. A case with no
    recorded winner counts as a loss for every tracked participant: a
    representation election can be lost without any organization winning.
    """
    out = []
    for org in sorted(set(case.participants)):
        if org not in tracked_orgs:
            continue
        outcome = Outcome.WIN if org == case.winner_raw else Outcome.LOSS
        out.append(
            OutcomeInstance(
                case_id=case.case_id,
                org=org,
                outcome=outcome,
                election_date=case.election_date,
            )
        )
    return out


@dataclass(frozen=True)
class Post:
    post_id: str
    org: str
    date: date
    text: str = ""
    labels: FrameLabels | None = None
    extra: tuple = ()  # unknown JSONL fields, preserved as (key, value) pairs

    def to_dict(self) -> dict:
        d = {
            "post_id": self.post_id,
            "org": self.org,
            "date": self.date.isoformat(),
            "text": self.text,
        }
        if self.labels is not None:
            d["labels"] = self.labels.to_dict()
        for k, v in self.extra:
            d[k] = v
        return d


_POST_FIELDS = {"post_id", "org", "date", "text", "labels"}


@dataclass
class PostLoadResult:
    posts: list[Post]
    rejects: list[Reject]


def load_posts(path) -> PostLoadResult:
    """Read posts JSONL; malformed lines become rejects, unknown fields survive."""
    posts = []
    rejects = []
    seen_ids = set()
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError:
                rejects.append(Reject("bad json", line=n))
                continue
            if not isinstance(row, dict) or not all(
                k in row for k in ("post_id", "org", "date")
            ):
                rejects.append(Reject("missing required field", line=n))
                continue
            try:
                when = date.fromisoformat(str(row["date"]))
            except ValueError:
                rejects.append(Reject("bad date", line=n))
                continue
            labels = None
            if "labels" in row and row["labels"] is not None:
                try:
                    labels = FrameLabels.from_dict(row["labels"])
                except (TypeError, ValueError):
                    rejects.append(Reject("bad labels", line=n))
                    continue
            pid = str(row["post_id"])
            if pid in seen_ids:
                rejects.append(Reject("duplicate post_id", line=n))
                continue
            seen_ids.add(pid)
            extra = tuple((k, v) for k, v in row.items() if k not in _POST_FIELDS)
            posts.append(
                Post(
                    post_id=pid,
                    org=str(row["org"]),
                    date=when,
                    text=str(row.get("text", "")),
                    labels=labels,
                    extra=extra,
                )
            )
    return PostLoadResult(posts=posts, rejects=rejects)


def write_posts(posts, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for post in posts:
            fh.write(json.dumps(post.to_dict(), ensure_ascii=False) + "\n")
