"""Five-frame label schema, lexicon baseline labeler, and external-label adapter."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from pathlib import Path

FRAMES = ("diagnostic", "prognostic", "motivational", "community", "engagement")

# Auxiliary label: carried through I/O for completeness, excluded from every analysis.
AUX_LABEL = "political_endorsement"


@dataclass(frozen=True)
class FrameLabels:
    """Multi-label frame annotation for one post.

    The five core labels are independent booleans; any combination is legal.
    ``political_endorsement`` is optional metadata that analysis code never reads.
    """

    diagnostic: bool
    prognostic: bool
    motivational: bool
    community: bool
    engagement: bool
    political_endorsement: bool | None = None

    def get(self, frame: str) -> bool:
        if frame not in FRAMES:
            raise KeyError(f"unknown frame: {frame}")
        return getattr(self, frame)

    def any_core(self) -> bool:
        return any(getattr(self, f) for f in FRAMES)

    def to_dict(self) -> dict:
        d = {f: getattr(self, f) for f in FRAMES}
        if self.political_endorsement is not None:
            d[AUX_LABEL] = self.political_endorsement
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FrameLabels":
        missing = [f for f in FRAMES if f not in d]
        if missing:
            raise ValueError(f"labels missing core fields: {missing}")
        return cls(
            **{f: bool(d[f]) for f in FRAMES},
            political_endorsement=(bool(d[AUX_LABEL]) if AUX_LABEL in d else None),
        )


ALL_FALSE = FrameLabels(False, False, False, False, False)


class Lexicon:
    """Phrase lists per frame, matched case-insensitively at word boundaries.

    Entries may be plain phrases or regex fragments; each is wrapped in
    ``\\b(?:...)\\b`` before compilation.
    """

    def __init__(self, phrases: dict[str, list[str]]):
        missing = [f for f in FRAMES if f not in phrases]
        if missing:
            raise ValueError(f"lexicon missing frames: {missing}")
        self.phrases = {f: list(phrases[f]) for f in FRAMES}
        self._patterns = {
            f: [re.compile(rf"\b(?:{p})\b", re.IGNORECASE) for p in self.phrases[f]]
            for f in FRAMES
        }

    def matches(self, frame: str, text: str) -> bool:
        return any(p.search(text) for p in self._patterns[frame])


def load_lexicon(path) -> Lexicon:
    with open(path, encoding="utf-8") as fh:
        return Lexicon(json.load(fh))


def classify_lexicon(post, lexicon: Lexicon) -> FrameLabels:
    """Label a post by lexicon lookup. Empty text yields all-false labels."""
    text = post.text or ""
    if not text:
        return ALL_FALSE
    return FrameLabels(**{f: lexicon.matches(f, text) for f in FRAMES})


def load_labels(path) -> dict[str, FrameLabels]:
    """Read a labels JSONL file keyed by post_id. Duplicate ids are an error."""
    labels: dict[str, FrameLabels] = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            pid = row["post_id"]
            if pid in labels:
                raise ValueError(f"duplicate label for post_id {pid!r} (line {n})")
            labels[pid] = FrameLabels.from_dict(row["labels"])
    return labels


@dataclass
class AttachReport:
    unmatched_labels: list[str]
    unlabeled_posts: list[str]

    @property
    def clean(self) -> bool:
        return not self.unmatched_labels and not self.unlabeled_posts


def attach_labels(posts, labels: dict[str, FrameLabels]):
    """Attach externally produced labels to posts by post_id.

    Returns (labeled posts, report). Posts are copied, never mutated; the
    output keeps input order and count. Label rows with no matching post and
    posts with no label row are reported, not dropped.
    """
    out = []
    seen = set()
    unlabeled = []
    for post in posts:
        seen.add(post.post_id)
        if post.post_id in labels:
            out.append(replace(post, labels=labels[post.post_id]))
        else:
            unlabeled.append(post.post_id)
            out.append(post)
    unmatched = sorted(pid for pid in labels if pid not in seen)
    return out, AttachReport(unmatched_labels=unmatched, unlabeled_posts=unlabeled)


@dataclass
class Coverage:
    n_total: int
    n_labeled: int
    n_any_frame: int
    per_frame: dict[str, int]


def frame_coverage(posts) -> Coverage:
    """Count labeled posts overall, with at least one core frame, and per frame."""
    per_frame = {f: 0 for f in FRAMES}
    n_labeled = 0
    n_any = 0
    for post in posts:
        if post.labels is None:
            continue
        n_labeled += 1
        if post.labels.any_core():
            n_any += 1
        for f in FRAMES:
            if post.labels.get(f):
                per_frame[f] += 1
    return Coverage(
        n_total=len(posts), n_labeled=n_labeled, n_any_frame=n_any, per_frame=per_frame
    )
