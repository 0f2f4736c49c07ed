"""Batch inference over posts JSONL, emitting pipeline-compatible labels."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import torch

# The five core frames plus the reserved auxiliary label. Downstream analysis
# reads only the first five; political_endorsement is emitted for audit and
# ignored there. Order fixes the output column layout, not the model's.
LABELS = (
    "diagnostic",
    "prognostic",
    "motivational",
    "community",
    "engagement",
    "political_endorsement",
)

DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True)
class InferenceConfig:
    """One inference run: model, input posts, output labels, decisions."""

    model: str
    posts: str
    out: str
    thresholds: dict[str, float] = field(default_factory=dict)
    batch_size: int = 32
    max_length: int = 256
    emit_scores: bool = False

    def __post_init__(self):
        unknown = sorted(set(self.thresholds) - set(LABELS))
        if unknown:
            raise ValueError(f"thresholds for unknown labels: {unknown}")
        for lab, t in self.thresholds.items():
            if not (0.0 < t < 1.0):
                raise ValueError(f"threshold for {lab} must be in (0, 1), got {t}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_length < 8:
            raise ValueError("max_length must be >= 8")

    def threshold_for(self, label: str) -> float:
        return self.thresholds.get(label, DEFAULT_THRESHOLD)


@dataclass(frozen=True)
class InferenceReport:
    n_posts: int
    n_positive: dict[str, int]


def read_posts(path) -> list[tuple[str, str]]:
    """(post_id, text) pairs in file order. Needs only those two fields.

    Duplicate ids are rejected here because the labels file they would
    produce is rejected downstream anyway.
    """
    rows: list[tuple[str, str]] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"{path}:{n}: not valid JSON: {e}") from e
            if "post_id" not in row or "text" not in row:
                raise ValueError(f"{path}:{n}: post needs post_id and text")
            pid = str(row["post_id"])
            if pid in seen:
                raise ValueError(f"{path}:{n}: duplicate post_id {pid!r}")
            seen.add(pid)
            rows.append((pid, str(row["text"])))
    if not rows:
        raise ValueError(f"{path}: no posts to label")
    return rows


def load_classifier(model_id: str):
    """Load tokenizer + model in eval mode; map logit columns to LABELS.

    The model must carry one output per label. Columns are matched by the
    model's own label names when it has real ones; the placeholder LABEL_i
    names fall back to positional order.
    """
    from transformers import AutoModelForSequenceClassification, AutoTokenizer

    try:
        tokenizer = AutoTokenizer.from_pretrained(model_id)
        model = AutoModelForSequenceClassification.from_pretrained(model_id)
    except Exception as e:
        raise RuntimeError(f"cannot load model {model_id!r}: {e}") from e
    model.eval()

    id2label = {i: str(name) for i, name in model.config.id2label.items()}
    n = len(id2label)
    if n != len(LABELS):
        raise RuntimeError(
            f"model {model_id!r} has {n} outputs, expected {len(LABELS)}"
        )
    by_name = {name.lower(): i for i, name in id2label.items()}
    if set(by_name) == set(LABELS):
        columns = [by_name[lab] for lab in LABELS]
    elif all(name.startswith("LABEL_") for name in id2label.values()):
        columns = list(range(len(LABELS)))
    else:
        raise RuntimeError(
            f"model labels {sorted(id2label.values())} do not match {sorted(LABELS)}"
        )
    return tokenizer, model, columns


def _batches(rows, size):
    for i in range(0, len(rows), size):
        yield rows[i : i + size]


def _ensure_nonempty(enc, pad_id: int) -> dict:
    """Give every row at least one attended token.

    A tokenizer without special tokens encodes empty text to length zero,
    which the model cannot take; a fully-masked row would attend to nothing
    and produce NaN. Such rows attend to a single pad token instead, which
    keeps them deterministic.
    """
    ids = enc["input_ids"]
    mask = enc["attention_mask"]
    if ids.shape[1] == 0:
        ids = torch.full((ids.shape[0], 1), pad_id, dtype=torch.long)
        mask = torch.zeros_like(ids)
    empty = mask.sum(dim=1) == 0
    if bool(empty.any()):
        mask = mask.clone()
        mask[empty, 0] = 1
    out = {"input_ids": ids, "attention_mask": mask}
    for k, v in enc.items():
        if k in out:
            continue
        if isinstance(v, torch.Tensor) and v.ndim == 2 and v.shape[1] == 0:
            v = torch.zeros((v.shape[0], ids.shape[1]), dtype=v.dtype)
        out[k] = v
    return out


def infer(config: InferenceConfig) -> InferenceReport:
    """Label every input post; one output row per post, input order kept."""
    tokenizer, model, columns = load_classifier(config.model)
    posts = read_posts(config.posts)
    thresholds = {lab: config.threshold_for(lab) for lab in LABELS}

    n_positive = {lab: 0 for lab in LABELS}
    with open(config.out, "w", encoding="utf-8") as fh, torch.no_grad():
        for batch in _batches(posts, config.batch_size):
            enc = tokenizer(
                [text for _, text in batch],
                padding=True,
                truncation=True,
                max_length=config.max_length,
                return_tensors="pt",
            )
            enc = _ensure_nonempty(dict(enc), tokenizer.pad_token_id or 0)
            probs = torch.sigmoid(model(**enc).logits)
            for (pid, _), row in zip(batch, probs.tolist()):
                scores = {lab: row[columns[i]] for i, lab in enumerate(LABELS)}
                flags = {lab: scores[lab] >= thresholds[lab] for lab in LABELS}
                for lab, hit in flags.items():
                    n_positive[lab] += hit
                rec: dict = {"post_id": pid, "labels": flags}
                if config.emit_scores:
                    rec["scores"] = scores
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    return InferenceReport(n_posts=len(posts), n_positive=n_positive)
