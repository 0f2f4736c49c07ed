"""Shared fixtures: a tiny offline classifier and a posts corpus.

The model is built from scratch so tests never touch the network. Its
weights are random but seeded, and the classification head is scaled up so
sigmoid scores spread over (0, 1) instead of clustering at 0.5; threshold
tests need scores on both sides of every cut point.
"""

import json
import random

import pytest
import torch
from tokenizers import Tokenizer
from tokenizers.models import WordLevel
from tokenizers.pre_tokenizers import Whitespace
from transformers import (
    DistilBertConfig,
    DistilBertForSequenceClassification,
    PreTrainedTokenizerFast,
)

from frame_infer.infer import LABELS

WORDS = (
    "union vote election workers together join pay safety contract organize "
    "solidarity ballot shift manager petition rally strike wage benefits floor"
).split()


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("model")
    vocab = {"[PAD]": 0, "[UNK]": 1}
    for w in WORDS:
        vocab[w] = len(vocab)
    tok = Tokenizer(WordLevel(vocab, unk_token="[UNK]"))
    tok.pre_tokenizer = Whitespace()
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tok, pad_token="[PAD]", unk_token="[UNK]"
    )

    config = DistilBertConfig(
        vocab_size=len(vocab),
        dim=16,
        hidden_dim=32,
        n_layers=1,
        n_heads=2,
        max_position_embeddings=64,
        num_labels=len(LABELS),
        problem_type="multi_label_classification",
        id2label=dict(enumerate(LABELS)),
        label2id={lab: i for i, lab in enumerate(LABELS)},
        pad_token_id=0,
    )
    torch.manual_seed(0)
    model = DistilBertForSequenceClassification(config)
    with torch.no_grad():
        model.classifier.weight *= 40.0
        model.classifier.bias *= 40.0
    model.save_pretrained(path)
    fast.save_pretrained(path)
    return path


def write_posts(path, n: int, seed: int = 11) -> None:
    rng = random.Random(seed)
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(n):
            if i == 7:
                text = ""  # degenerate but legal
            elif i == 13:
                text = "solidarité ✊ unknownword"
            else:
                text = " ".join(rng.choices(WORDS, k=rng.randint(3, 12)))
            row = {
                "post_id": f"p{i:05d}",
                "org": "org-a",
                "date": "2023-05-01",
                "text": text,
            }
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


@pytest.fixture(scope="session")
def posts_1k(tmp_path_factory):
    path = tmp_path_factory.mktemp("posts") / "posts.jsonl"
    write_posts(path, 1000)
    return path
