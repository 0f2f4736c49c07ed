"""Sidecar contract tests, ending with the acceptance criterion.

The analysis package appears here only as the consumer side of the file
contract: its loader must accept what this package writes.
"""

import json

import pytest

from frame_infer.cli import main, parse_thresholds
from frame_infer.infer import LABELS, InferenceConfig, infer, read_posts

from framestudy.frames import load_labels, attach_labels
from framestudy.ingest import load_posts


def run(model_dir, posts, out, **kw) -> None:
    infer(InferenceConfig(model=str(model_dir), posts=str(posts), out=str(out), **kw))


class TestConfig:
    def test_threshold_bounds(self):
        for bad in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ValueError, match="threshold"):
                InferenceConfig("m", "p", "o", thresholds={"diagnostic": bad})

    def test_unknown_label_rejected(self):
        with pytest.raises(ValueError, match="unknown"):
            InferenceConfig("m", "p", "o", thresholds={"bogus": 0.5})

    def test_batch_size_positive(self):
        with pytest.raises(ValueError, match="batch_size"):
            InferenceConfig("m", "p", "o", batch_size=0)

    def test_threshold_flag_forms(self):
        t = parse_thresholds(["0.4", "diagnostic=0.7"])
        assert t["diagnostic"] == 0.7
        assert all(t[lab] == 0.4 for lab in LABELS if lab != "diagnostic")


class TestReadPosts:
    def test_needs_post_id_and_text(self, tmp_path):
        p = tmp_path / "posts.jsonl"
        p.write_text('{"post_id": "a"}\n')
        with pytest.raises(ValueError, match="post_id and text"):
            read_posts(p)

    def test_duplicate_id_rejected(self, tmp_path):
        p = tmp_path / "posts.jsonl"
        p.write_text(
            '{"post_id": "a", "text": "x"}\n{"post_id": "a", "text": "y"}\n'
        )
        with pytest.raises(ValueError, match="duplicate"):
            read_posts(p)

    def test_empty_input_rejected(self, tmp_path):
        p = tmp_path / "posts.jsonl"
        p.write_text("\n\n")
        with pytest.raises(ValueError, match="no posts"):
            read_posts(p)


class TestInference:
    def test_three_posts_three_schema_valid_rows(self, model_dir, tmp_path):
        posts = tmp_path / "posts.jsonl"
        posts.write_text(
            "\n".join(
                json.dumps({"post_id": f"p{i}", "text": t})
                for i, t in enumerate(["union vote", "pay safety floor", "rally"])
            )
            + "\n"
        )
        out = tmp_path / "labels.jsonl"
        run(model_dir, posts, out)
        rows = [json.loads(line) for line in out.read_text().splitlines()]
        assert [r["post_id"] for r in rows] == ["p0", "p1", "p2"]
        for r in rows:
            assert set(r["labels"]) == set(LABELS)
            assert all(isinstance(v, bool) for v in r["labels"].values())

    def test_empty_text_gets_a_row(self, model_dir, tmp_path):
        posts = tmp_path / "posts.jsonl"
        posts.write_text('{"post_id": "only", "text": ""}\n')
        out = tmp_path / "labels.jsonl"
        run(model_dir, posts, out)
        row = json.loads(out.read_text())
        assert row["post_id"] == "only"
        assert set(row["labels"]) == set(LABELS)

    def test_scores_ride_alongside(self, model_dir, tmp_path):
        posts = tmp_path / "posts.jsonl"
        posts.write_text('{"post_id": "a", "text": "union vote election"}\n')
        out = tmp_path / "labels.jsonl"
        run(model_dir, posts, out, emit_scores=True, thresholds={lab: 0.5 for lab in LABELS})
        row = json.loads(out.read_text())
        assert set(row["scores"]) == set(LABELS)
        for lab in LABELS:
            assert 0.0 <= row["scores"][lab] <= 1.0
            assert row["labels"][lab] == (row["scores"][lab] >= 0.5)
        # the loader must not care about the extra key
        assert "a" in load_labels(out)

    def test_labels_stable_across_batch_sizes(self, model_dir, tmp_path, posts_1k):
        outs = []
        for bs in (1, 7, 64):
            out = tmp_path / f"labels-{bs}.jsonl"
            run(model_dir, posts_1k, out, batch_size=bs)
            outs.append(
                [json.loads(line)["labels"] for line in out.read_text().splitlines()]
            )
        assert outs[0] == outs[1] == outs[2]

    def test_missing_model_is_a_clean_error(self, tmp_path):
        posts = tmp_path / "posts.jsonl"
        posts.write_text('{"post_id": "a", "text": "x"}\n')
        with pytest.raises(RuntimeError, match="cannot load model"):
            run(tmp_path / "nothing-here", posts, tmp_path / "out.jsonl")


class TestCli:
    def test_end_to_end(self, model_dir, tmp_path, capsys):
        posts = tmp_path / "posts.jsonl"
        posts.write_text('{"post_id": "a", "text": "union vote"}\n')
        out = tmp_path / "labels.jsonl"
        rc = main(
            ["--model", str(model_dir), "--posts", str(posts), "--out", str(out)]
        )
        assert rc == 0
        assert "labeled 1 posts" in capsys.readouterr().out
        assert out.exists()

    def test_bad_threshold_exits_2(self, model_dir, tmp_path, capsys):
        rc = main(
            [
                "--model", str(model_dir),
                "--posts", str(tmp_path / "missing.jsonl"),
                "--out", str(tmp_path / "o.jsonl"),
                "--threshold", "diagnostic=1.5",
            ]
        )
        assert rc == 2
        assert "threshold" in capsys.readouterr().err

    def test_missing_posts_exits_2(self, model_dir, tmp_path, capsys):
        rc = main(
            [
                "--model", str(model_dir),
                "--posts", str(tmp_path / "missing.jsonl"),
                "--out", str(tmp_path / "o.jsonl"),
            ]
        )
        assert rc == 2


def test_ac9_sidecar_contract(model_dir, posts_1k, tmp_path, capsys):
    # (a) zero rejects through the consumer's loader on a 1,000-post sample
    out = tmp_path / "labels.jsonl"
    run(model_dir, posts_1k, out)
    labels = load_labels(out)
    loaded = load_posts(posts_1k)
    labeled, report = attach_labels(loaded.posts, labels)
    zero_rejects = (
        not loaded.rejects
        and report.clean
        and len(labeled) == 1000
        and len(labels) == 1000
    )

    # (b) rerun is byte-identical
    rerun = tmp_path / "labels-rerun.jsonl"
    run(model_dir, posts_1k, rerun)
    identical = out.read_bytes() == rerun.read_bytes()

    # (c) raising the threshold never gains positives, checked per label
    counts = {}
    for t in (0.3, 0.5, 0.7):
        path = tmp_path / f"labels-{t}.jsonl"
        run(model_dir, posts_1k, path, thresholds={lab: t for lab in LABELS})
        rows = [json.loads(line)["labels"] for line in path.read_text().splitlines()]
        counts[t] = {lab: sum(r[lab] for r in rows) for lab in LABELS}
    monotone = all(
        counts[0.3][lab] >= counts[0.5][lab] >= counts[0.7][lab] for lab in LABELS
    )
    spread = all(counts[0.3][lab] > counts[0.7][lab] for lab in LABELS)

    ok = zero_rejects and identical and monotone and spread
    line = (
        f"[AC-9] {'PASS' if ok else 'FAIL'}  rejects 0: {zero_rejects}, "
        f"rerun identical: {identical}, monotone: {monotone}, "
        f"positives@0.5: {sum(counts[0.5].values())}"
    )
    with capsys.disabled():
        print(line, flush=True)
    assert ok, line
