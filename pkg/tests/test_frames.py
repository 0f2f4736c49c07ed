"""Label schema, lexicon labeler, and external-label attachment."""

from datetime import date

import pytest

from framestudy.frames import (
    ALL_FALSE,
    AUX_LABEL,
    FRAMES,
    FrameLabels,
    Lexicon,
    attach_labels,
    classify_lexicon,
    frame_coverage,
    load_labels,
    load_lexicon,
)
from framestudy.ingest import Post


def _labels(**kwargs):
    vals = {f: False for f in FRAMES}
    vals.update(kwargs)
    return FrameLabels(**vals)


LEX = Lexicon(
    {
        "diagnostic": ["unfair conditions", "wage theft"],
        "prognostic": ["bargaining plan"],
        "motivational": ["join the fight", "act now"],
        "community": ["solidarity forever"],
        "engagement": ["share this post"],
    }
)


class TestFrameLabels:
    def test_roundtrip(self):
        lab = _labels(diagnostic=True, engagement=True)
        assert FrameLabels.from_dict(lab.to_dict()) == lab

    def test_aux_label_roundtrip(self):
        lab = FrameLabels(True, False, False, False, False, political_endorsement=True)
        d = lab.to_dict()
        assert d[AUX_LABEL] is True
        assert FrameLabels.from_dict(d).political_endorsement is True

    def test_aux_label_omitted_when_unset(self):
        assert AUX_LABEL not in _labels().to_dict()
        assert FrameLabels.from_dict(_labels().to_dict()).political_endorsement is None

    def test_missing_core_field_rejected(self):
        d = _labels().to_dict()
        del d["community"]
        with pytest.raises(ValueError):
            FrameLabels.from_dict(d)

    def test_get_unknown_frame_rejected(self):
        with pytest.raises(KeyError):
            _labels().get(AUX_LABEL)  # aux label is not a core frame

    def test_any_core_ignores_aux(self):
        only_aux = FrameLabels(
            False, False, False, False, False, political_endorsement=True
        )
        assert not only_aux.any_core()
        assert _labels(motivational=True).any_core()


class TestLexicon:
    def _post(self, text):
        return Post("p1", "u1", date(2020, 1, 1), text=text)

    def test_case_insensitive_word_boundary(self):
        got = classify_lexicon(self._post("UNFAIR Conditions at the plant!"), LEX)
        assert got.diagnostic
        assert not got.prognostic

    def test_substring_does_not_match(self):
        # "act now" inside "react nowhere" is guarded by word boundaries
        got = classify_lexicon(self._post("we react nowhere fast"), LEX)
        assert not got.motivational

    def test_multi_frame_text(self):
        got = classify_lexicon(
            self._post("wage theft is real. join the fight, solidarity forever"), LEX
        )
        assert got.diagnostic and got.motivational and got.community
        assert not got.engagement

    def test_empty_text_all_false(self):
        assert classify_lexicon(self._post(""), LEX) == ALL_FALSE

    def test_missing_frame_rejected(self):
        with pytest.raises(ValueError):
            Lexicon({"diagnostic": ["x"]})

    def test_load_lexicon(self, tmp_path):
        p = tmp_path / "lex.json"
        p.write_text(
            '{"diagnostic": ["a"], "prognostic": ["b"], "motivational": ["c"],'
            ' "community": ["d"], "engagement": ["e"]}'
        )
        lex = load_lexicon(p)
        assert lex.matches("community", "D is here")


class TestLabelAttachment:
    def _posts(self):
        return [
            Post("p1", "u1", date(2020, 1, 1), text="x"),
            Post("p2", "u1", date(2020, 1, 2), text="y"),
        ]

    def test_attach_matches_by_id(self):
        labels = {"p1": _labels(diagnostic=True)}
        out, report = attach_labels(self._posts(), labels)
        assert out[0].labels == _labels(diagnostic=True)
        assert out[1].labels is None
        assert report.unlabeled_posts == ["p2"]
        assert not report.clean

    def test_attach_reports_unmatched_labels(self):
        labels = {"p1": _labels(), "p2": _labels(), "ghost": _labels()}
        out, report = attach_labels(self._posts(), labels)
        assert report.unmatched_labels == ["ghost"]
        assert report.unlabeled_posts == []

    def test_attach_preserves_order_and_originals(self):
        posts = self._posts()
        out, report = attach_labels(posts, {"p1": _labels(), "p2": _labels()})
        assert [p.post_id for p in out] == ["p1", "p2"]
        assert posts[0].labels is None  # inputs untouched
        assert report.clean

    def test_load_labels_duplicate_rejected(self, tmp_path):
        p = tmp_path / "labels.jsonl"
        row = (
            '{"post_id": "p1", "labels": {"diagnostic": true, "prognostic": false,'
            ' "motivational": false, "community": false, "engagement": false}}'
        )
        p.write_text(row + "\n" + row + "\n")
        with pytest.raises(ValueError):
            load_labels(p)

    def test_load_labels_reads_aux(self, tmp_path):
        p = tmp_path / "labels.jsonl"
        p.write_text(
            '{"post_id": "p1", "labels": {"diagnostic": false, "prognostic": false,'
            ' "motivational": false, "community": false, "engagement": false,'
            ' "political_endorsement": true}}\n'
        )
        labels = load_labels(p)
        assert labels["p1"].political_endorsement is True


class TestCoverage:
    def test_counts(self):
        posts = [
            Post("p1", "u1", date(2020, 1, 1), labels=_labels(diagnostic=True)),
            Post("p2", "u1", date(2020, 1, 1), labels=_labels()),
            Post("p3", "u1", date(2020, 1, 1), labels=None),
            Post(
                "p4",
                "u1",
                date(2020, 1, 1),
                labels=_labels(diagnostic=True, community=True),
            ),
        ]
        cov = frame_coverage(posts)
        assert cov.n_total == 4
        assert cov.n_labeled == 3
        assert cov.n_any_frame == 2
        assert cov.per_frame["diagnostic"] == 2
        assert cov.per_frame["community"] == 1
        assert cov.per_frame["engagement"] == 0
