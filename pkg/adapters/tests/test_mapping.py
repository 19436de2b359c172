import pytest

from model_adapters.mapping import (
    FactcheckPrediction,
    ManipulationPrediction,
    factcheck_response,
    manipulation_response,
    summarize_manipulation_context,
)
from model_adapters.normalize import MappingError, normalize_class, normalize_verdict


class TestNormalization:
    def test_verdict_strings(self):
        assert normalize_verdict("Not Enough Information") == "nei"
        assert normalize_verdict("REFUTED") == "refuted"
        assert normalize_verdict("not-enough-information") == "nei"
        assert normalize_verdict("  True ") == "supported"

    def test_unknown_verdict_raises(self):
        with pytest.raises(MappingError):
            normalize_verdict("totally legit")

    def test_class_strings(self):
        assert normalize_class("face_swap") == "fs"
        assert normalize_class("FS") == "fs"
        assert normalize_class("face_attribute&text_swap") == "fa_ts"
        assert normalize_class("original") == "pristine"

    def test_unknown_class_raises(self):
        with pytest.raises(MappingError):
            normalize_class("background_swap")


class TestManipulationMapping:
    def test_stub_pristine_shape(self):
        payload = manipulation_response(ManipulationPrediction("pristine"), "any text", None)
        assert payload == {
            "is_fake": False,
            "klass": "pristine",
            "class_scores": None,
            "token_labels": None,
            "boxes": [],
        }

    def test_pixel_boxes_normalized(self):
        pred = ManipulationPrediction("face_swap", pixel_boxes=[(50, 50, 150, 150)])
        payload = manipulation_response(pred, "some caption", (200, 200))
        assert payload["boxes"] == [{"x1": 0.25, "y1": 0.25, "x2": 0.75, "y2": 0.75}]
        assert payload["is_fake"] is True and payload["klass"] == "fs"

    def test_out_of_frame_boxes_clamped(self):
        pred = ManipulationPrediction("fs", pixel_boxes=[(-10, 0, 250, 120)])
        payload = manipulation_response(pred, "text", (200, 100))
        assert payload["boxes"] == [{"x1": 0.0, "y1": 0.0, "x2": 1.0, "y2": 1.0}]

    def test_degenerate_box_raises(self):
        pred = ManipulationPrediction("fs", pixel_boxes=[(100, 50, 100, 150)])
        with pytest.raises(MappingError):
            manipulation_response(pred, "text", (200, 200))

    def test_boxes_without_image_dimensions_raise(self):
        pred = ManipulationPrediction("fs", pixel_boxes=[(0, 0, 10, 10)])
        with pytest.raises(MappingError):
            manipulation_response(pred, "text", None)

    def test_face_class_without_box_raises(self):
        with pytest.raises(MappingError):
            manipulation_response(ManipulationPrediction("face_swap"), "text", (100, 100))

    def test_text_class_subwords_projected(self):
        pred = ManipulationPrediction(
            "text_swap",
            subword_spans=[(0, 2), (3, 6), (6, 10), (11, 16)],
            subword_flags=[0, 0, 1, 0],
        )
        payload = manipulation_response(pred, "PM resigns today", None)
        assert payload["token_labels"] == {"tokens": ["PM", "resigns", "today"], "labels": [0, 1, 0]}

    def test_text_class_without_flag_raises(self):
        pred = ManipulationPrediction("ts", subword_spans=[(0, 2)], subword_flags=[0])
        with pytest.raises(MappingError):
            manipulation_response(pred, "PM resigns today", None)

    def test_pristine_with_flag_raises(self):
        pred = ManipulationPrediction("pristine", subword_spans=[(0, 2)], subword_flags=[1])
        with pytest.raises(MappingError):
            manipulation_response(pred, "PM resigns today", None)

    def test_class_scores_normalized_and_unknowns_dropped(self):
        pred = ManipulationPrediction(
            "face_swap",
            class_scores={"face_swap": 0.9, "mystery": 0.5, "text_swap": 1.7},
            pixel_boxes=[(0, 0, 10, 10)],
        )
        payload = manipulation_response(pred, "text", (100, 100))
        assert payload["class_scores"] == {"fs": 0.9, "ts": 1.0}


class TestFactcheckMapping:
    def test_verdict_normalized(self):
        payload = factcheck_response(FactcheckPrediction("Not Enough Information"))
        assert payload["verdict"] == "nei"
        assert payload["evidence"] == [] and payload["tool_trace"] == []

    def test_evidence_defaults_filled(self):
        pred = FactcheckPrediction(
            "refuted",
            confidence=1.2,
            evidence=[{"source": "https://x", "snippet": "s", "stance": "refutes"}],
            tool_trace=[{"tool": "web_search", "query": "q", "result_count": 2}],
        )
        payload = factcheck_response(pred)
        assert payload["confidence"] == 1.0  # clamped
        assert payload["evidence"][0]["retrieved_at"].startswith("1970-")
        assert payload["evidence"][0]["stance"] == "refutes"

    def test_unsourced_evidence_raises(self):
        with pytest.raises(MappingError):
            factcheck_response(FactcheckPrediction("refuted", evidence=[{"snippet": "no source"}]))

    def test_tooled_verdict_without_evidence_raises(self):
        pred = FactcheckPrediction("supported", tool_trace=[{"tool": "web_search", "query": "q", "result_count": 1}])
        with pytest.raises(MappingError):
            factcheck_response(pred)

    def test_unknown_tool_raises(self):
        pred = FactcheckPrediction("nei", tool_trace=[{"tool": "quantum_search", "query": "q", "result_count": 0}])
        with pytest.raises(MappingError):
            factcheck_response(pred)

    def test_unknown_stance_dropped(self):
        pred = FactcheckPrediction("nei", evidence=[{"source": "https://x", "snippet": "", "stance": "meh"}])
        assert factcheck_response(pred)["evidence"][0]["stance"] is None


class TestContextSummary:
    def test_none_context(self):
        assert summarize_manipulation_context(None) is None

    def test_full_context_template(self):
        context = {
            "is_fake": True,
            "klass": "fs_ts",
            "token_labels": {"tokens": ["PM", "resigns", "today"], "labels": [0, 1, 0]},
            "boxes": [{"x1": 0.1, "y1": 0.1, "x2": 0.5, "y2": 0.5}],
        }
        summary = summarize_manipulation_context(context)
        assert summary == (
            "manipulation analysis: fake=yes; class=fs_ts; flagged tokens: resigns; manipulated regions: 1"
        )

    def test_pristine_context(self):
        assert summarize_manipulation_context({"is_fake": False, "klass": "pristine"}) == (
            "manipulation analysis: fake=no; class=pristine"
        )
