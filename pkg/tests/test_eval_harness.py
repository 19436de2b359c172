import json
import random

import pytest

from dualcheck.domain import DomainError, FiveWayLabel, ThreeWayLabel
from dualcheck.evaluation import (
    BinaryPredictionRecord,
    EmptySet,
    EvalInputError,
    PredictionRecord,
    accuracies_from_confusion,
    build_report,
    collapse_predictions,
    confusion_matrix,
    format_percent,
    load_prediction_records,
    render_table,
    score_binary,
    score_intervention_aware,
    score_manipulation_aware,
    score_strict,
    write_prediction_records,
)

S, R, N = ThreeWayLabel.SUPPORTED, ThreeWayLabel.REFUTED, ThreeWayLabel.NEI
P = FiveWayLabel


def build_records(a=0, b=0, c=0, d=0, e=0, f=0):
    """Deterministic record set from group sizes.

    a: gold S, pred S        (correct under strict, manip, interv)
    b: gold R, pred R        (correct under strict, manip, interv)
    c: gold N, pred N        (correct under strict, manip; NOT interv)
    d: gold R, pred lmgs/mbu (correct under manip, interv)
    e: gold N, pred lmgs/mbu (correct under interv only)
    f: gold S, pred N        (wrong under every rule)
    """
    records = []
    groups = [
        (a, S, P.SUPPORTED),
        (b, R, P.REFUTED),
        (c, N, P.NEI),
        (d, R, None),
        (e, N, None),
        (f, S, P.NEI),
    ]
    i = 0
    for count, gold, pred in groups:
        for j in range(count):
            chosen = pred if pred is not None else (P.LMGS if j % 2 == 0 else P.MBU)
            records.append(PredictionRecord(post_id=f"p{i:05d}", pred=chosen, gold=gold))
            i += 1
    return records


def random_records(rng, n):
    return [
        PredictionRecord(post_id=f"r{i}", pred=rng.choice(list(FiveWayLabel)), gold=rng.choice(list(ThreeWayLabel)))
        for i in range(n)
    ]


class TestStrict:
    def test_all_matching(self):
        records = build_records(a=2, b=2, c=1)
        assert score_strict(records) == 1.0

    def test_table_arithmetic_84_of_300(self):
        records = build_records(a=30, b=30, c=24, d=55, e=26, f=135)
        assert len(records) == 300
        assert score_strict(records) == pytest.approx(84 / 300)
        assert format_percent(score_strict(records)) == "28.00"

    def test_lmgs_is_never_strict_correct(self):
        records = [PredictionRecord("x", P.LMGS, R)]
        assert score_strict(records) == 0.0
        # Under collapse-first the same prediction becomes correct.
        assert score_strict(collapse_predictions(records)) == 1.0


class TestManipulationAware:
    def test_mbu_counts_for_gold_refuted(self):
        assert score_manipulation_aware([PredictionRecord("x", P.MBU, R)]) == 1.0

    def test_lmgs_does_not_count_for_gold_supported(self):
        assert score_manipulation_aware([PredictionRecord("x", P.LMGS, S)]) == 0.0

    def test_table_arithmetic_139_of_300(self):
        records = build_records(a=30, b=30, c=24, d=55, e=26, f=135)
        assert score_manipulation_aware(records) == pytest.approx(139 / 300)
        assert format_percent(score_manipulation_aware(records)) == "46.33"


class TestInterventionAware:
    def test_mbu_counts_for_gold_nei(self):
        assert score_intervention_aware([PredictionRecord("x", P.MBU, N)]) == 1.0

    def test_nei_on_nei_is_incorrect(self):
        assert score_intervention_aware([PredictionRecord("x", P.NEI, N)]) == 0.0

    def test_supported_needed_for_gold_supported(self):
        assert score_intervention_aware([PredictionRecord("x", P.SUPPORTED, S)]) == 1.0
        assert score_intervention_aware([PredictionRecord("x", P.NEI, S)]) == 0.0

    def test_table_arithmetic_141_of_300(self):
        records = build_records(a=30, b=30, c=24, d=55, e=26, f=135)
        assert score_intervention_aware(records) == pytest.approx(141 / 300)
        assert format_percent(score_intervention_aware(records)) == "47.00"


class TestThreeLabelBaselineArithmetic:
    def test_103_and_96_of_300(self):
        # strict 90, manip 103, interv 96: the drop shows NEI-on-NEI
        # stops counting under the intervention rule.
        records = build_records(a=40, b=20, c=30, d=13, e=23, f=174)
        assert len(records) == 300
        assert format_percent(score_strict(records)) == "30.00"
        assert format_percent(score_manipulation_aware(records)) == "34.33"
        assert format_percent(score_intervention_aware(records)) == "32.00"


class TestBinary:
    def test_9319_of_10000(self):
        records = [
            BinaryPredictionRecord(post_id=f"b{i}", pred_fake=(i >= 681), gold_fake=True) for i in range(10_000)
        ]
        assert score_binary(records) == pytest.approx(0.9319)
        assert format_percent(score_binary(records)) == "93.19"

    def test_all_correct(self):
        records = [BinaryPredictionRecord(f"b{i}", True, True) for i in range(10)]
        assert score_binary(records) == 1.0

    def test_all_wrong(self):
        records = [BinaryPredictionRecord(f"b{i}", False, True) for i in range(10)]
        assert score_binary(records) == 0.0


class TestErrors:
    def test_empty_set_raises(self):
        with pytest.raises(EmptySet):
            score_strict([])
        with pytest.raises(EmptySet):
            score_binary([])
        with pytest.raises(EmptySet):
            confusion_matrix([])

    def test_duplicate_post_ids_rejected(self):
        records = [PredictionRecord("dup", P.NEI, N), PredictionRecord("dup", P.NEI, N)]
        with pytest.raises(DomainError):
            score_strict(records)


class TestConfusionMatrix:
    def test_single_record_cell(self):
        matrix = confusion_matrix([PredictionRecord("x", P.LMGS, R)])
        assert matrix[P.LMGS][R] == 1
        assert sum(sum(row.values()) for row in matrix.values()) == 1

    def test_totals_match_counts(self):
        records = build_records(a=3, b=2, c=4, d=5, e=1, f=7)
        matrix = confusion_matrix(records)
        assert sum(sum(row.values()) for row in matrix.values()) == len(records)
        assert sum(matrix[p][S] for p in FiveWayLabel) == 10  # a + f
        assert sum(matrix[p][R] for p in FiveWayLabel) == 7  # b + d

    def test_accuracies_rederivable_from_matrix(self):
        rng = random.Random(1234)
        for _ in range(200):
            records = random_records(rng, rng.randint(1, 60))
            derived = accuracies_from_confusion(confusion_matrix(records))
            assert derived["strict"] == pytest.approx(score_strict(records))
            assert derived["manip_aware"] == pytest.approx(score_manipulation_aware(records))
            assert derived["interv_aware"] == pytest.approx(score_intervention_aware(records))


class TestMetricProperties:
    def test_manip_aware_dominates_strict(self):
        rng = random.Random(99)
        for _ in range(1000):
            records = random_records(rng, rng.randint(1, 40))
            assert score_manipulation_aware(records) >= score_strict(records)

    def test_intervention_below_manipulation_witness(self):
        # Many gold-NEI/pred-NEI records: correct under manip-aware, not interv-aware.
        records = build_records(a=1, c=20)
        assert score_intervention_aware(records) < score_manipulation_aware(records)

    def test_permutation_invariance(self):
        rng = random.Random(7)
        records = random_records(rng, 50)
        shuffled = records[:]
        rng.shuffle(shuffled)
        assert score_strict(records) == score_strict(shuffled)
        assert score_manipulation_aware(records) == score_manipulation_aware(shuffled)
        assert score_intervention_aware(records) == score_intervention_aware(shuffled)

    def test_accuracy_times_n_is_integral(self):
        rng = random.Random(31)
        for _ in range(300):
            records = random_records(rng, rng.randint(1, 50))
            n = len(records)
            for score in (score_strict, score_manipulation_aware, score_intervention_aware):
                product = score(records) * n
                assert abs(product - round(product)) < 1e-9


class TestReport:
    def test_report_fields_and_count_check(self):
        records = build_records(a=30, b=30, c=24, d=55, e=26, f=135)
        report = build_report(records)
        assert report.n == 300
        assert report.correct == {"strict": 84, "manip_aware": 139, "interv_aware": 141}
        for check in report.count_check:
            assert check["gap"] < 1e-9
        payload = report.to_dict()
        assert payload["confusion"]["lmgs"]["refuted"] == 28  # ceil(55/2)
        assert sum(sum(row.values()) for row in payload["confusion"].values()) == 300

    def test_collapse_first_makes_strict_equal_manip(self):
        rng = random.Random(5)
        for _ in range(50):
            report = build_report(random_records(rng, rng.randint(1, 40)), collapse_first=True)
            assert report.strict_acc == report.manip_aware_acc

    def test_render_table_layout(self):
        report = build_report(build_records(a=30, b=30, c=24, d=55, e=26, f=135))
        table = render_table(report)
        lines = table.splitlines()
        assert "n=300" in lines[0]
        assert any("strict" in line and "28.00" in line for line in lines)
        assert any("manip-aware" in line and "46.33" in line for line in lines)
        assert any("interv-aware" in line and "47.00" in line for line in lines)


class TestJsonlIo:
    def test_round_trip(self, tmp_path):
        records = build_records(a=2, b=1, d=3, f=1)
        path = tmp_path / "preds.jsonl"
        write_prediction_records(records, path)
        assert load_prediction_records(path) == records

    def test_error_carries_line_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        good = json.dumps({"post_id": "a", "pred": "nei", "gold": "nei"})
        path.write_text(good + "\n" + '{"post_id": "b", "pred": "wat", "gold": "nei"}\n')
        with pytest.raises(EvalInputError) as err:
            load_prediction_records(path)
        assert err.value.line == 2
