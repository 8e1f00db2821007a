import random

import pytest

from tablesync.align import AlignmentPair, AlignmentResult
from tablesync.corpus import GoldAlignment
from tablesync.errors import ValidationError
from tablesync.metrics import (MatchScore, PairEvaluation, error_breakdown,
                               group_report, match_score, unmatch_score,
                               write_report)

from conftest import box


def make_predicted(entity, lang_a, lang_b, pairs, n_src, n_tgt, multi=()):
    alignment_pairs = [AlignmentPair((s,), (t,), 0.9, "M2") for s, t in pairs]
    alignment_pairs += [AlignmentPair((s,), tuple(ts), 0.9, "M5")
                        for s, ts in multi]
    aligned_src = {s for p in alignment_pairs for s in p.src_rows}
    aligned_tgt = {t for p in alignment_pairs for t in p.tgt_rows}
    return AlignmentResult(
        entity_id=entity, lang_src=lang_a, lang_tgt=lang_b,
        pairs=alignment_pairs,
        unaligned_src=sorted(set(range(n_src)) - aligned_src),
        unaligned_tgt=sorted(set(range(n_tgt)) - aligned_tgt),
    )


class TestMatchScore:
    def test_hand_example(self):
        gold = GoldAlignment("E", "en", "hi", ((1, 1), (2, 2), (3, 3)))
        predicted = make_predicted("E", "en", "hi", [(1, 1), (2, 3)], 5, 5)
        score = match_score(gold, predicted)
        assert score.precision == 0.5
        assert score.recall == pytest.approx(1 / 3)
        assert score.f1 == pytest.approx(0.4)

    def test_perfect_prediction(self):
        gold = GoldAlignment("E", "en", "hi", ((0, 0), (1, 1)))
        predicted = make_predicted("E", "en", "hi", [(0, 0), (1, 1)], 2, 2)
        assert match_score(gold, predicted) == MatchScore(1.0, 1.0, 1.0)

    def test_empty_prediction(self):
        gold = GoldAlignment("E", "en", "hi", ((0, 0),))
        predicted = make_predicted("E", "en", "hi", [], 2, 2)
        assert match_score(gold, predicted) == MatchScore(0.0, 0.0, 0.0)

    def test_multi_pairs_expand(self):
        gold = GoldAlignment("E", "en", "hi", ((0, 0), (0, 1)))
        predicted = make_predicted("E", "en", "hi", [], 2, 3,
                                   multi=[(0, (0, 1))])
        assert match_score(gold, predicted) == MatchScore(1.0, 1.0, 1.0)

    def test_pair_id_mismatch(self):
        gold = GoldAlignment("E", "en", "hi", ((0, 0),))
        predicted = make_predicted("OTHER", "en", "hi", [(0, 0)], 1, 1)
        with pytest.raises(ValidationError):
            match_score(gold, predicted)


class TestUnmatchScore:
    def test_hand_example(self):
        # 4+4 rows; gold aligns rows 0,1; predicted also aligns row 2
        gold = GoldAlignment("E", "en", "hi", ((0, 0), (1, 1)))
        predicted = make_predicted("E", "en", "hi", [(0, 0), (1, 1), (2, 2)], 4, 4)
        score = unmatch_score(gold, predicted, 4, 4)
        assert score.precision == 1.0
        assert score.recall == 0.5
        assert score.f1 == pytest.approx(2 / 3)

    def test_everything_aligned_vacuous(self):
        gold = GoldAlignment("E", "en", "hi", ((0, 0), (1, 1)))
        predicted = make_predicted("E", "en", "hi", [(0, 0), (1, 1)], 2, 2)
        assert unmatch_score(gold, predicted, 2, 2) == MatchScore(1.0, 1.0, 1.0)

    def test_nothing_aligned_anywhere(self):
        gold = GoldAlignment("E", "en", "hi", ())
        predicted = make_predicted("E", "en", "hi", [], 2, 2)
        assert unmatch_score(gold, predicted, 2, 2) == MatchScore(1.0, 1.0, 1.0)


# Independent reference: materialize every set with explicit loops.

def oracle_scores(gold_pairs, predicted_pairs, n_src, n_tgt):
    inter = 0
    for pair in predicted_pairs:
        if pair in gold_pairs:
            inter += 1

    def ratio(num, den, other_empty):
        if den == 0:
            return 1.0 if other_empty else 0.0
        return num / den

    m_precision = ratio(inter, len(predicted_pairs), len(gold_pairs) == 0)
    m_recall = ratio(inter, len(gold_pairs), len(predicted_pairs) == 0)
    m_f1 = (0.0 if m_precision + m_recall == 0
            else 2 * m_precision * m_recall / (m_precision + m_recall))

    unaligned_gold = []
    unaligned_pred = []
    for side, count in (("src", n_src), ("tgt", n_tgt)):
        for i in range(count):
            in_gold = any(
                (side == "src" and g[0] == i) or (side == "tgt" and g[1] == i)
                for g in gold_pairs
            )
            in_pred = any(
                (side == "src" and p[0] == i) or (side == "tgt" and p[1] == i)
                for p in predicted_pairs
            )
            if not in_gold:
                unaligned_gold.append((side, i))
            if not in_pred:
                unaligned_pred.append((side, i))
    u_inter = len([r for r in unaligned_pred if r in unaligned_gold])
    u_precision = ratio(u_inter, len(unaligned_pred), len(unaligned_gold) == 0)
    u_recall = ratio(u_inter, len(unaligned_gold), len(unaligned_pred) == 0)
    u_f1 = (0.0 if u_precision + u_recall == 0
            else 2 * u_precision * u_recall / (u_precision + u_recall))
    return (m_precision, m_recall, m_f1), (u_precision, u_recall, u_f1)


def random_instance(rng):
    n_src = rng.randint(1, 8)
    n_tgt = rng.randint(1, 8)
    gold = set()
    for _ in range(rng.randint(0, min(n_src, n_tgt))):
        gold.add((rng.randrange(n_src), rng.randrange(n_tgt)))
    src_free = list(range(n_src))
    tgt_free = list(range(n_tgt))
    rng.shuffle(src_free)
    rng.shuffle(tgt_free)
    pairs = []
    multi = []
    while src_free and tgt_free and rng.random() < 0.7:
        s = src_free.pop()
        if len(tgt_free) >= 2 and rng.random() < 0.2:
            multi.append((s, (tgt_free.pop(), tgt_free.pop())))
        else:
            pairs.append((s, tgt_free.pop()))
    return (GoldAlignment("E", "en", "hi", tuple(sorted(gold))),
            make_predicted("E", "en", "hi", pairs, n_src, n_tgt, multi),
            n_src, n_tgt)


class TestOracleEquivalence:
    def test_random_instances_match_oracle(self):
        rng = random.Random(42)
        for _ in range(200):
            gold, predicted, n_src, n_tgt = random_instance(rng)
            expected_m, expected_u = oracle_scores(
                set(gold.pairs), predicted.expanded_pairs(), n_src, n_tgt)
            got_m = match_score(gold, predicted)
            got_u = unmatch_score(gold, predicted, n_src, n_tgt)
            assert (got_m.precision, got_m.recall, got_m.f1) == expected_m
            assert (got_u.precision, got_u.recall, got_u.f1) == expected_u
            for score in (got_m, got_u):
                assert 0.0 <= score.f1 <= 1.0
                assert score.f1 <= min(1.0, 2 * min(score.precision,
                                                    score.recall)) + 1e-12

    def test_match_score_mirror_symmetric(self):
        rng = random.Random(9)
        for _ in range(50):
            gold, predicted, n_src, n_tgt = random_instance(rng)
            mirrored_gold = GoldAlignment(
                "E", "hi", "en", tuple((j, i) for i, j in gold.pairs))
            mirrored_pairs = [
                AlignmentPair(p.tgt_rows, p.src_rows, p.score, p.module)
                for p in predicted.pairs
            ]
            mirrored = AlignmentResult(
                "E", "hi", "en", mirrored_pairs,
                predicted.unaligned_tgt, predicted.unaligned_src)
            assert match_score(gold, predicted) == match_score(mirrored_gold, mirrored)


class TestErrorBreakdown:
    def test_all_predicted_means_zero(self):
        gold = GoldAlignment("E", "en", "hi", ((0, 0),), {(0, 0): ("OI",)})
        predicted = make_predicted("E", "en", "hi", [(0, 0)], 1, 1)
        assert error_breakdown(gold, predicted) == {}

    def test_missed_pair_counted(self):
        gold = GoldAlignment("E", "en", "hi", ((0, 0), (1, 1)),
                             {(0, 0): ("OI",), (1, 1): ("LV",)})
        predicted = make_predicted("E", "en", "hi", [(1, 1)], 2, 2)
        assert error_breakdown(gold, predicted) == {"OI": 1}

    def test_multi_label_counts_all(self):
        gold = GoldAlignment("E", "en", "hi", ((0, 0),), {(0, 0): ("IR", "SV")})
        predicted = make_predicted("E", "en", "hi", [], 1, 1)
        assert error_breakdown(gold, predicted) == {"IR": 1, "SV": 1}

    def test_mi_counts_wrongly_aligned_rows(self):
        gold = GoldAlignment("E", "en", "hi", (), {(0, -1): ("MI",)})
        predicted = make_predicted("E", "en", "hi", [(0, 0)], 1, 1)
        assert error_breakdown(gold, predicted) == {"MI": 1}
        silent = make_predicted("E", "en", "hi", [], 1, 1)
        assert error_breakdown(gold, silent) == {}


class TestGroupReport:
    def _evaluation(self, entity, category, lang_b="hi"):
        src = box(entity, "en", [("a", ["1"]), ("b", ["2"])], category=category)
        tgt = box(entity, lang_b, [("a", ["1"]), ("b", ["2"])], category=category)
        gold = GoldAlignment(entity, "en", lang_b, ((0, 0), (1, 1)))
        predicted = make_predicted(entity, "en", lang_b, [(0, 0)], 2, 2)
        return PairEvaluation(gold, predicted, src, tgt)

    def test_singleton_category(self):
        rows = group_report([self._evaluation("E1", "Person")], "category")
        assert len(rows) == 1
        assert rows[0].group == "Person"
        assert rows[0].matched.precision == 1.0
        assert rows[0].matched.recall == 0.5

    def test_two_categories_micro_averaged(self):
        rows = group_report(
            [self._evaluation("E1", "Person"), self._evaluation("E2", "Person"),
             self._evaluation("E3", "City")],
            "category",
        )
        by_group = {r.group: r for r in rows}
        assert set(by_group) == {"Person", "City"}
        # Person: inter 2, pred 2, gold 4 -> micro recall 0.5
        assert by_group["Person"].matched.recall == 0.5
        assert by_group["Person"].pair_count == 2

    def test_language_grouping(self):
        rows = group_report(
            [self._evaluation("E1", "Person", "hi"),
             self._evaluation("E2", "Person", "fr")],
            "language",
        )
        assert [r.group for r in rows] == ["en-fr", "en-hi"]

    def test_key_tier_boundaries(self):
        frequency = {"a": 100, "b": 101}
        ev = self._evaluation("E1", "Person")
        rows = group_report([ev], "key_tier",
                            key_frequency=lambda k: frequency[k])
        by_tier = {r.group: r for r in rows}
        # key "a" (freq 100) is Mid, key "b" (101) is High
        assert by_tier["Mid"].matched.recall == 1.0   # (0,0) predicted
        assert by_tier["High"].matched.recall == 0.0  # (1,1) missed

    def test_report_written(self, tmp_path):
        rows = group_report([self._evaluation("E1", "Person")], "category")
        csv_path = tmp_path / "report.csv"
        json_path = tmp_path / "report.json"
        write_report(rows, csv_path, json_path)
        content = csv_path.read_text().splitlines()
        assert content[0].startswith("group,pairs,matched_precision")
        assert len(content) == 2
        assert json_path.exists()
