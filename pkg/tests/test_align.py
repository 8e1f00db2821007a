import random

import pytest

from tablesync.align import (AlignmentPair, AlignmentResult, DEFAULT_THRESHOLDS,
                             MODULES, PairContext, ThresholdSet, align_many,
                             align_pipeline, coverage, greedy_mutual_match)
from tablesync.errors import ValidationError
from tablesync.providers import DictionaryTranslator, KeyTranslationMap

from conftest import PLANTED_THRESHOLDS, box


class TestThresholdSet:
    def test_published_defaults(self):
        # tuned optima, (english-involved, non-english) per stage
        assert DEFAULT_THRESHOLDS.english_involved == (0.8, 0.64, 0.54, 0.9, 0.88)
        assert DEFAULT_THRESHOLDS.non_english == (0.8, 0.6, 0.54, 0.54, 0.96)

    def test_pair_class_selection(self):
        assert DEFAULT_THRESHOLDS.for_pair("en", "hi") == DEFAULT_THRESHOLDS.english_involved
        assert DEFAULT_THRESHOLDS.for_pair("hi", "en") == DEFAULT_THRESHOLDS.english_involved
        assert DEFAULT_THRESHOLDS.for_pair("fr", "ru") == DEFAULT_THRESHOLDS.non_english

    def test_range_validation(self):
        with pytest.raises(ValidationError):
            ThresholdSet(english_involved=(1.2, 0.5, 0.5, 0.5, 0.5))

    def test_file_round_trip(self, tmp_path):
        path = tmp_path / "thresholds.json"
        DEFAULT_THRESHOLDS.save(path)
        assert ThresholdSet.load(path) == DEFAULT_THRESHOLDS


class TestGreedyMutualMatch:
    SIM = {(0, 0): 0.9, (0, 1): 0.3, (1, 0): 0.8, (1, 1): 0.7}

    def test_extracts_iteratively(self):
        got = greedy_mutual_match(self.SIM, 0.5)
        assert [(s, t) for s, t, _ in got] == [(0, 0), (1, 1)]

    def test_threshold_prunes(self):
        got = greedy_mutual_match(self.SIM, 0.75)
        assert [(s, t) for s, t, _ in got] == [(0, 0)]

    def test_empty_matrix(self):
        assert greedy_mutual_match({}, 0.5) == []

    def test_tie_breaks_on_lower_indices(self):
        sim = {(0, 1): 1.0, (1, 0): 1.0, (0, 0): 1.0, (1, 1): 1.0}
        got = greedy_mutual_match(sim, 0.5)
        assert [(s, t) for s, t, _ in got] == [(0, 0), (1, 1)]

    def test_strictly_above_threshold(self):
        assert greedy_mutual_match({(0, 0): 0.5}, 0.5) == []


class TestAlignmentPair:
    def test_multi_only_for_m5(self):
        with pytest.raises(ValidationError):
            AlignmentPair((0,), (1, 2), 0.9, "M3")

    def test_at_most_two_merged(self):
        with pytest.raises(ValidationError):
            AlignmentPair((0,), (1, 2, 3), 0.9, "M5")

    def test_json_round_trip_multi(self):
        pair = AlignmentPair((0,), (1, 2), 0.7, "M5")
        assert AlignmentPair.from_json(pair.to_json()) == pair
        assert pair.to_json()["src"] == 0
        assert pair.to_json()["tgt"] == [1, 2]


def _identity_pipeline(src, tgt, embedder, **kwargs):
    return align_pipeline(src, tgt, DictionaryTranslator(), embedder, **kwargs)


class TestPipelineBasics:
    def test_identical_english_tables_align_fully(self, embedder):
        rows = [("born", ["1950"]), ("spouse", ["pat"])]
        result = _identity_pipeline(box("E1", "en", rows), box("E1", "hi", rows),
                                    embedder)
        assert len(result.pairs) == 2
        assert result.unaligned_src == [] and result.unaligned_tgt == []

    def test_m1_cross_alignment_by_voted_keys(self, embedder):
        src = box("E1", "en", [("Born", ["a"]), ("Died", ["b"])])
        tgt = box("E1", "hi", [("Died", ["c"]), ("Born", ["d"])])
        vote = KeyTranslationMap()
        for lang in ("en", "hi"):
            vote.add_entry(lang, "Person", "Born", "born")
            vote.add_entry(lang, "Person", "Died", "died")
        result = _identity_pipeline(src, tgt, embedder, vote_map=vote,
                                    enabled_modules=("M1",))
        assert {(p.src_row, p.tgt_rows[0]) for p in result.pairs} == {(0, 1), (1, 0)}
        assert all(p.module == "M1" and p.score == 1.0 for p in result.pairs)

    def test_key_absent_from_vote_map_left_for_later(self, embedder):
        src = box("E1", "en", [("Born", ["a"])])
        tgt = box("E1", "hi", [("Born", ["a"])])
        result = _identity_pipeline(src, tgt, embedder,
                                    vote_map=KeyTranslationMap(),
                                    enabled_modules=("M1",))
        assert result.pairs == []
        assert result.unaligned_src == [0]

    def test_result_partition_validates(self, embedder):
        src = box("E1", "en", [("a", ["1"]), ("b", ["2"])])
        tgt = box("E1", "hi", [("a", ["1"])])
        result = _identity_pipeline(src, tgt, embedder)
        result.validate(len(src), len(tgt))
        assert set(result.unaligned_src) | result.aligned_src_rows() == {0, 1}

    def test_json_round_trip(self, embedder):
        src = box("E1", "en", [("a", ["1"]), ("b", ["2"])])
        tgt = box("E1", "hi", [("b", ["2"]), ("a", ["1"])])
        result = _identity_pipeline(src, tgt, embedder)
        again = AlignmentResult.from_json(result.to_json())
        assert again.to_json() == result.to_json()


class TestPlantedFixture:
    def expected(self):
        return {
            "M1": ((0,), (0,)), "M2": ((1,), (1,)), "M3": ((2,), (2,)),
            "M4": ((3,), (3,)), "M5": ((4,), (4, 5)),
        }

    def test_one_pair_per_stage(self, planted_pair, embedder):
        src, tgt, translator, vote_map = planted_pair
        result = align_pipeline(src, tgt, translator, embedder, vote_map,
                                PLANTED_THRESHOLDS)
        assert len(result.pairs) == 5
        got = {p.module: (p.src_rows, p.tgt_rows) for p in result.pairs}
        assert got == self.expected()
        assert result.unaligned_src == [5]
        assert result.unaligned_tgt == []

    def test_single_module_pipeline(self, planted_pair, embedder):
        src, tgt, translator, vote_map = planted_pair
        result = align_pipeline(src, tgt, translator, embedder, vote_map,
                                PLANTED_THRESHOLDS, enabled_modules=("M1",))
        assert len(result.pairs) == 1
        assert result.pairs[0].module == "M1"

    @pytest.mark.parametrize("ablated", MODULES)
    def test_each_ablation_removes_exactly_its_pair(self, planted_pair,
                                                    embedder, ablated):
        src, tgt, translator, vote_map = planted_pair
        enabled = tuple(m for m in MODULES if m != ablated)
        result = align_pipeline(src, tgt, translator, embedder, vote_map,
                                PLANTED_THRESHOLDS, enabled)
        expect = {m: rows for m, rows in self.expected().items() if m != ablated}
        got = {p.module: (p.src_rows, p.tgt_rows) for p in result.pairs}
        assert got == expect

    def test_scores_exceed_stage_thresholds(self, planted_pair, embedder):
        src, tgt, translator, vote_map = planted_pair
        result = align_pipeline(src, tgt, translator, embedder, vote_map,
                                PLANTED_THRESHOLDS)
        theta = PLANTED_THRESHOLDS.english_involved
        for pair in result.pairs:
            assert pair.score > theta[MODULES.index(pair.module)]


class TestCoverage:
    def test_ratio(self, embedder):
        src = box("E1", "en", [(f"k{i}", ["v"]) for i in range(5)])
        tgt = box("E1", "hi", [("k0", ["v"]), ("k1", ["v"]), ("k2", ["v"]),
                               ("zz", ["q"])])
        result = _identity_pipeline(src, tgt, embedder)
        assert coverage(result, src, tgt) == 3 / 4

    def test_full_and_empty(self, embedder):
        rows = [("a", ["1"]), ("b", ["2"])]
        full = _identity_pipeline(box("E1", "en", rows), box("E1", "hi", rows),
                                  embedder)
        assert coverage(full, box("E1", "en", rows), box("E1", "hi", rows)) == 1.0
        disjoint_src = box("E1", "en", [("a", ["1"])])
        disjoint_tgt = box("E1", "hi", [("z", ["9"])])
        none = _identity_pipeline(disjoint_src, disjoint_tgt, embedder)
        assert coverage(none, disjoint_src, disjoint_tgt) == 0.0


def random_pair(rng, entity):
    """Tables with overlapping key vocabulary to exercise every stage."""
    vocabulary = [f"key{i}" for i in range(10)]
    n_src = rng.randint(2, 8)
    n_tgt = rng.randint(2, 8)
    shared = rng.sample(vocabulary, k=min(n_src, n_tgt, rng.randint(1, 5)))

    def rows(n):
        out = []
        used = set()
        for i in range(n):
            if i < len(shared):
                key = shared[i]
            else:
                key = rng.choice([v for v in vocabulary if v not in used] or ["filler"])
            used.add(key)
            values = [rng.choice(["red", "blue", "green", "1950", "2001"])
                      for _ in range(rng.randint(1, 3))]
            out.append((key, values))
        rng.shuffle(out)
        return out

    return (box(entity, "en", rows(n_src)), box(entity, "hi", rows(n_tgt)))


class TestPipelineInvariants:
    def pairs(self, n=30, seed=7):
        rng = random.Random(seed)
        return [random_pair(rng, f"E{i}") for i in range(n)]

    def test_monotone_prefixes(self, embedder):
        for src, tgt in self.pairs():
            full = _identity_pipeline(src, tgt, embedder).expanded_pairs()
            for k in range(1, 6):
                prefix = _identity_pipeline(src, tgt, embedder,
                                            enabled_modules=MODULES[:k])
                assert prefix.expanded_pairs() <= full

    def test_ablation_preserves_earlier_stages(self, embedder):
        for src, tgt in self.pairs(n=15):
            full = _identity_pipeline(src, tgt, embedder)
            for k, module in enumerate(MODULES):
                ablated = _identity_pipeline(
                    src, tgt, embedder,
                    enabled_modules=tuple(m for m in MODULES if m != module))
                before = {(p.module, p.src_rows, p.tgt_rows)
                          for p in full.pairs if MODULES.index(p.module) < k}
                after = {(p.module, p.src_rows, p.tgt_rows)
                         for p in ablated.pairs if MODULES.index(p.module) < k}
                assert before == after

    def test_mirror_symmetry_m1_to_m3(self, embedder):
        for src, tgt in self.pairs(n=15, seed=11):
            forward = _identity_pipeline(src, tgt, embedder,
                                         enabled_modules=("M1", "M2", "M3"))
            backward = _identity_pipeline(tgt, src, embedder,
                                          enabled_modules=("M1", "M2", "M3"))
            mirrored = {(t, s) for s, t in backward.expanded_pairs()}
            assert forward.expanded_pairs() == mirrored

    def test_jobs_determinism(self, embedder):
        pairs = self.pairs(n=12, seed=3)
        translator = DictionaryTranslator()
        serial = align_many(pairs, translator, embedder, jobs=1)
        parallel = align_many(pairs, translator, embedder, jobs=8)
        assert serial.keys() == parallel.keys()
        for key in serial:
            assert serial[key].to_json() == parallel[key].to_json()
