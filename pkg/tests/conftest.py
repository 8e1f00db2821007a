import datetime as dt

import pytest

from tablesync.align import AlignmentPair, AlignmentResult, ThresholdSet
from tablesync.corpus import Corpus, GoldAlignment, Infobox, Row
from tablesync.providers import (DictionaryTranslator, HashedBowEmbedder,
                                 KeyTranslationMap)

FIXTURE_DATE = dt.date(2024, 1, 1)


def box(entity, lang, rows, category="Person", date=FIXTURE_DATE):
    return Infobox(
        entity_id=entity, language=lang, category=category,
        rows=tuple(Row(key, tuple(values)) for key, values in rows),
        extracted_at=date,
    )


@pytest.fixture
def embedder():
    return HashedBowEmbedder()


@pytest.fixture
def identity_translator():
    return DictionaryTranslator()


# ---------------------------------------------------------------------------
# Planted-stage pair: exactly one row alignable per stage plus one unalignable
# source row.  Similarities under the bag-of-words stub, computed by hand:
#   M1 voted keys both map to "born"            -> 1.0
#   M2 keys "spouse partner"/"spouse"           -> 1/sqrt(2)  = 0.7071
#   M3 row texts share 3 of 5 tokens            -> 3/5        = 0.6
#   M4 row texts share 3 tokens, norms 2,sqrt8  -> 3/(2*2.83) = 0.5303
#   M5 keys "kin"/"kin father father"           -> 1/sqrt(5)  = 0.4472
#      merged values "alice bob" vs row text    -> 2/sqrt(14) = 0.5345 > 0.4472
# The stage-4 plant stays out of stage 3 because 0.5303 <= theta3, and the
# "town town" padding makes the merge row the one-way argmax of the stage-4
# target without ever crossing theta3.
# ---------------------------------------------------------------------------

PLANTED_THRESHOLDS = ThresholdSet(
    english_involved=(0.8, 0.64, 0.54, 0.50, 0.40),
    non_english=(0.8, 0.6, 0.54, 0.54, 0.96),
)

_HI_DICT = {
    "जन्म": "genesis", "१९५०": "ancientyear",
    "साथी": "spouse", "वेरोनिका": "verona",
    "उपलब्धियां": "major achievements", "क्वांटम": "quantum computing research",
    "पद": "position", "महापौर": "mayor troy seat town town",
    "पिता": "kin father father", "एलिस": "alice",
    "माता": "kin mother mother", "बॉब": "bob",
}


@pytest.fixture
def planted_pair():
    src = box("E1", "en", [
        ("born", ["1950"]),
        ("spouse partner", ["veronica"]),
        ("known for", ["quantum computing research"]),
        ("office", ["mayor troy seat"]),
        ("kin", ["alice", "bob", "town town"]),
        ("height", ["tall"]),
    ])
    tgt = box("E1", "hi", [
        ("जन्म", ["१९५०"]),
        ("साथी", ["वेरोनिका"]),
        ("उपलब्धियां", ["क्वांटम"]),
        ("पद", ["महापौर"]),
        ("पिता", ["एलिस"]),
        ("माता", ["बॉब"]),
    ])
    translator = DictionaryTranslator(
        {("hi", "en", text): out for text, out in _HI_DICT.items()}
    )
    vote_map = KeyTranslationMap()
    vote_map.add_entry("en", "Person", "born", "born")
    vote_map.add_entry("hi", "Person", "जन्म", "born")
    return src, tgt, translator, vote_map


# ---------------------------------------------------------------------------
# Rule fixtures.  Alignments are built by hand where the rule needs a shape
# the default pipeline would not produce (the multi pair in pair B).
# Expected proposals per pair, in priority order:
#   A (en-fr):  R1 x5, R3 x1, R5 x1
#   B (en-hi):  R2 x1, R4 x2
#   C1 (en-af): R6 x1
#   C2 (fr-ru): R1 x2, R7 x1
#   C3 (de-ko): R1 x2, R8 x1
# ---------------------------------------------------------------------------


def pair_a():
    src = box("A", "en", [
        ("population", ["1,400,000 (2021 est.)"]),
        ("occupation", ["actor", "producer"]),
        ("doctoral advisor", ["grant"]),
        ("awards", ["gold medal"]),
        ("alma mater", ["state university"]),
    ], category="City")
    tgt = box("A", "fr", [
        ("population", ["1,350,000 (2018)"]),
        ("occupation", ["actor"]),
        ("residence", ["paris"]),
        ("mayor", ["anne"]),
    ], category="City")
    return src, tgt


def pair_b():
    src = box("B", "en", [
        ("parents", ["alice", "bob"]),
        ("career goals", ["120"]),
        ("world ranking", ["3"]),
        ("name", ["rivera"]),
    ], category="Athlete")
    tgt = box("B", "hi", [
        ("father", ["alice"]),
        ("mother", ["bob"]),
        ("career goals", ["95"]),
        ("world ranking", ["8"]),
        ("name", ["rivera"]),
    ], category="Athlete")
    return src, tgt


def pair_c1():
    src = box("C1", "en", [
        ("motto", ["strength"]),
        ("anthem", ["rise"]),
    ], category="Country")
    tgt = box("C1", "af", [
        ("motto", ["old strength"]),
        ("anthem", ["rise"]),
    ], category="Country")
    return src, tgt


def pair_c2():
    src = box("C2", "fr", [
        ("capital", ["lyon"]),
        ("area", ["100"]),
        ("river", ["seine"]),
        ("lakes", ["annecy"]),
        ("forest", ["oak"]),
        ("coast", ["long"]),
    ], category="Country")
    tgt = box("C2", "ru", [
        ("capital", ["lyons old"]),
        ("area", ["100"]),
        ("river", ["seine"]),
        ("lakes", ["annecy"]),
    ], category="Country")
    return src, tgt


def pair_c3():
    src = box("C3", "de", [
        ("thesis", ["on x"]),
        ("patron saint", ["saint a"]),
        ("city flower", ["rose"]),
    ], category="City")
    tgt = box("C3", "ko", [
        ("thesis", ["on x"]),
        ("city flower", ["old rose"]),
        ("population", ["9,000"]),
    ], category="City")
    return src, tgt


@pytest.fixture
def rule_pairs():
    return {
        "A": pair_a(), "B": pair_b(), "C1": pair_c1(),
        "C2": pair_c2(), "C3": pair_c3(),
    }


@pytest.fixture
def table1_stats():
    from tablesync.corpus import CorpusStats, bundled_language_counts

    return CorpusStats.from_table_counts(bundled_language_counts())


def make_alignment(src, tgt, pairs, multi=()):
    """Hand-built alignment over explicit (src, tgt) index pairs."""
    alignment_pairs = [AlignmentPair((s,), (t,), 1.0, "M2") for s, t in pairs]
    alignment_pairs += [AlignmentPair((s,), tuple(ts), 1.0, "M5") for s, ts in multi]
    aligned_src = {s for p in alignment_pairs for s in p.src_rows}
    aligned_tgt = {t for p in alignment_pairs for t in p.tgt_rows}
    return AlignmentResult(
        entity_id=src.entity_id, lang_src=src.language, lang_tgt=tgt.language,
        pairs=alignment_pairs,
        unaligned_src=sorted(set(range(len(src))) - aligned_src),
        unaligned_tgt=sorted(set(range(len(tgt))) - aligned_tgt),
    )


RULE_FIXTURE_ALIGNMENTS = {
    "A": {"pairs": [(0, 0), (1, 1)]},
    "B": {"pairs": [(1, 2), (2, 3), (3, 4)], "multi": [(0, (0, 1))]},
    "C1": {"pairs": [(0, 0), (1, 1)]},
    "C2": {"pairs": [(0, 0), (1, 1), (2, 2), (3, 3)]},
    "C3": {"pairs": [(0, 0), (2, 1)]},
}

# expected rule tallies per fixture pair, derived by hand
RULE_FIXTURE_TALLIES = {
    "A": {"R1": 5, "R3": 1, "R5": 1},
    "B": {"R2": 1, "R4": 2},
    "C1": {"R6": 1},
    "C2": {"R1": 2, "R7": 1},
    "C3": {"R1": 2, "R8": 1},
}


def rule_fixture_config():
    from tablesync.rules import UpdateConfig

    return UpdateConfig(
        pos_trend_keys={"career goals", "population"},
        neg_trend_keys={"world ranking"},
        rare_key_set={"thesis", "patron saint"},
        row_gap_ratio=1.5,
    )


def tiny_corpus():
    """Two-language corpus with gold, small enough to eyeball."""
    boxes = [
        box("E1", "en", [("born", ["1950"]), ("spouse", ["pat"])]),
        box("E1", "hi", [("born", ["1950"]), ("spouse", ["pat"])]),
        box("E2", "en", [("capital", ["rome"]), ("area", ["100"])], category="Country"),
    ]
    golds = [GoldAlignment("E1", "en", "hi", ((0, 0), (1, 1)))]
    return Corpus(boxes, golds)


# Live-deployment shaped journal: 603 decided records, 466 accepted, split
# over the three direction flows as 204/161, 216/169, and 183/136.
CENSUS_FLOWS = [
    (("en", "hi"), 204, 161),
    (("fr", "ru"), 216, 169),
    (("hi", "en"), 183, 136),
]


def build_census_journal(path):
    from tablesync.review import Citation, ReviewQueue
    from tablesync.rules import EditProposal

    edit_types = [("R1", "RowAddition"), ("R3", "ValueSubstitute"),
                  ("R5", "ValueAddition")]
    queue = ReviewQueue(path)
    citation = Citation(url="https://example.org/ref")
    counter = 0
    for (source, target), total, accepted in CENSUS_FLOWS:
        for i in range(total):
            rule, edit_type = edit_types[counter % 3]
            proposal = EditProposal(
                id=f"census{counter:04d}", rule=rule, edit_type=edit_type,
                source_lang=source, target_lang=target, entity_id=f"E{counter}",
                src_row=0, tgt_row=None if edit_type == "RowAddition" else 0,
                old_content=None if edit_type == "RowAddition" else ["old"],
                new_content={"key": "k", "values": ["v"]}
                if edit_type in ("RowAddition", "RowDelete") else ["new"],
            )
            queue.enqueue([proposal])
            decision = "accept" if i < accepted else "reject"
            queue.decide(proposal.id, decision, "editor",
                         citation if decision == "accept" else None)
            counter += 1
    return queue
