"""Alignment scoring against gold annotations, plus grouped reporting.

Matched score: precision/recall/F1 of predicted row pairs against gold pairs
(multi-row alignments are expanded to their constituent pairs first).
Unmatched score: the same over rows both sides correctly left unaligned.
Aggregates are micro-averaged: intersection and set sizes are summed over
pairs before the ratios are taken.
"""

from __future__ import annotations

import csv
import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from .align import AlignmentResult, coverage as pair_coverage
from .corpus import GoldAlignment, Infobox, key_frequency_tier
from .errors import ValidationError


@dataclass(frozen=True)
class MatchScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, intersection: int, predicted: int, gold: int) -> "MatchScore":
        """Score from set sizes.

        Empty-set conventions: an empty side scores 0 against a non-empty
        counterpart, and both-empty counts as perfect agreement (1.0).
        """
        if predicted == 0 and gold == 0:
            return cls(1.0, 1.0, 1.0)
        precision = intersection / predicted if predicted else 0.0
        recall = intersection / gold if gold else 0.0
        if precision + recall == 0.0:
            return cls(precision, recall, 0.0)
        return cls(precision, recall, 2 * precision * recall / (precision + recall))


def _check_same_pair(gold: GoldAlignment, predicted: AlignmentResult) -> None:
    if (gold.entity_id, gold.lang_a, gold.lang_b) != predicted.pair_id:
        raise ValidationError(
            f"gold {gold.pair_id} does not describe predicted {predicted.pair_id}"
        )


def match_counts(gold: GoldAlignment, predicted: AlignmentResult) -> tuple[int, int, int]:
    """(|P∩G|, |P|, |G|) over expanded row pairs."""
    _check_same_pair(gold, predicted)
    gold_pairs = set(gold.pairs)
    predicted_pairs = predicted.expanded_pairs()
    return len(predicted_pairs & gold_pairs), len(predicted_pairs), len(gold_pairs)


def match_score(gold: GoldAlignment, predicted: AlignmentResult) -> MatchScore:
    return MatchScore.from_counts(*match_counts(gold, predicted))


def unmatch_counts(gold: GoldAlignment, predicted: AlignmentResult,
                   n_src: int, n_tgt: int) -> tuple[int, int, int]:
    """(|U_P∩U_G|, |U_P|, |U_G|) over rows of both tables."""
    _check_same_pair(gold, predicted)
    all_rows = {("src", i) for i in range(n_src)} | {("tgt", j) for j in range(n_tgt)}
    gold_aligned = {("src", i) for i, _ in gold.pairs} | {("tgt", j) for _, j in gold.pairs}
    pred_aligned = {("src", s) for s in predicted.aligned_src_rows()} | {
        ("tgt", t) for t in predicted.aligned_tgt_rows()
    }
    unaligned_gold = all_rows - gold_aligned
    unaligned_pred = all_rows - pred_aligned
    return (
        len(unaligned_pred & unaligned_gold),
        len(unaligned_pred),
        len(unaligned_gold),
    )


def unmatch_score(gold: GoldAlignment, predicted: AlignmentResult,
                  n_src: int, n_tgt: int) -> MatchScore:
    return MatchScore.from_counts(*unmatch_counts(gold, predicted, n_src, n_tgt))


def error_breakdown(gold: GoldAlignment, predicted: AlignmentResult) -> dict[str, int]:
    """Count gold challenge labels the prediction got wrong.

    Pair labels (OI, IR, UI, LV, SV, EEL) count when the labelled gold pair is
    missing from the prediction; a pair carrying several labels increments all
    of them.  MI labels sit on unaligned rows (sentinel index -1) and count
    when the prediction aligned that row anyway.
    """
    _check_same_pair(gold, predicted)
    if not gold.labels:
        raise ValidationError("gold alignment carries no challenge labels")
    predicted_pairs = predicted.expanded_pairs()
    aligned_src = predicted.aligned_src_rows()
    aligned_tgt = predicted.aligned_tgt_rows()
    counts: Counter = Counter()
    for (i, j), labels in gold.labels.items():
        if -1 in (i, j):
            row_aligned = (j == -1 and i in aligned_src) or (i == -1 and j in aligned_tgt)
            if row_aligned:
                for label in labels:
                    counts[label] += 1
            continue
        if (i, j) not in predicted_pairs:
            for label in labels:
                counts[label] += 1
    return dict(counts)


@dataclass
class PairEvaluation:
    """One table pair's gold, prediction, and grouping metadata."""

    gold: GoldAlignment
    predicted: AlignmentResult
    src: Infobox
    tgt: Infobox
    split: str = "test"

    @property
    def language_pair(self) -> str:
        return "-".join(sorted((self.src.language, self.tgt.language)))

    @property
    def category(self) -> str:
        return self.src.category


@dataclass
class GroupRow:
    group: str
    matched: MatchScore
    unmatched: MatchScore
    coverage: float
    pair_count: int
    errors: dict[str, int] = field(default_factory=dict)


def _micro(evaluations: list[PairEvaluation]) -> GroupRow:
    m_inter = m_pred = m_gold = 0
    u_inter = u_pred = u_gold = 0
    covered = 0
    denominator = 0
    errors: Counter = Counter()
    for ev in evaluations:
        a, b, c = match_counts(ev.gold, ev.predicted)
        m_inter, m_pred, m_gold = m_inter + a, m_pred + b, m_gold + c
        a, b, c = unmatch_counts(ev.gold, ev.predicted, len(ev.src), len(ev.tgt))
        u_inter, u_pred, u_gold = u_inter + a, u_pred + b, u_gold + c
        covered += len(ev.predicted.aligned_src_rows())
        denominator += min(len(ev.src), len(ev.tgt))
        if ev.gold.labels:
            errors.update(error_breakdown(ev.gold, ev.predicted))
    return GroupRow(
        group="",
        matched=MatchScore.from_counts(m_inter, m_pred, m_gold),
        unmatched=MatchScore.from_counts(u_inter, u_pred, u_gold),
        coverage=covered / denominator if denominator else 0.0,
        pair_count=len(evaluations),
        errors=dict(errors),
    )


def group_report(evaluations: list[PairEvaluation], group_by: str = "language",
                 key_frequency=None) -> list[GroupRow]:
    """Micro-averaged scores per group.

    ``group_by`` is one of ``language`` (language pair), ``category``, or
    ``key_tier``.  Key-tier grouping buckets each row pair by the corpus
    frequency of its source row's key, so it needs ``key_frequency``, a
    callable from english key text to count.
    """
    if not evaluations:
        raise ValidationError("no evaluations to report")
    if group_by == "key_tier":
        if key_frequency is None:
            raise ValidationError("key_tier grouping needs a key_frequency lookup")
        return _key_tier_report(evaluations, key_frequency)
    if group_by not in ("language", "category"):
        raise ValidationError(f"unknown grouping {group_by!r}")
    buckets: dict[str, list[PairEvaluation]] = defaultdict(list)
    for ev in evaluations:
        key = ev.language_pair if group_by == "language" else ev.category
        buckets[key].append(ev)
    rows = []
    for key in sorted(buckets):
        row = _micro(buckets[key])
        row.group = key
        rows.append(row)
    return rows


def _key_tier_report(evaluations, key_frequency) -> list[GroupRow]:
    tiers = ("High", "Mid", "Low")
    m_counts = {t: [0, 0, 0] for t in tiers}
    u_counts = {t: [0, 0, 0] for t in tiers}
    pairs_seen = {t: set() for t in tiers}

    for ev in evaluations:
        def src_tier(i):
            return key_frequency_tier(key_frequency(ev.src.rows[i].key))

        gold_pairs = set(ev.gold.pairs)
        predicted_pairs = ev.predicted.expanded_pairs()
        for tier in tiers:
            g = {p for p in gold_pairs if src_tier(p[0]) == tier}
            p = {q for q in predicted_pairs if src_tier(q[0]) == tier}
            m_counts[tier][0] += len(p & g)
            m_counts[tier][1] += len(p)
            m_counts[tier][2] += len(g)
            if g or p:
                pairs_seen[tier].add(ev.gold.pair_id)
        # unmatched rows bucketed by their own key's tier (source side)
        gold_aligned_src = {i for i, _ in gold_pairs}
        pred_aligned_src = ev.predicted.aligned_src_rows()
        for i in range(len(ev.src)):
            tier = src_tier(i)
            in_gold_unaligned = i not in gold_aligned_src
            in_pred_unaligned = i not in pred_aligned_src
            u_counts[tier][0] += int(in_gold_unaligned and in_pred_unaligned)
            u_counts[tier][1] += int(in_pred_unaligned)
            u_counts[tier][2] += int(in_gold_unaligned)

    rows = []
    for tier in tiers:
        rows.append(
            GroupRow(
                group=tier,
                matched=MatchScore.from_counts(*m_counts[tier]),
                unmatched=MatchScore.from_counts(*u_counts[tier]),
                coverage=0.0,
                pair_count=len(pairs_seen[tier]),
            )
        )
    return rows


def evaluate_pair(ev: PairEvaluation) -> dict:
    """Flat per-pair summary used by reports."""
    matched = match_score(ev.gold, ev.predicted)
    unmatched = unmatch_score(ev.gold, ev.predicted, len(ev.src), len(ev.tgt))
    return {
        "pair": list(ev.gold.pair_id),
        "matched": matched.__dict__,
        "unmatched": unmatched.__dict__,
        "coverage": pair_coverage(ev.predicted, ev.src, ev.tgt),
    }


_CSV_COLUMNS = [
    "group", "pairs",
    "matched_precision", "matched_recall", "matched_f1",
    "unmatched_precision", "unmatched_recall", "unmatched_f1",
    "coverage",
]


def write_report(rows: list[GroupRow], csv_path: str | Path,
                 json_path: str | Path | None = None) -> None:
    """Write a group report as CSV, and optionally a JSON mirror."""
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_COLUMNS)
        for row in rows:
            writer.writerow([
                row.group, row.pair_count,
                f"{row.matched.precision:.6f}", f"{row.matched.recall:.6f}",
                f"{row.matched.f1:.6f}",
                f"{row.unmatched.precision:.6f}", f"{row.unmatched.recall:.6f}",
                f"{row.unmatched.f1:.6f}",
                f"{row.coverage:.6f}",
            ])
    if json_path is not None:
        payload = [
            {
                "group": row.group,
                "pairs": row.pair_count,
                "matched": row.matched.__dict__,
                "unmatched": row.unmatched.__dict__,
                "coverage": row.coverage,
                "errors": row.errors,
            }
            for row in rows
        ]
        Path(json_path).write_text(json.dumps(payload, indent=2), encoding="utf-8")
