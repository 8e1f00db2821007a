"""Sequential grid search for the five stage thresholds.

Stages are tuned in pipeline order: with the earlier thresholds frozen at
their chosen values, each candidate for the current stage runs the pipeline
truncated at that stage over the validation pairs, and the candidate with the
best micro-averaged matched F1 wins.  Ties go to the largest threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

from .align import DEFAULT_THRESHOLDS, MODULES, ThresholdSet, align_pipeline
from .errors import ValidationError
from .metrics import MatchScore, match_counts


@dataclass(frozen=True)
class GridSpec:
    start: float = 0.40
    stop: float = 1.00
    step: float = 0.02

    def candidates(self) -> list[float]:
        if self.step <= 0:
            raise ValidationError("grid step must be positive")
        values = []
        k = 0
        while True:
            value = round(self.start + k * self.step, 10)
            if value > self.stop + 1e-9:
                break
            values.append(value)
            k += 1
        if not values:
            values = [self.start]
        return values


@dataclass
class TuningItem:
    """One validation pair: the two tables plus their gold alignment."""

    src: object
    tgt: object
    gold: object
    split: str = "validation"


def _aggregate_matched_f1(items, translator, embedder, vote_map,
                          thresholds, enabled) -> float:
    inter = pred = gold_n = 0
    for item in items:
        result = align_pipeline(item.src, item.tgt, translator, embedder,
                                vote_map, thresholds, enabled)
        a, b, c = match_counts(item.gold, result)
        inter, pred, gold_n = inter + a, pred + b, gold_n + c
    return MatchScore.from_counts(inter, pred, gold_n).f1


def tune_thresholds(items: list[TuningItem], translator, embedder,
                    vote_map=None, grid: GridSpec = GridSpec(),
                    pair_class: str = "english_involved",
                    base: ThresholdSet = DEFAULT_THRESHOLDS) -> ThresholdSet:
    """Tune the five thresholds of one pair class on validation pairs.

    Only items flagged ``split == "validation"`` participate; the returned
    set carries the tuned tuple for ``pair_class`` and ``base`` values for
    the other class.
    """
    if pair_class not in ("english_involved", "non_english"):
        raise ValidationError(f"unknown pair class {pair_class!r}")
    validation = [item for item in items if item.split == "validation"]
    if not validation:
        raise ValidationError("no validation pairs to tune on")

    candidates = grid.candidates()
    chosen: list[float] = []
    other_class = (
        base.non_english if pair_class == "english_involved" else base.english_involved
    )
    for stage_index in range(5):
        enabled = MODULES[: stage_index + 1]
        best_theta = candidates[0]
        best_f1 = -1.0
        for theta in candidates:
            trial = list(chosen) + [theta] + [0.0] * (4 - stage_index)
            trial_set = (
                ThresholdSet(tuple(trial), other_class)
                if pair_class == "english_involved"
                else ThresholdSet(other_class, tuple(trial))
            )
            f1 = _aggregate_matched_f1(
                validation, translator, embedder, vote_map, trial_set, enabled
            )
            if f1 >= best_f1:
                best_f1 = f1
                best_theta = theta
        chosen.append(best_theta)

    tuned = tuple(chosen)
    if pair_class == "english_involved":
        return ThresholdSet(tuned, base.non_english)
    return ThresholdSet(base.english_involved, tuned)
