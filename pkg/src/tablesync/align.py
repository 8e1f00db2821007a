"""Five-stage row alignment cascade for a pair of infoboxes.

Stages run in order, each consuming only rows the earlier stages left
unaligned, and each relaxing the matching requirement:

* M1 aligns rows whose corpus-voted english keys embed above a threshold.
* M2 aligns on directly-translated key text, mutual-best with threshold.
* M3 does the same over the whole row text (key plus values).
* M4 drops the mutual requirement: a one-way best match suffices, gated by
  its own threshold.  Candidates whose best matches agree in both directions
  belong to M3's regime and are not re-adopted here.
* M5 merges up to two target rows into one source row when both keys clear a
  threshold and the combined values beat the best single key.

Rows and pairs are addressed by index; the cascade is deterministic given
deterministic providers (ties break on lower indices).
"""

from __future__ import annotations

import json
import threading
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Infobox
from .errors import ValidationError
from .providers import Embedder, KeyTranslationMap, Translator, cosine, translate_table

MODULES = ("M1", "M2", "M3", "M4", "M5")

# Tuned defaults per pair class, in stage order M1..M5.
DEFAULT_ENGLISH_INVOLVED = (0.8, 0.64, 0.54, 0.9, 0.88)
DEFAULT_NON_ENGLISH = (0.8, 0.6, 0.54, 0.54, 0.96)


@dataclass(frozen=True)
class ThresholdSet:
    """Stage thresholds, one tuple per pair class.

    A pair is "english involved" when either table's language is English;
    otherwise the non-english tuple applies.
    """

    english_involved: tuple[float, float, float, float, float] = DEFAULT_ENGLISH_INVOLVED
    non_english: tuple[float, float, float, float, float] = DEFAULT_NON_ENGLISH

    def __post_init__(self):
        for values in (self.english_involved, self.non_english):
            if len(values) != 5:
                raise ValidationError("threshold tuples must hold five values")
            for theta in values:
                if not 0.0 <= theta <= 1.0:
                    raise ValidationError(f"threshold {theta} outside [0, 1]")

    def for_pair(self, lang_a: str, lang_b: str) -> tuple[float, float, float, float, float]:
        if "en" in (lang_a, lang_b):
            return self.english_involved
        return self.non_english

    def to_json(self) -> dict:
        return {
            "english_involved": list(self.english_involved),
            "non_english": list(self.non_english),
        }

    @classmethod
    def from_json(cls, record: dict) -> "ThresholdSet":
        return cls(
            english_involved=tuple(record["english_involved"]),
            non_english=tuple(record["non_english"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ThresholdSet":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


DEFAULT_THRESHOLDS = ThresholdSet()


@dataclass(frozen=True)
class AlignmentPair:
    """One alignment: a single row on one side, one or two rows on the other.

    Multi-row sides only occur at M5.  ``src_rows`` may hold two indices for
    the mirrored case (two source rows merged into one target row).
    """

    src_rows: tuple[int, ...]
    tgt_rows: tuple[int, ...]
    score: float
    module: str

    def __post_init__(self):
        if self.module not in MODULES:
            raise ValidationError(f"unknown module {self.module!r}")
        if not self.src_rows or not self.tgt_rows:
            raise ValidationError("alignment pair needs rows on both sides")
        if len(self.src_rows) > 1 and len(self.tgt_rows) > 1:
            raise ValidationError("at most one side of a pair may hold two rows")
        if (len(self.src_rows) > 1 or len(self.tgt_rows) > 1) and self.module != "M5":
            raise ValidationError("multi-row pairs are exclusive to M5")
        if max(len(self.src_rows), len(self.tgt_rows)) > 2:
            raise ValidationError("at most two rows may merge")

    @property
    def src_row(self) -> int:
        if len(self.src_rows) != 1:
            raise ValidationError("pair has a multi-row source side")
        return self.src_rows[0]

    def expanded(self) -> set[tuple[int, int]]:
        """Constituent (src, tgt) row pairs."""
        return {(s, t) for s in self.src_rows for t in self.tgt_rows}

    def to_json(self) -> dict:
        src = self.src_rows[0] if len(self.src_rows) == 1 else list(self.src_rows)
        return {
            "src": src,
            "tgt": list(self.tgt_rows),
            "score": self.score,
            "module": self.module,
        }

    @classmethod
    def from_json(cls, record: dict) -> "AlignmentPair":
        src = record["src"]
        src_rows = tuple(src) if isinstance(src, list) else (src,)
        return cls(
            src_rows=src_rows,
            tgt_rows=tuple(record["tgt"]),
            score=float(record["score"]),
            module=record["module"],
        )


@dataclass
class AlignmentResult:
    entity_id: str
    lang_src: str
    lang_tgt: str
    pairs: list[AlignmentPair]
    unaligned_src: list[int]
    unaligned_tgt: list[int]

    @property
    def pair_id(self) -> tuple[str, str, str]:
        return (self.entity_id, self.lang_src, self.lang_tgt)

    def expanded_pairs(self) -> set[tuple[int, int]]:
        out: set[tuple[int, int]] = set()
        for pair in self.pairs:
            out |= pair.expanded()
        return out

    def aligned_src_rows(self) -> set[int]:
        return {s for pair in self.pairs for s in pair.src_rows}

    def aligned_tgt_rows(self) -> set[int]:
        return {t for pair in self.pairs for t in pair.tgt_rows}

    def validate(self, n_src: int, n_tgt: int) -> None:
        """Check the exactly-once partition of row indices."""
        seen_src: set[int] = set()
        seen_tgt: set[int] = set()
        for pair in self.pairs:
            for s in pair.src_rows:
                if s in seen_src:
                    raise ValidationError(f"source row {s} in two pairs")
                seen_src.add(s)
            for t in pair.tgt_rows:
                if t in seen_tgt:
                    raise ValidationError(f"target row {t} in two pairs")
                seen_tgt.add(t)
        if seen_src | set(self.unaligned_src) != set(range(n_src)):
            raise ValidationError("source rows not partitioned")
        if seen_tgt | set(self.unaligned_tgt) != set(range(n_tgt)):
            raise ValidationError("target rows not partitioned")

    def to_json(self) -> dict:
        return {
            "pair": {
                "entity_id": self.entity_id,
                "lang_src": self.lang_src,
                "lang_tgt": self.lang_tgt,
            },
            "pairs": [p.to_json() for p in self.pairs],
            "unaligned_src": list(self.unaligned_src),
            "unaligned_tgt": list(self.unaligned_tgt),
        }

    @classmethod
    def from_json(cls, record: dict) -> "AlignmentResult":
        meta = record["pair"]
        return cls(
            entity_id=meta["entity_id"],
            lang_src=meta["lang_src"],
            lang_tgt=meta["lang_tgt"],
            pairs=[AlignmentPair.from_json(p) for p in record["pairs"]],
            unaligned_src=list(record["unaligned_src"]),
            unaligned_tgt=list(record["unaligned_tgt"]),
        )


def greedy_mutual_match(similarity: dict[tuple[int, int], float],
                        threshold: float) -> list[tuple[int, int, float]]:
    """Iterated mutual-best extraction.

    Repeatedly take the globally highest-scoring candidate strictly above the
    threshold among rows not yet matched, remove both rows, and repeat.  Ties
    break on (lower source index, lower target index).
    """
    ordered = sorted(similarity.items(), key=lambda kv: (-kv[1], kv[0][0], kv[0][1]))
    used_src: set[int] = set()
    used_tgt: set[int] = set()
    matches: list[tuple[int, int, float]] = []
    for (s, t), score in ordered:
        if score <= threshold:
            break
        if s in used_src or t in used_tgt:
            continue
        used_src.add(s)
        used_tgt.add(t)
        matches.append((s, t, score))
    return matches


class PairContext:
    """Precomputed english views and embedding memo for one table pair."""

    def __init__(self, src: Infobox, tgt: Infobox, translator: Translator,
                 embedder: Embedder, vote_map: KeyTranslationMap | None = None):
        if src.entity_id != tgt.entity_id:
            raise ValidationError(
                f"cannot align different entities: {src.entity_id!r} vs {tgt.entity_id!r}"
            )
        self.src = src
        self.tgt = tgt
        self.embedder = embedder
        self.vote_map = vote_map or KeyTranslationMap()
        # Direct (non-voted) english views drive stages M2..M5.
        self.src_en = translate_table(src, translator, "en", vote_map=None)
        self.tgt_en = translate_table(tgt, translator, "en", vote_map=None)
        self._memo: dict[str, object] = {}

    def vote_key(self, side: str, index: int) -> str | None:
        box = self.src if side == "src" else self.tgt
        return self.vote_map.lookup(box.language, box.category,
                                    box.rows[index].key)

    def key_text(self, side: str, index: int) -> str:
        box = self.src_en if side == "src" else self.tgt_en
        return box.rows[index].key

    def row_text(self, side: str, index: int) -> str:
        box = self.src_en if side == "src" else self.tgt_en
        row = box.rows[index]
        return row.key + " " + " ".join(row.values)

    def values_text(self, side: str, index: int) -> str:
        box = self.src_en if side == "src" else self.tgt_en
        return " ".join(box.rows[index].values)

    def _vector(self, text: str):
        hit = self._memo.get(text)
        if hit is None:
            hit = self.embedder.embed(text)
            self._memo[text] = hit
        return hit

    def similarity(self, text_a: str, text_b: str) -> float:
        return cosine(self._vector(text_a), self._vector(text_b))


def _key_similarity(ctx: PairContext, s: int, t: int) -> float:
    return ctx.similarity(ctx.key_text("src", s), ctx.key_text("tgt", t))


def _row_similarity(ctx: PairContext, s: int, t: int) -> float:
    return ctx.similarity(ctx.row_text("src", s), ctx.row_text("tgt", t))


def align_m1_corpus(ctx: PairContext, remaining_src: list[int],
                    remaining_tgt: list[int], theta1: float) -> list[AlignmentPair]:
    """Stage M1: embeddings of corpus-voted english keys, mutual-best."""
    src_keys = {s: ctx.vote_key("src", s) for s in remaining_src}
    tgt_keys = {t: ctx.vote_key("tgt", t) for t in remaining_tgt}
    candidates: dict[tuple[int, int], float] = {}
    for s, src_key in src_keys.items():
        if src_key is None:
            continue
        for t, tgt_key in tgt_keys.items():
            if tgt_key is None:
                continue
            candidates[(s, t)] = ctx.similarity(src_key, tgt_key)
    return [
        AlignmentPair((s,), (t,), score, "M1")
        for s, t, score in greedy_mutual_match(candidates, theta1)
    ]


def align_m2_key_only(ctx: PairContext, remaining_src: list[int],
                      remaining_tgt: list[int], theta2: float) -> list[AlignmentPair]:
    """Stage M2: directly-translated key text, mutual-best."""
    candidates = {
        (s, t): _key_similarity(ctx, s, t)
        for s in remaining_src for t in remaining_tgt
    }
    return [
        AlignmentPair((s,), (t,), score, "M2")
        for s, t, score in greedy_mutual_match(candidates, theta2)
    ]


def align_m3_keyvalue_bi(ctx: PairContext, remaining_src: list[int],
                         remaining_tgt: list[int], theta3: float) -> list[AlignmentPair]:
    """Stage M3: whole row text (key + values), mutual-best."""
    candidates = {
        (s, t): _row_similarity(ctx, s, t)
        for s in remaining_src for t in remaining_tgt
    }
    return [
        AlignmentPair((s,), (t,), score, "M3")
        for s, t, score in greedy_mutual_match(candidates, theta3)
    ]


def align_m4_keyvalue_uni(ctx: PairContext, remaining_src: list[int],
                          remaining_tgt: list[int], theta4: float) -> list[AlignmentPair]:
    """Stage M4: one-way best row-text match above its own threshold.

    Candidates are each remaining row's best counterpart in either direction.
    Pairs whose argmaxes agree both ways are the bidirectional case already
    owned by M3 and are skipped here; the relaxation covers only pairs where
    the directions disagree.  Conflicts resolve greedily by score.
    """
    if not remaining_src or not remaining_tgt:
        return []
    sim = {
        (s, t): _row_similarity(ctx, s, t)
        for s in remaining_src for t in remaining_tgt
    }

    def best_tgt(s):
        return min((t for t in remaining_tgt), key=lambda t: (-sim[(s, t)], t))

    def best_src(t):
        return min((s for s in remaining_src), key=lambda s: (-sim[(s, t)], s))

    candidates: dict[tuple[int, int], float] = {}
    for s in remaining_src:
        t = best_tgt(s)
        if sim[(s, t)] > theta4:
            candidates[(s, t)] = sim[(s, t)]
    for t in remaining_tgt:
        s = best_src(t)
        if sim[(s, t)] > theta4:
            candidates[(s, t)] = sim[(s, t)]
    # Drop direction-agreeing pairs: mutual bests are M3's jurisdiction.
    candidates = {
        (s, t): score
        for (s, t), score in candidates.items()
        if not (best_tgt(s) == t and best_src(t) == s)
    }
    ordered = sorted(candidates.items(), key=lambda kv: (-kv[1], kv[0][0], kv[0][1]))
    used_src: set[int] = set()
    used_tgt: set[int] = set()
    pairs: list[AlignmentPair] = []
    for (s, t), score in ordered:
        if s in used_src or t in used_tgt:
            continue
        used_src.add(s)
        used_tgt.add(t)
        pairs.append(AlignmentPair((s,), (t,), score, "M4"))
    return pairs


def _multi_candidates(ctx, single_index, single_side, partner_pool, theta5):
    """Top-two multi-merge candidates for one row, or None.

    Returns (merged_rows, merged_score, best_single_key_sim) when both
    candidate keys clear theta5 and the merged value combination beats the
    most similar single key.
    """
    scored = []
    for other in partner_pool:
        if single_side == "src":
            key_sim = _key_similarity(ctx, single_index, other)
        else:
            key_sim = _key_similarity(ctx, other, single_index)
        if key_sim > theta5:
            scored.append((key_sim, other))
    if len(scored) < 2:
        return None
    scored.sort(key=lambda pair: (-pair[0], pair[1]))
    best_single = scored[0][0]
    merged_rows = tuple(sorted(other for _, other in scored[:2]))
    other_side = "tgt" if single_side == "src" else "src"
    merged_values = " ".join(ctx.values_text(other_side, r) for r in merged_rows)
    own_text = ctx.row_text(single_side, single_index)
    merged_score = ctx.similarity(own_text, merged_values)
    if merged_score > best_single:
        return merged_rows, merged_score, best_single
    return None


def align_m5_multikey(ctx: PairContext, remaining_src: list[int],
                      remaining_tgt: list[int],
                      aligned: list[AlignmentPair],
                      theta5: float) -> tuple[list[AlignmentPair], list[AlignmentPair]]:
    """Stage M5: merge at most two rows from one side into one row of the other.

    Candidate partners for a row are the still-unaligned rows of the other
    side, plus its own 1-1 partner when it already has one; a successful merge
    that includes the partner replaces the earlier 1-1 pair.  Returns
    (new multi pairs, replaced 1-1 pairs).
    """
    partner_of_src = {p.src_rows[0]: p for p in aligned
                      if len(p.src_rows) == 1 and len(p.tgt_rows) == 1}
    partner_of_tgt = {p.tgt_rows[0]: p for p in aligned
                      if len(p.src_rows) == 1 and len(p.tgt_rows) == 1}
    free_src = set(remaining_src)
    free_tgt = set(remaining_tgt)
    multi: list[AlignmentPair] = []
    replaced: list[AlignmentPair] = []

    for s in sorted(set(remaining_src) | set(partner_of_src)):
        if s not in free_src and s not in partner_of_src:
            continue
        pool = sorted(free_tgt)
        prior = partner_of_src.get(s)
        if prior is not None:
            pool = sorted(set(pool) | {prior.tgt_rows[0]})
        found = _multi_candidates(ctx, s, "src", pool, theta5)
        if found is None:
            continue
        merged_rows, merged_score, _ = found
        if prior is not None and prior.tgt_rows[0] not in merged_rows:
            continue
        multi.append(AlignmentPair((s,), merged_rows, merged_score, "M5"))
        if prior is not None:
            replaced.append(prior)
            del partner_of_src[s]
            partner_of_tgt.pop(prior.tgt_rows[0], None)
        free_src.discard(s)
        free_tgt.difference_update(merged_rows)

    for t in sorted(set(free_tgt) | set(partner_of_tgt)):
        if t not in free_tgt and t not in partner_of_tgt:
            continue
        pool = sorted(free_src)
        prior = partner_of_tgt.get(t)
        if prior is not None:
            pool = sorted(set(pool) | {prior.src_rows[0]})
        found = _multi_candidates(ctx, t, "tgt", pool, theta5)
        if found is None:
            continue
        merged_rows, merged_score, _ = found
        if prior is not None and prior.src_rows[0] not in merged_rows:
            continue
        multi.append(AlignmentPair(merged_rows, (t,), merged_score, "M5"))
        if prior is not None:
            replaced.append(prior)
            del partner_of_tgt[t]
        free_tgt.discard(t)
        free_src.difference_update(merged_rows)

    return multi, replaced


def align_pipeline(src: Infobox, tgt: Infobox, translator: Translator,
                   embedder: Embedder, vote_map: KeyTranslationMap | None = None,
                   thresholds: ThresholdSet = DEFAULT_THRESHOLDS,
                   enabled_modules: tuple[str, ...] = MODULES) -> AlignmentResult:
    """Run the enabled stages in order over progressively remaining rows."""
    for module in enabled_modules:
        if module not in MODULES:
            raise ValidationError(f"unknown module {module!r}")
    theta = thresholds.for_pair(src.language, tgt.language)
    ctx = PairContext(src, tgt, translator, embedder, vote_map)

    pairs: list[AlignmentPair] = []
    remaining_src = list(range(len(src)))
    remaining_tgt = list(range(len(tgt)))

    def consume(new_pairs):
        for pair in new_pairs:
            for s in pair.src_rows:
                remaining_src.remove(s)
            for t in pair.tgt_rows:
                remaining_tgt.remove(t)
        pairs.extend(new_pairs)

    stage_fns = {
        "M1": lambda: align_m1_corpus(ctx, remaining_src, remaining_tgt, theta[0]),
        "M2": lambda: align_m2_key_only(ctx, remaining_src, remaining_tgt, theta[1]),
        "M3": lambda: align_m3_keyvalue_bi(ctx, remaining_src, remaining_tgt, theta[2]),
        "M4": lambda: align_m4_keyvalue_uni(ctx, remaining_src, remaining_tgt, theta[3]),
    }
    for module in MODULES[:4]:
        if module in enabled_modules:
            consume(stage_fns[module]())
    if "M5" in enabled_modules:
        multi, replaced = align_m5_multikey(
            ctx, remaining_src, remaining_tgt, pairs, theta[4]
        )
        for old in replaced:
            pairs.remove(old)
            # rows of the replaced pair not covered by the multi become free
            for s in old.src_rows:
                remaining_src.append(s)
            for t in old.tgt_rows:
                remaining_tgt.append(t)
        for pair in multi:
            for s in pair.src_rows:
                if s in remaining_src:
                    remaining_src.remove(s)
            for t in pair.tgt_rows:
                if t in remaining_tgt:
                    remaining_tgt.remove(t)
        pairs.extend(multi)

    result = AlignmentResult(
        entity_id=src.entity_id,
        lang_src=src.language,
        lang_tgt=tgt.language,
        pairs=pairs,
        unaligned_src=sorted(remaining_src),
        unaligned_tgt=sorted(remaining_tgt),
    )
    result.validate(len(src), len(tgt))
    return result


def coverage(result: AlignmentResult, src: Infobox, tgt: Infobox) -> float:
    """Share of the smaller table's rows covered: aligned source rows over
    min(|src|, |tgt|)."""
    denominator = min(len(src), len(tgt))
    if denominator == 0:
        return 0.0
    return len(result.aligned_src_rows()) / denominator


def align_many(pair_list, translator, embedder, vote_map=None,
               thresholds: ThresholdSet = DEFAULT_THRESHOLDS,
               enabled_modules: tuple[str, ...] = MODULES,
               jobs: int = 1) -> dict[tuple[str, str, str], AlignmentResult]:
    """Align many table pairs, optionally in parallel; output is keyed by
    pair id so scheduling order never shows."""

    def run(pair):
        src, tgt = pair
        return align_pipeline(src, tgt, translator, embedder, vote_map,
                              thresholds, enabled_modules)

    results: dict[tuple[str, str, str], AlignmentResult] = {}
    if jobs <= 1:
        for pair in pair_list:
            result = run(pair)
            results[result.pair_id] = result
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for result in pool.map(run, pair_list):
                results[result.pair_id] = result
    return results
