"""Priority-ordered update rules over an aligned table pair.

Eight rules, applied by priority rank; each produces edit proposals rather
than mutations, so everything can flow through human review first:

  R1 row transfer        unaligned rows are copied to the other table
  R2 multi-match         a merged row replaces the two rows it aligns to
  R3 time-based          both rows dated, the newer value wins
  R4 trends              monotone keys (career totals etc.) move one way only
  R5 append values       extra values from the longer list are appended
  R6 resource tiers      high-resource language refreshes a low-resource one
  R7 row-count gap       the much larger table refreshes the smaller
  R8 rare keys           the table richer in rare keys refreshes the other

Substitution rules (R3, R4, R6, R7, R8) are mutually exclusive per aligned
pair: the first one to fire claims it.  R5 is independent of R6..R8 claims
but skips pairs rewritten by R3/R4.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .align import (AlignmentPair, AlignmentResult, ThresholdSet,
                    align_pipeline)
from .corpus import (CorpusStats, Infobox, Row, TIER_HIGH, TIER_LOW,
                     resource_tier)
from .errors import ConvergenceError, ValidationError
from .providers import Embedder, Translator, cosine

RULE_IDS = ("R1", "R2", "R3", "R4", "R5", "R6", "R7", "R8")

ROW_ADDITION = "RowAddition"
ROW_DELETE = "RowDelete"
VALUE_SUBSTITUTE = "ValueSubstitute"
VALUE_ADDITION = "ValueAddition"

RULE_EDIT_TYPES = {
    "R1": ROW_ADDITION,
    "R2": ROW_DELETE,
    "R3": VALUE_SUBSTITUTE,
    "R4": VALUE_SUBSTITUTE,
    "R5": VALUE_ADDITION,
    "R6": VALUE_SUBSTITUTE,
    "R7": VALUE_SUBSTITUTE,
    "R8": VALUE_SUBSTITUTE,
}


@dataclass(frozen=True)
class Timestamp:
    year: int
    month: int = 0
    day: int = 0

    def sort_key(self):
        return (self.year, self.month, self.day)

    def __gt__(self, other):
        return self.sort_key() > other.sort_key()

    def __lt__(self, other):
        return self.sort_key() < other.sort_key()


_MONTHS = {name: i + 1 for i, name in enumerate(
    ["january", "february", "march", "april", "may", "june", "july",
     "august", "september", "october", "november", "december"]
)}
_MONTH_ALT = "|".join(list(_MONTHS) + [m.capitalize() for m in _MONTHS])

_TIME_RE = re.compile(
    rf"(?P<iso>\b[12]\d{{3}}-\d{{1,2}}-\d{{1,2}}\b)"
    rf"|(?P<dmy>\b\d{{1,2}}\s+(?:{_MONTH_ALT})\s+[12]\d{{3}}\b)"
    rf"|(?P<my>\b(?:{_MONTH_ALT})\s+[12]\d{{3}}\b)"
    rf"|(?P<year>\b[12]\d{{3}}\b)"
)
_MONTH_WORD_RE = re.compile(rf"{_MONTH_ALT}")
_INT_RE = re.compile(r"\d+")


def extract_time(row: Row) -> Timestamp | None:
    """Pull the last time expression out of a row, scanning values then key.

    Recognizes ISO dates, "14 June 2021", "June 2021", and bare years
    1000..2999 (which also covers "(2021 est.)" forms).
    """
    text = " ".join(row.values) + " " + row.key
    found: Timestamp | None = None
    for match in _TIME_RE.finditer(text):
        if match.group("iso"):
            year, month, day = (int(n) for n in _INT_RE.findall(match.group("iso")))
            if not (1 <= month <= 12 and 1 <= day <= 31):
                continue
            found = Timestamp(year, month, day)
        elif match.group("dmy"):
            day, year = (int(n) for n in _INT_RE.findall(match.group("dmy")))
            month_name = _MONTH_WORD_RE.search(match.group("dmy")).group(0)
            found = Timestamp(year, _MONTHS[month_name.lower()], day)
        elif match.group("my"):
            year = int(_INT_RE.search(match.group("my")).group(0))
            month_name = _MONTH_WORD_RE.search(match.group("my")).group(0)
            found = Timestamp(year, _MONTHS[month_name.lower()])
        else:
            found = Timestamp(int(match.group("year")))
    return found


_NUMBER_RE = re.compile(r"[-+]?\d{1,3}(?:,\d{3})+(?:\.\d+)?|[-+]?\d+(?:\.\d+)?|[-+]?\.\d+")


def parse_numeric(value: str) -> float | None:
    """First numeric token of a value string, thousands separators stripped."""
    match = _NUMBER_RE.search(value)
    if match is None:
        return None
    return float(match.group(0).replace(",", ""))


@dataclass
class UpdateConfig:
    pos_trend_keys: set[str] = field(default_factory=set)
    neg_trend_keys: set[str] = field(default_factory=set)
    rare_key_set: set[str] = field(default_factory=set)
    row_gap_ratio: float = 1.5
    hr_lr_enabled: bool = True
    value_difference_threshold: float = 0.9

    def __post_init__(self):
        if self.pos_trend_keys & self.neg_trend_keys:
            raise ValidationError("a key cannot sit in both trend lists")
        if self.row_gap_ratio <= 1.0:
            raise ValidationError("row_gap_ratio must exceed 1")

    @classmethod
    def load(cls, path: str | Path) -> "UpdateConfig":
        record = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            pos_trend_keys=set(record.get("pos_trend_keys", [])),
            neg_trend_keys=set(record.get("neg_trend_keys", [])),
            rare_key_set=set(record.get("rare_keys", [])),
            row_gap_ratio=float(record.get("row_gap_ratio", 1.5)),
            hr_lr_enabled=bool(record.get("hr_lr_enabled", True)),
            value_difference_threshold=float(
                record.get("value_difference_threshold", 0.9)
            ),
        )

    @classmethod
    def bundled(cls) -> "UpdateConfig":
        return cls.load(Path(__file__).parent / "data" / "update_config.json")


@dataclass
class EditProposal:
    id: str
    rule: str
    edit_type: str
    source_lang: str
    target_lang: str
    entity_id: str
    src_row: int | None
    tgt_row: int | None
    old_content: object
    new_content: object
    evidence: dict = field(default_factory=dict)
    tgt_rows: tuple[int, ...] | None = None  # R2 only: the rows replaced

    def __post_init__(self):
        if self.rule not in RULE_IDS:
            raise ValidationError(f"unknown rule {self.rule!r}")
        if RULE_EDIT_TYPES[self.rule] != self.edit_type:
            raise ValidationError(
                f"{self.rule} cannot produce edit type {self.edit_type!r}"
            )
        if self.edit_type == ROW_ADDITION and self.tgt_row is not None:
            raise ValidationError("row additions do not reference a target row")

    @property
    def direction(self) -> str:
        return f"{self.source_lang}->{self.target_lang}"

    def to_json(self) -> dict:
        record = {
            "id": self.id,
            "rule": self.rule,
            "type": self.edit_type,
            "direction": self.direction,
            "entity_id": self.entity_id,
            "src_row": self.src_row,
            "tgt_row": self.tgt_row,
            "old": self.old_content,
            "new": self.new_content,
            "evidence": self.evidence,
        }
        if self.tgt_rows is not None:
            record["tgt_rows"] = list(self.tgt_rows)
        return record

    @classmethod
    def from_json(cls, record: dict) -> "EditProposal":
        source_lang, target_lang = record["direction"].split("->")
        return cls(
            id=record["id"],
            rule=record["rule"],
            edit_type=record["type"],
            source_lang=source_lang,
            target_lang=target_lang,
            entity_id=record["entity_id"],
            src_row=record["src_row"],
            tgt_row=record["tgt_row"],
            old_content=record["old"],
            new_content=record["new"],
            evidence=record.get("evidence", {}),
            tgt_rows=tuple(record["tgt_rows"]) if "tgt_rows" in record else None,
        )


def _proposal_id(rule, entity, source_lang, target_lang, src_row, tgt_row, new_content):
    canonical = json.dumps(
        [rule, entity, source_lang, target_lang, src_row, tgt_row, new_content],
        sort_keys=True, ensure_ascii=False,
    )
    return hashlib.sha1(canonical.encode("utf-8")).hexdigest()[:16]


def _make_proposal(rule, src_box, tgt_box, src_row, tgt_row, old, new,
                   evidence, tgt_rows=None) -> EditProposal:
    return EditProposal(
        id=_proposal_id(rule, src_box.entity_id, src_box.language,
                        tgt_box.language, src_row, tgt_row, new),
        rule=rule,
        edit_type=RULE_EDIT_TYPES[rule],
        source_lang=src_box.language,
        target_lang=tgt_box.language,
        entity_id=src_box.entity_id,
        src_row=src_row,
        tgt_row=tgt_row,
        old_content=old,
        new_content=new,
        evidence=evidence,
        tgt_rows=tgt_rows,
    )


def _translate_row(row: Row, source_lang: str, target_lang: str,
                   category: str, translator: Translator) -> dict:
    key = translator.translate(
        row.key, source_lang, target_lang,
        context={"values": list(row.values), "category": category},
    )
    values = [
        translator.translate(v, source_lang, target_lang,
                             context={"key": row.key, "category": category})
        for v in row.values
    ]
    return {"key": key, "values": values}


def _normalize(text: str) -> str:
    return " ".join(text.lower().split())


def values_differ(row_a: Row, row_b: Row, lang_a: str, lang_b: str,
                  translator: Translator, config: UpdateConfig,
                  embedder: Embedder | None = None) -> bool:
    """English translations of the two value lists disagree.

    Normalized string equality always means "same"; with an embedder,
    near-identical values (cosine at or above the configured threshold) also
    count as the same.
    """
    text_a = _normalize(" ".join(
        translator.translate(v, lang_a, "en") for v in row_a.values
    ))
    text_b = _normalize(" ".join(
        translator.translate(v, lang_b, "en") for v in row_b.values
    ))
    if text_a == text_b:
        return False
    if embedder is not None:
        similarity = cosine(embedder.embed(text_a), embedder.embed(text_b))
        if similarity >= config.value_difference_threshold:
            return False
    return True


def _one_to_one_pairs(alignment: AlignmentResult) -> list[AlignmentPair]:
    return [p for p in alignment.pairs
            if len(p.src_rows) == 1 and len(p.tgt_rows) == 1]


def rule_row_transfer(src_box: Infobox, tgt_box: Infobox,
                      alignment: AlignmentResult,
                      translator: Translator) -> list[EditProposal]:
    """R1: every unaligned row is proposed as an addition to the other table,
    in both directions."""
    proposals = []
    for index in alignment.unaligned_src:
        row = src_box.rows[index]
        translated = _translate_row(row, src_box.language, tgt_box.language,
                                    src_box.category, translator)
        proposals.append(_make_proposal(
            "R1", src_box, tgt_box, index, None, None, translated,
            {"unaligned_side": "src"},
        ))
    for index in alignment.unaligned_tgt:
        row = tgt_box.rows[index]
        translated = _translate_row(row, tgt_box.language, src_box.language,
                                    tgt_box.category, translator)
        proposals.append(_make_proposal(
            "R1", tgt_box, src_box, index, None, None, translated,
            {"unaligned_side": "tgt"},
        ))
    return proposals


def rule_multi_match(src_box: Infobox, tgt_box: Infobox,
                     alignment: AlignmentResult,
                     translator: Translator) -> list[EditProposal]:
    """R2: replace the two rows of a multi alignment with the merged row,
    translated from the single-row side."""
    proposals = []
    for pair in alignment.pairs:
        if pair.module != "M5":
            continue
        if len(pair.tgt_rows) == 2:
            single_box, multi_box = src_box, tgt_box
            single_row = src_box.rows[pair.src_rows[0]]
            single_index = pair.src_rows[0]
            multi_rows = pair.tgt_rows
        else:
            single_box, multi_box = tgt_box, src_box
            single_row = tgt_box.rows[pair.tgt_rows[0]]
            single_index = pair.tgt_rows[0]
            multi_rows = pair.src_rows
        translated = _translate_row(single_row, single_box.language,
                                    multi_box.language, single_box.category,
                                    translator)
        old = [multi_box.rows[r].to_json() for r in multi_rows]
        proposals.append(_make_proposal(
            "R2", single_box, multi_box, single_index, None, old, translated,
            {"replaces_rows": list(multi_rows)},
            tgt_rows=tuple(multi_rows),
        ))
    return proposals


def _substitute(rule, src_box, tgt_box, s, t, translator, evidence) -> EditProposal:
    src_row = src_box.rows[s]
    translated = _translate_row(src_row, src_box.language, tgt_box.language,
                                src_box.category, translator)
    return _make_proposal(
        rule, src_box, tgt_box, s, t,
        list(tgt_box.rows[t].values), translated["values"], evidence,
    )


def _english_key(row: Row, language: str, category: str,
                 translator: Translator) -> str:
    return _normalize(translator.translate(
        row.key, language, "en",
        context={"values": list(row.values), "category": category},
    ))


def rule_value_substitute(src_box: Infobox, tgt_box: Infobox,
                          alignment: AlignmentResult, config: UpdateConfig,
                          stats: CorpusStats | None, translator: Translator,
                          embedder: Embedder | None = None,
                          ) -> tuple[dict[str, list[EditProposal]], set[tuple[int, int]]]:
    """R3, R4, R6, R7, R8 over 1-1 aligned pairs, first rule claiming each.

    Returns proposals grouped by rule plus the set of claimed (src, tgt)
    index pairs whose whole value list R3/R4 rewrote.
    """
    by_rule: dict[str, list[EditProposal]] = {r: [] for r in ("R3", "R4", "R6", "R7", "R8")}
    rewritten: set[tuple[int, int]] = set()

    tier_src = tier_tgt = None
    if stats is not None and config.hr_lr_enabled:
        try:
            tier_src = resource_tier(src_box.language, stats)
            tier_tgt = resource_tier(tgt_box.language, stats)
        except ValidationError:
            tier_src = tier_tgt = None

    def rare_count(box: Infobox) -> int:
        return sum(
            1 for row in box.rows
            if _english_key(row, box.language, box.category, translator)
            in config.rare_key_set
        )

    rare_src = rare_count(src_box) if config.rare_key_set else 0
    rare_tgt = rare_count(tgt_box) if config.rare_key_set else 0

    for pair in _one_to_one_pairs(alignment):
        s, t = pair.src_rows[0], pair.tgt_rows[0]
        row_s, row_t = src_box.rows[s], tgt_box.rows[t]

        # R3: both rows dated and the source strictly newer.
        time_s, time_t = extract_time(row_s), extract_time(row_t)
        if time_s is not None and time_t is not None and time_s > time_t:
            by_rule["R3"].append(_substitute(
                "R3", src_box, tgt_box, s, t, translator,
                {"src_time": time_s.sort_key(), "tgt_time": time_t.sort_key()}))
            rewritten.add((s, t))
            continue

        # R4: trend keys move with the trend only; a source value on the
        # wrong side of the trend never produces a proposal.
        key_en = _english_key(row_s, src_box.language, src_box.category, translator)
        num_s = parse_numeric(" ".join(row_s.values))
        num_t = parse_numeric(" ".join(row_t.values))
        if num_s is not None and num_t is not None:
            src_wins = (
                (key_en in config.pos_trend_keys and num_s > num_t)
                or (key_en in config.neg_trend_keys and num_s < num_t)
            )
            if src_wins:
                trend = "pos" if key_en in config.pos_trend_keys else "neg"
                by_rule["R4"].append(_substitute(
                    "R4", src_box, tgt_box, s, t, translator,
                    {"key": key_en, "trend": trend,
                     "src_value": num_s, "tgt_value": num_t}))
                rewritten.add((s, t))
                continue

        differ = values_differ(row_s, row_t, src_box.language, tgt_box.language,
                               translator, config, embedder)
        if not differ:
            continue

        # R6: information flows from a high-resource language to a
        # low-resource one, never the other way.
        if tier_src == TIER_HIGH and tier_tgt == TIER_LOW:
            by_rule["R6"].append(_substitute(
                "R6", src_box, tgt_box, s, t, translator,
                {"src_tier": tier_src, "tgt_tier": tier_tgt}))
            continue

        # R7: a much larger table refreshes the smaller one.
        if len(src_box) >= config.row_gap_ratio * len(tgt_box):
            by_rule["R7"].append(_substitute(
                "R7", src_box, tgt_box, s, t, translator,
                {"src_rows": len(src_box), "tgt_rows": len(tgt_box),
                 "ratio": config.row_gap_ratio}))
            continue

        # R8: the side holding strictly more rare keys is likelier fresh.
        if config.rare_key_set and rare_src > rare_tgt:
            by_rule["R8"].append(_substitute(
                "R8", src_box, tgt_box, s, t, translator,
                {"src_rare_keys": rare_src, "tgt_rare_keys": rare_tgt}))

    return by_rule, rewritten


def rule_append_value(src_box: Infobox, tgt_box: Infobox,
                      alignment: AlignmentResult, translator: Translator,
                      skip: set[tuple[int, int]] = frozenset(),
                      ) -> list[EditProposal]:
    """R5: source value list strictly longer, append what the target lacks.

    Appended values keep source order.  Pairs in ``skip`` (already rewritten
    whole by R3/R4) are left alone.
    """
    proposals = []
    for pair in _one_to_one_pairs(alignment):
        s, t = pair.src_rows[0], pair.tgt_rows[0]
        if (s, t) in skip:
            continue
        row_s, row_t = src_box.rows[s], tgt_box.rows[t]
        if len(row_s.values) <= len(row_t.values):
            continue
        existing = {_normalize(v) for v in row_t.values}
        missing = []
        for value in row_s.values:
            translated = translator.translate(
                value, src_box.language, tgt_box.language,
                context={"key": row_s.key, "category": src_box.category},
            )
            if _normalize(translated) not in existing:
                missing.append(translated)
        if not missing:
            continue
        proposals.append(_make_proposal(
            "R5", src_box, tgt_box, s, t,
            list(row_t.values), missing, {"appended": len(missing)},
        ))
    return proposals


def apply_rules(src_box: Infobox, tgt_box: Infobox, alignment: AlignmentResult,
                config: UpdateConfig, stats: CorpusStats | None,
                translator: Translator,
                embedder: Embedder | None = None) -> list[EditProposal]:
    """Run every rule and concatenate proposals in priority order.

    Within a rule, proposals follow source-row order as generated.
    """
    substitutes, rewritten = rule_value_substitute(
        src_box, tgt_box, alignment, config, stats, translator, embedder
    )
    ordered: list[EditProposal] = []
    ordered += rule_row_transfer(src_box, tgt_box, alignment, translator)
    ordered += rule_multi_match(src_box, tgt_box, alignment, translator)
    ordered += substitutes["R3"]
    ordered += substitutes["R4"]
    ordered += rule_append_value(src_box, tgt_box, alignment, translator, rewritten)
    ordered += substitutes["R6"]
    ordered += substitutes["R7"]
    ordered += substitutes["R8"]
    return ordered


def rule_counts(proposals: list[EditProposal]) -> dict[str, int]:
    counts = {rule: 0 for rule in RULE_IDS}
    for proposal in proposals:
        counts[proposal.rule] += 1
    return counts


def apply_proposals(box: Infobox, proposals: list[EditProposal]) -> Infobox:
    """Materialize accepted proposals against one infobox.

    Only proposals targeting this table apply.  Additions append at the end;
    deletions run on descending indices; proposals touching overlapping rows
    conflict and abort.
    """
    mine = [p for p in proposals
            if p.target_lang == box.language and p.entity_id == box.entity_id]
    touched: set[int] = set()
    deletions: list[int] = []
    additions: list[Row] = []
    value_edits: dict[int, Row] = {}

    for proposal in mine:
        if proposal.edit_type == ROW_ADDITION:
            new = proposal.new_content
            additions.append(Row(key=new["key"], values=tuple(new["values"])))
            continue
        if proposal.edit_type == ROW_DELETE:
            rows = proposal.tgt_rows or ()
            for index in rows:
                if index in touched:
                    raise ValidationError(f"conflicting proposals touch row {index}")
                if not 0 <= index < len(box):
                    raise ValidationError(f"stale row reference {index}")
                touched.add(index)
                deletions.append(index)
            new = proposal.new_content
            additions.append(Row(key=new["key"], values=tuple(new["values"])))
            continue
        index = proposal.tgt_row
        if index is None or not 0 <= index < len(box):
            raise ValidationError(f"stale row reference {index}")
        if index in touched:
            raise ValidationError(f"conflicting proposals touch row {index}")
        touched.add(index)
        row = box.rows[index]
        if proposal.edit_type == VALUE_SUBSTITUTE:
            value_edits[index] = Row(key=row.key, values=tuple(proposal.new_content))
        elif proposal.edit_type == VALUE_ADDITION:
            value_edits[index] = Row(
                key=row.key, values=row.values + tuple(proposal.new_content)
            )
        else:
            raise ValidationError(f"unknown edit type {proposal.edit_type!r}")

    rows = [value_edits.get(i, row) for i, row in enumerate(box.rows)]
    for index in sorted(deletions, reverse=True):
        del rows[index]
    rows.extend(additions)
    return replace(box, rows=tuple(rows))


def drop_conflicting(proposals: list[EditProposal]) -> list[EditProposal]:
    """Keep the highest-priority proposal per touched target row.

    Rule R5 may legitimately co-fire with R6..R8 on one aligned pair; a human
    reviewer sees both, but automatic application must pick one.  Proposals
    arrive already in priority order, so the first to touch a row wins.
    """
    touched: set[tuple[str, int]] = set()
    kept = []
    for proposal in proposals:
        rows = []
        if proposal.tgt_rows is not None:
            rows = [(proposal.target_lang, r) for r in proposal.tgt_rows]
        elif proposal.tgt_row is not None:
            rows = [(proposal.target_lang, proposal.tgt_row)]
        if any(row in touched for row in rows):
            continue
        touched.update(rows)
        kept.append(proposal)
    return kept


MAX_SYNC_ROUNDS = 10


def synchronize_fixpoint(src_box: Infobox, tgt_box: Infobox,
                         translator: Translator, embedder: Embedder,
                         config: UpdateConfig,
                         thresholds: ThresholdSet | None = None,
                         stats: CorpusStats | None = None,
                         vote_map=None) -> tuple[Infobox, Infobox, int]:
    """Iterate align -> propose -> apply until a round emits no proposals.

    Returns the final pair and the round number that came up empty.  Caps at
    MAX_SYNC_ROUNDS rounds; hitting the cap signals oscillating rules or a
    non-idempotent translator.
    """
    thresholds = thresholds or ThresholdSet()
    for round_number in range(1, MAX_SYNC_ROUNDS + 1):
        alignment = align_pipeline(src_box, tgt_box, translator, embedder,
                                   vote_map, thresholds)
        proposals = apply_rules(src_box, tgt_box, alignment, config, stats,
                                translator, embedder)
        if not proposals:
            return src_box, tgt_box, round_number
        applicable = drop_conflicting(proposals)
        src_box = apply_proposals(src_box, applicable)
        tgt_box = apply_proposals(tgt_box, applicable)
    raise ConvergenceError(
        f"no fixpoint after {MAX_SYNC_ROUNDS} rounds for {src_box.entity_id!r}"
    )
