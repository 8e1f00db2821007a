"""Infobox data model, JSON corpus loading, and corpus-level statistics.

A corpus on disk is a directory with one subdirectory per language code, each
holding newline-delimited JSON files of infobox records, plus an optional
``gold/`` subdirectory of manual row alignments:

    corpus/
      en/airports.jsonl
      hi/airports.jsonl
      gold/airports.jsonl

Infobox record: ``{"entity_id": str, "language": str, "category": str,
"extracted_at": "YYYY-MM-DD", "rows": [{"key": str, "values": [str, ...]}]}``.

Gold record: ``{"entity_id": str, "lang_a": str, "lang_b": str,
"pairs": [[i, j], ...], "labels": {"i,j": "OI", ...}}``.
"""

from __future__ import annotations

import datetime as _dt
import json
import statistics
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError

LANGUAGES = frozenset(
    {"en", "fr", "de", "ko", "ru", "ar", "zh", "hi", "ceb", "es", "sv", "nl", "tr", "af"}
)

CATEGORIES = frozenset(
    {
        "Airport", "Album", "Animal", "Athlete", "Book", "City", "College",
        "Company", "Country", "Diseases", "Food", "Medicine", "Monument",
        "Movie", "Musician", "Nobel", "Painting", "Person", "Planet", "Shows",
        "Stadium",
    }
)

# Row-alignment challenge labels carried by gold annotations.
CHALLENGE_LABELS = frozenset({"MI", "OI", "IR", "UI", "LV", "SV", "EEL"})

TIER_LOW = "Low"
TIER_MEDIUM = "Medium"
TIER_HIGH = "High"


def check_language(code: str) -> str:
    if code not in LANGUAGES:
        raise ValidationError(f"unknown language code: {code!r}")
    return code


def check_category(name: str) -> str:
    """Case-normalize a category name against the closed set."""
    normalized = name.strip().title()
    if normalized not in CATEGORIES:
        raise ValidationError(f"unknown category: {name!r}")
    return normalized


@dataclass(frozen=True)
class Row:
    """One key/value-list row of an infobox."""

    key: str
    values: tuple[str, ...]
    raw: str | None = None

    def __post_init__(self):
        key = self.key.strip()
        if not key:
            raise ValidationError("row key must be non-empty")
        values = []
        seen = set()
        for v in self.values:
            v = v.strip()
            if not v:
                raise ValidationError(f"row {key!r} has an empty value")
            if v not in seen:
                seen.add(v)
                values.append(v)
        if not values:
            raise ValidationError(f"row {key!r} has no values")
        object.__setattr__(self, "key", key)
        object.__setattr__(self, "values", tuple(values))

    def to_json(self) -> dict:
        record: dict = {"key": self.key, "values": list(self.values)}
        if self.raw is not None:
            record["raw"] = self.raw
        return record

    @classmethod
    def from_json(cls, record: dict) -> "Row":
        return cls(
            key=record["key"],
            values=tuple(record["values"]),
            raw=record.get("raw"),
        )


@dataclass(frozen=True)
class Infobox:
    """One entity's table in one language.

    Row keys are not required to be unique; rows are addressed by index
    everywhere downstream.
    """

    entity_id: str
    language: str
    category: str
    rows: tuple[Row, ...]
    extracted_at: _dt.date

    def __post_init__(self):
        check_language(self.language)
        object.__setattr__(self, "category", check_category(self.category))
        if not self.rows:
            raise ValidationError(f"infobox {self.entity_id!r} has no rows")

    def __len__(self) -> int:
        return len(self.rows)

    def to_json(self) -> dict:
        return {
            "entity_id": self.entity_id,
            "language": self.language,
            "category": self.category,
            "extracted_at": self.extracted_at.isoformat(),
            "rows": [r.to_json() for r in self.rows],
        }

    @classmethod
    def from_json(cls, record: dict) -> "Infobox":
        try:
            extracted = _dt.date.fromisoformat(record["extracted_at"])
        except (KeyError, ValueError) as exc:
            raise ValidationError(f"bad extracted_at: {exc}") from exc
        try:
            rows = tuple(Row.from_json(r) for r in record["rows"])
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"bad rows: {exc}") from exc
        return cls(
            entity_id=record["entity_id"],
            language=record["language"],
            category=record["category"],
            rows=rows,
            extracted_at=extracted,
        )


@dataclass(frozen=True)
class GoldAlignment:
    """Manual row alignment for one (entity, lang_a, lang_b) table pair.

    ``labels`` maps row pairs to challenge labels.  A pair may carry several
    labels.  The sentinel index -1 marks a row-level label on an unaligned
    row, e.g. ``(3, -1)`` labels row 3 of side a.
    """

    entity_id: str
    lang_a: str
    lang_b: str
    pairs: tuple[tuple[int, int], ...]
    labels: dict[tuple[int, int], tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        check_language(self.lang_a)
        check_language(self.lang_b)
        if len(set(self.pairs)) != len(self.pairs):
            raise ValidationError(f"gold {self.entity_id!r}: duplicate pairs")
        for label_set in self.labels.values():
            for label in label_set:
                if label not in CHALLENGE_LABELS:
                    raise ValidationError(f"unknown challenge label: {label!r}")

    @property
    def pair_id(self) -> tuple[str, str, str]:
        return (self.entity_id, self.lang_a, self.lang_b)

    def to_json(self) -> dict:
        record: dict = {
            "entity_id": self.entity_id,
            "lang_a": self.lang_a,
            "lang_b": self.lang_b,
            "pairs": [list(p) for p in self.pairs],
        }
        if self.labels:
            record["labels"] = {
                f"{i},{j}": (list(ls) if len(ls) > 1 else ls[0])
                for (i, j), ls in self.labels.items()
            }
        return record

    @classmethod
    def from_json(cls, record: dict) -> "GoldAlignment":
        pairs = tuple((int(i), int(j)) for i, j in record["pairs"])
        labels: dict[tuple[int, int], tuple[str, ...]] = {}
        for key, value in (record.get("labels") or {}).items():
            i, j = (int(part) for part in key.split(","))
            labels[(i, j)] = tuple([value] if isinstance(value, str) else value)
        return cls(
            entity_id=record["entity_id"],
            lang_a=record["lang_a"],
            lang_b=record["lang_b"],
            pairs=pairs,
            labels=labels,
        )

    def validate_against(self, box_a: Infobox, box_b: Infobox) -> None:
        for i, j in self.pairs:
            if not (0 <= i < len(box_a) and 0 <= j < len(box_b)):
                raise ValidationError(
                    f"gold {self.entity_id!r}: pair ({i},{j}) out of range"
                )


class Corpus:
    """Immutable collection of infoboxes plus optional gold alignments."""

    def __init__(self, infoboxes, golds=(), errors=()):
        self._boxes: dict[tuple[str, str], Infobox] = {}
        for box in infoboxes:
            key = (box.entity_id, box.language)
            if key in self._boxes:
                raise ValidationError(f"duplicate infobox {key}")
            self._boxes[key] = box
        self._golds: dict[tuple[str, str, str], GoldAlignment] = {
            g.pair_id: g for g in golds
        }
        self.errors: tuple[str, ...] = tuple(errors)

    def __len__(self) -> int:
        return len(self._boxes)

    def __iter__(self):
        return iter(sorted(self._boxes.values(), key=lambda b: (b.entity_id, b.language)))

    def get(self, entity_id: str, language: str) -> Infobox | None:
        return self._boxes.get((entity_id, language))

    @property
    def golds(self) -> list[GoldAlignment]:
        return [self._golds[k] for k in sorted(self._golds)]

    def gold_for(self, entity_id: str, lang_a: str, lang_b: str) -> GoldAlignment | None:
        return self._golds.get((entity_id, lang_a, lang_b))

    def languages(self) -> list[str]:
        return sorted({lang for _, lang in self._boxes})

    def entities(self, language: str | None = None) -> set[str]:
        if language is None:
            return {entity for entity, _ in self._boxes}
        return {entity for entity, lang in self._boxes if lang == language}

    def pairs_for(self, lang_a: str, lang_b: str):
        """Yield (box_a, box_b) for every entity present in both languages."""
        shared = sorted(self.entities(lang_a) & self.entities(lang_b))
        for entity in shared:
            yield self._boxes[(entity, lang_a)], self._boxes[(entity, lang_b)]


def load_corpus(path: str | Path, lenient: bool = False) -> Corpus:
    """Load a corpus directory.

    In strict mode (default) the first malformed record aborts with an error
    naming its file and line.  With ``lenient=True`` bad records are skipped
    and reported in ``Corpus.errors``.
    """
    root = Path(path)
    if not root.is_dir():
        raise ValidationError(f"corpus directory not found: {root}")
    boxes: list[Infobox] = []
    golds: list[GoldAlignment] = []
    errors: list[str] = []

    def handle(message: str):
        if lenient:
            errors.append(message)
        else:
            raise ValidationError(message)

    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        is_gold = sub.name == "gold"
        if not is_gold and sub.name not in LANGUAGES:
            handle(f"{sub}: not a known language directory")
            continue
        for file in sorted(sub.glob("*.jsonl")):
            for lineno, line in enumerate(file.read_text(encoding="utf-8").splitlines(), 1):
                if not line.strip():
                    continue
                where = f"{file}:{lineno}"
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    handle(f"{where}: invalid JSON ({exc})")
                    continue
                try:
                    if is_gold:
                        golds.append(GoldAlignment.from_json(record))
                    else:
                        box = Infobox.from_json(record)
                        if box.language != sub.name:
                            raise ValidationError(
                                f"language {box.language!r} filed under {sub.name}/"
                            )
                        boxes.append(box)
                except (ValidationError, KeyError, TypeError, ValueError) as exc:
                    handle(f"{where}: {exc}")

    corpus = Corpus(boxes, golds, errors)
    for gold in corpus.golds:
        box_a = corpus.get(gold.entity_id, gold.lang_a)
        box_b = corpus.get(gold.entity_id, gold.lang_b)
        if box_a is None or box_b is None:
            handle(f"gold {gold.pair_id}: tables missing from corpus")
            continue
        try:
            gold.validate_against(box_a, box_b)
        except ValidationError as exc:
            handle(str(exc))
    corpus.errors = tuple(errors)
    return corpus


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus back out in the directory layout ``load_corpus`` reads."""
    root = Path(path)
    by_lang: dict[str, list[Infobox]] = defaultdict(list)
    for box in corpus:
        by_lang[box.language].append(box)
    for lang, boxes in by_lang.items():
        out = root / lang
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "tables.jsonl", "w", encoding="utf-8") as fh:
            for box in boxes:
                fh.write(json.dumps(box.to_json(), ensure_ascii=False) + "\n")
    if corpus.golds:
        out = root / "gold"
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "gold.jsonl", "w", encoding="utf-8") as fh:
            for gold in corpus.golds:
                fh.write(json.dumps(gold.to_json(), ensure_ascii=False) + "\n")


@dataclass
class CorpusStats:
    """Aggregate counts used by alignment voting and the update rules."""

    table_count: dict[str, int]
    avg_rows_language: dict[str, float]
    avg_rows_category: dict[str, float]
    key_frequency: dict[tuple[str, str], int]
    entity_presence: dict[str, set[str]]
    category_size_stddev: dict[str, float]

    @classmethod
    def from_table_counts(cls, counts: dict[str, int]) -> "CorpusStats":
        """Build metadata-only stats (e.g. from a bundled per-language census)."""
        for lang in counts:
            check_language(lang)
        return cls(
            table_count=dict(counts),
            avg_rows_language={},
            avg_rows_category={},
            key_frequency={},
            entity_presence={},
            category_size_stddev={},
        )

    def key_count(self, key: str) -> int:
        """Total corpus frequency of a key across categories."""
        return sum(count for (k, _), count in self.key_frequency.items() if k == key)


def compute_stats(corpus: Corpus, key_map=None) -> CorpusStats:
    """Derive corpus statistics.

    ``key_map`` optionally maps (language, category, surface key) to a
    normalized english key for frequency counting; by default keys are
    counted as they appear.
    """
    if len(corpus) == 0:
        raise ValidationError("cannot compute statistics of an empty corpus")
    table_count: Counter = Counter()
    row_totals: Counter = Counter()
    cat_tables: Counter = Counter()
    cat_rows: Counter = Counter()
    key_frequency: Counter = Counter()
    entity_presence: dict[str, set[str]] = defaultdict(set)
    # per (category, entity): row counts across languages, for size spread
    sizes: dict[tuple[str, str], list[int]] = defaultdict(list)

    for box in corpus:
        table_count[box.language] += 1
        row_totals[box.language] += len(box)
        cat_tables[box.category] += 1
        cat_rows[box.category] += len(box)
        entity_presence[box.entity_id].add(box.language)
        sizes[(box.category, box.entity_id)].append(len(box))
        for row in box.rows:
            key = key_map(box.language, box.category, row.key) if key_map else row.key
            key_frequency[(key, box.category)] += 1

    category_size_stddev: dict[str, float] = {}
    per_category: dict[str, list[float]] = defaultdict(list)
    for (category, _), counts in sizes.items():
        if len(counts) >= 2:
            per_category[category].append(statistics.stdev(counts))
    for category, devs in per_category.items():
        category_size_stddev[category] = sum(devs) / len(devs)

    return CorpusStats(
        table_count=dict(table_count),
        avg_rows_language={
            lang: row_totals[lang] / count for lang, count in table_count.items()
        },
        avg_rows_category={
            cat: cat_rows[cat] / count for cat, count in cat_tables.items()
        },
        key_frequency=dict(key_frequency),
        entity_presence={k: set(v) for k, v in entity_presence.items()},
        category_size_stddev=category_size_stddev,
    )


def resource_tier(language: str, stats: CorpusStats) -> str:
    """Classify a language by table count: <6000 Low, 6000..10000 Medium, >10000 High."""
    check_language(language)
    if language not in stats.table_count:
        raise ValidationError(f"no table count for language {language!r}")
    count = stats.table_count[language]
    if count < 6000:
        return TIER_LOW
    if count <= 10000:
        return TIER_MEDIUM
    return TIER_HIGH


def rare_keys(stats: CorpusStats, cutoff: int = 50) -> set[str]:
    """Keys whose total corpus frequency is at most ``cutoff``."""
    if cutoff <= 0:
        return set()
    totals: Counter = Counter()
    for (key, _), count in stats.key_frequency.items():
        totals[key] += count
    return {key for key, count in totals.items() if count <= cutoff}


def transfer_stats(corpus: Corpus) -> dict[str, tuple[float, float]]:
    """Per-language (outbound %, inbound %) entity-transfer averages.

    Outbound for C1: mean over other languages of the share of C1's entities
    absent there.  Inbound: mean over other languages of entities they hold
    that C1 lacks, relative to C1's own entity count.
    """
    languages = corpus.languages()
    entity_sets = {lang: corpus.entities(lang) for lang in languages}
    result: dict[str, tuple[float, float]] = {}
    for c1 in languages:
        own = entity_sets[c1]
        if not own:
            continue
        others = [lang for lang in languages if lang != c1]
        if not others:
            result[c1] = (0.0, 0.0)
            continue
        outbound = sum(len(own - entity_sets[ln]) / len(own) for ln in others)
        inbound = sum(len(entity_sets[ln] - own) / len(own) for ln in others)
        result[c1] = (100.0 * outbound / len(others), 100.0 * inbound / len(others))
    return result


def row_difference(corpus: Corpus, language: str) -> float:
    """Mean absolute row-count gap between ``language`` and each other language.

    For each other language the gap is averaged over shared entities; the
    outer mean runs over the languages that share at least one entity.
    """
    check_language(language)
    gaps: list[float] = []
    for other in corpus.languages():
        if other == language:
            continue
        shared = corpus.entities(language) & corpus.entities(other)
        if not shared:
            continue
        per_entity = [
            abs(len(corpus.get(e, language)) - len(corpus.get(e, other)))
            for e in sorted(shared)
        ]
        gaps.append(sum(per_entity) / len(per_entity))
    if not gaps:
        return 0.0
    return sum(gaps) / len(gaps)


def key_frequency_tier(frequency: int) -> str:
    """Bucket a key's corpus frequency: >100 High, 50..100 Mid, <50 Low."""
    if frequency > 100:
        return "High"
    if frequency >= 50:
        return "Mid"
    return "Low"


def bundled_language_counts() -> dict[str, int]:
    """Per-language table counts from the full-scale source corpus snapshot."""
    data = Path(__file__).parent / "data" / "language_table_counts.json"
    counts = json.loads(data.read_text(encoding="utf-8"))
    return {lang: int(n) for lang, n in counts.items()}
