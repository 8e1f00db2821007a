"""Translation and embedding providers with a persistent response cache.

Two families ship in the box:

* deterministic stubs (dictionary translator, hashed bag-of-words embedder)
  so the whole pipeline runs offline and reproducibly;
* thin HTTP JSON clients for real machine-translation / embedding services
  (``POST /translate`` and ``POST /embed``).

Also home to the corpus-voted key-translation map consumed by the first
alignment stage and by table translation.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import requests

from .corpus import Corpus, Infobox, Row
from .errors import ProviderError, ValidationError

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    return [t.lower() for t in _TOKEN_RE.findall(text)]


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity of two embedding vectors; symmetric, 1.0 on self."""
    if a.shape != b.shape:
        raise ValidationError(f"embedding dimension mismatch: {a.shape} vs {b.shape}")
    score = float(np.dot(a, b))
    return max(-1.0, min(1.0, score))


@dataclass
class ProviderConfig:
    endpoint: str = "stub"
    cache_path: str | None = None
    timeout: float = 10.0
    retries: int = 2

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValidationError("provider timeout must be positive")


class ResponseCache:
    """Append-only JSON-lines cache keyed by request fingerprint.

    Concurrent readers are free; writes are serialized.  Replaying the file
    rebuilds the in-memory index, so a warm cache makes pipelines
    deterministic and offline.
    """

    def __init__(self, path: str | Path | None = None):
        self._path = Path(path) if path else None
        self._entries: dict[str, object] = {}
        self._lock = threading.Lock()
        if self._path and self._path.exists():
            for line in self._path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                record = json.loads(line)
                self._entries[record["k"]] = record["v"]

    @staticmethod
    def fingerprint(operation: str, **parts) -> str:
        canonical = json.dumps(
            {"op": operation, **parts}, sort_keys=True, ensure_ascii=False
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def get(self, key: str):
        return self._entries.get(key)

    def put(self, key: str, value) -> None:
        with self._lock:
            if key in self._entries:
                return
            self._entries[key] = value
            if self._path:
                self._path.parent.mkdir(parents=True, exist_ok=True)
                with open(self._path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps({"k": key, "v": value}, ensure_ascii=False) + "\n")

    def __len__(self) -> int:
        return len(self._entries)


class Translator:
    """Base translator: same-language calls are the identity."""

    def translate(self, text: str, source_lang: str, target_lang: str,
                  context: dict | None = None) -> str:
        if not text:
            raise ValidationError("cannot translate empty text")
        if source_lang == target_lang:
            return text
        result = self._translate(text, source_lang, target_lang, context or {})
        if not result:
            raise ProviderError(f"empty translation for {text!r}")
        return result

    def _translate(self, text, source_lang, target_lang, context) -> str:
        raise NotImplementedError


class DictionaryTranslator(Translator):
    """Table-lookup stub.

    ``mapping`` keys are (source_lang, target_lang, text).  Unknown entries
    either pass through unchanged (``fallback="identity"``, the default, which
    also makes this the identity stub when the mapping is empty) or raise.
    """

    def __init__(self, mapping: dict[tuple[str, str, str], str] | None = None,
                 fallback: str = "identity"):
        self.mapping = dict(mapping or {})
        if fallback not in ("identity", "error"):
            raise ValidationError(f"unknown fallback mode {fallback!r}")
        self.fallback = fallback

    def _translate(self, text, source_lang, target_lang, context):
        hit = self.mapping.get((source_lang, target_lang, text))
        if hit is not None:
            return hit
        if self.fallback == "identity":
            return text
        raise ProviderError(
            f"no dictionary entry for {text!r} ({source_lang}->{target_lang})"
        )


class HttpTranslator(Translator):
    """Client for any service speaking ``POST /translate {text,src,tgt,context}``."""

    def __init__(self, config: ProviderConfig):
        self.config = config

    def _translate(self, text, source_lang, target_lang, context):
        payload = {"text": text, "src": source_lang, "tgt": target_lang,
                   "context": context}
        body = _post_json(self.config, "/translate", payload)
        return body.get("text", "")


class Embedder:
    """Base embedder; implementations must return unit-norm vectors."""

    dimension: int = 0

    def embed(self, text: str) -> np.ndarray:
        if not text or not text.strip():
            raise ValidationError("cannot embed empty text")
        vector = self._embed(text)
        norm = float(np.linalg.norm(vector))
        if norm == 0.0:
            raise ProviderError(f"degenerate embedding for {text!r}")
        return vector / norm

    def _embed(self, text: str) -> np.ndarray:
        raise NotImplementedError


class HashedBowEmbedder(Embedder):
    """Deterministic bag-of-words stub: tokens hash to buckets, counts, L2 norm."""

    def __init__(self, dimension: int = 4096):
        self.dimension = dimension
        self._memo: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    def _bucket(self, token: str) -> int:
        digest = hashlib.sha1(token.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big") % self.dimension

    def _embed(self, text):
        with self._lock:
            hit = self._memo.get(text)
        if hit is not None:
            return hit
        vector = np.zeros(self.dimension)
        tokens = tokenize(text)
        if not tokens:
            raise ProviderError(f"no tokens in {text!r}")
        for token in tokens:
            vector[self._bucket(token)] += 1.0
        with self._lock:
            self._memo[text] = vector
        return vector


class HttpEmbedder(Embedder):
    """Client for ``POST /embed {text} -> {vector: [...]}`` services."""

    def __init__(self, config: ProviderConfig, dimension: int = 0):
        self.config = config
        self.dimension = dimension

    def _embed(self, text):
        body = _post_json(self.config, "/embed", {"text": text})
        vector = np.asarray(body.get("vector", []), dtype=float)
        if vector.size == 0:
            raise ProviderError(f"backend returned no vector for {text!r}")
        if self.dimension == 0:
            self.dimension = vector.size
        return vector


def _post_json(config: ProviderConfig, route: str, payload: dict) -> dict:
    url = config.endpoint.rstrip("/") + route
    last_error: Exception | None = None
    for _ in range(config.retries + 1):
        try:
            response = requests.post(url, json=payload, timeout=config.timeout)
            response.raise_for_status()
            return response.json()
        except (requests.RequestException, ValueError) as exc:
            last_error = exc
    raise ProviderError(f"backend unreachable at {url}: {last_error}")


class CachingTranslator(Translator):
    def __init__(self, base: Translator, cache: ResponseCache):
        self.base = base
        self.cache = cache

    def _translate(self, text, source_lang, target_lang, context):
        key = ResponseCache.fingerprint(
            "translate", text=text, src=source_lang, tgt=target_lang, context=context
        )
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        result = self.base.translate(text, source_lang, target_lang, context)
        self.cache.put(key, result)
        return result


class CachingEmbedder(Embedder):
    def __init__(self, base: Embedder, cache: ResponseCache):
        self.base = base
        self.cache = cache

    @property
    def dimension(self) -> int:  # type: ignore[override]
        return self.base.dimension

    def embed(self, text: str) -> np.ndarray:
        if not text or not text.strip():
            raise ValidationError("cannot embed empty text")
        key = ResponseCache.fingerprint("embed", text=text)
        hit = self.cache.get(key)
        if hit is not None:
            return np.asarray(hit, dtype=float)
        vector = self.base.embed(text)
        self.cache.put(key, [float(x) for x in vector])
        return vector


@dataclass
class KeyTranslationMap:
    """Majority-voted (language, category, surface key) -> english key map."""

    entries: dict[tuple[str, str, str], str] = field(default_factory=dict)
    vote_counts: dict[tuple[str, str, str], dict[str, int]] = field(default_factory=dict)

    def lookup(self, language: str, category: str, key: str) -> str | None:
        return self.entries.get((language, category, key))

    def add_entry(self, language: str, category: str, key: str,
                  english_key: str, votes: dict[str, int] | None = None):
        self.entries[(language, category, key)] = english_key
        self.vote_counts[(language, category, key)] = dict(votes or {english_key: 1})

    def __len__(self) -> int:
        return len(self.entries)


def build_vote_map(corpus: Corpus, translator: Translator,
                   min_count: int = 2) -> KeyTranslationMap:
    """Vote each frequent surface key's english translation across the corpus.

    Every occurrence of a key contributes one vote: its translation with that
    occurrence's values and the table category as context.  The plurality
    translation wins; ties break to the lexicographically smaller english key.
    Only keys with at least ``min_count`` occurrences in their (language,
    category) slot are eligible, keeping the map to the common keys the
    first alignment stage relies on.
    """
    occurrences: dict[tuple[str, str, str], list[Row]] = defaultdict(list)
    for box in corpus:
        for row in box.rows:
            occurrences[(box.language, box.category, row.key)].append(row)

    result = KeyTranslationMap()
    failures: list[str] = []
    for slot in sorted(occurrences):
        rows = occurrences[slot]
        if len(rows) < min_count:
            continue
        language, category, key = slot
        votes: Counter = Counter()
        for row in rows:
            try:
                english = translator.translate(
                    key, language, "en",
                    context={"values": list(row.values), "category": category},
                )
            except ProviderError as exc:
                failures.append(f"{slot}: {exc}")
                continue
            votes[english] += 1
        if not votes:
            continue
        top = max(votes.values())
        winner = min(k for k, v in votes.items() if v == top)
        result.add_entry(language, category, key, winner, dict(votes))
    if failures:
        raise ProviderError(
            f"vote map incomplete, {len(failures)} translation failures; "
            f"first: {failures[0]}"
        )
    return result


def translate_table(box: Infobox, translator: Translator, target_lang: str = "en",
                    vote_map: KeyTranslationMap | None = None) -> Infobox:
    """Translate a whole table, preserving row count and order.

    Keys go through the vote map when it has an entry (only meaningful for
    english targets), otherwise through the translator with the row's values
    and the category as context.  Values carry the key and category as
    context.  Errors are re-raised with the offending row index.
    """
    if box.language == target_lang:
        return box
    rows: list[Row] = []
    for index, row in enumerate(box.rows):
        try:
            key = None
            if vote_map is not None and target_lang == "en":
                key = vote_map.lookup(box.language, box.category, row.key)
            if key is None:
                key = translator.translate(
                    row.key, box.language, target_lang,
                    context={"values": list(row.values), "category": box.category},
                )
            values = tuple(
                translator.translate(
                    value, box.language, target_lang,
                    context={"key": row.key, "category": box.category},
                )
                for value in row.values
            )
            rows.append(Row(key=key, values=values, raw=row.raw))
        except (ProviderError, ValidationError) as exc:
            raise ProviderError(f"row {index}: {exc}") from exc
    return Infobox(
        entity_id=box.entity_id,
        language=target_lang,
        category=box.category,
        rows=tuple(rows),
        extracted_at=box.extracted_at,
    )
