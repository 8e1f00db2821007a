# From aligned tables to reviewed edits: run the priority rules, push the
# proposals through the review queue, decide them, and materialize only what
# a reviewer accepted.

import datetime as dt
import tempfile
from pathlib import Path

from tablesync.align import align_pipeline
from tablesync.corpus import (CorpusStats, Infobox, Row,
                              bundled_language_counts)
from tablesync.providers import DictionaryTranslator, HashedBowEmbedder
from tablesync.review import Citation, ReviewQueue
from tablesync.rules import (UpdateConfig, apply_proposals, apply_rules,
                             rule_counts, synchronize_fixpoint)


def make_box(entity, lang, rows):
    return Infobox(entity_id=entity, language=lang, category="City",
                   rows=tuple(Row(k, tuple(v)) for k, v in rows),
                   extracted_at=dt.date(2024, 1, 1))


english = make_box("Lyon", "en", [
    ("population", ["522,000 (2023 est.)"]),
    ("nicknames", ["capital of lights", "silk city"]),
    ("twin towns", ["frankfurt"]),
])
french = make_box("Lyon", "fr", [
    ("population", ["513,000 (2019)"]),
    ("nicknames", ["capital of lights"]),
])

translator = DictionaryTranslator()           # identity stub
embedder = HashedBowEmbedder()
config = UpdateConfig.bundled()
stats = CorpusStats.from_table_counts(bundled_language_counts())

alignment = align_pipeline(english, french, translator, embedder)
proposals = apply_rules(english, french, alignment, config, stats, translator)
print("rule tallies:", {r: n for r, n in rule_counts(proposals).items() if n})
for proposal in proposals:
    print(f"  {proposal.rule} {proposal.edit_type} {proposal.direction}: "
          f"{proposal.new_content}")

# Review: everything lands pending; accepting requires a citation.
journal = Path(tempfile.mkdtemp()) / "journal.jsonl"
queue = ReviewQueue(journal)
queue.enqueue(proposals, source_url="https://en.wikipedia.org/wiki/Lyon")
for record in queue.list(status="pending"):
    if record.proposal.rule == "R3":
        queue.decide(record.proposal.id, "accept", "demo-editor",
                     Citation(url="https://example.org/census-2023"))
    else:
        queue.decide(record.proposal.id, "reject", "demo-editor")

print("acceptance stats:", queue.stats().total)

accepted = queue.export_accepted()
updated_french = apply_proposals(french, accepted)
print("french population after accepted edit:", updated_french.rows[0].values)

# Fully automatic variant (no human gate): iterate until nothing changes.
final_en, final_fr, rounds = synchronize_fixpoint(
    english, french, translator, embedder, config, stats=stats)
print(f"fixpoint after {rounds} rounds; french table now has "
      f"{len(final_fr)} rows")
