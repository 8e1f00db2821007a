# The five-stage alignment cascade on one table pair, stage by stage.
# Each stage only sees rows the earlier stages left unaligned and relaxes
# the matching requirement a little further.

import datetime as dt

from tablesync.align import MODULES, ThresholdSet, align_pipeline, coverage
from tablesync.corpus import Infobox, Row
from tablesync.providers import (DictionaryTranslator, HashedBowEmbedder,
                                 KeyTranslationMap)


def make_box(entity, lang, rows):
    return Infobox(entity_id=entity, language=lang, category="Person",
                   rows=tuple(Row(k, tuple(v)) for k, v in rows),
                   extracted_at=dt.date(2024, 1, 1))


english = make_box("Ada", "en", [
    ("born", ["10 December 1815"]),
    ("known for", ["analytical engine notes"]),
    ("spouse", ["william king"]),
    ("fields", ["mathematics", "computing"]),
])

# A same-entity table in another language; the dictionary stub stands in for
# a machine-translation backend.
hindi = make_box("Ada", "hi", [
    ("जन्म", ["10 December 1815"]),
    ("प्रसिद्धि", ["analytical engine notes"]),
    ("जीवनसाथी", ["william king"]),
])

translator = DictionaryTranslator({
    ("hi", "en", "जन्म"): "born",
    ("hi", "en", "प्रसिद्धि"): "famous for",
    ("hi", "en", "जीवनसाथी"): "spouse",
})

# Stage 1 trusts only corpus-voted key translations; rarely-seen keys wait
# for the later, softer stages.
vote_map = KeyTranslationMap()
vote_map.add_entry("en", "Person", "born", "born")
vote_map.add_entry("hi", "Person", "जन्म", "born")

embedder = HashedBowEmbedder()
result = align_pipeline(english, hindi, translator, embedder, vote_map)

print("alignments:")
for pair in result.pairs:
    src_key = english.rows[pair.src_rows[0]].key
    tgt_keys = [hindi.rows[t].key for t in pair.tgt_rows]
    print(f"  {pair.module}: {src_key!r} -> {tgt_keys} (score {pair.score:.3f})")
print("unaligned english rows:", [english.rows[i].key for i in result.unaligned_src])
print("coverage:", coverage(result, english, hindi))

# Ablation: drop one stage and see what disappears.
for module in MODULES:
    kept = tuple(m for m in MODULES if m != module)
    without = align_pipeline(english, hindi, translator, embedder, vote_map,
                             ThresholdSet(), kept)
    print(f"without {module}: {len(without.pairs)} pairs")
