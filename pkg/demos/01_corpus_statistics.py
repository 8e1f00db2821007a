# Build a toy corpus in memory and walk through the statistics that feed
# alignment voting and the update rules: table counts, average rows,
# resource tiers, key frequencies, and entity-transfer percentages.

import datetime as dt

from tablesync.corpus import (Corpus, CorpusStats, Infobox, Row,
                              bundled_language_counts, compute_stats,
                              rare_keys, resource_tier, row_difference,
                              transfer_stats)


def make_box(entity, lang, keys, category="City"):
    rows = tuple(Row(key, (f"value of {key}",)) for key in keys)
    return Infobox(entity_id=entity, language=lang, category=category,
                   rows=rows, extracted_at=dt.date(2024, 1, 1))


corpus = Corpus([
    make_box("Lyon", "en", ["population", "mayor", "area", "founded"]),
    make_box("Lyon", "fr", ["population", "mayor"]),
    make_box("Lyon", "hi", ["population", "mayor", "area"]),
    make_box("Turin", "en", ["population", "area"]),
    make_box("Turin", "fr", ["population", "area", "river"]),
])

stats = compute_stats(corpus)
print("tables per language:", stats.table_count)
print("average rows per language:", stats.avg_rows_language)
print("key frequency (population):", stats.key_count("population"))
print("rare keys at cutoff 1:", sorted(rare_keys(stats, cutoff=1)))

# Entity transfer: how much of each language's content is missing elsewhere.
for lang, (outbound, inbound) in sorted(transfer_stats(corpus).items()):
    print(f"{lang}: {outbound:.1f}% transferable out, {inbound:.1f}% receivable in")

print("row-count gap for en:", row_difference(corpus, "en"))

# Resource tiers come from full-scale table counts; the bundled census covers
# all fourteen languages so tiers work even on desk-sized corpora.
census = CorpusStats.from_table_counts(bundled_language_counts())
for lang in ("en", "fr", "ru", "hi", "af"):
    print(f"{lang}: {census.table_count[lang]} tables -> {resource_tier(lang, census)}")
