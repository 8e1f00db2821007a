"""Command-line entry point.

One binary, subcommand style.  Every run writes a manifest next to its
outputs so runs are replayable; two identical runs differ only in timings.

Exit codes: 0 success, 1 validation failure, 2 provider failure, 3 internal.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import os
import sys
import time
from pathlib import Path

from . import align as align_mod
from . import metrics as metrics_mod
from . import rules as rules_mod
from . import tuning as tuning_mod
from .corpus import (CorpusStats, bundled_language_counts, compute_stats,
                     load_corpus, save_corpus, Corpus)
from .errors import ProviderError, TableSyncError, ValidationError
from .ingest import parse_infobox_html
from .providers import (CachingEmbedder, CachingTranslator, DictionaryTranslator,
                        HashedBowEmbedder, HttpEmbedder, HttpTranslator,
                        ProviderConfig, ResponseCache, build_vote_map)
from .review import ReviewQueue
from .rules import UpdateConfig

ENV_TRANSLATE_URL = "SYNC_TRANSLATE_URL"
ENV_EMBED_URL = "SYNC_EMBED_URL"
ENV_CACHE_DIR = "SYNC_CACHE_DIR"


def make_providers():
    """Wire providers from the environment; stubs when no URLs are set."""
    cache_dir = os.environ.get(ENV_CACHE_DIR)
    translate_url = os.environ.get(ENV_TRANSLATE_URL)
    embed_url = os.environ.get(ENV_EMBED_URL)
    translator = (
        HttpTranslator(ProviderConfig(endpoint=translate_url))
        if translate_url else DictionaryTranslator()
    )
    embedder = (
        HttpEmbedder(ProviderConfig(endpoint=embed_url))
        if embed_url else HashedBowEmbedder()
    )
    if cache_dir:
        cache_root = Path(cache_dir)
        translator = CachingTranslator(
            translator, ResponseCache(cache_root / "translate.jsonl"))
        embedder = CachingEmbedder(
            embedder, ResponseCache(cache_root / "embed.jsonl"))
    return translator, embedder


def _config_hash(args: argparse.Namespace) -> str:
    """Hash of the settings that influence results (not paths or timers)."""
    skip = {"func", "out", "corpus", "input", "journal"}
    relevant = {
        k: str(v) for k, v in sorted(vars(args).items())
        if k not in skip and not k.startswith("_")
    }
    return hashlib.sha256(json.dumps(relevant).encode()).hexdigest()[:12]


def write_manifest(args, out_dir: Path, inputs, outputs, counts, started) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": args.command,
        "config_hash": _config_hash(args),
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "counts": counts,
        "started": started,
        "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "duration_s": round(time.monotonic() - args._t0, 3),
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    return path


def _load_thresholds(args) -> align_mod.ThresholdSet:
    if getattr(args, "thresholds", None):
        path = Path(args.thresholds)
        if path.exists():
            return align_mod.ThresholdSet.load(path)
        print(f"warning: thresholds file {path} not found, using tuned defaults",
              file=sys.stderr)
    return align_mod.DEFAULT_THRESHOLDS


def _load_update_config(args) -> UpdateConfig:
    if getattr(args, "config", None):
        return UpdateConfig.load(args.config)
    return UpdateConfig.bundled()


def _enabled_modules(args) -> tuple[str, ...]:
    disabled = set()
    if getattr(args, "ablate", None):
        disabled = {m.strip() for m in args.ablate.split(",") if m.strip()}
        unknown = disabled - set(align_mod.MODULES)
        if unknown:
            raise ValidationError(f"unknown modules to ablate: {sorted(unknown)}")
    return tuple(m for m in align_mod.MODULES if m not in disabled)


def _select_pairs(corpus: Corpus, pair_spec: str, entity: str | None):
    try:
        lang_a, lang_b = pair_spec.split(":")
    except ValueError:
        raise ValidationError(f"--pair must look like en:hi, got {pair_spec!r}")
    pairs = list(corpus.pairs_for(lang_a, lang_b))
    if entity:
        pairs = [(a, b) for a, b in pairs if a.entity_id == entity]
    if not pairs:
        raise ValidationError(f"no table pairs for {pair_spec} entity={entity!r}")
    return pairs


def _stats_or_bundled(corpus: Corpus | None) -> CorpusStats:
    if corpus is not None and len(corpus) > 0:
        stats = compute_stats(corpus)
        # Desk-scale corpora say nothing about real per-language volume, so
        # resource tiers fall back to the bundled census.
        merged = dict(bundled_language_counts())
        merged.update({
            lang: count for lang, count in stats.table_count.items()
            if count > merged.get(lang, 0)
        })
        stats.table_count = merged
        return stats
    return CorpusStats.from_table_counts(bundled_language_counts())


def cmd_ingest(args) -> int:
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    input_dir = Path(args.input)
    out_dir = Path(args.out)
    boxes = []
    failures = []
    date = _dt.date.fromisoformat(args.date) if args.date else None
    for path in sorted(input_dir.glob("**/*")):
        if path.suffix not in (".html", ".json"):
            continue
        try:
            if path.suffix == ".html":
                boxes.append(parse_infobox_html(path, extracted_at=date))
            else:
                from .corpus import Infobox
                boxes.append(Infobox.from_json(
                    json.loads(path.read_text(encoding="utf-8"))))
        except (TableSyncError, json.JSONDecodeError, KeyError) as exc:
            failures.append(f"{path}: {exc}")
    if failures and not args.lenient:
        for failure in failures:
            print(f"error: {failure}", file=sys.stderr)
        return 1
    corpus = Corpus(boxes)
    save_corpus(corpus, out_dir)
    report = {"ingested": len(boxes), "failed": len(failures), "failures": failures}
    (out_dir / "ingest_report.json").write_text(json.dumps(report, indent=2))
    write_manifest(args, out_dir, [input_dir], [out_dir],
                   {"tables": len(boxes), "failures": len(failures)}, started)
    print(f"ingested {len(boxes)} tables ({len(failures)} failures)")
    return 0


def cmd_align(args) -> int:
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    corpus = load_corpus(args.corpus, lenient=args.lenient)
    translator, embedder = make_providers()
    thresholds = _load_thresholds(args)
    enabled = _enabled_modules(args)
    pairs = _select_pairs(corpus, args.pair, args.entity)
    vote_map = build_vote_map(corpus, translator, min_count=args.vote_floor)
    results = align_mod.align_many(pairs, translator, embedder, vote_map,
                                   thresholds, enabled, jobs=args.jobs)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for pair_id in sorted(results):
        result = results[pair_id]
        name = f"{result.entity_id}__{result.lang_src}__{result.lang_tgt}.json"
        path = out_dir / name
        path.write_text(json.dumps(result.to_json(), indent=2, ensure_ascii=False),
                        encoding="utf-8")
        outputs.append(path)
    write_manifest(args, out_dir, [Path(args.corpus)], outputs,
                   {"pairs": len(results),
                    "alignments": sum(len(r.pairs) for r in results.values())},
                   started)
    print(f"aligned {len(results)} pairs -> {out_dir}")
    return 0


def _gold_items(corpus: Corpus, pair_spec: str | None, entity: str | None):
    items = []
    for gold in corpus.golds:
        if pair_spec:
            lang_a, lang_b = pair_spec.split(":")
            if {gold.lang_a, gold.lang_b} != {lang_a, lang_b}:
                continue
        if entity and gold.entity_id != entity:
            continue
        src = corpus.get(gold.entity_id, gold.lang_a)
        tgt = corpus.get(gold.entity_id, gold.lang_b)
        if src is None or tgt is None:
            continue
        items.append((src, tgt, gold))
    if not items:
        raise ValidationError("no gold-annotated pairs selected")
    return items


def cmd_tune(args) -> int:
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    corpus = load_corpus(args.corpus)
    translator, embedder = make_providers()
    vote_map = build_vote_map(corpus, translator, min_count=args.vote_floor)
    start, stop, step = (float(x) for x in args.grid.split(":"))
    items = [
        tuning_mod.TuningItem(src, tgt, gold, split="validation")
        for src, tgt, gold in _gold_items(corpus, args.pair, args.entity)
    ]
    tuned = tuning_mod.tune_thresholds(
        items, translator, embedder, vote_map,
        grid=tuning_mod.GridSpec(start, stop, step),
        pair_class=args.pair_class,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "thresholds.json"
    tuned.save(path)
    write_manifest(args, out_dir, [Path(args.corpus)], [path],
                   {"validation_pairs": len(items)}, started)
    print(f"tuned {args.pair_class} thresholds -> {path}")
    return 0


def cmd_eval(args) -> int:
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    corpus = load_corpus(args.corpus)
    translator, embedder = make_providers()
    thresholds = _load_thresholds(args)
    enabled = _enabled_modules(args)
    vote_map = build_vote_map(corpus, translator, min_count=args.vote_floor)
    evaluations = []
    for src, tgt, gold in _gold_items(corpus, args.pair, args.entity):
        predicted = align_mod.align_pipeline(src, tgt, translator, embedder,
                                             vote_map, thresholds, enabled)
        evaluations.append(metrics_mod.PairEvaluation(gold, predicted, src, tgt))
    rows = metrics_mod.group_report(evaluations, group_by=args.group_by)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "eval.csv"
    json_path = out_dir / "eval.json"
    metrics_mod.write_report(rows, csv_path, json_path)
    write_manifest(args, out_dir, [Path(args.corpus)], [csv_path, json_path],
                   {"pairs": len(evaluations)}, started)
    for row in rows:
        print(f"{row.group}: matched f1={row.matched.f1:.4f} "
              f"unmatched f1={row.unmatched.f1:.4f} coverage={row.coverage:.4f}")
    return 0


def cmd_propose(args) -> int:
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    corpus = load_corpus(args.corpus)
    translator, embedder = make_providers()
    thresholds = _load_thresholds(args)
    config = _load_update_config(args)
    stats = _stats_or_bundled(corpus)
    vote_map = build_vote_map(corpus, translator, min_count=args.vote_floor)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    all_proposals = []
    for src, tgt in _select_pairs(corpus, args.pair, args.entity):
        alignment = align_mod.align_pipeline(src, tgt, translator, embedder,
                                             vote_map, thresholds)
        all_proposals.extend(rules_mod.apply_rules(
            src, tgt, alignment, config, stats, translator, embedder))
    proposals_path = out_dir / "proposals.jsonl"
    with open(proposals_path, "w", encoding="utf-8") as fh:
        for proposal in all_proposals:
            fh.write(json.dumps(proposal.to_json(), ensure_ascii=False) + "\n")
    summary = {
        "rules": rules_mod.rule_counts(all_proposals),
        "proposals": len(all_proposals),
    }
    summary_path = out_dir / "rule_summary.json"
    summary_path.write_text(json.dumps(summary, indent=2), encoding="utf-8")
    write_manifest(args, out_dir, [Path(args.corpus)],
                   [proposals_path, summary_path], summary["rules"], started)
    print(json.dumps(summary["rules"]))
    return 0


def _load_proposals_file(queue: ReviewQueue, path: Path, source_url: str) -> int:
    from .rules import EditProposal

    proposals = [
        EditProposal.from_json(json.loads(line))
        for line in path.read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    return len(queue.enqueue(proposals, source_url=source_url))


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    queue = ReviewQueue(args.journal)
    if args.load:
        count = _load_proposals_file(queue, Path(args.load), args.source_url)
        print(f"enqueued {count} proposals from {args.load}")
    static = Path(args.static) if args.static else None
    app = create_app(queue, static_dir=static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_report(args) -> int:
    queue = ReviewQueue(args.journal, compact=False)
    stats = queue.stats()
    print(f"{'type':<20} {'total':>6} {'accepted':>9} {'rejected':>9} {'rate':>8}")
    for name, bucket in sorted(stats.by_type.items()):
        rate = f"{bucket['rate']:.2f}%" if bucket["rate"] is not None else "-"
        print(f"{name:<20} {bucket['total']:>6} {bucket['accepted']:>9} "
              f"{bucket['rejected']:>9} {rate:>8}")
    for name, bucket in sorted(stats.by_direction.items()):
        rate = f"{bucket['rate']:.2f}%" if bucket["rate"] is not None else "-"
        print(f"{name:<20} {bucket['total']:>6} {bucket['accepted']:>9} "
              f"{bucket['rejected']:>9} {rate:>8}")
    total = stats.total
    rate = f"{total['rate']:.2f}%" if total["rate"] is not None else "-"
    print(f"{'total':<20} {total['total']:>6} {total['accepted']:>9} "
          f"{total['rejected']:>9} {rate:>8}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tablesync",
        description="align, repair, and review multilingual infobox tables",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, corpus=True):
        if corpus:
            p.add_argument("--corpus", required=True, help="corpus directory")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--lenient", action="store_true")
        p.add_argument("--vote-floor", type=int, default=2,
                       help="min occurrences for a key to enter the vote map")

    p = sub.add_parser("ingest", help="parse saved HTML/JSON into a corpus")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--date", help="extracted_at date, YYYY-MM-DD")
    p.add_argument("--lenient", action="store_true")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("align", help="align table pairs")
    common(p)
    p.add_argument("--pair", required=True, metavar="LANG:LANG")
    p.add_argument("--entity")
    p.add_argument("--thresholds", help="thresholds JSON file")
    p.add_argument("--ablate", help="comma-separated modules to disable")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("tune", help="grid-search stage thresholds")
    common(p)
    p.add_argument("--pair", help="restrict to one language pair")
    p.add_argument("--entity")
    p.add_argument("--pair-class", default="english_involved",
                   choices=["english_involved", "non_english"])
    p.add_argument("--grid", default="0.4:1.0:0.02", metavar="START:STOP:STEP")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("eval", help="score alignments against gold")
    common(p)
    p.add_argument("--pair")
    p.add_argument("--entity")
    p.add_argument("--thresholds")
    p.add_argument("--ablate")
    p.add_argument("--group-by", default="language",
                   choices=["language", "category"])
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("propose", help="generate edit proposals")
    common(p)
    p.add_argument("--pair", required=True)
    p.add_argument("--entity")
    p.add_argument("--thresholds")
    p.add_argument("--config", help="update rules config JSON")
    p.set_defaults(func=cmd_propose)

    p = sub.add_parser("serve", help="run the review HTTP service")
    p.add_argument("--journal", required=True)
    p.add_argument("--load", help="proposals JSONL to enqueue on startup")
    p.add_argument("--source-url", default="",
                   help="entity page URL rendered into descriptions")
    p.add_argument("--static", help="review UI bundle directory")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8040)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("report", help="print acceptance statistics")
    p.add_argument("--journal", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args._t0 = time.monotonic()
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ProviderError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return 2
    except TableSyncError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
