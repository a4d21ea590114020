"""Command-line entry point wiring the pipeline stages.

Subcommands: clean, sample, annotate, evaluate, export-train, stats.
All record formats are JSON Lines.  Exit codes: 0 success, 2 configuration
or usage error, 3 I/O error.  Processing is streaming; memory is bounded by
the in-flight posting count, not the input size.
"""

from __future__ import annotations

import argparse
import fcntl
import hashlib
import json
import os
import sys
from typing import Iterator

from .annotate import AnnotationRecord, annotate_batch, record_to_jsonl
from .config import PipelineConfig
from .errors import (
    CheckpointCorrupt,
    ConfigError,
    JobSignalsError,
    SampleTooLarge,
    TooShort,
    Unsalvageable,
)
from .evaluate import (
    LabeledPair,
    evaluate_pairs,
    export_training_data,
    render_report,
    report_to_json,
)
from .ingest import (
    CleanPosting,
    Provenance,
    RawPosting,
    clean_text,
    corpus_stats,
    detect_english,
    filter_null_heavy,
    stratified_sample,
)
from .signals import Variable

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


def _read_jsonl(path: str) -> Iterator[dict]:
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise JobSignalsError(f"{path}:{line_no}: invalid JSON: {exc}") from None


def _clean_one(raw: RawPosting, seen: set[bytes], counters: dict[str, int]) -> CleanPosting | None:
    if not filter_null_heavy(raw):
        counters["null_heavy"] += 1
        return None
    if not raw.body:
        counters["empty_body"] += 1
        return None
    try:
        text, had_html = clean_text(raw.body)
    except Unsalvageable:
        counters["unsalvageable"] += 1
        return None
    if not text:
        counters["empty_body"] += 1
        return None
    try:
        is_english, score = detect_english(text)
    except TooShort:
        counters["too_short"] += 1
        return None
    if not is_english:
        counters["non_english"] += 1
        return None
    digest = hashlib.sha256(text.lower().encode("utf-8")).digest()
    if digest in seen:
        counters["duplicate"] += 1
        return None
    seen.add(digest)
    counters["kept"] += 1
    return CleanPosting(
        id=raw.id,
        text=text,
        provenance=Provenance(
            had_html=had_html, original_length=len(raw.body), language_score=score
        ),
        metadata=raw.metadata,
    )


def cmd_clean(args: argparse.Namespace) -> int:
    counters = {
        "kept": 0,
        "null_heavy": 0,
        "empty_body": 0,
        "unsalvageable": 0,
        "too_short": 0,
        "non_english": 0,
        "duplicate": 0,
    }
    seen: set[bytes] = set()
    with open(args.output, "w", encoding="utf-8") as out:
        for record in _read_jsonl(args.input):
            raw = RawPosting.from_dict(record)
            cleaned = _clean_one(raw, seen, counters)
            if cleaned is not None:
                out.write(json.dumps(cleaned.to_dict(), sort_keys=True) + "\n")
    for reason, count in counters.items():
        print(f"{reason}={count}")
    return EXIT_OK


def cmd_sample(args: argparse.Namespace) -> int:
    batch = [RawPosting.from_dict(rec) for rec in _read_jsonl(args.input)]
    sampled = stratified_sample(batch, args.stratum, args.n, args.seed)
    for record in sampled:
        print(json.dumps(record.to_dict(), sort_keys=True))
    return EXIT_OK


def _postings_stream(path: str) -> Iterator[CleanPosting]:
    for record in _read_jsonl(path):
        yield CleanPosting.from_dict(record)


def cmd_annotate(args: argparse.Namespace) -> int:
    config = PipelineConfig.load(args.config)
    out_path = args.out or config.paths.get("output")
    if not out_path:
        raise ConfigError("no output path: set paths.output in the config or pass --out")
    checkpoint = args.checkpoint or config.paths.get("checkpoint")

    lock_file = None
    if checkpoint:
        lock_file = open(checkpoint + ".lock", "w")
        try:
            fcntl.flock(lock_file, fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError:
            print(f"another run holds the checkpoint {checkpoint}", file=sys.stderr)
            return EXIT_CONFIG

    resuming = bool(checkpoint) and os.path.exists(checkpoint)
    mode = "a" if resuming else "w"
    backends = config.build_backends()
    annotation_config = config.annotation_config()
    count = 0
    try:
        with open(out_path, mode, encoding="utf-8") as out:
            for record in annotate_batch(
                _postings_stream(args.input), backends, annotation_config, checkpoint
            ):
                out.write(record_to_jsonl(record) + "\n")
                out.flush()
                count += 1
    finally:
        if lock_file is not None:
            lock_file.close()
    print(f"annotated={count}", file=sys.stderr)
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    pairs = [LabeledPair.from_dict(rec) for rec in _read_jsonl(args.pairs)]
    report = evaluate_pairs(pairs)
    print(render_report(report, averaging=args.averaging))
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as f:
            f.write(report_to_json(report) + "\n")
    return EXIT_OK


def cmd_export_train(args: argparse.Namespace) -> int:
    postings = {p.id: p for p in _postings_stream(args.postings)}
    annotated = (AnnotationRecord.from_dict(rec) for rec in _read_jsonl(args.annotations))
    variable = Variable(args.variable)
    examples, skipped = export_training_data(annotated, postings, variable)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for example in examples:
            out.write(json.dumps(example, sort_keys=True) + "\n")
    finally:
        if args.out:
            out.close()
    print(f"exported={len(examples)} skipped={skipped}", file=sys.stderr)
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    batch = []
    for record in _read_jsonl(args.input):
        if "text" in record:
            batch.append(CleanPosting.from_dict(record))
        else:
            raw = RawPosting.from_dict(record)
            batch.append(
                CleanPosting(
                    id=raw.id,
                    text=raw.body,
                    provenance=Provenance(False, len(raw.body), 0.0),
                )
            )
    stats = corpus_stats(batch)
    print(f"count={stats.count}")
    print(f"mean_chars={stats.mean_chars:.1f}")
    print(f"sd_chars={stats.sd_chars:.1f}")
    print(f"min_chars={stats.min_chars}")
    print(f"max_chars={stats.max_chars}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jobsignals",
        description="Extract structured signals from job postings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_clean = sub.add_parser("clean", help="clean, filter, and dedup raw postings")
    p_clean.add_argument("input")
    p_clean.add_argument("output")
    p_clean.set_defaults(func=cmd_clean)

    p_sample = sub.add_parser("sample", help="stratified sample to stdout")
    p_sample.add_argument("input")
    p_sample.add_argument("--n", type=int, required=True)
    p_sample.add_argument("--seed", type=int, default=0)
    p_sample.add_argument("--stratum", default="onet_code")
    p_sample.set_defaults(func=cmd_sample)

    p_annotate = sub.add_parser("annotate", help="batch annotation with checkpointing")
    p_annotate.add_argument("input")
    p_annotate.add_argument("--config", required=True)
    p_annotate.add_argument("--out", default=None)
    p_annotate.add_argument("--checkpoint", default=None)
    p_annotate.set_defaults(func=cmd_annotate)

    p_eval = sub.add_parser("evaluate", help="score predictions against ground truth")
    p_eval.add_argument("pairs")
    p_eval.add_argument("--json-out", default=None)
    p_eval.add_argument("--averaging", choices=("weighted", "macro"), default="weighted")
    p_eval.set_defaults(func=cmd_evaluate)

    p_export = sub.add_parser("export-train", help="training JSONL for one variable")
    p_export.add_argument("annotations")
    p_export.add_argument("postings")
    p_export.add_argument("--variable", required=True,
                          choices=[v.value for v in Variable])
    p_export.add_argument("--out", default=None)
    p_export.set_defaults(func=cmd_export_train)

    p_stats = sub.add_parser("stats", help="corpus character statistics")
    p_stats.add_argument("input")
    p_stats.set_defaults(func=cmd_stats)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CheckpointCorrupt, SampleTooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (OSError, JobSignalsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
