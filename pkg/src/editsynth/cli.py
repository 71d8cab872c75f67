"""Command-line surface: one subcommand per pipeline stage plus run-all.

Exit codes: 0 success (possibly with warnings), 2 usage/config errors,
1 internal errors. Every command writes a manifest embedding the resolved
configuration and master seed.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from .backends import (
    API_KEY_ENV,
    ChatCompletionClient,
    DemoDialogueResponder,
    GenParams,
    MockBackend,
)
from .config import RunConfig, load_run_config, resolved_config
from .corpus import load_corpus
from .errors import ConfigError, EditSynthError
from .pipeline import (
    FORMAT_FINETUNE,
    FORMAT_TRIPLETS,
    PipelineConfig,
    dt_filter,
    export_dataset,
    load_triplets,
    mix_sources,
)
from .prompts import load_shot_pool
from .records import STYLES
from .reports import build_reports, emit_report
from .seeding import derive_rng, derive_seed
from .synthesis import synthesize_batch


def _load_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_run_config(getattr(args, "config", None))
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, master_seed=args.seed)
    return cfg


def _make_backend(kind: str, cfg: RunConfig):
    if kind == "mock":
        return MockBackend(fallback=DemoDialogueResponder())
    if kind == "remote":
        if not os.environ.get(API_KEY_ENV):
            raise ConfigError(f"remote backend requires ${API_KEY_ENV} to be set")
        if not cfg.gen.model_id:
            raise ConfigError("remote backend requires gen.model_id in the config")
        return ChatCompletionClient(
            cfg.gen.base_url,
            max_retries=cfg.gen.max_retries,
            requests_per_minute=cfg.gen.requests_per_minute,
        )
    raise ConfigError(f"unknown backend {kind!r}")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_synthesize(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    corpus = load_corpus(cfg.corpus, cfg.snippet)
    pool = load_shot_pool(cfg.prompts.shot_pool_path)
    backend = _make_backend(args.backend, cfg)
    params = GenParams(
        model_id=cfg.gen.model_id or "mock-model",
        temperature=cfg.gen.temperature,
        top_p=cfg.gen.top_p,
        max_tokens=cfg.gen.max_tokens,
    )
    result = synthesize_batch(
        corpus,
        args.pairs,
        pool,
        params,
        backend,
        cfg.snippet,
        cfg.master_seed,
        parallelism=cfg.gen.parallelism,
    )
    export_dataset(
        result.triplets,
        out / "triplets.jsonl",
        FORMAT_TRIPLETS,
        config=resolved_config(cfg),
        seed=cfg.master_seed,
        rejections_by_reason=result.discards,
        manifest_path=out / "manifest.json",
    )
    _write_json(
        out / "discards.json",
        {
            "pairs_attempted": result.pairs_attempted,
            "pairs_succeeded": result.pairs_succeeded,
            "discards_by_reason": result.discards,
        },
    )
    print(
        f"synthesized {len(result.triplets)} triplets from {result.pairs_attempted} pairs "
        f"({result.pairs_succeeded} succeeded) -> {out / 'triplets.jsonl'}"
    )
    return 0


def _min_per_style_availability(datasets) -> int:
    lows = []
    for _, triplets in datasets:
        for style in STYLES:
            lows.append(sum(1 for t in triplets if t.style == style))
    return min(lows) if lows else 0


def cmd_filter(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    flagged = 0
    datasets = []
    for input_path in args.input:
        triplets = load_triplets(input_path)
        clean = [t for t in triplets if not t.flags]
        flagged += len(triplets) - len(clean)
        datasets.append((Path(input_path).stem, clean))

    if len(datasets) > 1:
        per_source = args.per_source or cfg.pipeline.per_style_per_source
        if per_source <= 0:
            per_source = _min_per_style_availability(datasets)
        mixed = mix_sources(datasets, per_source, derive_rng(cfg.master_seed, "mix"))
    else:
        mixed = list(datasets[0][1])

    target = args.target if args.target is not None else cfg.pipeline.target_total
    pipeline_cfg = PipelineConfig(
        target_total=target,
        seed=cfg.master_seed,
        thresholds=cfg.thresholds,
        hdp=cfg.hdp,
    )
    result = dt_filter(mixed, pipeline_cfg)
    rejections = dict(result.rejections_by_reason)
    if flagged:
        rejections["flagged"] = flagged
    export_dataset(
        result.curated,
        out / "curated.jsonl",
        FORMAT_TRIPLETS,
        config=resolved_config(cfg),
        seed=cfg.master_seed,
        rejections_by_reason=rejections,
        manifest_path=out / "manifest.json",
    )
    for note in result.warnings:
        print(f"warning: {note}", file=sys.stderr)
    print(
        f"curated {len(result.curated)} of {result.input_count} triplets "
        f"{result.counts_by_style} -> {out / 'curated.jsonl'}"
    )
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    dataset = load_triplets(args.input)
    hdp_cfg = dataclasses.replace(cfg.hdp, seed=derive_seed(cfg.master_seed, "stats"))
    bundle = build_reports(dataset, hdp_cfg)
    written = emit_report(bundle, args.out)
    print(f"wrote {len(written)} report files to {args.out}")
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    triplets = load_triplets(args.input)
    flagged = sum(1 for t in triplets if t.flags)
    if flagged and not args.skip_flagged:
        raise ConfigError(
            f"{flagged} flagged record(s) in {args.input}; rerun with --skip-flagged to drop them"
        )
    clean = [t for t in triplets if not t.flags]
    fmt = FORMAT_FINETUNE if args.format == "finetune" else FORMAT_TRIPLETS
    name = "finetune.jsonl" if fmt == FORMAT_FINETUNE else "triplets.jsonl"
    export_dataset(
        clean,
        out / name,
        fmt,
        config=resolved_config(cfg),
        seed=cfg.master_seed,
        rejections_by_reason={"flagged": flagged} if flagged else {},
        manifest_path=out / "manifest.json",
    )
    if flagged:
        print(f"dropped {flagged} flagged record(s)", file=sys.stderr)
    print(f"exported {len(clean)} records -> {out / name}")
    return 0


def cmd_run_all(args: argparse.Namespace) -> int:
    out = Path(args.out)
    stages = argparse.Namespace(**vars(args))

    stages.out = out / "synthesize"
    code = cmd_synthesize(stages)
    if code:
        return code

    stages.input = [str(out / "synthesize" / "triplets.jsonl")]
    stages.out = out / "filter"
    stages.per_source = 0
    code = cmd_filter(stages)
    if code:
        return code

    stages.input = str(out / "filter" / "curated.jsonl")
    stages.out = out / "report"
    code = cmd_stats(stages)
    if code:
        return code

    stages.out = out / "export"
    stages.format = "finetune"
    stages.skip_flagged = False
    return cmd_export(stages)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="editsynth",
        description="Synthesize and curate code-edit instruction-tuning triplets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="TOML configuration file")
        p.add_argument("--seed", type=int, help="override master_seed")
        p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("synthesize", help="run the two-round generation over sampled pairs")
    common(p)
    p.add_argument("--pairs", type=int, required=True, help="number of snippet pairs")
    p.add_argument("--backend", choices=("remote", "mock"), default="remote")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("filter", help="mix sources (if several) and run DT-Filtering")
    common(p)
    p.add_argument("--input", nargs="+", required=True, help="triplet dataset file(s)")
    p.add_argument("--target", type=int, help="total curated size (default from config)")
    p.add_argument(
        "--per-source",
        dest="per_source",
        type=int,
        default=0,
        help="triplets per style per source when mixing (0 = min availability)",
    )
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("stats", help="emit corpus diagnostics for a dataset")
    common(p)
    p.add_argument("--input", required=True, help="triplet dataset file")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("export", help="serialize a dataset for fine-tuning")
    common(p)
    p.add_argument("--input", required=True, help="triplet dataset file")
    p.add_argument("--format", choices=("finetune", "triplets"), default="finetune")
    p.add_argument("--skip-flagged", action="store_true", help="drop flagged records")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("run-all", help="synthesize, filter, stats and export in one run")
    common(p)
    p.add_argument("--pairs", type=int, required=True)
    p.add_argument("--backend", choices=("remote", "mock"), default="remote")
    p.add_argument("--target", type=int, default=None)
    p.set_defaults(func=cmd_run_all)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EditSynthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
