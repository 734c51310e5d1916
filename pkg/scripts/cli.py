# scripts/cli.py

import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional

from config import RunConfig, config_hash, load_run_config
from models.alignment import Language
from models.rate import Granularity
from services.errors import XLF5Error
from services.evaluation.harness import METHOD_IDS
from scripts.commands import (
    DURATION_METHODS,
    cmd_eval_duration,
    cmd_prepare_data,
    cmd_synthesize,
    cmd_train_rate,
    cmd_train_tts,
)

logger = logging.getLogger(__name__)

GRANULARITIES = [g.value for g in Granularity]


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="YAML file of dotted config keys")
    parser.add_argument("--seed", type=int, help="Global seed (overrides the config)")
    parser.add_argument("--data-dir", help="Root for relative paths (else $XLF5_DATA_DIR or .)")
    parser.add_argument("--out-dir", help="Directory for checkpoints, logs and reports")
    parser.add_argument("--verbose", action="store_true", help="Enable debug logging")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xlf5",
        description="Transcript-free flow-matching voice cloning with speaking-rate duration predictors.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    prepare = sub.add_parser("prepare", help="Sanitize an alignment manifest and extract mels")
    _add_common(prepare)
    prepare.add_argument("--manifest", help="Aligner JSON Lines manifest")
    prepare.add_argument("--prepared-dir", help="Output directory for prepared data")

    train_rate = sub.add_parser("train-rate", help="Train a speaking-rate predictor")
    _add_common(train_rate)
    train_rate.add_argument("--granularity", choices=GRANULARITIES, default=None)
    train_rate.add_argument("--synthetic", type=int, help="Train on N synthetic pulse-train examples")
    train_rate.add_argument("--epochs", type=int)
    train_rate.add_argument("--resume", action="store_true", help="Continue from the existing checkpoint")

    train_tts = sub.add_parser("train-tts", help="Train the infilling flow-matching model")
    _add_common(train_tts)
    train_tts.add_argument("--epochs", type=int)
    train_tts.add_argument("--resume", action="store_true", help="Continue from the existing checkpoint")

    synth = sub.add_parser("synthesize", help="Clone the prompt voice for new text")
    _add_common(synth)
    synth.add_argument("--prompt", required=True, help="Prompt WAV (no transcript needed)")
    synth.add_argument("--text", required=True, help="Text to synthesize")
    synth.add_argument("--out", required=True, help="Output WAV; .mel and .json are written alongside")
    synth.add_argument("--lang", choices=[lang.value for lang in Language], default="en")
    synth.add_argument("--duration-method", choices=DURATION_METHODS, default="m2")
    synth.add_argument("--ref-text", help="Prompt transcript, only for length_ratio")
    synth.add_argument("--duration", type=float, help="Target seconds, only for gt")
    synth.add_argument("--nfe", type=int)
    synth.add_argument("--cfg-strength", type=float)
    synth.add_argument("--sway", type=float)
    synth.add_argument("--gl-iters", type=int, default=32, help="Griffin-Lim iterations")
    synth.add_argument(
        "--metric",
        nargs=2,
        action="append",
        default=[],
        metavar=("NAME", "COMMAND"),
        help='External metric command, e.g. --metric wer "score_wer {wav} {reference}"',
    )

    evaluate = sub.add_parser("eval-duration", help="MAE/MRE of duration methods")
    _add_common(evaluate)
    evaluate.add_argument(
        "--methods", default="m1,m2,m3", help=f"Comma-separated subset of {','.join(METHOD_IDS)}"
    )
    evaluate.add_argument("--eval-manifest", help="Evaluation JSON Lines manifest")
    evaluate.add_argument("--synthetic", type=int, help="Evaluate on N synthetic prompts instead")
    evaluate.add_argument("--granularity", choices=GRANULARITIES, default=None)
    evaluate.add_argument("--dataset", help="Dataset name for the report header")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        "seed": args.seed,
        "paths.data_dir": args.data_dir,
        "paths.out_dir": args.out_dir,
        "sampler.nfe": getattr(args, "nfe", None),
        "sampler.cfg_strength": getattr(args, "cfg_strength", None),
        "sampler.sway": getattr(args, "sway", None),
    }


def _granularity(args: argparse.Namespace, config: RunConfig) -> Granularity:
    return Granularity(args.granularity or config.duration.default_granularity)


def _dispatch(args: argparse.Namespace, config: RunConfig) -> None:
    if args.command == "prepare":
        stats = cmd_prepare_data(config, args.manifest, args.prepared_dir)
        print(json.dumps(stats, sort_keys=True))
    elif args.command == "train-rate":
        path = cmd_train_rate(
            config, _granularity(args, config), args.synthetic, args.epochs, args.resume
        )
        print(f"checkpoint: {path}")
    elif args.command == "train-tts":
        print(f"checkpoint: {cmd_train_tts(config, args.epochs, args.resume)}")
    elif args.command == "synthesize":
        sidecar = cmd_synthesize(
            config,
            args.prompt,
            args.text,
            args.out,
            duration_method=args.duration_method,
            ref_text=args.ref_text,
            duration=args.duration,
            language=Language(args.lang),
            metrics=[tuple(metric) for metric in args.metric],
            gl_iters=args.gl_iters,
        )
        print(json.dumps(sidecar, sort_keys=True))
    elif args.command == "eval-duration":
        methods = [m.strip() for m in args.methods.split(",") if m.strip()]
        path = cmd_eval_duration(
            config,
            methods,
            eval_manifest=args.eval_manifest,
            synthetic=args.synthetic,
            granularity=_granularity(args, config),
            dataset=args.dataset,
        )
        print(f"report: {path}")


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns 0 on success, 2 usage, 3 data, 4 config errors."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s - %(levelname)s - %(message)s",
    )
    try:
        config = load_run_config(args.config, _overrides(args))
        resolved = {"config_hash": config_hash(config), "config": config.to_flat()}
        print(json.dumps(resolved, sort_keys=True, default=str))
        _dispatch(args, config)
    except XLF5Error as e:
        logger.error(f"{type(e).__name__}: {e} {e.details if e.details else ''}".rstrip())
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
