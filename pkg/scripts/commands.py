# scripts/commands.py

import logging
import shlex
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from config import RunConfig, config_hash
from models.alignment import AlignedUtterance, Language
from models.audio import MelSpectrogram
from models.duration import DurationEstimate
from models.rate import Granularity
from services.alignment.manifest import parse_manifest, write_manifest
from services.alignment.sanitize import is_misclassified, sanitize_tokens
from services.audio.container import load_mel, save_mel
from services.audio.frontend import (
    compute_mel,
    griffin_lim_invert,
    load_wav,
    mel_duration_seconds,
    resample_clip,
    save_wav,
)
from services.duration.estimator import (
    estimate_duration,
    ground_truth_duration,
    length_ratio_duration,
)
from services.errors import ConfigError, EmptyAfterSanitize, InvalidInput, UsageError
from services.evaluation.harness import (
    PREDICTOR_METHODS,
    load_eval_manifest,
    render_report_table,
    run_duration_eval,
)
from services.evaluation.plugins import CommandMetricPlugin, score_with_plugins
from services.evaluation.synthetic import (
    build_duration_eval_corpus,
    generate_synthetic_rate_corpus,
    sample_rate_specs,
)
from services.infill.synthesis import synthesize
from services.infill.trainer import InfillCorpus, load_tts, save_tts, train_tts
from services.rate.estimators import PredictorRateEstimator
from services.rate.trainer import (
    RateTrainingRun,
    bin_accuracy,
    load_rate_examples,
    load_rate_predictor,
    save_rate_predictor,
    train_rate_predictor,
)
from services.units.base import BaseUnitCounter
from services.units.factory import UnitCounterFactory, text_length, utterance_rate
from services.units.lexicon import load_cmudict_lexicon, load_lexicon, load_pinyin_table
from utils.logging_utils import RunLogger

logger = logging.getLogger(__name__)

DURATION_METHODS = ("m1", "m2", "m3", "length_ratio", "gt")
MEL_DIR = "mels"
CMUDICT_LEXICON = "cmudict"
SYNTHETIC_HELDOUT_FRACTION = 0.2


def _out_dir(config: RunConfig, out_dir: Optional[str]) -> Path:
    return config.paths.resolve(out_dir or config.paths.out_dir)


def _prepared_dir(config: RunConfig) -> Path:
    return config.paths.resolve(config.paths.prepared_dir)


def _rate_checkpoint(config: RunConfig, granularity: Granularity, out_dir: Path) -> Path:
    configured = getattr(config.paths, f"rate_{granularity.value}")
    return config.paths.resolve(configured) if configured else out_dir / f"rate_{granularity.value}.ckpt"


def _tts_checkpoint(config: RunConfig, out_dir: Path) -> Path:
    configured = config.paths.tts_checkpoint
    return config.paths.resolve(configured) if configured else out_dir / "tts.ckpt"


def _unit_counters(config: RunConfig) -> Dict[Language, BaseUnitCounter]:
    pinyin_path = config.paths.resolve(config.paths.pinyin_table)
    if config.paths.lexicon == CMUDICT_LEXICON:
        lexicon = load_cmudict_lexicon()
    elif config.paths.lexicon:
        lexicon = load_lexicon(config.paths.resolve(config.paths.lexicon))
    else:
        lexicon = None
    pinyin = load_pinyin_table(pinyin_path) if pinyin_path else None
    return {lang: UnitCounterFactory.create(lang, lexicon, pinyin) for lang in Language}


def _prompt_mel(config: RunConfig, wav_path: Path) -> MelSpectrogram:
    clip = resample_clip(load_wav(wav_path), config.mel.sample_rate)
    return compute_mel(clip, config.mel)


def _audio_path(utt: AlignedUtterance, manifest_path: Path) -> Path:
    path = Path(utt.audio_path)
    return path if path.is_absolute() else manifest_path.parent / path


def cmd_prepare_data(
    config: RunConfig, manifest: Optional[str] = None, out_dir: Optional[str] = None
) -> Dict[str, int]:
    """
    Sanitize the aligner manifest, drop unusable utterances, and write mels,
    the sanitized manifest, per-granularity rate manifests and stats.
    """
    manifest_path = config.paths.resolve(manifest or config.paths.manifest)
    prepared = config.paths.resolve(out_dir) if out_dir else _prepared_dir(config)
    with RunLogger(str(prepared), "prepare") as run:
        digest = config_hash(config)
        run.log_config(config.to_dict(), digest)
        counters = _unit_counters(config)

        issues: List = []
        utterances = parse_manifest(manifest_path, skip_invalid=True, issues=issues)
        stats = {"kept": 0, "dropped_tokens": 0, "dropped_utts": len(issues)}
        kept_records: List[Dict[str, Any]] = []
        rate_records: Dict[Granularity, List[Dict[str, Any]]] = {g: [] for g in Granularity}

        for utt in utterances:
            try:
                sanitized = sanitize_tokens(utt)
            except EmptyAfterSanitize:
                logger.warning(f"Dropping {utt.utt_id}: no usable tokens")
                stats["dropped_tokens"] += len(utt.tokens)
                stats["dropped_utts"] += 1
                continue
            stats["dropped_tokens"] += len(utt.tokens) - len(sanitized.tokens)
            if is_misclassified(utt, sanitized, config.alignment.max_drop_fraction):
                logger.warning(f"Dropping {utt.utt_id}: too many anomalous tokens for its language tag")
                stats["dropped_utts"] += 1
                continue
            try:
                mel = _prompt_mel(config, _audio_path(utt, manifest_path))
            except InvalidInput as e:
                logger.warning(f"Dropping {utt.utt_id}: {e}")
                stats["dropped_utts"] += 1
                continue

            mel_name = f"{MEL_DIR}/{utt.utt_id}.mel"
            save_mel(prepared / mel_name, mel)
            kept_records.append({**sanitized.to_record(), "mel": mel_name})
            for granularity in Granularity:
                rate_records[granularity].append(
                    {
                        "utt_id": utt.utt_id,
                        "mel": mel_name,
                        "lang": utt.language.value,
                        "granularity": granularity.value,
                        "rate": utterance_rate(sanitized, granularity, counters[utt.language]),
                    }
                )
            stats["kept"] += 1

        write_manifest(prepared / "manifest.jsonl", kept_records)
        for granularity, records in rate_records.items():
            write_manifest(prepared / f"rate_{granularity.value}.jsonl", records)
        run.log_stats({**stats, "config_hash": digest})
    return stats


def cmd_train_rate(
    config: RunConfig,
    granularity: Granularity,
    synthetic: Optional[int] = None,
    epochs: Optional[int] = None,
    resume: bool = False,
    out_dir: Optional[str] = None,
) -> Path:
    """Train one rate predictor on prepared data or on a synthetic pulse-train corpus."""
    granularity = Granularity(granularity)
    target_dir = _out_dir(config, out_dir)
    with RunLogger(str(target_dir), f"train_rate_{granularity.value}") as run:
        digest = config_hash(config)
        run.log_config(config.to_dict(), digest)

        heldout = []
        if synthetic:
            n_heldout = max(1, int(round(synthetic * SYNTHETIC_HELDOUT_FRACTION)))
            specs = sample_rate_specs(synthetic + n_heldout, seed=config.seed)
            corpus = generate_synthetic_rate_corpus(specs, config.seed, granularity, config.mel)
            examples, heldout = corpus[:synthetic], corpus[synthetic:]
        else:
            manifest = _prepared_dir(config) / f"rate_{granularity.value}.jsonl"
            if not manifest.is_file():
                raise ConfigError(
                    f"Prepared rate manifest missing: {manifest}; run prepare first",
                    {"path": str(manifest)},
                )
            examples = load_rate_examples(manifest, config.mel)

        checkpoint = _rate_checkpoint(config, granularity, target_dir)
        previous: Optional[RateTrainingRun] = None
        if resume:
            previous = load_rate_predictor(checkpoint, config.mel, with_optimizer=True)

        result = train_rate_predictor(examples, config.predictor, epochs, config.seed, previous)
        save_rate_predictor(checkpoint, result, {"config_hash": digest})
        run.save_loss_curve(f"rate_{granularity.value}_losses.json", result.losses, digest, result.step)
        if heldout:
            accuracy = bin_accuracy(result.model, heldout, tolerance=1)
            run.log_stats(
                {"heldout": len(heldout), "within_1_bin": accuracy, "config_hash": digest},
                f"rate_{granularity.value}_heldout.json",
            )
    return checkpoint


def cmd_train_tts(
    config: RunConfig,
    epochs: Optional[int] = None,
    resume: bool = False,
    out_dir: Optional[str] = None,
) -> Path:
    target_dir = _out_dir(config, out_dir)
    with RunLogger(str(target_dir), "train_tts") as run:
        digest = config_hash(config)
        run.log_config(config.to_dict(), digest)

        prepared = _prepared_dir(config)
        manifest = prepared / "manifest.jsonl"
        if not manifest.is_file():
            raise ConfigError(
                f"Prepared manifest missing: {manifest}; run prepare first", {"path": str(manifest)}
            )
        utterances = parse_manifest(manifest)
        items = [
            (utt, load_mel(prepared / MEL_DIR / f"{utt.utt_id}.mel", config.mel)) for utt in utterances
        ]

        checkpoint = _tts_checkpoint(config, target_dir)
        previous = load_tts(checkpoint, config.mel, with_optimizer=True) if resume else None
        corpus = InfillCorpus(items, previous.vocab if previous else None, config.alignment)
        result = train_tts(corpus, config.tts, epochs=epochs, seed=config.seed, resume=previous)
        save_tts(checkpoint, result, {"config_hash": digest})
        run.save_loss_curve("tts_losses.json", result.losses, digest, result.step)
    return checkpoint


def resolve_duration(
    config: RunConfig,
    method: str,
    prompt_mel: MelSpectrogram,
    text: str,
    language: Language,
    ref_text: Optional[str] = None,
    duration: Optional[float] = None,
    out_dir: Optional[Path] = None,
) -> DurationEstimate:
    """Duration for `text` by one of m1/m2/m3/length_ratio/gt."""
    if method not in DURATION_METHODS:
        raise UsageError(f"Unknown duration method {method!r}", {"choices": list(DURATION_METHODS)})
    if method == "length_ratio":
        if not ref_text:
            raise UsageError("--duration-method length_ratio needs --ref-text (the prompt transcript)")
        return length_ratio_duration(
            mel_duration_seconds(prompt_mel),
            text_length(ref_text, language),
            text_length(text, language),
            config.mel,
        )
    if method == "gt":
        if duration is None:
            raise UsageError("--duration-method gt needs --duration")
        return ground_truth_duration(duration, config.mel)

    granularity = PREDICTOR_METHODS[method]
    checkpoint = _rate_checkpoint(config, granularity, out_dir or _out_dir(config, None))
    if not checkpoint.is_file():
        raise ConfigError(f"Missing {method} rate predictor checkpoint: {checkpoint}", {"method": method})
    model = load_rate_predictor(checkpoint, config.mel).model
    return estimate_duration(
        model,
        model.categories,
        prompt_mel,
        text,
        granularity,
        language,
        max_duration=config.duration.max_duration,
        counter=_unit_counters(config)[language],
    )


def cmd_synthesize(
    config: RunConfig,
    prompt_wav: str,
    text: str,
    out_wav: str,
    duration_method: str = "m2",
    ref_text: Optional[str] = None,
    duration: Optional[float] = None,
    language: Language = Language.EN,
    metrics: Sequence[Tuple[str, str]] = (),
    gl_iters: int = 32,
) -> Dict[str, Any]:
    """
    Synthesize `text` in the prompt's voice. Writes the WAV, the generated
    mel next to it and a JSON sidecar describing the duration decision.
    """
    out_path = config.paths.resolve(out_wav)
    prompt_mel = _prompt_mel(config, config.paths.resolve(prompt_wav))
    estimate = resolve_duration(
        config, duration_method, prompt_mel, text, Language(language), ref_text, duration
    )
    logger.info(
        f"Duration {estimate.seconds:.3f}s ({estimate.frames} frames) by {estimate.method.value}"
    )

    tts = load_tts(_tts_checkpoint(config, _out_dir(config, None)), config.mel)
    mel = synthesize(tts.model, tts.vocab, prompt_mel, text, estimate.seconds, config.sampler)
    save_mel(out_path.with_suffix(".mel"), mel)
    save_wav(out_path, griffin_lim_invert(mel, iters=gl_iters, seed=config.sampler.seed))

    plugins = [CommandMetricPlugin(name, shlex.split(command)) for name, command in metrics]
    sidecar = {
        "duration_s": estimate.seconds,
        "frames": mel.n_frames,
        "predicted_rate": estimate.predicted_rate,
        "unit_count": estimate.unit_count,
        "method": estimate.method.value,
        "config_hash": config_hash(config),
        "metrics": score_with_plugins(plugins, out_path, text),
    }
    with RunLogger(str(out_path.parent), "synthesize") as run:
        run.save_json(out_path.with_suffix(".json").name, sidecar)
    return sidecar


def cmd_eval_duration(
    config: RunConfig,
    methods: Sequence[str],
    eval_manifest: Optional[str] = None,
    synthetic: Optional[int] = None,
    granularity: Granularity = Granularity.SYLLABLE,
    dataset: Optional[str] = None,
    out_dir: Optional[str] = None,
) -> Path:
    """Score duration methods on an eval manifest or a synthetic corpus and write the report."""
    target_dir = _out_dir(config, out_dir)
    with RunLogger(str(target_dir), "eval_duration") as run:
        digest = config_hash(config)
        run.log_config(config.to_dict(), digest)

        if synthetic:
            specs = sample_rate_specs(synthetic, seed=config.seed + 1)
            examples = generate_synthetic_rate_corpus(specs, config.seed + 1, granularity, config.mel)
            corpus = build_duration_eval_corpus(examples, seed=config.seed)
            dataset = dataset or f"synthetic-{Granularity(granularity).value}"
        else:
            manifest = config.paths.resolve(eval_manifest or config.paths.eval_manifest)
            if manifest is None:
                raise ConfigError("No evaluation manifest configured (paths.eval_manifest or --eval-manifest)")
            corpus = load_eval_manifest(manifest, config.mel)
            dataset = dataset or manifest.stem

        estimators = {}
        for method in methods:
            if method in PREDICTOR_METHODS:
                checkpoint = _rate_checkpoint(config, PREDICTOR_METHODS[method], target_dir)
                if not checkpoint.is_file():
                    raise ConfigError(
                        f"Missing {method} rate predictor checkpoint: {checkpoint}", {"method": method}
                    )
                model = load_rate_predictor(checkpoint, config.mel).model
                estimators[method] = PredictorRateEstimator(model)

        report = run_duration_eval(
            corpus, list(methods), estimators, dataset, max_duration=config.duration.max_duration
        )
        report_path = Path(run.save_json("duration_report.json", report.to_dict()))
        table = render_report_table([report])
        (target_dir / "duration_report.txt").write_text(f"config {digest}\n{table}", encoding="utf-8")
        print(table)
    return report_path
