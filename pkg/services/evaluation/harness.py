# services/evaluation/harness.py

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Union

import pandas as pd

from config import MelConfig
from models.alignment import Language
from models.duration import DurationEstimate, DurationEvalRecord, EvalItem
from models.rate import Granularity
from services.alignment.manifest import read_jsonl
from services.audio.container import load_mel
from services.audio.frontend import compute_mel, load_wav, mel_duration_seconds, resample_clip
from services.duration.estimator import (
    estimate_duration,
    ground_truth_duration,
    length_ratio_duration,
)
from services.errors import ConfigError, InvalidDataset, InvalidInput
from services.evaluation.metrics import mae, mre
from services.rate.categories import build_category_set
from services.rate.estimators import BaseRateEstimator, OracleRateEstimator
from services.units.factory import UnitCounterFactory, text_length

logger = logging.getLogger(__name__)

PREDICTOR_METHODS = {
    "m1": Granularity.PHONEME,
    "m2": Granularity.SYLLABLE,
    "m3": Granularity.WORD,
}
ORACLE_METHODS = {f"oracle_{name}": g for name, g in PREDICTOR_METHODS.items()}
BASELINE_METHODS = ("length_ratio", "gt")
METHOD_IDS = tuple(PREDICTOR_METHODS) + tuple(ORACLE_METHODS) + BASELINE_METHODS

METHOD_LABELS = {
    "m1": "M1 phoneme-rate predictor",
    "m2": "M2 syllable-rate predictor",
    "m3": "M3 word-rate predictor",
    "oracle_m1": "oracle phoneme rate",
    "oracle_m2": "oracle syllable rate",
    "oracle_m3": "oracle word rate",
    "length_ratio": "text-length ratio",
    "gt": "ground truth",
}


@dataclass
class DurationReport:
    dataset: str
    rows: Dict[str, Dict[str, float]] = field(default_factory=dict)
    records: Dict[str, List[DurationEvalRecord]] = field(default_factory=dict, repr=False)

    def to_dict(self) -> Dict[str, Dict[str, float]]:
        return {method: dict(row) for method, row in self.rows.items()}


def _check_methods(
    methods: Sequence[str],
    estimators: Mapping[str, BaseRateEstimator],
    corpus: Sequence[EvalItem],
) -> None:
    for method in methods:
        if method not in METHOD_IDS:
            raise ConfigError(f"Unknown duration method: {method}", {"method": method, "known": list(METHOD_IDS)})
        if method in PREDICTOR_METHODS:
            estimator = estimators.get(method)
            if estimator is None:
                raise ConfigError(f"No rate predictor loaded for method {method}", {"method": method})
            if estimator.granularity != PREDICTOR_METHODS[method]:
                raise ConfigError(
                    f"Rate predictor for {method} has granularity {estimator.granularity.value}",
                    {"method": method},
                )
        if method == "length_ratio" and any(item.ref_text is None for item in corpus):
            raise ConfigError("length_ratio needs a reference transcript for every prompt", {"method": method})


def _estimate(
    method: str,
    item: EvalItem,
    estimators: Mapping[str, BaseRateEstimator],
    max_duration: float,
) -> DurationEstimate:
    mel_config = item.prompt_mel.config
    if method in PREDICTOR_METHODS:
        estimator = estimators[method]
        return estimate_duration(
            estimator,
            estimator.categories,
            item.prompt_mel,
            item.target_text,
            PREDICTOR_METHODS[method],
            item.lang,
            max_duration=max_duration,
        )
    if method in ORACLE_METHODS:
        granularity = ORACLE_METHODS[method]
        categories = build_category_set(granularity)
        counter = UnitCounterFactory.create(item.lang)
        true_rate = counter.count(item.target_text, granularity) / item.gt_duration
        return estimate_duration(
            OracleRateEstimator(categories, true_rate),
            categories,
            item.prompt_mel,
            item.target_text,
            granularity,
            item.lang,
            max_duration=max_duration,
            counter=counter,
        )
    if method == "length_ratio":
        prompt_duration = item.prompt_duration or mel_duration_seconds(item.prompt_mel)
        return length_ratio_duration(
            prompt_duration,
            text_length(item.ref_text, item.lang),
            text_length(item.target_text, item.lang),
            mel_config,
        )
    return ground_truth_duration(item.gt_duration, mel_config)


def run_duration_eval(
    corpus: Sequence[EvalItem],
    methods: Sequence[str],
    estimators: Optional[Mapping[str, BaseRateEstimator]] = None,
    dataset: str = "eval",
    max_duration: float = 60.0,
) -> DurationReport:
    """One (MAE, MRE, n) row per requested method, in request order."""
    if not corpus:
        raise InvalidInput("duration evaluation corpus is empty")
    estimators = estimators or {}
    _check_methods(methods, estimators, corpus)

    report = DurationReport(dataset=dataset)
    for method in methods:
        records = []
        for item in corpus:
            estimate = _estimate(method, item, estimators, max_duration)
            records.append(
                DurationEvalRecord(
                    utt_id=item.utt_id,
                    predicted_seconds=estimate.seconds,
                    ground_truth_seconds=item.gt_duration,
                    method=method,
                )
            )
        report.records[method] = records
        report.rows[method] = {"mae_s": mae(records), "mre_pct": mre(records), "n": len(records)}
        logger.info(
            f"{dataset} {method}: MAE {report.rows[method]['mae_s']:.3f}s, "
            f"MRE {report.rows[method]['mre_pct']:.3f}% over {len(records)} items"
        )
    return report


def render_report_table(reports: Sequence[DurationReport]) -> str:
    """Text table with a header per dataset and one row per method."""
    blocks = []
    for report in reports:
        frame = pd.DataFrame(
            [
                {
                    "Method": METHOD_LABELS.get(method, method),
                    "ID": method,
                    "MAE (s)": row["mae_s"],
                    "MRE (%)": row["mre_pct"],
                    "N": int(row["n"]),
                }
                for method, row in report.rows.items()
            ],
            columns=["Method", "ID", "MAE (s)", "MRE (%)", "N"],
        )
        table = frame.to_string(index=False, float_format=lambda value: f"{value:.3f}")
        blocks.append(f"== {report.dataset} ==\n{table}")
    return "\n\n".join(blocks) + "\n"


def load_eval_manifest(
    path: Union[str, Path], mel_config: Optional[MelConfig] = None
) -> List[EvalItem]:
    """
    Read evaluation items from JSON Lines:
    {"utt_id", "prompt_mel" | "prompt_audio", "target_text", "gt_duration", "lang", "ref_text"?}.
    Relative paths resolve against the manifest's directory.
    """
    path = Path(path)
    mel_config = mel_config or MelConfig()
    items = []
    for line_no, record in read_jsonl(path):
        try:
            if "prompt_mel" in record:
                prompt_mel = load_mel(path.parent / record["prompt_mel"], mel_config)
            else:
                clip = resample_clip(load_wav(path.parent / record["prompt_audio"]), mel_config.sample_rate)
                prompt_mel = compute_mel(clip, mel_config)
            items.append(
                EvalItem(
                    utt_id=str(record["utt_id"]),
                    prompt_mel=prompt_mel,
                    target_text=str(record["target_text"]),
                    gt_duration=float(record["gt_duration"]),
                    lang=Language(record.get("lang", Language.EN.value)),
                    ref_text=record.get("ref_text"),
                )
            )
        except (KeyError, ValueError, TypeError) as e:
            raise InvalidDataset(f"Bad eval manifest line {line_no} in {path}: {e}", {"line": line_no})
    logger.info(f"Loaded {len(items)} evaluation items from {path}")
    return items
