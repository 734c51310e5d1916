# config.py
import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv

from services.errors import ConfigError

DATA_DIR_ENV = "XLF5_DATA_DIR"


@dataclass(frozen=True)
class MelConfig:
    sample_rate: int = 24000
    n_fft: int = 1024
    hop: int = 256
    n_mels: int = 100
    fmin: float = 0.0
    fmax: float = 12000.0
    log_floor: float = math.log(1e-5)

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ConfigError("sample_rate must be positive", asdict(self))
        if not 0 < self.hop <= self.n_fft:
            raise ConfigError("hop must satisfy 0 < hop <= n_fft", asdict(self))
        if not 0 <= self.fmin < self.fmax <= self.sample_rate / 2:
            raise ConfigError("need 0 <= fmin < fmax <= sample_rate/2", asdict(self))
        if self.n_mels <= 0:
            raise ConfigError("n_mels must be positive", asdict(self))

    @property
    def frames_per_second(self) -> float:
        return self.sample_rate / self.hop


@dataclass
class AlignmentConfig:
    min_prompt: float = 1.0
    min_target: float = 1.0
    # utterances losing more than this share of tokens count as misclassified
    max_drop_fraction: float = 0.5

    def __post_init__(self):
        if self.min_prompt < 0 or self.min_target < 0:
            raise ConfigError("boundary thresholds must be non-negative", asdict(self))
        if not 0.0 <= self.max_drop_fraction <= 1.0:
            raise ConfigError("max_drop_fraction must lie in [0, 1]", asdict(self))


@dataclass
class PredictorConfig:
    n_layers: int = 2
    n_heads: int = 4
    d_model: int = 128
    conv_kernel: int = 3
    dropout: float = 0.1
    sigma: float = 1.0
    normalize_soft_labels: bool = False
    learning_rate: float = 2.5e-4
    warmup_fraction: float = 0.15
    weight_decay: float = 0.01
    grad_clip: float = 1.0
    batch_size: int = 16
    epochs: int = 30
    crop_min_s: Optional[float] = 3.0
    crop_max_s: Optional[float] = 8.0
    balance_languages: bool = False

    def __post_init__(self):
        if self.d_model % self.n_heads != 0:
            raise ConfigError("d_model must be divisible by n_heads", asdict(self))
        if self.sigma <= 0:
            raise ConfigError("sigma must be positive", asdict(self))
        if self.conv_kernel % 2 != 1:
            raise ConfigError("conv_kernel must be odd for same-padding", asdict(self))

    @classmethod
    def desk(cls, **overrides) -> "PredictorConfig":
        return cls(**overrides)

    @classmethod
    def full(cls, **overrides) -> "PredictorConfig":
        base = dict(n_layers=6, n_heads=8, d_model=512, batch_size=64)
        return cls(**{**base, **overrides})


@dataclass
class TTSConfig:
    n_layers: int = 4
    n_heads: int = 4
    d_model: int = 192
    text_dim: int = 64
    conv_pos_kernel: int = 31
    dropout: float = 0.0
    text_drop_prob: float = 0.2
    learning_rate: float = 7.5e-4
    warmup_fraction: float = 0.0167
    weight_decay: float = 0.01
    grad_clip: float = 1.0
    batch_size: int = 4
    epochs: int = 50

    def __post_init__(self):
        if self.d_model % self.n_heads != 0:
            raise ConfigError("d_model must be divisible by n_heads", asdict(self))
        if not 0.0 <= self.text_drop_prob < 1.0:
            raise ConfigError("text_drop_prob must lie in [0, 1)", asdict(self))

    @classmethod
    def desk(cls, **overrides) -> "TTSConfig":
        return cls(**overrides)

    @classmethod
    def full(cls, **overrides) -> "TTSConfig":
        base = dict(n_layers=22, n_heads=16, d_model=1024, text_dim=512, learning_rate=7.5e-5)
        return cls(**{**base, **overrides})


@dataclass
class SamplerConfig:
    nfe: int = 32
    cfg_strength: float = 2.0
    sway: float = -1.0
    seed: int = 0

    def __post_init__(self):
        if self.nfe < 1:
            raise ConfigError("nfe must be >= 1", asdict(self))
        if abs(self.sway) > 1.0:
            raise ConfigError("sway coefficient must satisfy |s| <= 1", asdict(self))


@dataclass
class DurationConfig:
    max_duration: float = 60.0
    default_granularity: str = "syllable"

    def __post_init__(self):
        if self.max_duration <= 0:
            raise ConfigError("max_duration must be positive", asdict(self))


@dataclass
class PathsConfig:
    data_dir: Optional[str] = None
    manifest: str = "manifest.jsonl"
    prepared_dir: str = "prepared"
    out_dir: str = "runs"
    lexicon: Optional[str] = None
    pinyin_table: Optional[str] = None
    rate_phoneme: Optional[str] = None
    rate_syllable: Optional[str] = None
    rate_word: Optional[str] = None
    tts_checkpoint: Optional[str] = None
    eval_manifest: Optional[str] = None

    def root(self) -> Path:
        return Path(self.data_dir or os.getenv(DATA_DIR_ENV) or ".")

    def resolve(self, path: Optional[str]) -> Optional[Path]:
        """Resolve `path` against the data root unless it is absolute."""
        if path is None:
            return None
        candidate = Path(path)
        if candidate.is_absolute():
            return candidate
        return self.root() / candidate


@dataclass
class RunConfig:
    mel: MelConfig = field(default_factory=MelConfig)
    alignment: AlignmentConfig = field(default_factory=AlignmentConfig)
    predictor: PredictorConfig = field(default_factory=PredictorConfig)
    tts: TTSConfig = field(default_factory=TTSConfig)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    duration: DurationConfig = field(default_factory=DurationConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)
    seed: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def to_flat(self) -> Dict[str, Any]:
        flat: Dict[str, Any] = {}
        for key, value in self.to_dict().items():
            if isinstance(value, dict):
                for sub_key, sub_value in value.items():
                    flat[f"{key}.{sub_key}"] = sub_value
            else:
                flat[key] = value
        return flat

    @classmethod
    def from_flat(cls, values: Dict[str, Any]) -> "RunConfig":
        """Build a config from dotted keys (``mel.hop``) over the defaults."""
        sections = {f.name: f for f in fields(cls)}
        grouped: Dict[str, Dict[str, Any]] = {}
        top_level: Dict[str, Any] = {}
        for key, value in values.items():
            if "." in key:
                section, name = key.split(".", 1)
                if section not in sections or section == "seed":
                    raise ConfigError(f"Unknown config section: {section}", {"key": key})
                grouped.setdefault(section, {})[name] = value
            elif key == "seed":
                top_level[key] = int(value)
            else:
                raise ConfigError(f"Unknown config key: {key}", {"key": key})

        default = cls()
        kwargs: Dict[str, Any] = dict(top_level)
        for section, overrides in grouped.items():
            current = asdict(getattr(default, section))
            unknown = set(overrides) - set(current)
            if unknown:
                raise ConfigError(
                    f"Unknown keys in section {section}: {sorted(unknown)}",
                    {"section": section},
                )
            section_cls = type(getattr(default, section))
            kwargs[section] = section_cls(**{**current, **overrides})
        return cls(**{**{f: getattr(default, f) for f in sections}, **kwargs})


def load_run_config(
    path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None
) -> RunConfig:
    """
    Resolve the run configuration.

    Precedence: dataclass defaults < YAML file of dotted keys < environment
    (XLF5_DATA_DIR, only as the data root) < explicit overrides (CLI flags).
    """
    load_dotenv()
    values: Dict[str, Any] = {}
    if path is not None:
        config_path = Path(path)
        if not config_path.exists():
            raise ConfigError(f"Config file not found: {path}", {"path": str(path)})
        try:
            loaded = yaml.safe_load(config_path.read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"Invalid YAML in {path}: {e}", {"path": str(path)})
        if not isinstance(loaded, dict):
            raise ConfigError("Config file must be a mapping of dotted keys", {"path": str(path)})
        values.update(loaded)
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig.from_flat(values)


def config_hash(config: RunConfig) -> str:
    payload = json.dumps(config.to_dict(), sort_keys=True, default=str)
    return hashlib.md5(payload.encode()).hexdigest()
