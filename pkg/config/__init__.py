# import from the config.py file
from .config import (
    AlignmentConfig,
    DurationConfig,
    MelConfig,
    PathsConfig,
    PredictorConfig,
    RunConfig,
    SamplerConfig,
    TTSConfig,
    config_hash,
    load_run_config,
)
