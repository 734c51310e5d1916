from .harness import (
    METHOD_IDS,
    ORACLE_METHODS,
    PREDICTOR_METHODS,
    DurationReport,
    load_eval_manifest,
    render_report_table,
    run_duration_eval,
)
from .metrics import mae, mre
from .plugins import BaseMetricPlugin, CommandMetricPlugin, score_with_plugins
from .synthetic import (
    build_duration_eval_corpus,
    count_onsets,
    generate_synthetic_rate_corpus,
    onset_frames,
    pulse_train_mel,
    sample_rate_specs,
)
