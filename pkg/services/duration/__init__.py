from .estimator import (
    RATE_METHODS,
    estimate_duration,
    ground_truth_duration,
    length_ratio_duration,
    to_frames,
)
