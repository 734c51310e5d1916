from .categories import (
    MAX_RATES,
    RATE_DELTA,
    build_category_set,
    category_to_rate,
    rate_to_category,
    soft_labels,
)
from .estimators import BaseRateEstimator, OracleRateEstimator, PredictorRateEstimator
from .losses import gce_logit_gradient, gce_loss, gce_loss_from_logits, soft_label_matrix
from .model import (
    AttentionPool,
    RatePredictorModel,
    attention_pool,
    build_rate_predictor,
    collate_mels,
    pool_with_scores,
    predict_proba,
    predict_rate,
)
from .trainer import (
    RateTrainingRun,
    bin_accuracy,
    load_rate_examples,
    load_rate_predictor,
    save_rate_predictor,
    train_rate_predictor,
)
