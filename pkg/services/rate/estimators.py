# services/rate/estimators.py

from abc import ABC, abstractmethod

from models.audio import MelSpectrogram
from models.rate import Granularity, RateCategorySet
from services.rate.categories import category_to_rate, rate_to_category
from services.rate.model import RatePredictorModel, predict_rate


class BaseRateEstimator(ABC):
    """Anything that maps a prompt mel to a speaking rate on a category grid."""

    categories: RateCategorySet

    @property
    def granularity(self) -> Granularity:
        return self.categories.granularity

    @abstractmethod
    def predict_rate(self, mel: MelSpectrogram) -> float:
        pass


class PredictorRateEstimator(BaseRateEstimator):
    def __init__(self, model: RatePredictorModel):
        self.model = model
        self.categories = model.categories

    def predict_rate(self, mel: MelSpectrogram) -> float:
        return predict_rate(self.model, mel, self.categories)


class OracleRateEstimator(BaseRateEstimator):
    """Returns the true rate snapped to the grid, whatever the prompt."""

    def __init__(self, categories: RateCategorySet, true_rate: float):
        self.categories = categories
        self.true_rate = true_rate
        self.rate = category_to_rate(rate_to_category(true_rate, categories), categories)

    def predict_rate(self, mel: MelSpectrogram) -> float:
        return self.rate
