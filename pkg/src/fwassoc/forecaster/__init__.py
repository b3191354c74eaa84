"""Rate forecasting: windowed datasets, an LSTM model and ranking-aware losses."""
from .dataset import ForecastDataset, ForecastSample, build_dataset
from .losses import NdcgConfig, joint_loss, ndcg, nmse, smooth_ndcg, smooth_ndcg_loss, soft_permutation
from .model import CHECKPOINT_VERSION, RateForecaster

__all__ = [
    "ForecastDataset",
    "ForecastSample",
    "build_dataset",
    "NdcgConfig",
    "joint_loss",
    "ndcg",
    "nmse",
    "smooth_ndcg",
    "smooth_ndcg_loss",
    "soft_permutation",
    "RateForecaster",
    "CHECKPOINT_VERSION",
]
