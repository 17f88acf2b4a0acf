"""Predict edit outcomes in peer-production systems from who edits what."""

from .dataset import Dataset, chronological_split, load_observations
from .models import Predictor, load_checkpoint, save_checkpoint
from .training import TrainConfig, fit_average, sgd_fit

__all__ = [
    "Dataset",
    "Predictor",
    "TrainConfig",
    "chronological_split",
    "fit_average",
    "load_checkpoint",
    "load_observations",
    "save_checkpoint",
    "sgd_fit",
]
