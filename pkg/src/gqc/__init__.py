"""Guided quantum compression: an autoencoder and a simulated variational
quantum classifier trained jointly, with two-step and classical baselines."""

from .estimators import ClassicalClassifier, GQCClassifier, TwoStepClassifier
from .vqc import VqcConfig

__all__ = ["ClassicalClassifier", "GQCClassifier", "TwoStepClassifier", "VqcConfig"]
__version__ = "0.1.0"
