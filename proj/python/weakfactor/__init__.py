"""PCA estimation and inference for weak latent factor models."""

from ._core import *  # noqa: F401,F403
from ._core import DegenerateError, FactorFit, SimScenario, TestReport, ThresholdRule

__version__ = "0.1.0"
