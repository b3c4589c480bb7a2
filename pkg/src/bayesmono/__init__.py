"""Bayesian nonparametric test of monotonicity for fixed-design regression."""

__version__ = "0.1.0"

from .conjugate import HyperParams, PosteriorDraw, posterior_k_table
from .mono_test import TestReport, run_test
from .sampler import Chain, ChainConfig, run_chain
from .step_model import Dataset, StepFunction, discrepancy_H

__all__ = [
    "Chain",
    "ChainConfig",
    "Dataset",
    "HyperParams",
    "PosteriorDraw",
    "StepFunction",
    "TestReport",
    "discrepancy_H",
    "posterior_k_table",
    "run_chain",
    "run_test",
]
