"""Uncertainty estimation for generated text and code."""

__version__ = "0.1.0"

from .core import Generation, MethodId, Prompt, TokenStep, UncertaintyScore, all_methods
from .divergence import InferenceSet, perturb_inferences, sample_inferences, vr, vro
from .scoring import Estimator, ScoreRun
from .token_scores import single_inference_score

__all__ = [
    "Estimator",
    "Generation",
    "InferenceSet",
    "MethodId",
    "Prompt",
    "ScoreRun",
    "TokenStep",
    "UncertaintyScore",
    "__version__",
    "all_methods",
    "perturb_inferences",
    "sample_inferences",
    "single_inference_score",
    "vr",
    "vro",
]
