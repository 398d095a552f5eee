from .base import (
    CAP_FORCED,
    CAP_LOGPROBS,
    CAP_SEEDED,
    CAP_TOPK,
    Generator,
    pick_token,
    temperature_scale,
)
from .cache import CachedGenerator, cache_key, cached
from .http import OpenAICompletionsGenerator
from .mock import MockModel, coin_model, two_class_dataset, two_class_model

__all__ = [
    "CAP_FORCED",
    "CAP_LOGPROBS",
    "CAP_SEEDED",
    "CAP_TOPK",
    "CachedGenerator",
    "Generator",
    "MockModel",
    "OpenAICompletionsGenerator",
    "cache_key",
    "cached",
    "coin_model",
    "pick_token",
    "temperature_scale",
    "two_class_dataset",
    "two_class_model",
]
