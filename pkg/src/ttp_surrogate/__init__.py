"""Travelling thief problem solver with a surrogate-model restart filter."""

from ._backend import BACKEND
from .instance import (Evaluation, InfeasibleError, ItemFlip, ItemSwap, PackingPlan,
                       ParseError, Relocate, Tour, TtpInstance, TwoOpt, distance, evaluate,
                       evaluate_delta, format_instance, load_instance, parse_instance)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Evaluation", "InfeasibleError", "ItemFlip", "ItemSwap", "PackingPlan",
    "ParseError", "Relocate", "Tour", "TtpInstance", "TwoOpt", "distance", "evaluate",
    "evaluate_delta", "format_instance", "load_instance", "parse_instance",
]
