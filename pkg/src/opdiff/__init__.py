"""Synchronous majority opinion diffusion on directed networks."""

from .dynamics import (Converged, Cycles, Undetermined, complement, guarantee_search, is_stable,
                       opinion_change, run, synchronous_update, verify_bound)
from .netcore import SocialNetwork, analyze, build_network, predict_convergence

__version__ = "0.1.0"

__all__ = [
    "Converged", "Cycles", "Undetermined", "SocialNetwork", "analyze", "build_network",
    "complement", "guarantee_search", "is_stable", "opinion_change", "predict_convergence",
    "run", "synchronous_update", "verify_bound",
]
