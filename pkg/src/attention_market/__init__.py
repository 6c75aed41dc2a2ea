"""Two-tier attention-market model: self-exciting platform volume (tier 1)
plus softmax share allocation across opinions (tier 2), with estimation,
simulation, holdout evaluation, elasticities, and what-if counterfactuals.
"""

from .core import (
    CountPanel,
    Dimensions,
    SignalSet,
    build_smoothed_interventions,
    kernel_convolve,
    kernel_pmf,
    smoothed_history,
)

__all__ = [
    "CountPanel",
    "Dimensions",
    "SignalSet",
    "build_smoothed_interventions",
    "kernel_convolve",
    "kernel_pmf",
    "smoothed_history",
]

__version__ = "0.1.0"
