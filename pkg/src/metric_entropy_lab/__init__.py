"""Kernel regression and classification on finite metric spaces of curves."""

from .divergences import DiscreteMeasure, hellinger_sq, kl, tv
from .entropy import (
    EntropyEnvelope,
    EntropyProfile,
    covering_number_exact,
    entropy_profile,
    fit_gamma,
    greedy_net,
    lemma1_check,
    packing_number_exact,
    small_ball,
)
from .estimators import (
    RegressionTuning,
    bayes_classify,
    nw_estimate,
    plugin_classify,
    select_bandwidth,
    select_ridge,
)
from .metric_core import MetricSpec, PointSet, SampledFunction, distance, distance_matrix

__version__ = "0.1.0"

__all__ = [
    "DiscreteMeasure",
    "EntropyEnvelope",
    "EntropyProfile",
    "MetricSpec",
    "PointSet",
    "RegressionTuning",
    "SampledFunction",
    "bayes_classify",
    "covering_number_exact",
    "distance",
    "distance_matrix",
    "entropy_profile",
    "fit_gamma",
    "greedy_net",
    "hellinger_sq",
    "kl",
    "lemma1_check",
    "nw_estimate",
    "packing_number_exact",
    "plugin_classify",
    "select_bandwidth",
    "select_ridge",
    "small_ball",
    "tv",
]
