"""Evaluation of set-valued forecasts: prediction intervals and Vorob'ev quantiles."""

from .dist_core import (
    Dirac,
    GridDensity,
    Mixture,
    Normal,
    QuantileSet,
    Uniform,
    cdf,
    cdf_left,
    is_pseudo_increasing,
    mixture,
    prob_closed_interval,
    quantile_set,
)
from .interval_family import (
    Interval,
    IntervalFamily,
    ShortestIntervals,
    d_alpha,
    gamma_alpha,
    prediction_family,
    shortest_intervals,
)
from .interval_scores import PointMeasure, elementary_score, exhaustive_score, normalized_score, v_selective

__version__ = "0.1.0"
