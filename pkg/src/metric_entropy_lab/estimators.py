"""Truncated Nadaraya-Watson regression and the plug-in / Bayes classifiers.

The kernel is fixed to the indicator of [0, 1): a training point contributes to
the estimate at ``x`` iff ``rho(x, X_j) < h``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .entropy import EntropyEnvelope
from .errors import DomainError
from .metric_core import MetricSpec, PointSet, SampledFunction

__all__ = [
    "RegressionTuning",
    "select_bandwidth",
    "select_ridge",
    "max_admissible_d",
    "nw_from_distances",
    "nw_estimate",
    "plugin_from_distances",
    "plugin_classify",
    "bayes_classify",
]


def select_bandwidth(n: int, gamma: float, d: float) -> float:
    """Deterministic bandwidth ``h = (d log n) ** (-1 / gamma)``."""
    if n <= 1:
        raise DomainError(f"bandwidth selector needs n >= 2 (log n > 0), got n={n}")
    if not (gamma > 0 and d > 0):
        raise DomainError("gamma and d must be positive")
    return (d * math.log(n)) ** (-1.0 / gamma)


def select_ridge(n: int, eta: float) -> float:
    """Ridge threshold ``delta_n = n ** -eta`` with ``eta`` in (0, 1/2)."""
    if not (0.0 < eta < 0.5):
        raise DomainError(f"eta must lie in the open interval (0, 1/2), got {eta}")
    if n < 1:
        raise DomainError("n must be at least 1")
    return float(n) ** (-eta)


def max_admissible_d(eta: float, envelope: EntropyEnvelope) -> float:
    """Upper end of the admissible range ``d < eta / (c_high 4**gamma)``."""
    return eta / (envelope.c_high * 4.0**envelope.gamma)


@dataclass(frozen=True)
class RegressionTuning:
    h: float
    delta_n: float
    eta: float
    d: float
    gamma: float

    def __post_init__(self):
        if not self.h > 0:
            raise DomainError("bandwidth h must be positive")
        if not (0.0 < self.delta_n <= 1.0):
            raise DomainError("ridge delta_n must lie in (0, 1]")
        if not (0.0 < self.eta < 0.5):
            raise DomainError(f"eta must lie in the open interval (0, 1/2), got {self.eta}")
        if not (self.d > 0 and self.gamma > 0):
            raise DomainError("d and gamma must be positive")

    @classmethod
    def for_sample_size(
        cls,
        n: int,
        gamma: float,
        d: float,
        eta: float,
        envelope: EntropyEnvelope | None = None,
    ) -> "RegressionTuning":
        """Apply both selectors; warn (do not fail) if ``d`` is outside the admissible range."""
        if envelope is not None:
            bound = max_admissible_d(eta, envelope)
            if not d < bound:
                warnings.warn(
                    f"d={d:g} is not below eta / (c_high 4^gamma) = {bound:.4g}",
                    RuntimeWarning,
                    stacklevel=2,
                )
        return cls(
            h=select_bandwidth(n, gamma, d),
            delta_n=select_ridge(n, eta),
            eta=eta,
            d=d,
            gamma=gamma,
        )


def nw_from_distances(dist: np.ndarray, y: np.ndarray, h: float, delta_n: float):
    """Vectorised estimator from a ``(queries, n)`` distance matrix.

    Returns ``(estimates, b_hat)``.  Where ``b_hat > delta_n`` the estimate is
    the average of the in-ball responses (correctly rounded sum), else 0.
    """
    dist = np.atleast_2d(np.asarray(dist, dtype=float))
    y = np.asarray(y, dtype=float)
    n = y.size
    if dist.shape[1] != n:
        raise DomainError("distance matrix does not match the number of responses")
    if n == 0:
        raise DomainError("empty training sample")
    inside = dist < h
    count = inside.sum(axis=1)
    b_hat = count / n
    est = np.zeros(dist.shape[0])
    active = b_hat > delta_n
    for q in np.nonzero(active)[0]:
        est[q] = math.fsum(y[inside[q]]) / count[q]
    return est, b_hat


def _train_distances(train_x, x: SampledFunction, metric: MetricSpec) -> np.ndarray:
    if isinstance(train_x, PointSet):
        ps = train_x if train_x.metric == metric else train_x.with_metric(metric)
    else:
        ps = PointSet.from_functions(train_x, metric)
    return ps.distances_to(x)


def nw_estimate(
    train_x: PointSet | Sequence[SampledFunction],
    train_y,
    x: SampledFunction,
    tuning: RegressionTuning,
    metric: MetricSpec,
) -> float:
    """Truncated Nadaraya-Watson estimate at ``x``.

    ``B = #{j : rho(x, X_j) < h} / n``; the estimate is the average response of
    the in-ball points when ``B > delta_n`` and 0 otherwise.
    """
    d = _train_distances(train_x, x, metric)
    est, _ = nw_from_distances(d[None, :], train_y, tuning.h, tuning.delta_n)
    return float(est[0])


def plugin_from_distances(dist: np.ndarray, w: np.ndarray, h: float):
    """Vectorised plug-in classifier from a ``(queries, n)`` distance matrix.

    Returns ``(labels, p_hat_x, p_hat_y)``.  The decision compares the two
    empirical ball frequencies exactly (integer cross-multiplication) and
    assigns group 0 on ties.  An empty group has frequency 0.
    """
    dist = np.atleast_2d(np.asarray(dist, dtype=float))
    w = np.asarray(w).astype(np.int64)
    inside = dist < h
    n1 = int(w.sum())
    n0 = w.size - n1
    c0 = inside[:, w == 0].sum(axis=1).astype(np.int64)
    c1 = inside[:, w == 1].sum(axis=1).astype(np.int64)
    p0 = c0 / n0 if n0 else np.zeros(dist.shape[0])
    p1 = c1 / n1 if n1 else np.zeros(dist.shape[0])
    if n0 and n1:
        label0 = c0 * n1 >= c1 * n0
    elif n0:
        label0 = np.ones(dist.shape[0], dtype=bool)  # p1 == 0 <= p0
    elif n1:
        label0 = c1 == 0
    else:
        raise DomainError("empty training sample")
    return np.where(label0, 0, 1).astype(np.int8), p0, p1


def plugin_classify(train_z, train_w, z: SampledFunction, h: float, metric: MetricSpec) -> int:
    """Group 0 iff the group-0 ball frequency at ``z`` is at least the group-1 one."""
    if not h > 0:
        raise DomainError("h must be positive")
    d = _train_distances(train_z, z, metric)
    labels, _, _ = plugin_from_distances(d[None, :], train_w, h)
    return int(labels[0])


def bayes_classify(px_value: float) -> int:
    """Oracle rule: group 0 iff ``p_X(z) >= 1/2``."""
    if not (0.0 <= px_value <= 1.0):
        raise DomainError(f"p_X value must lie in [0, 1], got {px_value}")
    return 0 if px_value >= 0.5 else 1
