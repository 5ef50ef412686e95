"""Monte Carlo risk estimation on finite designs, proof-bound evaluation, rate fits.

Randomness enters only through the training samples.  Expectations over the
design (integrated risk) and over the group measures (misclassification
probabilities) are computed exactly by enumerating the finite supports.

Replication ``r`` of an experiment with master seed ``s`` uses the generator
``numpy.random.default_rng([s, r])``, so every replication can be recomputed on
its own and parallel runs reproduce sequential ones bit for bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .divergences import DiscreteMeasure
from .entropy import entropy_profile, envelope_at_gamma, small_ball_profile
from .errors import DomainError, InsufficientDataError
from .estimators import RegressionTuning, bayes_classify, max_admissible_d, plugin_from_distances
from .models import (
    ClassificationInstance,
    RegressionInstance,
    SmoothnessSpec,
    draw_classification_sample,
    draw_regression_sample,
)

__all__ = [
    "replication_rng",
    "RiskEstimate",
    "RiskRow",
    "RiskReport",
    "RXCondition",
    "RXReport",
    "RiskBound",
    "RateFit",
    "integrated_sq_risk",
    "pointwise_risk",
    "regression_errors",
    "smallball_tail",
    "theorem2_bound",
    "excess_risk",
    "exact_excess",
    "bayes_labels",
    "rx_membership",
    "admissible_d",
    "rate_fit",
    "risk_report",
]


def replication_rng(seed: int, rep: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(rep)])


@dataclass(frozen=True)
class RiskEstimate:
    mean: float
    se: float
    values: np.ndarray = field(repr=False)

    @classmethod
    def from_values(cls, values) -> "RiskEstimate":
        values = np.asarray(values, dtype=float)
        if values.size < 2:
            raise DomainError("need at least two replications for a standard error")
        return cls(float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size)), values)


def _map_reps(fn, reps: int, threads: int) -> np.ndarray:
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            vals = list(pool.map(fn, range(reps)))
    else:
        vals = [fn(r) for r in range(reps)]
    return np.asarray(vals, dtype=float)


# ---------------------------------------------------------------- regression


def _fit_on_targets(
    d_pool: np.ndarray, targets: np.ndarray, x: np.ndarray, y: np.ndarray, tuning: RegressionTuning
) -> np.ndarray:
    """Estimator evaluated at pool points ``targets`` from a sample on pool indices."""
    n = x.size
    uniq, inv = np.unique(x, return_inverse=True)
    counts = np.bincount(inv).astype(float)
    ysum = np.bincount(inv, weights=y)
    inside = (d_pool[np.ix_(targets, uniq)] < tuning.h).astype(float)
    k = inside @ counts
    s = inside @ ysum
    est = np.zeros(targets.size)
    active = k / n > tuning.delta_n
    est[active] = s[active] / k[active]
    return est


def regression_errors(
    inst: RegressionInstance, tuning: RegressionTuning, n: int, rng: np.random.Generator, targets=None
) -> np.ndarray:
    """Squared errors of one fitted estimator at ``targets`` (default: design support)."""
    targets = inst.design.support if targets is None else np.asarray(targets, dtype=int)
    sample = draw_regression_sample(inst, n, rng)
    est = _fit_on_targets(inst.points.distances(), targets, sample.x, sample.y, tuning)
    return (est - inst.g_values[targets]) ** 2


def integrated_sq_risk(
    inst: RegressionInstance,
    tuning_rule: Callable[[int], RegressionTuning],
    n: int,
    reps: int,
    seed: int = 0,
    threads: int = 1,
) -> RiskEstimate:
    """Design-weighted squared risk, averaged over ``reps`` training samples."""
    if reps < 2:
        raise DomainError("reps must be at least 2")
    tuning = tuning_rule(n)
    w = inst.design.weights

    def one(r):
        err = regression_errors(inst, tuning, n, replication_rng(seed, r))
        return math.fsum(w * err)

    return RiskEstimate.from_values(_map_reps(one, reps, threads))


def pointwise_risk(
    inst: RegressionInstance,
    tuning_rule: Callable[[int], RegressionTuning],
    x: int,
    n: int,
    reps: int,
    seed: int = 0,
    threads: int = 1,
) -> RiskEstimate:
    """Squared risk at a single pool point ``x``."""
    if reps < 2:
        raise DomainError("reps must be at least 2")
    tuning = tuning_rule(n)
    target = np.array([int(x)])

    def one(r):
        return float(regression_errors(inst, tuning, n, replication_rng(seed, r), target)[0])

    return RiskEstimate.from_values(_map_reps(one, reps, threads))


def smallball_tail(design: DiscreteMeasure, h: float, delta_n: float) -> float:
    """Design mass of the support points whose ``h``-ball has mass ``<= 2 delta_n``."""
    prof = small_ball_profile(design, h)
    return math.fsum(design.weights[prof.psi <= 2.0 * delta_n])


@dataclass(frozen=True)
class RiskBound:
    total: float
    bias: float
    variance: float
    tail: float


def theorem2_bound(
    tuning: RegressionTuning, n: int, spec: SmoothnessSpec, c_v: float, smallball_tail: float
) -> RiskBound:
    """Three-term upper bound on the integrated risk.

    ``2 C^2 h^(2 beta) + (2 c_v + C^2) / (n delta_n^2) + C^2 * tail`` where
    ``tail`` is the design probability that the small-ball mass at ``X`` is at
    most ``2 delta_n``.
    """
    if not (0.0 <= smallball_tail <= 1.0):
        raise DomainError("smallball_tail must be a probability")
    C2 = spec.C**2
    bias = 2.0 * C2 * tuning.h ** (2.0 * spec.beta)
    variance = (2.0 * c_v + C2) / (n * tuning.delta_n**2)
    tail = C2 * smallball_tail
    return RiskBound(bias + variance + tail, bias, variance, tail)


# ---------------------------------------------------------------- classification


def exact_excess(inst: ClassificationInstance, labels: np.ndarray) -> float:
    """Excess risk of a fixed labelling of the pool, by exact enumeration.

    ``P_X[label = 1] + P_Y[label = 0] - 1 + TV(P_X, P_Y)``.
    """
    labels = np.asarray(labels)
    err = math.fsum(inst.px_dense[labels == 1]) + math.fsum(inst.py_dense[labels == 0])
    return err - 1.0 + inst.tv


def bayes_labels(inst: ClassificationInstance) -> np.ndarray:
    labels = np.zeros(len(inst.points), dtype=np.int8)
    for z in inst.joint_support:
        labels[z] = bayes_classify(float(inst.p_x[z]))
    return labels


def plugin_labels(inst: ClassificationInstance, sample, h: float) -> np.ndarray:
    """Trained plug-in classifier evaluated on every point of the joint support."""
    labels = np.zeros(len(inst.points), dtype=np.int8)
    js = inst.joint_support
    d = inst.points.distances()[np.ix_(js, sample.z)]
    lab, _, _ = plugin_from_distances(d, sample.w, h)
    labels[js] = lab
    return labels


def excess_risk(
    inst: ClassificationInstance,
    h_rule: Callable[[int], float],
    n: int,
    reps: int,
    seed: int = 0,
    threads: int = 1,
) -> RiskEstimate:
    """Excess risk of the plug-in classifier, exact in the test point."""
    if reps < 2:
        raise DomainError("reps must be at least 2")
    h = h_rule(n)

    def one(r):
        sample = draw_classification_sample(inst, n, replication_rng(seed, r))
        return exact_excess(inst, plugin_labels(inst, sample, h))

    return RiskEstimate.from_values(_map_reps(one, reps, threads))


# ---------------------------------------------------------------- R_X condition


@dataclass(frozen=True)
class RXCondition:
    c_low3: float
    c_low4: float
    gamma: float

    def __post_init__(self):
        if not (self.c_low3 > 0 and self.c_low4 > 0 and self.gamma > 0):
            raise DomainError("R_X constants must be positive")

    def lower(self, delta: float) -> float:
        return self.c_low3 * delta * math.exp(-self.c_low4 * delta ** (-self.gamma))


@dataclass(frozen=True)
class RXReport:
    passed: bool
    worst_margin: float
    worst_point: int
    worst_delta: float


def rx_membership(P: DiscreteMeasure, cond: RXCondition, deltas: Sequence[float]) -> RXReport:
    """Check ``P(B(y, delta)) >= c3 delta exp(-c4 delta^-gamma)`` on the whole support."""
    deltas = [float(x) for x in deltas]
    if not deltas or any(not (0.0 < x < 1.0) for x in deltas):
        raise DomainError("deltas must be a nonempty subset of (0, 1)")
    worst = (math.inf, -1, math.nan)
    for delta in deltas:
        psi = small_ball_profile(P, delta).psi
        margin = psi - cond.lower(delta)
        k = int(np.argmin(margin))
        if margin[k] < worst[0]:
            worst = (float(margin[k]), int(P.support[k]), delta)
    return RXReport(worst[0] >= 0.0, worst[0], worst[1], worst[2])


# ---------------------------------------------------------------- reports


@dataclass(frozen=True)
class RiskRow:
    n: int
    estimate: float
    se: float
    h: float
    delta_n: float
    reps: int


@dataclass
class RiskReport:
    rows: list[RiskRow]
    seed: int
    task: str = "regress"

    @property
    def n_values(self) -> list[int]:
        return [r.n for r in self.rows]


def admissible_d(
    points,
    gamma: float,
    eta: float,
    window: Sequence[float],
    fraction: float = 0.9,
    n_radii: int = 12,
) -> float:
    """A fraction of the largest amplitude ``d`` allowed by the entropy envelope of ``points``.

    The envelope is taken at the supplied ``gamma`` from a greedy (upper)
    profile on ``n_radii`` geometric radii spanning ``window``.
    """
    if not 0 < fraction < 1:
        raise DomainError("fraction must lie in (0, 1)")
    lo, hi = float(window[0]), float(window[1])
    radii = np.geomspace(hi, lo, n_radii)
    prof = entropy_profile(points, radii, intrinsic=True)
    env = envelope_at_gamma(prof, (lo, hi), gamma)
    return fraction * max_admissible_d(eta, env)


def risk_report(
    task: str,
    instance,
    n_list: Sequence[int],
    reps: int,
    seed: int,
    gamma: float,
    d: float,
    eta: float = 0.25,
    x: int | None = None,
    threads: int = 1,
) -> RiskReport:
    """Risk estimates over a list of sample sizes with the deterministic selectors."""

    def rule(n):
        return RegressionTuning.for_sample_size(n, gamma, d, eta)

    rows = []
    for i, n in enumerate(n_list):
        # each n gets its own seed stream so cells are independently recomputable
        cell_seed = int(np.random.SeedSequence([int(seed), i]).generate_state(1)[0])
        tun = rule(n)
        if task == "regress":
            est = integrated_sq_risk(instance, rule, n, reps, cell_seed, threads)
        elif task == "pointwise":
            px = int(instance.design.support[0]) if x is None else x
            est = pointwise_risk(instance, rule, px, n, reps, cell_seed, threads)
        elif task == "classify":
            est = excess_risk(instance, lambda m: rule(m).h, n, reps, cell_seed, threads)
        else:
            raise DomainError(f"unknown task {task!r}")
        rows.append(RiskRow(int(n), est.mean, est.se, tun.h, tun.delta_n, int(reps)))
    return RiskReport(rows, int(seed), task)


@dataclass(frozen=True)
class RateFit:
    slope: float
    se: float
    target: float
    excluded: tuple[int, ...]


def rate_fit(report: RiskReport, beta: float, gamma: float, kind: str = "regression") -> RateFit:
    """Least-squares slope of ``log risk`` against ``log log n``.

    The target slope (``-2 beta / gamma`` for regression, ``-beta / gamma`` for
    classification) is reported alongside; nothing is asserted.
    """
    if kind not in ("regression", "classification"):
        raise DomainError("kind must be 'regression' or 'classification'")
    target = -2.0 * beta / gamma if kind == "regression" else -beta / gamma
    usable = [r for r in report.rows if r.estimate > 0 and r.n > 1 and math.log(r.n) > 0]
    excluded = tuple(r.n for r in report.rows if r not in usable)
    if len(usable) < 3:
        raise InsufficientDataError(f"rate fit needs 3 usable points, got {len(usable)}")
    x = np.log(np.log([r.n for r in usable]))
    y = np.log([r.estimate for r in usable])
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = len(usable) - 2
    if dof > 0:
        s2 = float(resid @ resid) / dof
        cov = s2 * np.linalg.inv(A.T @ A)
        se = float(math.sqrt(max(cov[0, 0], 0.0)))
    else:
        se = math.nan
    return RateFit(float(coef[0]), se, target, excluded)
