"""Curve generators, regression / classification instances, and their samplers.

Every instance lives on a finite design: a :class:`DiscreteMeasure` over a
:class:`PointSet`.  Regression maps are evaluated once on the whole pool at
construction, and the Hoelder condition is audited on every support pair
instead of being trusted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .divergences import DiscreteMeasure, tv
from .errors import AuditError, DomainError
from .metric_core import PointSet, SampledFunction, check_grid

__all__ = [
    "SmoothnessSpec",
    "NoiseSpec",
    "RegressionInstance",
    "ClassificationInstance",
    "RegressionSample",
    "ClassificationSample",
    "sample_lipschitz_curve",
    "sample_monotone_curve",
    "lipschitz_pointset",
    "monotone_pointset",
    "functional",
    "make_regression_map",
    "holder_violation",
    "draw_regression_sample",
    "draw_classification_sample",
    "density_pX",
    "tilted_classification_instance",
]

# relative slack for Hoelder audits; covers last-bit disagreement between a
# functional and the quadrature that defines the metric
AUDIT_SLACK = 1e-12


@dataclass(frozen=True)
class SmoothnessSpec:
    beta: float
    C: float

    def __post_init__(self):
        if not (0.0 < self.beta <= 1.0):
            raise DomainError(f"beta must lie in (0, 1], got {self.beta}")
        if not (self.C > 0.0 and math.isfinite(self.C)):
            raise DomainError(f"C must be positive, got {self.C}")


@dataclass(frozen=True)
class NoiseSpec:
    """Centred additive noise: Gaussian with sd ``scale`` or uniform on [-scale, scale]."""

    family: str = "gaussian"
    scale: float = 1.0
    c_v: float | None = None

    def __post_init__(self):
        if self.family not in ("gaussian", "uniform"):
            raise DomainError(f"unknown noise family {self.family!r}")
        if self.scale < 0:
            raise DomainError("noise scale must be nonnegative")
        if self.c_v is None:
            object.__setattr__(self, "c_v", self.variance)
        if self.variance > self.c_v:
            raise DomainError(f"noise variance {self.variance} exceeds bound c_v={self.c_v}")

    @property
    def variance(self) -> float:
        if self.family == "gaussian":
            return self.scale**2
        return self.scale**2 / 3.0

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.scale == 0:
            return np.zeros(n)
        if self.family == "gaussian":
            return rng.normal(0.0, self.scale, size=n)
        return rng.uniform(-self.scale, self.scale, size=n)


# ---------------------------------------------------------------- curve generators


def sample_lipschitz_curve(M: float, grid, rng: np.random.Generator) -> SampledFunction:
    """Random M-Lipschitz curve bounded by M.

    Piecewise linear with i.i.d. slopes uniform on [-M, M] between consecutive
    grid points, started uniformly in [-M/2, M/2] and clipped to [-M, M].
    Clipping cannot increase slopes, so the result stays M-Lipschitz.
    """
    grid = check_grid(grid)
    if M < 0:
        raise DomainError("M must be nonnegative")
    start = rng.uniform(-M / 2, M / 2)
    slopes = rng.uniform(-M, M, size=grid.size - 1)
    values = start + np.concatenate([[0.0], np.cumsum(slopes * np.diff(grid))])
    return SampledFunction(grid, np.clip(values, -M, M))


def sample_monotone_curve(
    grid, rng: np.random.Generator, low: float = 0.0, high: float = 1.0
) -> SampledFunction:
    """Random nondecreasing curve with values in [low, high] (default [0, 1]).

    Normalised cumulative sum of i.i.d. Exp(1) increments weighted by the grid
    spacing, so equal increments give the identity ramp on a grid spanning [0, 1].
    ``low``/``high`` rescale the curve affinely into a narrower band.
    """
    grid = check_grid(grid)
    if not (0.0 <= low < high <= 1.0):
        raise DomainError("need 0 <= low < high <= 1")
    if grid.size == 1:
        return SampledFunction(grid, np.array([low + (high - low) * grid[0]]))
    inc = rng.exponential(1.0, size=grid.size - 1) * np.diff(grid)
    csum = np.concatenate([[0.0], np.cumsum(inc)])
    span = grid[-1] - grid[0]
    values = grid[0] + span * csum / csum[-1]
    values = low + (high - low) * values
    return SampledFunction(grid, np.clip(values, low, high))


def lipschitz_pointset(n, M, grid, rng, metric=None) -> PointSet:
    return PointSet.from_functions((sample_lipschitz_curve(M, grid, rng) for _ in range(n)), metric)


def monotone_pointset(n, grid, rng, metric=None, low=0.0, high=1.0) -> PointSet:
    return PointSet.from_functions(
        (sample_monotone_curve(grid, rng, low, high) for _ in range(n)), metric
    )


# ---------------------------------------------------------------- regression maps


def functional(kind: str, t: float | None = None) -> Callable[[np.ndarray, np.ndarray], float]:
    """Scalar curve functionals ``F(grid, values)`` used to build regression maps.

    ``mean`` (trapezoidal integral), ``max``, ``min``, ``value`` (at the grid
    point nearest ``t``) or ``zero``.
    """
    if kind == "mean":
        def F(grid, v):
            if grid.size < 2:
                return float(v[0])
            return float((0.5 * (v[:-1] + v[1:]) * np.diff(grid)).sum())
    elif kind == "max":
        def F(grid, v):
            return float(v.max())
    elif kind == "min":
        def F(grid, v):
            return float(v.min())
    elif kind == "value":
        if t is None:
            raise DomainError("functional 'value' needs an abscissa t")

        def F(grid, v):
            return float(v[int(np.argmin(np.abs(grid - t)))])
    elif kind == "zero":
        def F(grid, v):
            return 0.0
    else:
        raise DomainError(f"unknown functional {kind!r}")
    return F


def make_regression_map(spec: dict, C: float) -> Callable[[SampledFunction], float]:
    """Closure ``g(x) = clip(scale * (F(x) - offset), -C, C)`` from a JSON-able spec."""
    F = functional(spec.get("kind", "mean"), spec.get("t"))
    scale = float(spec.get("scale", 1.0))
    offset = float(spec.get("offset", 0.0))

    def g(x: SampledFunction) -> float:
        return float(np.clip(scale * (F(x.grid, x.values) - offset), -C, C))

    return g


def holder_violation(values: np.ndarray, d: np.ndarray, spec: SmoothnessSpec) -> float:
    """Largest excess of ``|v_i - v_j|`` over ``C * d_ij**beta`` (<= 0 means pass)."""
    diff = np.abs(values[:, None] - values[None, :])
    bound = spec.C * d**spec.beta
    excess = diff - bound - AUDIT_SLACK * (1.0 + bound)
    return float(excess.max()) if excess.size else -math.inf


@dataclass(frozen=True)
class RegressionSample:
    x: np.ndarray  # pool indices
    y: np.ndarray

    def __len__(self) -> int:
        return self.x.size


class RegressionInstance:
    """Design, regression map, noise and smoothness class of a regression problem."""

    def __init__(
        self,
        design: DiscreteMeasure,
        g: Callable[[SampledFunction], float],
        noise: NoiseSpec,
        smoothness: SmoothnessSpec,
        g_spec: dict | None = None,
    ):
        self.design = design
        self.g = g
        self.noise = noise
        self.smoothness = smoothness
        self.g_spec = g_spec
        pool = design.points
        self.g_values = np.array([g(pool[i]) for i in range(len(pool))])
        sup = design.support
        gv = self.g_values[sup]
        if np.any(np.abs(gv) > smoothness.C * (1.0 + AUDIT_SLACK)):
            raise AuditError(f"|g| exceeds C={smoothness.C} on the design support")
        excess = holder_violation(gv, design.restrict_distances(), smoothness)
        if excess > 0:
            raise AuditError(
                f"g violates the Hoelder bound (beta={smoothness.beta}, C={smoothness.C}) "
                f"on the design support by {excess:.3g}"
            )

    @property
    def points(self) -> PointSet:
        return self.design.points


def draw_regression_sample(inst: RegressionInstance, n: int, rng: np.random.Generator) -> RegressionSample:
    """``n`` pairs ``(X_j, g(X_j) + eps_j)`` with ``X_j`` i.i.d. from the design."""
    if n < 1:
        raise DomainError("n must be at least 1")
    x = inst.design.sample(rng, n)
    y = inst.g_values[x] + inst.noise.draw(rng, n)
    return RegressionSample(x, y)


# ---------------------------------------------------------------- classification


@dataclass(frozen=True)
class ClassificationSample:
    z: np.ndarray  # pool indices
    w: np.ndarray  # labels in {0, 1}

    def __len__(self) -> int:
        return self.z.size


class ClassificationInstance:
    """Two group measures on a shared pool, plus the sampling ratio ``w``.

    Construction checks ``TV(pX, pY) >= kappa`` and the Hoelder bound on the
    density ``p_X = dP_X / d(P_X + P_Y)`` over the joint support.
    """

    def __init__(
        self,
        pX: DiscreteMeasure,
        pY: DiscreteMeasure,
        kappa: float,
        w: float,
        smoothness: SmoothnessSpec,
    ):
        if pX.points is not pY.points:
            raise DomainError("pX and pY must share one point pool")
        if not (0.0 <= w <= 1.0):
            raise DomainError(f"sampling ratio w must lie in [0, 1], got {w}")
        if kappa < 0:
            raise DomainError("kappa must be nonnegative")
        self.pX, self.pY = pX, pY
        self.kappa = float(kappa)
        self.w = float(w)
        self.smoothness = smoothness
        self.tv = tv(pX, pY)
        if self.tv < self.kappa:
            raise AuditError(f"TV(pX, pY) = {self.tv:.6g} is below kappa = {self.kappa}")
        self.px_dense = pX.dense()
        self.py_dense = pY.dense()
        q = self.px_dense + self.py_dense
        self.joint_support = np.nonzero(q > 0)[0]
        self.p_x = np.zeros_like(q)
        self.p_x[self.joint_support] = self.px_dense[self.joint_support] / q[self.joint_support]
        d = pX.points.distances()[np.ix_(self.joint_support, self.joint_support)]
        excess = holder_violation(self.p_x[self.joint_support], d, smoothness)
        if excess > 0:
            raise AuditError(f"density p_X violates the Hoelder bound by {excess:.3g}")

    @property
    def points(self) -> PointSet:
        return self.pX.points


def draw_classification_sample(
    inst: ClassificationInstance, n: int, rng: np.random.Generator
) -> ClassificationSample:
    """``n`` labelled draws: ``W ~ Bernoulli(w)``, then ``Z ~ pY`` if ``W = 1`` else ``pX``."""
    if n < 1:
        raise DomainError("n must be at least 1")
    w = (rng.random(n) < inst.w).astype(np.int8)
    n1 = int(w.sum())
    z = np.empty(n, dtype=int)
    z[w == 1] = inst.pY.sample(rng, n1)
    z[w == 0] = inst.pX.sample(rng, n - n1)
    return ClassificationSample(z, w)


def density_pX(inst: ClassificationInstance, z: int) -> float:
    """``pX(z) / (pX(z) + pY(z))`` at a pool point with positive joint mass."""
    a, b = inst.px_dense[z], inst.py_dense[z]
    if a + b <= 0:
        raise DomainError(f"point {z} has zero mass under pX + pY")
    return float(a / (a + b))


def tilted_classification_instance(
    points: PointSet,
    tilt: float,
    kappa: float = 0.0,
    w: float = 0.5,
    smoothness: SmoothnessSpec | None = None,
    functional_kind: str = "mean",
    support=None,
    base=None,
) -> ClassificationInstance:
    """pX and pY obtained by tilting a base measure in opposite directions.

    With ``s_i = clip(tilt * (F(z_i) - median F), -1, 1)`` the group masses are
    ``base_i (1 + s_i)`` and ``base_i (1 - s_i)``, normalised.  If no
    smoothness spec is given, ``beta = 1`` and the smallest passing ``C`` (at
    least 1) are used.
    """
    support = np.arange(len(points)) if support is None else np.asarray(support, dtype=int)
    base = np.full(support.size, 1.0 / support.size) if base is None else np.asarray(base, float)
    F = functional(functional_kind)
    f = np.array([F(points.grid, points.values[i]) for i in support])
    s = np.clip(tilt * (f - np.median(f)), -1.0, 1.0)
    pX = DiscreteMeasure.from_masses(points, base * (1.0 + s), support)
    pY = DiscreteMeasure.from_masses(points, base * (1.0 - s), support)
    if smoothness is None:
        q = pX.dense() + pY.dense()
        on = np.nonzero(q > 0)[0]
        px = pX.dense()[on] / q[on]
        d = points.distances()[np.ix_(on, on)]
        diff = np.abs(px[:, None] - px[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(d > 0, diff / d, 0.0)
        smoothness = SmoothnessSpec(1.0, max(1.0, float(ratio.max()) * (1 + 1e-9)))
    return ClassificationInstance(pX, pY, kappa, w, smoothness)
