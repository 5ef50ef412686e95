"""Sampled curves on a shared grid, the metrics between them, and distance matrices.

Functions on [0, 1] are represented only by their values on a finite, strictly
increasing grid.  Two metrics are supported: the supremum metric and the L_p
metric, the latter approximated by trapezoidal quadrature on the grid.  All
datasets that take part in one computation must share the same grid exactly;
nothing is ever resampled.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, GridMismatchError

__all__ = [
    "SampledFunction",
    "MetricSpec",
    "PointSet",
    "distance",
    "distance_matrix",
    "cross_distances",
    "check_grid",
]


def check_grid(grid) -> np.ndarray:
    """Validate a grid of abscissae and return it as a read-only float array."""
    grid = np.array(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("grid must be a nonempty 1-d sequence")
    if not np.all(np.isfinite(grid)):
        raise DomainError("grid contains non-finite abscissae")
    if grid[0] < 0.0 or grid[-1] > 1.0:
        raise DomainError(f"grid must lie in [0, 1], got [{grid[0]}, {grid[-1]}]")
    if grid.size > 1 and np.any(np.diff(grid) <= 0.0):
        raise DomainError("grid must be strictly increasing")
    grid.flags.writeable = False
    return grid


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """A functional datum: finite values on a strictly increasing grid in [0, 1]."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = check_grid(self.grid)
        values = np.array(self.values, dtype=float)
        if values.shape != grid.shape:
            raise DomainError(
                f"values have shape {values.shape}, grid has shape {grid.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise DomainError("sampled function has non-finite values")
        values.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    def same_grid(self, other: "SampledFunction") -> bool:
        return self.grid is other.grid or np.array_equal(self.grid, other.grid)

    @classmethod
    def constant(cls, c: float, grid) -> "SampledFunction":
        grid = check_grid(grid)
        return cls(grid, np.full(grid.shape, float(c)))


@dataclass(frozen=True)
class MetricSpec:
    """Which metric to use: ``sup`` or ``lp`` with exponent ``p >= 1``."""

    kind: str = "sup"
    p: float = 1.0

    def __post_init__(self):
        if self.kind not in ("sup", "lp"):
            raise DomainError(f"unknown metric kind {self.kind!r}")
        if self.kind == "lp" and not (np.isfinite(self.p) and self.p >= 1.0):
            raise DomainError(f"L_p exponent must satisfy p >= 1, got {self.p}")

    @classmethod
    def sup(cls) -> "MetricSpec":
        return cls("sup")

    @classmethod
    def lp(cls, p: float) -> "MetricSpec":
        return cls("lp", float(p))

    @classmethod
    def parse(cls, text: str) -> "MetricSpec":
        """Parse ``sup``, ``l1``, ``l2`` or ``lp:<p>``."""
        t = text.strip().lower()
        if t in ("sup", "supremum", "linf"):
            return cls.sup()
        if t == "l1":
            return cls.lp(1.0)
        if t == "l2":
            return cls.lp(2.0)
        if t.startswith("lp:"):
            try:
                p = float(t[3:])
            except ValueError:
                raise DomainError(f"cannot parse L_p exponent in {text!r}") from None
            return cls.lp(p)
        raise DomainError(f"unknown metric {text!r}; use sup, l1, l2 or lp:<p>")

    def label(self) -> str:
        if self.kind == "sup":
            return "sup"
        if self.p == 1.0:
            return "l1"
        if self.p == 2.0:
            return "l2"
        return f"lp:{self.p:g}"

    def __str__(self) -> str:
        return self.label()


def _reduce(absdiff: np.ndarray, grid: np.ndarray, metric: MetricSpec) -> np.ndarray:
    # absdiff: (..., m); reduces the last axis.  Shared by the scalar and the
    # matrix paths so that both give bit-identical results.
    if metric.kind == "sup":
        return absdiff.max(axis=-1)
    if grid.size < 2:
        raise DomainError("L_p quadrature needs at least two grid points")
    powered = absdiff if metric.p == 1.0 else absdiff**metric.p
    dt = np.diff(grid)
    integral = (0.5 * (powered[..., :-1] + powered[..., 1:]) * dt).sum(axis=-1)
    if metric.p == 1.0:
        return integral
    return integral ** (1.0 / metric.p)


def distance(f: SampledFunction, g: SampledFunction, metric: MetricSpec) -> float:
    """Distance between two sampled functions on the same grid.

    ``sup`` gives ``max_i |f_i - g_i|``; ``lp`` gives the p-th root of the
    trapezoidal integral of ``|f - g|**p``.
    """
    if not f.same_grid(g):
        raise GridMismatchError("functions are sampled on different grids")
    return float(_reduce(np.abs(f.values - g.values), f.grid, metric))


class PointSet:
    """A finite ordered collection of curves on one grid, under one metric.

    Curves are stored row-wise in ``values`` (shape ``(n, m)``).  The distance
    matrix is computed lazily and cached; once filled the object can be shared
    read-only between threads.
    """

    def __init__(self, grid, values, metric: MetricSpec | None = None):
        self.grid = check_grid(grid)
        values = np.array(values, dtype=float)
        if values.ndim == 1:
            values = values[None, :]
        if values.ndim != 2 or values.shape[1] != self.grid.size:
            raise DomainError(
                f"values must have shape (n, {self.grid.size}), got {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise DomainError("point set contains non-finite values")
        values.flags.writeable = False
        self.values = values
        self.metric = metric if metric is not None else MetricSpec.sup()
        self._dist: np.ndarray | None = None

    @classmethod
    def from_functions(
        cls, functions: Iterable[SampledFunction], metric: MetricSpec | None = None
    ) -> "PointSet":
        functions = list(functions)
        if not functions:
            raise DomainError("cannot build a point set from zero functions")
        grid = functions[0].grid
        for f in functions[1:]:
            if not f.same_grid(functions[0]):
                raise GridMismatchError("all functions of a point set must share a grid")
        return cls(grid, np.stack([f.values for f in functions]), metric)

    @classmethod
    def constants(cls, levels: Sequence[float], grid=None, metric=None) -> "PointSet":
        """Constant curves at the given levels (handy fixtures)."""
        grid = np.linspace(0.0, 1.0, 11) if grid is None else grid
        grid = check_grid(grid)
        vals = np.repeat(np.asarray(levels, dtype=float)[:, None], grid.size, axis=1)
        return cls(grid, vals, metric)

    def __len__(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, i: int) -> SampledFunction:
        return SampledFunction(self.grid, self.values[i])

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def points(self) -> list[SampledFunction]:
        return list(self)

    def with_metric(self, metric: MetricSpec) -> "PointSet":
        return PointSet(self.grid, self.values, metric)

    def subset(self, indices) -> "PointSet":
        idx = np.asarray(indices, dtype=int)
        out = PointSet(self.grid, self.values[idx], self.metric)
        if self._dist is not None:
            out._dist = self._dist[np.ix_(idx, idx)]
        return out

    def same_grid(self, other: "PointSet") -> bool:
        return np.array_equal(self.grid, other.grid)

    def distances(self, threads: int = 1) -> np.ndarray:
        """Cached pairwise distance matrix."""
        if self._dist is None:
            self._dist = _fill_matrix(self.values, self.values, self.grid, self.metric, threads)
            self._dist.flags.writeable = False
        return self._dist

    def distances_to(self, f: SampledFunction) -> np.ndarray:
        """Distances from ``f`` to every point, in point order."""
        if not np.array_equal(f.grid, self.grid):
            raise GridMismatchError("query function is sampled on a different grid")
        return _reduce(np.abs(self.values - f.values[None, :]), self.grid, self.metric)


def _fill_matrix(a, b, grid, metric, threads=1) -> np.ndarray:
    rows = range(a.shape[0])

    def row(i):
        return _reduce(np.abs(b - a[i][None, :]), grid, metric)

    if threads > 1 and a.shape[0] > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(row, rows))
    else:
        out = [row(i) for i in rows]
    if not out:
        return np.zeros((0, b.shape[0]))
    return np.vstack(out)


def distance_matrix(ps: PointSet, threads: int = 1) -> np.ndarray:
    """Symmetric matrix of pairwise distances, cached on ``ps``.

    Row-parallel filling (``threads > 1``) produces the same bits as the
    sequential fill because each row is reduced independently.
    """
    return ps.distances(threads=threads)


def cross_distances(a: PointSet, b: PointSet, metric: MetricSpec | None = None) -> np.ndarray:
    """Matrix of distances ``rho(a_i, b_j)``; both sets must share a grid."""
    if not a.same_grid(b):
        raise GridMismatchError("point sets are sampled on different grids")
    metric = metric if metric is not None else a.metric
    return _fill_matrix(a.values, b.values, a.grid, metric)
