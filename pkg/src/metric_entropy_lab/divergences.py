"""Finite discrete probability measures on a point pool, and distances between them."""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, InvariantError
from .metric_core import PointSet

__all__ = ["DiscreteMeasure", "tv", "hellinger_sq", "kl"]

_NORM_TOL = 1e-12


class DiscreteMeasure:
    """Probability weights on a subset of the points of a :class:`PointSet`.

    ``support`` holds distinct indices into ``points``; ``weights`` the matching
    probabilities.  Weights must be nonnegative and sum to one within 1e-12.
    """

    def __init__(self, points: PointSet, support, weights):
        support = np.asarray(support, dtype=int).ravel()
        weights = np.asarray(weights, dtype=float).ravel()
        if support.size == 0:
            raise InvariantError("a discrete measure needs a nonempty support")
        if support.shape != weights.shape:
            raise InvariantError("support and weights differ in length")
        if support.min() < 0 or support.max() >= len(points):
            raise InvariantError("support index outside the point pool")
        if np.unique(support).size != support.size:
            raise InvariantError("support indices must be distinct")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0.0):
            raise InvariantError("weights must be finite and nonnegative")
        total = math.fsum(weights)
        if abs(total - 1.0) > _NORM_TOL:
            raise InvariantError(f"weights sum to {total!r}, not 1")
        self.points = points
        self.support = support
        self.weights = weights
        self.support.flags.writeable = False
        self.weights.flags.writeable = False

    @classmethod
    def uniform(cls, points: PointSet, support=None) -> "DiscreteMeasure":
        support = np.arange(len(points)) if support is None else np.asarray(support, dtype=int)
        return cls(points, support, np.full(support.size, 1.0 / support.size))

    @classmethod
    def from_masses(cls, points: PointSet, masses, support=None) -> "DiscreteMeasure":
        """Normalise nonnegative masses into a measure (zero masses are kept)."""
        masses = np.asarray(masses, dtype=float)
        support = np.arange(masses.size) if support is None else np.asarray(support, dtype=int)
        if np.any(masses < 0) or masses.sum() <= 0:
            raise InvariantError("masses must be nonnegative with positive total")
        w = masses / masses.sum()
        # absorb the rounding residue into the largest atom
        w[np.argmax(w)] += 1.0 - math.fsum(w)
        return cls(points, support, w)

    def __len__(self) -> int:
        return self.support.size

    def dense(self) -> np.ndarray:
        """Weights spread over the whole pool (zeros off the support)."""
        out = np.zeros(len(self.points))
        out[self.support] = self.weights
        return out

    def weight_of(self, index: int) -> float:
        hit = np.nonzero(self.support == index)[0]
        return float(self.weights[hit[0]]) if hit.size else 0.0

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """``n`` i.i.d. pool indices drawn from the measure."""
        pos = rng.choice(self.support.size, size=n, p=self.weights)
        return self.support[pos]

    def restrict_distances(self) -> np.ndarray:
        """Distance matrix between the support points (support order)."""
        d = self.points.distances()
        return d[np.ix_(self.support, self.support)]

    def __repr__(self) -> str:
        return f"DiscreteMeasure(|support|={self.support.size}, pool={len(self.points)})"


def _pair(P: DiscreteMeasure, Q: DiscreteMeasure) -> tuple[np.ndarray, np.ndarray]:
    if P.points is not Q.points:
        raise DomainError("measures must live on the same point pool")
    return P.dense(), Q.dense()


def tv(P: DiscreteMeasure, Q: DiscreteMeasure) -> float:
    """Total variation distance, half the L1 distance of the weight vectors."""
    p, q = _pair(P, Q)
    return 0.5 * math.fsum(np.abs(p - q))


def hellinger_sq(P: DiscreteMeasure, Q: DiscreteMeasure) -> float:
    """Squared Hellinger distance ``sum (sqrt p - sqrt q)^2`` (range [0, 2])."""
    p, q = _pair(P, Q)
    return math.fsum((np.sqrt(p) - np.sqrt(q)) ** 2)


def kl(P: DiscreteMeasure, Q: DiscreteMeasure) -> float:
    """Kullback-Leibler divergence of P from Q; ``inf`` without absolute continuity."""
    p, q = _pair(P, Q)
    on = p > 0.0
    if np.any(q[on] == 0.0):
        return math.inf
    terms = p[on] * (np.log(p[on]) - np.log(q[on]))
    return max(math.fsum(terms), 0.0)
