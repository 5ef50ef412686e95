"""Covering and packing numbers of finite point sets, entropy envelopes, small balls.

Balls are open everywhere: ``y`` belongs to the ball of radius ``r`` around
``x`` iff ``rho(x, y) < r``.  A packing at scale ``delta`` is a subset whose
pairwise distances are all strictly larger than ``delta``.

Exact covering / packing numbers are found by exhaustive search and are only
available for at most ``EXACT_THRESHOLD`` points; larger sets fall back to the
farthest-point-first net, whose size brackets the covering numbers.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .divergences import DiscreteMeasure
from .errors import (
    DomainError,
    InvariantError,
    InsufficientDataError,
    PreconditionError,
    TooLargeForExactSearch,
)
from .metric_core import PointSet, cross_distances

__all__ = [
    "EXACT_THRESHOLD",
    "EntropyProfile",
    "EntropyEnvelope",
    "SmallBallProfile",
    "SmallBallBoundRecord",
    "covering_number_exact",
    "packing_number_exact",
    "greedy_net",
    "greedy_insertion_radii",
    "entropy_profile",
    "fit_gamma",
    "envelope_at_gamma",
    "small_ball",
    "small_ball_profile",
    "lemma1_check",
]

EXACT_THRESHOLD = 14

MODES = ("exact", "greedy-upper", "greedy-lower")


# ---------------------------------------------------------------- exact search


def _check_exact_size(n: int, threshold: int) -> None:
    if n > threshold:
        raise TooLargeForExactSearch(
            f"{n} points exceed the exact-search threshold {threshold}; "
            "use greedy_net / entropy_profile for greedy bounds instead"
        )


def _bitmask_rows(member: np.ndarray) -> np.ndarray:
    """Row i of a boolean (k, n) matrix -> integer bitmask over the n columns."""
    weights = np.left_shift(np.int64(1), np.arange(member.shape[1], dtype=np.int64))
    return (member.astype(np.int64) * weights).sum(axis=1)


def _min_set_cover(masks: np.ndarray, n: int) -> int:
    full = (1 << n) - 1
    masks = np.unique(masks[masks != 0])
    if np.bitwise_or.reduce(masks, initial=0) != full:
        raise DomainError("candidate balls do not cover the point set")
    # breadth-first over reachable unions; depth of first hit is the optimum
    reach = np.zeros(1, dtype=np.int64)
    for k in range(1, n + 1):
        reach = np.unique(np.bitwise_or.outer(reach, masks).ravel())
        if reach[-1] == full:
            return k
    raise AssertionError("unreachable: n singleton-covering balls always suffice")


def covering_number_exact(
    ps: PointSet,
    delta: float,
    intrinsic: bool = True,
    centers: PointSet | None = None,
    threshold: int = EXACT_THRESHOLD,
) -> int:
    """Minimal number of open ``delta``-balls covering ``ps``.

    With ``intrinsic=True`` the centres are restricted to ``ps`` itself.  For the
    ambient variant, pass the candidate centre pool as ``centers`` (a point set
    on the same grid, typically a superset of ``ps``).
    """
    if not delta > 0:
        raise DomainError("delta must be positive")
    n = len(ps)
    _check_exact_size(n, threshold)
    if intrinsic:
        d = ps.distances()
    else:
        if centers is None:
            raise DomainError("ambient covering numbers need a centre pool")
        d = cross_distances(centers, ps, ps.metric)
    return _min_set_cover(_bitmask_rows(d < delta), n)


def packing_number_exact(ps: PointSet, delta: float, threshold: int = EXACT_THRESHOLD) -> int:
    """Largest subset of ``ps`` with all pairwise distances ``> delta``."""
    if not delta > 0:
        raise DomainError("delta must be positive")
    n = len(ps)
    _check_exact_size(n, threshold)
    d = ps.distances()
    conflict = (d <= delta) & ~np.eye(n, dtype=bool)
    cmask = _bitmask_rows(conflict)
    subsets = np.arange(1 << n, dtype=np.int64)
    ok = np.ones(subsets.size, dtype=bool)
    for i in range(n):
        has_i = (subsets >> i) & 1 == 1
        ok &= ~(has_i & ((subsets & cmask[i]) != 0))
    sizes = np.zeros(subsets.size, dtype=np.int64)
    for i in range(n):
        sizes += (subsets >> i) & 1
    return int(sizes[ok].max())


# ---------------------------------------------------------------- greedy nets


def greedy_insertion_radii(d: np.ndarray, start: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Farthest-point-first order of a distance matrix.

    Returns ``(order, radii)`` where ``radii[k]`` is the distance from
    ``order[k]`` to the ``k`` points chosen before it (``inf`` for the first).
    Ties go to the lowest index.  The radii are nonincreasing.
    """
    n = d.shape[0]
    order = [start]
    radii = [math.inf]
    mind = d[start].copy()
    mind[start] = -1.0
    for _ in range(n - 1):
        j = int(np.argmax(mind))
        order.append(j)
        radii.append(float(mind[j]))
        np.minimum(mind, d[j], out=mind)
        mind[order] = -1.0
    return np.asarray(order), np.asarray(radii)


def greedy_net(ps: PointSet, delta: float, strict: bool = False) -> list[int]:
    """Farthest-point-first ``delta``-net of ``ps``, starting from index 0.

    The returned centres have pairwise distances ``>= delta`` (``> delta`` with
    ``strict=True``), and every point of ``ps`` lies in the open ``delta``-ball
    of some centre (closed ball when ``strict``).  Its size is therefore an
    upper bound on the intrinsic covering number at ``delta`` and a lower bound
    on the covering number at ``delta / 2``.
    """
    if len(ps) == 0:
        raise DomainError("greedy_net of an empty point set")
    if not delta > 0:
        raise DomainError("delta must be positive")
    return _net_from_matrix(ps.distances(), delta, strict)


def _net_from_matrix(d: np.ndarray, delta: float, strict: bool = False) -> list[int]:
    order, radii = greedy_insertion_radii(d)
    keep = radii > delta if strict else radii >= delta
    return [int(i) for i in order[keep]]


# ---------------------------------------------------------------- profiles


@dataclass(frozen=True)
class EntropyProfile:
    """Covering counts at a decreasing sequence of radii."""

    radii: tuple[float, ...]
    counts: tuple[int, ...]
    modes: tuple[str, ...]

    def __post_init__(self):
        if not (len(self.radii) == len(self.counts) == len(self.modes)):
            raise DomainError("radii, counts and modes must have equal length")
        if any(r <= 0 for r in self.radii):
            raise DomainError("radii must be positive")
        if any(a <= b for a, b in zip(self.radii, self.radii[1:])):
            raise DomainError("radii must be strictly decreasing")
        if any(c < 1 for c in self.counts):
            raise DomainError("counts must be positive")
        if any(m not in MODES for m in self.modes):
            raise DomainError(f"modes must be among {MODES}")
        if not self.is_monotone():
            raise InvariantError("counts must not decrease as the radius shrinks")

    def __len__(self) -> int:
        return len(self.radii)

    def is_monotone(self) -> bool:
        return all(a <= b for a, b in zip(self.counts, self.counts[1:]))


def entropy_profile(
    ps: PointSet,
    radii: Sequence[float],
    intrinsic: bool = True,
    threshold: int = EXACT_THRESHOLD,
    centers: PointSet | None = None,
    bound: str = "upper",
) -> EntropyProfile:
    """Covering counts of ``ps`` at each radius.

    Sets of at most ``threshold`` points get exact counts.  Larger sets get the
    farthest-point-first net size: at radius ``s`` it is an upper bound on the
    intrinsic covering number (``bound="upper"``), while the net at ``2 s`` is a
    lower bound on the covering number at ``s`` (``bound="lower"``).
    """
    radii = [float(r) for r in radii]
    if any(r <= 0 for r in radii):
        raise DomainError("radii must be positive")
    if any(a <= b for a, b in zip(radii, radii[1:])):
        raise DomainError("radii must be sorted strictly decreasing")
    if bound not in ("upper", "lower"):
        raise DomainError("bound must be 'upper' or 'lower'")
    if len(ps) <= threshold:
        counts = [
            covering_number_exact(ps, r, intrinsic=intrinsic, centers=centers, threshold=threshold)
            for r in radii
        ]
        modes = ["exact"] * len(radii)
    else:
        _, ins = greedy_insertion_radii(ps.distances())
        scale = 1.0 if bound == "upper" else 2.0
        counts = [int(np.count_nonzero(ins >= scale * r)) for r in radii]
        modes = ["greedy-" + bound] * len(radii)
    return EntropyProfile(tuple(radii), tuple(counts), tuple(modes))


@dataclass(frozen=True)
class EntropyEnvelope:
    """Fitted ``c_low * s**-gamma <= log N(s) <= c_high * s**-gamma`` for ``s < s0``."""

    gamma: float
    c_low: float
    c_high: float
    s0: float
    fit_residual: float
    flags: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.c_low < 0 or self.c_high < self.c_low:
            raise DomainError("envelope constants must satisfy 0 <= c_low <= c_high")
        if self.s0 <= 0 or self.fit_residual < 0:
            raise DomainError("s0 must be positive and the residual nonnegative")

    def log_cover_bound(self, s: float) -> float:
        return self.c_high * s ** (-self.gamma)

    def as_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "c_low": self.c_low,
            "c_high": self.c_high,
            "s0": self.s0,
            "residual": self.fit_residual,
        }


RESIDUAL_FLAG = 0.25


def _envelope_constants(s: np.ndarray, counts: np.ndarray, gamma: float) -> tuple[float, float]:
    """Extremes of ``log N(s) * s**gamma``, rounded outward.

    The constants are nudged by whole ulps until ``c_low * s**-gamma <= log N(s)
    <= c_high * s**-gamma`` holds in floating point at every profiled radius,
    so downstream certification never fails on the last bit.
    """
    logs = np.array([math.log(c) for c in counts])
    # scalar pow, as used by every consumer of the envelope (numpy's may differ by an ulp)
    inv = np.array([float(x) ** (-gamma) for x in s])
    scaled = logs * np.array([float(x) ** gamma for x in s])
    lo, hi = float(scaled.min()), float(scaled.max())
    while np.any(hi * inv < logs):
        hi = float(np.nextafter(hi, math.inf))
    while lo > 0 and np.any(lo * inv > logs):
        lo = float(np.nextafter(lo, 0.0))
    return lo, hi


def fit_gamma(profile: EntropyProfile, window: tuple[float, float]) -> EntropyEnvelope:
    """Fit the entropy exponent over the radii in ``window = (lo, hi)``.

    ``gamma`` is the least-squares slope of ``log log N(s)`` against
    ``log(1/s)``; ``c_low``/``c_high`` are the extreme values of
    ``log N(s) * s**gamma`` over the window, so the envelope holds on every
    profiled radius in it.
    """
    lo, hi = float(window[0]), float(window[1])
    if not 0 < lo < hi:
        raise DomainError("window must satisfy 0 < lo < hi")
    s = np.array(profile.radii)
    c = np.array(profile.counts, dtype=float)
    use = (s >= lo) & (s <= hi) & (c >= 2)
    if np.count_nonzero(use) < 3:
        raise InsufficientDataError(
            f"only {np.count_nonzero(use)} profile entries with count >= 2 in window "
            f"[{lo}, {hi}]; need 3"
        )
    s, c = s[use], c[use]
    x = np.log(1.0 / s)
    y = np.log(np.log(c))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    rms = float(np.sqrt(np.mean(resid**2)))
    gamma = float(slope)
    c_low, c_high = _envelope_constants(s, c, gamma)
    flags = []
    if gamma <= 1e-9:
        flags.append("nonpositive-gamma")
    if rms > RESIDUAL_FLAG:
        flags.append("large-residual")
    if flags:
        warnings.warn(f"entropy fit flagged: {', '.join(flags)}", RuntimeWarning, stacklevel=2)
    return EntropyEnvelope(
        gamma=gamma,
        c_low=c_low,
        c_high=c_high,
        s0=hi,
        fit_residual=rms,
        flags=tuple(flags),
    )


def envelope_at_gamma(profile: EntropyProfile, window: tuple[float, float], gamma: float) -> EntropyEnvelope:
    """Envelope constants for a supplied exponent (no slope fit).

    ``c_low``/``c_high`` are the extremes of ``log N(s) * s**gamma`` over the
    profiled radii in the window with ``N(s) >= 2``; the residual is 0.
    """
    lo, hi = float(window[0]), float(window[1])
    if not 0 < lo < hi:
        raise DomainError("window must satisfy 0 < lo < hi")
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    s = np.array(profile.radii)
    c = np.array(profile.counts, dtype=float)
    use = (s >= lo) & (s <= hi) & (c >= 2)
    if not np.any(use):
        raise InsufficientDataError("no profile entry with count >= 2 inside the window")
    c_low, c_high = _envelope_constants(s[use], c[use], gamma)
    return EntropyEnvelope(float(gamma), c_low, c_high, hi, 0.0)


# ---------------------------------------------------------------- small balls


def small_ball(P: DiscreteMeasure, x: int, h: float) -> float:
    """Mass that ``P`` puts on the open ball of radius ``h`` around pool point ``x``."""
    if not h > 0:
        raise DomainError("h must be positive")
    pos = np.nonzero(P.support == x)[0]
    if pos.size == 0:
        raise DomainError(f"point {x} is not in the support of the measure")
    d = P.points.distances()[x, P.support]
    return float(math.fsum(P.weights[d < h]))


@dataclass(frozen=True)
class SmallBallProfile:
    """Small-ball probabilities ``psi(x, h)`` at every support point of a measure."""

    measure: DiscreteMeasure
    h: float
    psi: np.ndarray  # aligned with measure.support

    def as_map(self) -> dict[int, float]:
        return {int(i): float(v) for i, v in zip(self.measure.support, self.psi)}


def small_ball_profile(P: DiscreteMeasure, h: float) -> SmallBallProfile:
    if not h > 0:
        raise DomainError("h must be positive")
    inside = P.restrict_distances() < h
    psi = np.array([math.fsum(P.weights[row]) for row in inside])
    return SmallBallProfile(P, float(h), psi)


@dataclass(frozen=True)
class SmallBallBoundRecord:
    lhs: float
    rhs: float
    holds: bool
    net_size: int


def certify_envelope(P: DiscreteMeasure, h: float, env: EntropyEnvelope) -> int:
    """Check ``log N(h/2) <= c_high (h/2)**-gamma`` on the support.

    Returns the cover size used: the exact intrinsic covering number when the
    support has at most ``EXACT_THRESHOLD`` points, otherwise the size of the
    greedy net, which is an intrinsic open ``h/2``-cover and so an upper bound.
    """
    d = P.restrict_distances()
    if d.shape[0] <= EXACT_THRESHOLD:
        size = _min_set_cover(_bitmask_rows(d < h / 2.0), d.shape[0])
    else:
        size = len(_net_from_matrix(d, h / 2.0))
    bound = env.c_high * (h / 2.0) ** (-env.gamma)
    if math.log(size) > bound:
        raise PreconditionError(
            f"envelope not certified at radius h/2={h / 2:g}: cover has "
            f"{size} balls, log={math.log(size):.4g} > {bound:.4g}"
        )
    return size


def lemma1_check(P: DiscreteMeasure, h: float, delta: float, env: EntropyEnvelope) -> SmallBallBoundRecord:
    """Evaluate both sides of the small-ball mass bound for a discrete measure.

    lhs is the P-mass of support points whose ``h``-ball has mass ``<= delta``;
    rhs is ``delta * exp(c_high * 4**gamma * h**-gamma)``.
    """
    if not h > 0 or not delta > 0:
        raise DomainError("h and delta must be positive")
    net_size = certify_envelope(P, h, env)
    prof = small_ball_profile(P, h)
    lhs = math.fsum(P.weights[prof.psi <= delta])
    exponent = env.c_high * 4.0**env.gamma * h ** (-env.gamma)
    rhs = delta * math.exp(exponent) if exponent < 700.0 else math.inf
    return SmallBallBoundRecord(lhs=lhs, rhs=rhs, holds=lhs <= rhs, net_size=net_size)
