"""Hypercube-indexed hard instances for regression and classification.

Regression: bumps of height ``d h^beta bump(0)`` placed on a separated set of
centres, switched on and off by a bit vector.  Classification: a discrete base
measure ``R`` on two far anchors plus an even number of packed points, and
densities ``f_theta`` that move mass within antisymmetric pairs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .divergences import DiscreteMeasure, kl, tv
from .entropy import greedy_insertion_radii
from .errors import AuditError, DomainError
from .models import AUDIT_SLACK, SmoothnessSpec
from .metric_core import PointSet

__all__ = [
    "bump",
    "bump_sup_and_lipschitz",
    "AssouadRegressionFamily",
    "AssouadClassificationFamily",
    "build_regression_family",
    "build_classification_family",
    "eval_g_theta",
    "density_f_theta",
    "regression_audit",
    "classification_audit",
]


def bump(t):
    """``exp(1 / (t^2 - 1))`` on (-1, 1), zero elsewhere.  Accepts scalars or arrays."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    out[inside] = np.exp(1.0 / (t[inside] ** 2 - 1.0))
    return float(out) if out.ndim == 0 else out


def bump_sup_and_lipschitz(n: int = 200_001) -> tuple[float, float]:
    """``(sup |bump|, sup |bump'|)``, the latter from dense finite differences."""
    t = np.linspace(-1.0, 1.0, n)
    v = bump(t)
    slope = np.abs(np.diff(v)) / np.diff(t)
    return math.exp(-1.0), float(slope.max())


def _greedy_packing(d: np.ndarray, delta: float) -> list[int]:
    """Farthest-point-first subset with pairwise distances > delta (start at 0)."""
    order, radii = greedy_insertion_radii(d)
    return [int(i) for i in order[radii > delta]]


# ---------------------------------------------------------------- regression


@dataclass
class AssouadRegressionFamily:
    points: PointSet
    centers: np.ndarray
    h_n: float
    d: float
    delta_n: float
    smoothness: SmoothnessSpec
    design: DiscreteMeasure
    d_max: float
    # per pool point: index into ``centers`` of the bump it lies under (-1: none)
    owner: np.ndarray = field(repr=False)
    # per pool point: h^beta * bump(rho(owner, x) / h) (unit amplitude)
    profile: np.ndarray = field(repr=False)

    @property
    def m(self) -> int:
        return self.centers.size

    @property
    def beta(self) -> float:
        return self.smoothness.beta


def _regression_profile(points: PointSet, centers: np.ndarray, h: float, beta: float):
    dc = points.distances()[centers]  # (m, N)
    within = dc < h
    if np.any(within.sum(axis=0) > 1):
        raise AuditError("bump supports overlap; centres are not separated enough")
    owner = np.where(within.any(axis=0), within.argmax(axis=0), -1)
    prof = np.zeros(len(points))
    on = owner >= 0
    prof[on] = h**beta * bump(dc[owner[on], np.nonzero(on)[0]] / h)
    return owner, prof


def _regression_dmax(points: PointSet, owner, prof, spec: SmoothnessSpec) -> float:
    """Largest amplitude for which every ``g_theta`` is in the Hoelder class.

    Each point is under at most one bump, so over all bit vectors the largest
    difference between two points is ``|a - b|`` under a shared bump and
    ``max(a, b)`` otherwise (either bump can be the only one switched on).
    """
    if prof.max() <= 0:
        return math.inf
    d = points.distances()
    same = (owner[:, None] == owner[None, :]) & (owner[:, None] >= 0)
    worst = np.where(same, np.abs(prof[:, None] - prof[None, :]), np.maximum(prof[:, None], prof[None, :]))
    bound = spec.C * d**spec.beta
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(worst > 0, bound / worst, math.inf)
    return float(min(spec.C / prof.max(), ratio.min()))


def build_regression_family(
    ps: PointSet,
    delta_n: float,
    d: float,
    spec: SmoothnessSpec,
    max_centers: int | None = None,
) -> AssouadRegressionFamily:
    """Bump family on a greedy ``delta_n``-packing of ``ps`` with ``h_n = delta_n / 4``.

    Raises :class:`AuditError` (reporting the largest admissible amplitude) if
    some ``g_theta`` would leave the Hoelder class with constant ``C`` or
    exceed ``C`` in absolute value on ``ps``.
    """
    if not (delta_n > 0 and d > 0):
        raise DomainError("delta_n and d must be positive")
    centers = _greedy_packing(ps.distances(), delta_n)
    if max_centers is not None:
        centers = centers[:max_centers]
    centers = np.asarray(centers, dtype=int)
    h = delta_n / 4.0
    owner, prof = _regression_profile(ps, centers, h, spec.beta)
    d_max = _regression_dmax(ps, owner, prof, spec)
    if d > d_max * (1.0 + AUDIT_SLACK):
        raise AuditError(
            f"amplitude d={d:g} too large for the Hoelder class; maximal admissible d is {d_max:.6g}"
        )
    design = DiscreteMeasure.uniform(ps, centers)
    return AssouadRegressionFamily(
        points=ps,
        centers=centers,
        h_n=h,
        d=float(d),
        delta_n=float(delta_n),
        smoothness=spec,
        design=design,
        d_max=d_max,
        owner=owner,
        profile=prof,
    )


def _check_theta(theta, length: int) -> np.ndarray:
    theta = np.asarray(theta, dtype=int).ravel()
    if theta.size != length:
        raise DomainError(f"theta has length {theta.size}, expected {length}")
    if np.any((theta != 0) & (theta != 1)):
        raise DomainError("theta must be a 0/1 vector")
    return theta


def eval_g_theta(fam: AssouadRegressionFamily, theta, x: int) -> float:
    """``sum_j theta_j d h^beta bump(rho(z_j, x) / h)`` at pool point ``x``."""
    theta = _check_theta(theta, fam.m)
    dc = fam.points.distances()[fam.centers, x]
    terms = theta * fam.d * fam.h_n**fam.beta * bump(dc / fam.h_n)
    return float(terms.sum())


def g_theta_values(fam: AssouadRegressionFamily, theta) -> np.ndarray:
    """``g_theta`` on the whole pool (uses the one-bump-per-point structure)."""
    theta = _check_theta(theta, fam.m)
    on = fam.owner >= 0
    out = np.zeros(len(fam.points))
    out[on] = fam.d * theta[fam.owner[on]] * fam.profile[on]
    return out


def regression_audit(fam: AssouadRegressionFamily, rng: np.random.Generator | None = None, n_theta: int = 8) -> dict:
    """Separation, Hoelder and per-flip identity checks with margins."""
    rng = rng or np.random.default_rng(0)
    d = fam.points.distances()
    cd = d[np.ix_(fam.centers, fam.centers)]
    off = cd[~np.eye(fam.m, dtype=bool)]
    min_sep = float(off.min()) if off.size else math.inf
    spec = fam.smoothness
    thetas = [np.ones(fam.m, int), np.zeros(fam.m, int)] + [rng.integers(0, 2, fam.m) for _ in range(n_theta)]
    worst_holder = -math.inf
    worst_sup = -math.inf
    for th in thetas:
        g = g_theta_values(fam, th)
        diff = np.abs(g[:, None] - g[None, :])
        worst_holder = max(worst_holder, float((diff - spec.C * d**spec.beta).max()))
        worst_sup = max(worst_sup, float(np.abs(g).max() - spec.C))
    expected = fam.d**2 * fam.h_n ** (2 * spec.beta) * bump(0.0) ** 2 / fam.m
    worst_rel = 0.0
    for th in thetas[:3]:
        for j in range(fam.m):
            flip = th.copy()
            flip[j] ^= 1
            a = np.array([eval_g_theta(fam, th, z) for z in fam.centers])
            b = np.array([eval_g_theta(fam, flip, z) for z in fam.centers])
            got = math.fsum(fam.design.weights * (a - b) ** 2)
            worst_rel = max(worst_rel, abs(got - expected) / expected)
    return {
        "disjoint_balls": {"pass": min_sep > fam.delta_n, "margin": min_sep - fam.delta_n},
        "holder": {"pass": worst_holder <= AUDIT_SLACK, "margin": -worst_holder},
        "sup_bound": {"pass": worst_sup <= AUDIT_SLACK, "margin": -worst_sup},
        "flip_identity": {"pass": worst_rel <= 1e-12, "margin": 1e-12 - worst_rel},
    }


# ---------------------------------------------------------------- classification


@dataclass
class AssouadClassificationFamily:
    points: PointSet
    z_minus1: int
    z_0: int
    packing: np.ndarray  # z_1 .. z_{d_n}
    kappa: float
    smoothness: SmoothnessSpec
    M: float
    M0: float
    delta_n: float
    R: DiscreteMeasure  # support order: z_{-1}, z_0, z_1, ..., z_{d_n}

    @property
    def d_n(self) -> int:
        return self.packing.size

    @property
    def theta_length(self) -> int:
        return self.d_n // 2 + 1

    @property
    def support(self) -> np.ndarray:
        return self.R.support


def _anchor_triple(d: np.ndarray, exhaustive_limit: int = 40) -> tuple[int, int, int]:
    n = d.shape[0]
    if n < 3:
        raise DomainError("need at least three points to pick anchors")
    if n <= exhaustive_limit:
        best, best_val = None, -1.0
        for a, b, c in itertools.combinations(range(n), 3):
            v = min(d[a, b], d[a, c], d[b, c])
            if v > best_val:
                best, best_val = (a, b, c), v
        return best
    order, _ = greedy_insertion_radii(d)
    return tuple(int(i) for i in order[:3])


def build_classification_family(
    ps: PointSet,
    kappa: float,
    spec: SmoothnessSpec,
    delta_n: float,
    max_packing: int | None = None,
) -> AssouadClassificationFamily:
    """Two anchors and an even packing inside the largest Voronoi cell of three far points."""
    beta, C = spec.beta, spec.C
    d = ps.distances()
    y = _anchor_triple(d)
    M = min(d[y[0], y[1]], d[y[0], y[2]], d[y[1], y[2]]) / 2.0
    if M <= 0:
        raise DomainError("anchor candidates coincide; the point set has fewer than 3 distinct points")
    M0 = min(C ** (-1.0 / beta), M)
    upper = M0**beta * C / 8.0
    if not (0.0 < kappa < upper):
        raise DomainError(f"kappa must lie in (0, M0^beta C / 8) = (0, {upper:.6g}), got {kappa}")
    cell = np.argmin(d[:, list(y)], axis=1)
    for k in range(3):
        cell[y[k]] = k
    sizes = np.bincount(cell, minlength=3)
    j = int(np.argmax(sizes))
    others = [y[k] for k in range(3) if k != j]
    members = np.nonzero(cell == j)[0]
    sub = d[np.ix_(members, members)]
    packed = members[_greedy_packing(sub, delta_n)]
    if max_packing is not None:
        packed = packed[:max_packing]
    d_n = packed.size - packed.size % 2
    if d_n < 2:
        raise DomainError(f"packing too small: the cell holds only {packed.size} delta_n-separated points")
    packed = packed[:d_n]
    a = 2.0 * kappa * M0 ** (-beta) / C
    rest = (1.0 - 4.0 * kappa * M0 ** (-beta) / C) / d_n
    support = np.concatenate([[others[0], others[1]], packed])
    weights = np.concatenate([[a, a], np.full(d_n, rest)])
    R = DiscreteMeasure(ps, support, weights)
    return AssouadClassificationFamily(
        points=ps,
        z_minus1=int(others[0]),
        z_0=int(others[1]),
        packing=packed,
        kappa=float(kappa),
        smoothness=spec,
        M=float(M),
        M0=float(M0),
        delta_n=float(delta_n),
        R=R,
    )


def f_theta_on_support(fam: AssouadClassificationFamily, theta) -> np.ndarray:
    """``f_theta`` at ``z_{-1}, z_0, z_1, ..., z_{d_n}`` (support order of ``R``)."""
    theta = _check_theta(theta, fam.theta_length)
    C, beta = fam.smoothness.C, fam.smoothness.beta
    f = np.ones(fam.d_n + 2)
    # M0 <= C^(-1/beta) makes C * M0^beta <= 1; clamp the rounding of that product
    big = 0.5 * min(C * fam.M0**beta, 1.0)
    small = 0.5 * C * fam.delta_n**beta
    f[0] += theta[0] * big
    f[1] -= theta[0] * big
    f[2::2] += theta[1:] * small
    f[3::2] -= theta[1:] * small
    return f


def density_f_theta(fam: AssouadClassificationFamily, theta, y: int) -> float:
    """Density of ``P_theta`` with respect to ``R`` at pool point ``y``."""
    f = f_theta_on_support(fam, theta)
    pos = np.nonzero(fam.support == y)[0]
    if pos.size == 0:
        raise DomainError(f"point {y} is not in the support of R")
    return float(f[pos[0]])


def p_theta(fam: AssouadClassificationFamily, theta) -> DiscreteMeasure:
    f = f_theta_on_support(fam, theta)
    return DiscreteMeasure(fam.points, fam.support, fam.R.weights * f)


def classification_audit(fam: AssouadClassificationFamily) -> dict:
    """Exhaustive checks over every bit vector (meant for small ``d_n``)."""
    C, beta = fam.smoothness.C, fam.smoothness.beta
    R = fam.R
    mass = math.fsum(R.weights)
    ds = R.restrict_distances()
    bound = C * ds**beta
    f_lo, f_hi = math.inf, -math.inf
    tv_margin = math.inf
    holder_margin = math.inf
    kl_margin = math.inf
    integral_err = 0.0
    L = fam.theta_length
    for bits in itertools.product((0, 1), repeat=L):
        th = np.array(bits)
        f = f_theta_on_support(fam, th)
        f_lo, f_hi = min(f_lo, f.min()), max(f_hi, f.max())
        integral_err = max(integral_err, abs(math.fsum(R.weights * f) - 1.0))
        diff = np.abs(f[:, None] - f[None, :])
        holder_margin = min(holder_margin, float((bound - diff).min()))
        P = p_theta(fam, th)
        Pc = p_theta(fam, 1 - th)
        tv_margin = min(tv_margin, tv(P, Pc) - fam.kappa)
        for l in range(1, L):
            on, off = th.copy(), th.copy()
            on[l], off[l] = 1, 0
            k = kl(p_theta(fam, on), p_theta(fam, off))
            # R({z_{2l}}) sits at support position 2l + 1
            kl_bound = 3.0 * C * fam.delta_n**beta * R.weights[2 * l + 1]
            kl_margin = min(kl_margin, kl_bound - k)
    return {
        "weights_sum": {"pass": abs(mass - 1.0) <= 1e-12, "margin": 1e-12 - abs(mass - 1.0)},
        "integrates_to_one": {"pass": integral_err <= 1e-12, "margin": 1e-12 - integral_err},
        "density_range": {
            "pass": f_lo >= 0.5 and f_hi <= 1.5,
            "margin": min(f_lo - 0.5, 1.5 - f_hi),
        },
        "tv_at_least_kappa": {"pass": tv_margin >= 0.0, "margin": tv_margin},
        "holder": {"pass": holder_margin >= 0.0, "margin": holder_margin},
        "kl_per_flip": {"pass": kl_margin >= 0.0, "margin": kl_margin},
        "separation": dict(zip(("pass", "margin"), _separation(fam))),
    }


def _separation(fam: AssouadClassificationFamily) -> tuple[bool, float]:
    """Packing pairwise ``> delta_n`` and anchors ``>= M`` from everything; worst margin."""
    d = fam.points.distances()
    pk = fam.packing
    inner = d[np.ix_(pk, pk)][~np.eye(pk.size, dtype=bool)]
    anchors = np.append(d[np.ix_([fam.z_minus1, fam.z_0], pk)].ravel(), d[fam.z_minus1, fam.z_0])
    m_inner = float(inner.min()) - fam.delta_n if inner.size else math.inf
    m_anchor = float(anchors.min()) - fam.M
    return bool(m_inner > 0 and m_anchor >= 0), min(m_inner, m_anchor)
