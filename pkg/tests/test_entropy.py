import math

import numpy as np
import pytest

from metric_entropy_lab import (
    DiscreteMeasure,
    EntropyEnvelope,
    EntropyProfile,
    PointSet,
    covering_number_exact,
    entropy_profile,
    fit_gamma,
    greedy_net,
    lemma1_check,
    packing_number_exact,
    small_ball,
)
from metric_entropy_lab.entropy import envelope_at_gamma, greedy_insertion_radii, small_ball_profile
from metric_entropy_lab.errors import (
    DomainError,
    InsufficientDataError,
    InvariantError,
    PreconditionError,
    TooLargeForExactSearch,
)
from metric_entropy_lab.models import lipschitz_pointset


def test_covering_three_constants(three_constants):
    assert covering_number_exact(three_constants, 1.5) == 1
    assert covering_number_exact(three_constants, 0.75) == 3


def test_singleton_counts():
    one = PointSet.constants([0.3])
    for delta in (1e-6, 1.0, 50.0):
        assert covering_number_exact(one, delta) == 1
        assert packing_number_exact(one, delta) == 1
    assert greedy_net(one, 0.1) == [0]


def test_open_balls_at_exact_radius(three_constants):
    # radius 1 does not reach a neighbour at distance exactly 1
    assert covering_number_exact(three_constants, 1.0) == 3
    assert covering_number_exact(three_constants, 1.0 + 1e-12) == 1


def test_packing_three_constants(three_constants):
    assert packing_number_exact(three_constants, 1.5) == 2
    assert packing_number_exact(three_constants, 2.5) == 1
    # strict > : the pair {0, 2} at distance 2 is not a 2-packing
    assert packing_number_exact(three_constants, 2.0) == 1


def test_greedy_examples(three_constants):
    assert greedy_net(three_constants, 1.5) == [0, 2]
    tenths = PointSet.constants(np.round(np.linspace(0, 1, 11), 10))
    assert len(greedy_net(tenths, 0.35)) == 3


def test_greedy_insertion_radii_nonincreasing(rng):
    from conftest import random_pointset

    ps = random_pointset(rng, 40)
    order, radii = greedy_insertion_radii(ps.distances())
    assert sorted(order.tolist()) == list(range(40))
    assert math.isinf(radii[0])
    assert np.all(np.diff(radii[1:]) <= 0)


def test_ambient_cover_with_extra_centre():
    ps = PointSet.constants([0.0, 2.0])
    pool = PointSet.constants([0.0, 1.0, 2.0])
    assert covering_number_exact(ps, 1.5) == 2
    assert covering_number_exact(ps, 1.5, intrinsic=False, centers=pool) == 1


def test_ambient_needs_centres(three_constants):
    with pytest.raises(DomainError):
        covering_number_exact(three_constants, 1.0, intrinsic=False)


def test_threshold_refusal():
    ps = PointSet.constants(np.arange(15.0))
    with pytest.raises(TooLargeForExactSearch, match="greedy"):
        covering_number_exact(ps, 1.0)
    with pytest.raises(TooLargeForExactSearch):
        packing_number_exact(ps, 1.0)
    assert covering_number_exact(ps, 1.5, threshold=20) == 5


def test_sandwich_fails_only_at_ties():
    """With open balls and strict packing, N(d) <= D(d) can fail when a distance equals d."""
    ps = PointSet.constants([0.0, 1.0])
    assert covering_number_exact(ps, 1.0) == 2
    assert packing_number_exact(ps, 1.0) == 1
    # an arbitrarily small move off the tie restores the inequality
    assert covering_number_exact(ps, 1.0 + 1e-9) <= packing_number_exact(ps, 1.0 + 1e-9)


def test_profile_examples(three_constants):
    prof = entropy_profile(PointSet.constants([5.0]), [1.0, 0.5])
    assert prof.counts == (1, 1) and prof.modes == ("exact", "exact")
    prof = entropy_profile(three_constants, [1.5, 0.75])
    assert prof.counts == (1, 3) and prof.modes == ("exact", "exact")


def test_profile_greedy_mode_and_bounds(rng):
    ps = lipschitz_pointset(30, 1.0, np.linspace(0, 1, 21), rng)
    radii = [0.8, 0.4, 0.2, 0.1]
    up = entropy_profile(ps, radii)
    lo = entropy_profile(ps, radii, bound="lower")
    assert set(up.modes) == {"greedy-upper"} and set(lo.modes) == {"greedy-lower"}
    assert up.is_monotone() and lo.is_monotone()
    assert all(a <= b for a, b in zip(lo.counts, up.counts))
    for r, c in zip(radii, up.counts):
        assert c == len(greedy_net(ps, r))


def test_profile_rejects_unsorted(three_constants):
    with pytest.raises(DomainError):
        entropy_profile(three_constants, [0.5, 1.0])
    with pytest.raises(InvariantError):
        EntropyProfile((1.0, 0.5), (3, 1), ("exact", "exact"))


def test_fit_gamma_recovers_synthetic():
    radii = (0.5, 0.4, 0.3, 0.25, 0.2)
    counts = tuple(int(round(math.exp(2 * s**-1.5))) for s in radii)
    env = fit_gamma(EntropyProfile(radii, counts, ("exact",) * 5), (0.2, 0.5))
    assert abs(env.gamma - 1.5) < 0.1
    assert env.c_low <= env.c_high
    for s, c in zip(radii, counts):
        assert env.c_low * s**-env.gamma - 1e-12 <= math.log(c) <= env.c_high * s**-env.gamma + 1e-12


def test_fit_gamma_flat_profile_is_flagged():
    radii = (0.5, 0.4, 0.3, 0.2)
    with pytest.warns(RuntimeWarning):
        env = fit_gamma(EntropyProfile(radii, (5, 5, 5, 5), ("exact",) * 4), (0.2, 0.5))
    assert abs(env.gamma) < 1e-9
    assert "nonpositive-gamma" in env.flags


def test_fit_gamma_needs_three_points():
    prof = EntropyProfile((0.5, 0.3, 0.1), (1, 2, 4), ("exact",) * 3)
    with pytest.raises(InsufficientDataError):
        fit_gamma(prof, (0.1, 0.5))


def test_envelope_at_fixed_gamma():
    prof = EntropyProfile((0.5, 0.25), (2, 4), ("exact", "exact"))
    env = envelope_at_gamma(prof, (0.25, 0.5), 1.0)
    assert env.c_low == pytest.approx(0.5 * math.log(2))
    assert env.c_high == pytest.approx(0.25 * math.log(4))


def test_small_ball_examples():
    ps = PointSet.constants([0.0, 0.5, 2.0])
    P = DiscreteMeasure.uniform(ps)
    assert small_ball(P, 0, 1.0) == pytest.approx(2 / 3)
    assert small_ball(P, 0, 0.1) == pytest.approx(1 / 3)
    assert small_ball(P, 2, 10.0) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        small_ball(DiscreteMeasure(ps, [0, 1], [0.5, 0.5]), 2, 1.0)


def test_small_ball_profile_matches_pointwise(rng):
    from conftest import random_pointset

    ps = random_pointset(rng, 20)
    P = DiscreteMeasure.from_masses(ps, rng.random(20))
    prof = small_ball_profile(P, 0.7)
    for i, v in prof.as_map().items():
        assert v == small_ball(P, i, 0.7)


def test_small_ball_bound_trivial_and_separated():
    ps = PointSet.constants(np.arange(10.0))
    P = DiscreteMeasure.uniform(ps)
    env = EntropyEnvelope(gamma=1.0, c_low=0.0, c_high=5.0, s0=1.0, fit_residual=0.0)
    rec = lemma1_check(P, 0.5, 1.0, env)
    assert rec.holds and rec.rhs >= 1.0
    rec = lemma1_check(P, 0.5, 0.05, env)
    assert rec.lhs == 0.0 and rec.holds


def test_small_ball_bound_refuses_uncertified_envelope():
    ps = PointSet.constants(np.arange(10.0))
    P = DiscreteMeasure.uniform(ps)
    tiny = EntropyEnvelope(gamma=1.0, c_low=0.0, c_high=1e-3, s0=1.0, fit_residual=0.0)
    with pytest.raises(PreconditionError):
        lemma1_check(P, 0.5, 0.05, tiny)


def test_envelope_constants_hold_in_floating_point(rng):
    # arbitrary radii and counts: the fitted envelope must hold exactly as evaluated
    for _ in range(200):
        radii = tuple(sorted(rng.uniform(0.01, 1.0, 5), reverse=True))
        counts = tuple(sorted(rng.integers(2, 10_000, 5).tolist()))
        if len(set(radii)) < 5:
            continue
        prof = EntropyProfile(radii, counts, ("exact",) * 5)
        env = envelope_at_gamma(prof, (radii[-1], radii[0]), float(rng.uniform(0.3, 3.0)))
        for s, c in zip(radii, counts):
            assert env.c_low * s**-env.gamma <= math.log(c) <= env.c_high * s**-env.gamma


def test_certification_uses_exact_count_on_small_supports():
    from metric_entropy_lab.entropy import certify_envelope

    # at radius 0.6 (h/2) the greedy net from 0 has two centres; the middle point alone covers
    ps = PointSet.constants([0.0, 0.55, 1.1])
    P = DiscreteMeasure.uniform(ps)
    assert len(greedy_net(ps, 0.6)) == 2
    assert covering_number_exact(ps, 0.6) == 1
    env = EntropyEnvelope(gamma=1.0, c_low=0.0, c_high=1e-9, s0=1.0, fit_residual=0.0)
    assert certify_envelope(P, 1.2, env) == 1
