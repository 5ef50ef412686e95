import math

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from metric_entropy_lab import (
    DiscreteMeasure,
    MetricSpec,
    PointSet,
    covering_number_exact,
    entropy_profile,
    greedy_net,
    hellinger_sq,
    kl,
    packing_number_exact,
    tv,
)
from metric_entropy_lab.estimators import nw_from_distances, plugin_from_distances
from metric_entropy_lab.models import ClassificationInstance, SmoothnessSpec
from metric_entropy_lab.risk_lab import exact_excess

metrics = st.sampled_from([MetricSpec.sup(), MetricSpec.lp(1), MetricSpec.lp(2), MetricSpec.lp(3.5)])
finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


@st.composite
def pointsets(draw, min_n=1, max_n=8, m=5):
    n = draw(st.integers(min_n, max_n))
    vals = draw(st.lists(st.lists(finite, min_size=m, max_size=m), min_size=n, max_size=n))
    return PointSet(np.linspace(0, 1, m), np.array(vals), draw(metrics))


@settings(max_examples=60, deadline=None)
@given(pointsets(min_n=3, max_n=6))
def test_metric_axioms(ps):
    d = ps.distances()
    assert np.array_equal(d, d.T)
    assert np.all(d >= 0)
    n = len(ps)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                assert d[i, k] <= d[i, j] + d[j, k] + 1e-9 * (1 + d[i, k])


@settings(max_examples=60, deadline=None)
@given(pointsets(max_n=10), st.floats(0.01, 5))
def test_greedy_net_is_packing_and_cover(ps, delta):
    net = greedy_net(ps, delta)
    d = ps.distances()
    sub = d[np.ix_(net, net)]
    assert np.all(sub[~np.eye(len(net), dtype=bool)] >= delta)
    assert np.all(d[net].min(axis=0) < delta)
    assert len(net) >= covering_number_exact(ps, delta)


def off_tie(ps, delta):
    d = ps.distances()
    return bool(np.all(np.abs(d - delta) > 1e-9) and np.all(np.abs(d - delta / 2) > 1e-9))


@settings(max_examples=80, deadline=None)
@given(pointsets(max_n=9), st.floats(0.05, 6))
def test_sandwich_away_from_ties(ps, delta):
    assume(off_tie(ps, delta))
    n_cov = covering_number_exact(ps, delta)
    assert n_cov <= packing_number_exact(ps, delta) <= covering_number_exact(ps, delta / 2)


@settings(max_examples=40, deadline=None)
@given(pointsets(min_n=2, max_n=9), st.lists(st.floats(0.05, 6), min_size=2, max_size=5, unique=True))
def test_profile_monotone(ps, radii):
    prof = entropy_profile(ps, sorted(radii, reverse=True))
    assert prof.is_monotone()


def measure_pair(draw, n):
    ps = PointSet.constants(np.arange(float(n)))
    a = np.array(draw(st.lists(st.floats(0, 1), min_size=n, max_size=n)))
    b = np.array(draw(st.lists(st.floats(0, 1), min_size=n, max_size=n)))
    assume(a.sum() > 1e-6 and b.sum() > 1e-6)
    return DiscreteMeasure.from_masses(ps, a), DiscreteMeasure.from_masses(ps, b)


@settings(max_examples=80, deadline=None)
@given(st.data(), st.integers(1, 6))
def test_divergence_ranges(data, n):
    P, Q = measure_pair(data.draw, n)
    t = tv(P, Q)
    assert 0.0 <= t <= 1.0 and t == tv(Q, P)
    assert 0.0 <= hellinger_sq(P, Q) <= 2.0 + 1e-12
    assert kl(P, Q) >= 0.0
    assert kl(P, P) == 0.0


@settings(max_examples=80, deadline=None)
@given(st.data(), st.integers(1, 6))
def test_any_labelling_has_nonnegative_excess(data, n):
    P, Q = measure_pair(data.draw, n)
    inst = ClassificationInstance(P, Q, 0.0, 0.5, SmoothnessSpec(1.0, 1e6))
    labels = np.array(data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n)))
    assert exact_excess(inst, labels) >= -1e-12


@settings(max_examples=80, deadline=None)
@given(
    st.lists(st.tuples(st.floats(0, 3), st.floats(-10, 10)), min_size=1, max_size=30),
    st.floats(0.01, 3),
    st.floats(0.001, 1),
)
def test_nw_is_zero_or_in_ball_average(pairs, h, delta_n):
    dist = np.array([[p[0] for p in pairs]])
    y = np.array([p[1] for p in pairs])
    est, b = nw_from_distances(dist, y, h, delta_n)
    inside = dist[0] < h
    assert b[0] == inside.sum() / y.size
    if b[0] > delta_n:
        assert math.isclose(est[0], math.fsum(y[inside]) / inside.sum(), rel_tol=0, abs_tol=0)
        assert y[inside].min() <= est[0] <= y[inside].max()
    else:
        assert est[0] == 0.0


@settings(max_examples=80, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 3), st.integers(0, 1)), min_size=1, max_size=30), st.floats(0.01, 3))
def test_plugin_matches_frequency_comparison(pairs, h):
    dist = np.array([[p[0] for p in pairs]])
    w = np.array([p[1] for p in pairs])
    labels, p0, p1 = plugin_from_distances(dist, w, h)
    from fractions import Fraction

    inside = dist[0] < h
    n0, n1 = int((w == 0).sum()), int((w == 1).sum())
    f0 = Fraction(int((inside & (w == 0)).sum()), n0) if n0 else Fraction(0)
    f1 = Fraction(int((inside & (w == 1)).sum()), n1) if n1 else Fraction(0)
    assert labels[0] == (0 if f0 >= f1 else 1)
