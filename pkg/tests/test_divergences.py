import math

import numpy as np
import pytest

from metric_entropy_lab import DiscreteMeasure, PointSet, hellinger_sq, kl, tv
from metric_entropy_lab.errors import DomainError, InvariantError


@pytest.fixture
def pool():
    return PointSet.constants([0.0, 1.0, 2.0])


def m(pool, w):
    return DiscreteMeasure(pool, np.arange(len(w)), np.array(w, dtype=float))


def test_tv_examples(pool):
    P = m(pool, [0.2, 0.3, 0.5])
    assert tv(P, P) == 0.0
    assert tv(m(pool, [0.5, 0.5]), m(pool, [1.0, 0.0])) == 0.5
    assert tv(P, m(pool, [0.5, 0.3, 0.2])) == pytest.approx(0.3, abs=1e-15)


def test_hellinger_examples(pool):
    P = m(pool, [1.0, 0.0])
    assert hellinger_sq(P, P) == 0.0
    assert hellinger_sq(P, m(pool, [0.5, 0.5])) == pytest.approx((1 - math.sqrt(0.5)) ** 2 + 0.5, abs=1e-15)
    disjoint_a = DiscreteMeasure(pool, [0], [1.0])
    disjoint_b = DiscreteMeasure(pool, [2], [1.0])
    assert hellinger_sq(disjoint_a, disjoint_b) == pytest.approx(2.0)


def test_kl_examples(pool):
    P = m(pool, [0.5, 0.5])
    assert kl(P, P) == 0.0
    assert kl(m(pool, [1.0, 0.0]), m(pool, [0.0, 1.0])) == math.inf
    expected = 0.5 * math.log(2) + 0.5 * math.log(2 / 3)
    assert kl(P, m(pool, [0.25, 0.75])) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(0.14384, abs=1e-5)


def test_measures_on_different_supports(pool):
    P = DiscreteMeasure(pool, [0, 1], [0.5, 0.5])
    Q = DiscreteMeasure(pool, [1, 2], [0.5, 0.5])
    assert tv(P, Q) == pytest.approx(0.5)
    assert kl(P, Q) == math.inf


def test_unnormalised_weights_rejected(pool):
    with pytest.raises(InvariantError):
        DiscreteMeasure(pool, [0, 1], [0.5, 0.6])
    with pytest.raises((DomainError, InvariantError)):
        DiscreteMeasure(pool, [0, 1], [1.5, -0.5])


def test_from_masses_normalises(pool):
    P = DiscreteMeasure.from_masses(pool, [1.0, 1.0, 2.0])
    assert math.fsum(P.weights) == 1.0
    assert P.weight_of(2) == pytest.approx(0.5)


def test_sample_respects_support(pool, rng):
    P = DiscreteMeasure(pool, [0, 2], [0.25, 0.75])
    s = P.sample(rng, 4000)
    assert set(np.unique(s)) <= {0, 2}
    assert abs((s == 2).mean() - 0.75) < 4 * math.sqrt(0.75 * 0.25 / 4000)


def test_tv_bounds_hellinger(rng, pool):
    # Le Cam: H^2 / 2 <= TV <= H sqrt(1 - H^2/4), with H^2 on the [0, 2] scale
    for _ in range(50):
        a, b = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
        P, Q = DiscreteMeasure.from_masses(pool, a), DiscreteMeasure.from_masses(pool, b)
        h2 = hellinger_sq(P, Q)
        t = tv(P, Q)
        assert h2 / 2 <= t + 1e-15
        assert t <= math.sqrt(h2 * (1 - h2 / 4)) + 1e-15
        # Pinsker
        assert t <= math.sqrt(kl(P, Q) / 2) + 1e-15
