import itertools
import math

import numpy as np
import pytest

from metric_entropy_lab import PointSet, kl, tv
from metric_entropy_lab.errors import AuditError, DomainError
from metric_entropy_lab.hard_instances import (
    build_classification_family,
    build_regression_family,
    bump,
    bump_sup_and_lipschitz,
    classification_audit,
    density_f_theta,
    eval_g_theta,
    f_theta_on_support,
    g_theta_values,
    p_theta,
    regression_audit,
)
from metric_entropy_lab.models import SmoothnessSpec

LIP1 = SmoothnessSpec(1.0, 1.0)


def test_bump_values():
    assert bump(0.0) == math.exp(-1)
    assert bump(1.0) == 0.0 and bump(-1.0) == 0.0 and bump(3.0) == 0.0
    assert bump(0.5) == pytest.approx(math.exp(-4 / 3), rel=1e-15)
    assert bump(np.array([0.0, 2.0])).tolist() == [math.exp(-1), 0.0]


def test_bump_lipschitz_on_fine_grid():
    sup, lip = bump_sup_and_lipschitz()
    t = np.linspace(-1.2, 1.2, 4801)
    v = bump(t)
    assert np.all(np.abs(np.diff(v)) <= max(sup, lip) * np.diff(t) + 1e-15)


@pytest.fixture
def four_centres():
    return PointSet.constants([0.0, 1.0, 2.0, 3.0])


def test_regression_flip_identity_worked_value(four_centres):
    fam = build_regression_family(four_centres, 0.4, 0.1, LIP1)
    assert fam.m == 4 and fam.h_n == pytest.approx(0.1)
    theta = np.array([1, 0, 1, 0])
    flip = theta.copy()
    flip[1] ^= 1
    a, b = g_theta_values(fam, theta), g_theta_values(fam, flip)
    got = math.fsum(fam.design.dense() * (a - b) ** 2)
    expected = 0.01 * 0.01 * math.exp(-2) / 4
    assert got == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(3.383e-6, rel=1e-3)


def test_g_theta_point_values():
    ps = PointSet.constants([0.0, 0.05, 1.0, 2.0])
    fam = build_regression_family(ps, 0.4, 0.1, LIP1)
    assert 1 not in fam.centers.tolist()
    theta = np.zeros(fam.m, int)
    assert np.all(g_theta_values(fam, theta) == 0)
    j = fam.centers.tolist().index(0)
    theta[j] = 1
    h = fam.h_n
    assert eval_g_theta(fam, theta, 0) == pytest.approx(0.1 * h * math.exp(-1), rel=1e-14)
    assert eval_g_theta(fam, theta, 1) == pytest.approx(0.1 * h * math.exp(-4 / 3), rel=1e-12)
    assert eval_g_theta(fam, theta, 2) == 0.0


def test_theta_length_checked(four_centres):
    fam = build_regression_family(four_centres, 0.4, 0.1, LIP1)
    with pytest.raises(DomainError):
        eval_g_theta(fam, [1, 0], 0)


def test_amplitude_too_large_reports_maximum(four_centres):
    fam = build_regression_family(four_centres, 0.4, 0.1, LIP1)
    with pytest.raises(AuditError, match="maximal admissible d"):
        build_regression_family(four_centres, 0.4, fam.d_max * 1.01, LIP1)
    at_max = build_regression_family(four_centres, 0.4, fam.d_max, LIP1)
    assert all(v["pass"] for v in regression_audit(at_max).values())


def test_regression_audit_passes(rng):
    from metric_entropy_lab.models import lipschitz_pointset

    ps = lipschitz_pointset(60, 1.0, np.linspace(0, 1, 21), rng)
    probe = build_regression_family(ps, 0.3, 1e-9, LIP1)
    fam = build_regression_family(ps, 0.3, 0.5 * probe.d_max, LIP1)
    report = regression_audit(fam, rng)
    assert set(report) == {"disjoint_balls", "holder", "sup_bound", "flip_identity"}
    assert all(v["pass"] for v in report.values())


@pytest.fixture
def cluster_points():
    return PointSet.constants([0.0, 10.0, 20.0, 20.5, 21.0, 21.5, 22.0, 22.5])


def test_classification_family_layout(cluster_points):
    fam = build_classification_family(cluster_points, 0.1, LIP1, 0.4)
    assert {fam.z_minus1, fam.z_0} == {0, 1}
    assert fam.M == 5.0 and fam.M0 == 1.0
    assert fam.d_n == 6 and sorted(fam.packing.tolist()) == [2, 3, 4, 5, 6, 7]
    w = fam.R.weights
    assert w[0] == w[1] == pytest.approx(2 * 0.1)
    assert w[2:] == pytest.approx(np.full(6, (1 - 0.4) / 6))
    assert math.fsum(w) == pytest.approx(1.0, abs=1e-12)


def test_density_examples(cluster_points):
    fam = build_classification_family(cluster_points, 0.1, LIP1, 0.4)
    theta = np.zeros(fam.theta_length, int)
    assert all(density_f_theta(fam, theta, y) == 1.0 for y in fam.support)
    theta[0] = 1
    assert density_f_theta(fam, theta, fam.z_minus1) == 1.5
    assert density_f_theta(fam, theta, fam.z_0) == 0.5
    for bits in itertools.product((0, 1), repeat=fam.theta_length):
        f = f_theta_on_support(fam, bits)
        assert np.all(f[2::2] + f[3::2] == 2.0)


def test_flip_pair_divergences(cluster_points):
    fam = build_classification_family(cluster_points, 0.1, LIP1, 0.4)
    theta = np.array([1, 0, 1, 1])
    P, Pc = p_theta(fam, theta), p_theta(fam, 1 - theta)
    assert tv(P, Pc) >= fam.kappa
    on, off = theta.copy(), theta.copy()
    on[1], off[1] = 1, 0
    assert kl(p_theta(fam, on), p_theta(fam, off)) <= 3 * 1.0 * 0.4 * fam.R.weights[3]


def test_classification_audit_passes(cluster_points):
    report = classification_audit(build_classification_family(cluster_points, 0.1, LIP1, 0.4))
    assert all(v["pass"] for v in report.values()), report


def test_classification_rejects_bad_kappa_and_tiny_packing(cluster_points):
    with pytest.raises(DomainError, match="kappa"):
        build_classification_family(cluster_points, 0.2, LIP1, 0.4)
    with pytest.raises(DomainError, match="packing too small"):
        build_classification_family(cluster_points, 0.1, LIP1, 5.0)


def test_anchor_density_stays_in_range_when_m0_is_the_smoothness_cap(cluster_points):
    # C * (C^(-1/beta))^beta rounds to 1 + 2^-52 for these constants
    spec = SmoothnessSpec(0.75, 2.002142359499137)
    assert spec.C * (spec.C ** (-1 / spec.beta)) ** spec.beta > 1.0
    fam = build_classification_family(cluster_points, 0.05, spec, 0.2)
    assert fam.M0 == spec.C ** (-1 / spec.beta)
    f = f_theta_on_support(fam, np.ones(fam.theta_length, int))
    assert f.max() == 1.5 and f.min() == 0.5
