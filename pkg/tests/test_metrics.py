import math

import numpy as np
import pytest
from scipy.stats import chi2

from scmavlc.designer import random_init
from scmavlc.exceptions import (
    CapacityError,
    DimensionError,
    DomainError,
    UnsupportedError,
)
from scmavlc.metrics import (
    CHI2_2DOF_95,
    StackedVector,
    epd_ellipses,
    logsumexp_gradient,
    logsumexp_objective,
    objective_and_gradient,
    pair_blocks,
    pair_distances,
    pairwise_report,
    red,
    squared_med,
)
from scmavlc.model import SystemParams, enumerate_superimposed


def test_red_values():
    assert red([1.0, 0.0], [0.0, 1.0], 3.0) == 1.0
    assert red([1.0, 0.0], [0.0, 1.0], 0.0) == 2.0
    assert red([2.0, 2.0], [2.0, 2.0], 5.0) == 0.0
    assert red([0.0, 0.0], [3.0, 0.0], 0.0) == 9.0
    assert red([0.0], [3.0], 1.0) == pytest.approx(9.0 / 2.0)


def test_red_properties():
    rng = np.random.default_rng(3)
    for _ in range(20):
        s_i, s_j = rng.uniform(0, 10, size=(2, 4))
        assert red(s_i, s_j, 5.0) == pytest.approx(red(s_j, s_i, 5.0), rel=1e-15)
        assert red(s_i, s_j, 5.0) <= red(s_i, s_j, 0.0)
        assert red(s_i, s_j, 0.0) == pytest.approx(np.sum((s_i - s_j) ** 2))


def test_red_stacks():
    s_i = np.array([[1.0, 0.0], [0.0, 0.0]])
    s_j = np.array([[0.0, 1.0], [3.0, 0.0]])
    assert red(s_i, s_j, 0.0).tolist() == [2.0, 9.0]


def test_red_errors():
    with pytest.raises(DomainError):
        red([-0.1, 0.0], [0.0, 1.0], 1.0)
    with pytest.raises(DimensionError):
        red([1.0, 0.0], [0.0, 1.0, 0.0], 1.0)


def test_pair_blocks_cover_all_pairs_in_order():
    i, j = zip(*pair_blocks(7, pairs_per_block=5))
    i, j = np.concatenate(i), np.concatenate(j)
    expected = [(a, b) for a in range(7) for b in range(a + 1, 7)]
    assert list(zip(i.tolist(), j.tolist())) == expected
    assert list(pair_blocks(1)) == []


def test_report_matches_brute_force(ls_j3):
    constellation = enumerate_superimposed(ls_j3)
    report = pairwise_report(constellation, 5.0)
    assert report.pair_count == 2016

    points = constellation.points
    brute = [
        red(points[a], points[b], 5.0)
        for a in range(64)
        for b in range(a + 1, 64)
    ]
    assert report.d_min == pytest.approx(min(brute), rel=1e-12)
    assert report.d_max == pytest.approx(max(brute), rel=1e-12)
    assert report.d_min > 0
    np.testing.assert_allclose(pair_distances(constellation, 5.0), brute, rtol=1e-12)


def test_report_histogram(ls_j3):
    report = pairwise_report(enumerate_superimposed(ls_j3), 5.0, bins=10)
    counts, edges = report.histogram
    assert counts.sum() == 2016
    assert edges[0] == report.d_min and edges[-1] == report.d_max
    assert report.as_dict() == {
        "d_min": report.d_min,
        "d_max": report.d_max,
        "pair_count": 2016,
    }


def test_zero_shot_noise_is_squared_med(ls_j3):
    constellation = enumerate_superimposed(ls_j3)
    report = pairwise_report(constellation, 0.0)
    assert report.d_min == pytest.approx(squared_med(constellation), rel=1e-12)


def test_duplicate_points():
    points = np.array([[1.0, 2.0], [3.0, 0.0], [1.0, 2.0]])
    assert pairwise_report(points, 5.0).d_min == 0.0
    assert pairwise_report(points[:1], 5.0).pair_count == 0


def test_pair_capacity(ls_j3):
    with pytest.raises(CapacityError):
        pairwise_report(enumerate_superimposed(ls_j3), 5.0, max_pairs=1000)


def test_stacked_vector_reproduces_enumeration(ls_j3):
    stacked = StackedVector.from_codebook_set(ls_j3)
    assert stacked.L.size == 3 * 4 * 2
    np.testing.assert_allclose(
        stacked.superimposed(),
        enumerate_superimposed(ls_j3).points,
        rtol=0,
        atol=1e-12,
    )
    assert stacked.to_codebook_set(ls_j3) == ls_j3
    assert stacked.replace(stacked.L) == stacked


def _params():
    return SystemParams(J=3, varsigma2=5.0, Pe=30.0)


def test_objective_brackets_d_min():
    stacked = random_init(_params(), 11)
    d_min = pairwise_report(stacked.superimposed(), 5.0).d_min
    n_ordered = 64 * 63
    for beta in (1.0, 5.0, 10.0, 30.0):
        f = logsumexp_objective(stacked, beta, 5.0)
        assert -f <= d_min + 1e-12
        assert -f >= d_min - math.log(n_ordered) / beta - 1e-12


def test_objective_tightens_with_beta():
    stacked = random_init(_params(), 4)
    values = [-logsumexp_objective(stacked, beta, 5.0) for beta in range(1, 31)]
    assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))


def test_two_point_objective(binary_set):
    stacked = StackedVector.from_codebook_set(binary_set)
    for beta in (1.0, 10.0):
        f, grad = objective_and_gradient(stacked, beta, 0.0)
        assert f == pytest.approx(-0.09 + math.log(2.0) / beta, rel=1e-12)
        np.testing.assert_allclose(grad, [0.6, -0.6], rtol=1e-12)


def test_single_point_objective():
    params = SystemParams(K=1, J=1, M=1, N=1, sigma2=0.01, varsigma2=5.0, Pe=1.0)
    stacked = random_init(params, 0)
    f, grad = objective_and_gradient(stacked, 5.0, 5.0)
    assert f == 0.0
    assert not grad.any()


def test_objective_errors():
    stacked = random_init(_params(), 0)
    with pytest.raises(DomainError):
        logsumexp_objective(stacked, 0.0, 5.0)
    with pytest.raises(DomainError):
        logsumexp_objective(stacked.replace(-stacked.L), 1.0, 5.0)


def _central_difference(stacked, beta, varsigma2, h=1e-6):
    grad = np.zeros_like(stacked.L)
    for index in range(stacked.L.size):
        step = np.zeros_like(stacked.L)
        step[index] = h
        upper = logsumexp_objective(stacked.replace(stacked.L + step), beta, varsigma2)
        lower = logsumexp_objective(stacked.replace(stacked.L - step), beta, varsigma2)
        grad[index] = (upper - lower) / (2 * h)
    return grad


@pytest.mark.parametrize("beta", [1.0, 10.0, 30.0])
def test_gradient_matches_finite_differences(beta):
    params = _params()
    for seed in range(20):
        stacked = random_init(params, [seed, 99], epsilon_floor=0.5)
        analytic = logsumexp_gradient(stacked, beta, params.varsigma2)
        numeric = _central_difference(stacked, beta, params.varsigma2)
        error = np.linalg.norm(analytic - numeric) / np.linalg.norm(analytic)
        assert error < 1e-5


def test_objective_and_gradient_agree():
    stacked = random_init(_params(), 2)
    f, grad = objective_and_gradient(stacked, 3.0, 5.0)
    assert f == logsumexp_objective(stacked, 3.0, 5.0)
    assert np.array_equal(grad, logsumexp_gradient(stacked, 3.0, 5.0))


def test_epd_circles_without_shot_noise():
    book = np.array([[0.0, 4.0, 9.0, 1.0], [0.0, 4.0, 0.01, 1.0]])
    for ellipse in epd_ellipses(book, 0.01, 0.0):
        np.testing.assert_allclose(ellipse.semi_axes, math.sqrt(CHI2_2DOF_95 * 0.01))
        assert ellipse.axis_directions.tolist() == [[1.0, 0.0], [0.0, 1.0]]


def test_epd_ellipse_elongation():
    ellipses = epd_ellipses(np.array([[0.01, 0.0], [9.0, 0.0]]), 0.01, 5.0)
    first = ellipses[0]
    assert first.center.tolist() == [0.01, 9.0]
    np.testing.assert_allclose(
        first.semi_axes,
        np.sqrt(CHI2_2DOF_95 * 0.01 * (1 + 5.0 * np.array([0.01, 9.0]))),
    )
    assert first.semi_axes[1] > first.semi_axes[0]
    assert first.confidence == 0.95


def test_epd_confidence_levels(ls_j3):
    ellipse = epd_ellipses(ls_j3.books[0], 0.01, 5.0, confidence=0.99)[0]
    expected = np.sqrt(chi2.ppf(0.99, 2) * 0.01 * (1 + 5.0 * ls_j3.books[0].C[:, 0]))
    np.testing.assert_allclose(ellipse.semi_axes, expected, rtol=1e-12)
    with pytest.raises(DomainError):
        epd_ellipses(ls_j3.books[0], 0.01, 5.0, confidence=1.0)


def test_epd_needs_two_dimensions():
    with pytest.raises(UnsupportedError):
        epd_ellipses(np.ones((3, 4)), 0.01, 5.0)
