import numpy as np
import pytest
from scipy import stats

from tclust.model import InvalidInput
from tclust.simgen import (
    SimScheme,
    chi2_quantile,
    generate,
    group_sizes,
    min_mahalanobis,
    scheme_params,
)


@pytest.mark.parametrize("prob, df", [(0.975, 2), (0.975, 6), (0.5, 1), (0.99, 10), (0.01, 3)])
def test_chi2_quantile_matches_scipy(prob, df):
    assert chi2_quantile(prob, df) == pytest.approx(stats.chi2.ppf(prob, df), abs=1e-8)


def test_chi2_quantile_known_value():
    assert chi2_quantile(0.975, 2) == pytest.approx(7.3778, abs=1e-4)


def test_scheme_m4_constants():
    means, covs = scheme_params(SimScheme("M4", p=3))
    np.testing.assert_array_equal(means, [[0, 8, 0], [8, 0, 0], [-8, -8, 0]])
    np.testing.assert_array_equal(covs[0], np.diag([1, 1, 1]))
    np.testing.assert_array_equal(covs[1], np.diag([20, 5, 1]))
    np.testing.assert_array_equal(covs[2], [[15, -10, 0], [-10, 15, 0], [0, 0, 1]])


def test_group_sizes():
    assert group_sizes(1800, "equal") == [600, 600, 600]
    assert group_sizes(1800, "unequal") == [360, 720, 720]
    assert group_sizes(10, "equal") == [3, 3, 4]


def test_scheme_validation():
    with pytest.raises(InvalidInput):
        SimScheme("M9")
    with pytest.raises(InvalidInput):
        SimScheme(p=1)
    with pytest.raises(InvalidInput):
        SimScheme(weights="skewed")


def test_generate_layout_and_outliers():
    scheme = SimScheme("M5", p=3, n_regular=600, n_outliers=100, seed=4)
    data, truth = generate(scheme)
    assert data.points.shape == (700, 3)
    assert np.bincount(truth).tolist() == [100, 200, 200, 200]
    assert np.all(truth[:600] > 0) and np.all(truth[600:] == 0)
    means, covs = scheme_params(scheme)
    out = data.points[truth == 0]
    reg = data.points[truth > 0]
    assert np.all(min_mahalanobis(out, means, covs) > chi2_quantile(0.975, 3))
    assert np.all(out >= reg.min(axis=0)) and np.all(out <= reg.max(axis=0))


def test_generate_is_deterministic():
    a, ta = generate(SimScheme("M2", seed=11, n_regular=90, n_outliers=10))
    b, tb = generate(SimScheme("M2", seed=11, n_regular=90, n_outliers=10))
    c, _ = generate(SimScheme("M2", seed=12, n_regular=90, n_outliers=10))
    assert np.array_equal(a.points, b.points) and np.array_equal(ta, tb)
    assert not np.array_equal(a.points, c.points)


def test_generate_group_moments():
    scheme = SimScheme("M4", p=2, n_regular=30000, n_outliers=0, seed=1)
    data, truth = generate(scheme)
    means, covs = scheme_params(scheme)
    for j in range(3):
        pts = data.points[truth == j + 1]
        se = np.sqrt(np.diag(covs[j]) / len(pts))
        assert np.all(np.abs(pts.mean(axis=0) - means[j]) < 4 * se)
        np.testing.assert_allclose(np.cov(pts.T), covs[j], rtol=0.1, atol=0.3)
