import numpy as np
import pytest

from tclust.density import assign
from tclust.model import (
    ConstraintSpec,
    Dataset,
    FitConfig,
    InvalidInput,
    Mode,
    ModelParams,
    validate_params,
)
from tclust.solver import (
    comparator_spec,
    concentration_step,
    fit,
    fit_comparator,
    init_random,
    run_start,
    worker_count,
)

FREE = ConstraintSpec(Mode.NONE)


def test_init_random_is_deterministic():
    x = np.random.default_rng(0).normal(size=(20, 2))
    a, b = init_random(x, 3, seed=7), init_random(x, 3, seed=7)
    np.testing.assert_array_equal(a.means, b.means)
    np.testing.assert_array_equal(a.covariances, np.repeat(np.eye(2)[None], 3, axis=0))
    np.testing.assert_allclose(a.weights, 1 / 3)


def test_init_random_k_equals_n_uses_every_point():
    x = np.arange(8.0).reshape(4, 2)
    prm = init_random(x, 4, seed=1)
    assert sorted(map(tuple, prm.means)) == sorted(map(tuple, x))
    with pytest.raises(InvalidInput):
        init_random(x, 5)


def test_concentration_step_mle_is_fixed_point():
    x = np.array([[0.0], [1.0], [2.0], [3.0]])
    prm = ModelParams([1.0], [[1.5]], [[[1.25]]])
    new, a = concentration_step(prm, x, FitConfig(alpha=0.0), FREE)
    assert a.counts.tolist() == [4]
    np.testing.assert_allclose(new.means, prm.means)
    np.testing.assert_allclose(new.covariances, prm.covariances)


def test_concentration_step_trims_far_point():
    x = np.array([[0.0], [1.0], [-1.0], [0.5], [100.0]])
    prm = ModelParams([1.0], [[0.0]], [[[1.0]]])
    new, a = concentration_step(prm, x, FitConfig(alpha=0.2), FREE)
    assert a.labels[4] == 0
    assert new.means[0, 0] == pytest.approx(0.125)


def test_concentration_step_weights_are_proportions():
    x = np.array([[0.0], [0.1], [0.2], [10.0]])
    prm = ModelParams([0.5, 0.5], [[0.0], [10.0]], [[[1.0]], [[1.0]]])
    new, _ = concentration_step(prm, x, FitConfig(alpha=0.0), FREE)
    np.testing.assert_allclose(new.weights, [0.75, 0.25])


def test_fit_recovers_two_separated_clusters():
    rng = np.random.default_rng(3)
    x = np.vstack([rng.normal(size=(50, 2)), rng.normal(size=(50, 2)) + [20, 0]])
    res = fit(x, 2, ConstraintSpec(Mode.EIGEN, 5), FitConfig(alpha=0.05, n_starts=10, seed=1))
    centres = sorted(res.params.means[:, 0])
    assert centres[0] == pytest.approx(0, abs=0.5)
    assert centres[1] == pytest.approx(20, abs=0.5)
    assert res.assignment.n_trimmed == 5
    lab = res.assignment.labels
    kept = lab > 0
    assert len(set(lab[:50][kept[:50]])) == 1 and len(set(lab[50:][kept[50:]])) == 1
    assert validate_params(res.params, ConstraintSpec(Mode.EIGEN, 5))
    assert res.converged


def test_fit_c_one_gives_equal_variances_1d():
    rng = np.random.default_rng(5)
    x = np.concatenate([rng.normal(0, 1, 40), rng.normal(10, 3, 40)])[:, None]
    res = fit(x, 2, ConstraintSpec(Mode.EIGEN, 1), FitConfig(alpha=0.1, n_starts=10))
    v = res.params.covariances[:, 0, 0]
    assert v[0] == pytest.approx(v[1], rel=1e-8)


def test_fit_result_consistency():
    x = np.random.default_rng(1).normal(size=(60, 2))
    cfg = FitConfig(alpha=0.1, n_starts=8, seed=4)
    res = fit(x, 2, ConstraintSpec(Mode.EIGEN, 12), cfg)
    again = assign(res.params, x, 0.1)
    np.testing.assert_array_equal(again.labels, res.assignment.labels)
    assert res.assignment.counts.sum() == 54
    assert np.all(res.bayes_factors <= 0)
    assert 0 <= res.start_index < cfg.n_starts
    np.testing.assert_array_equal(fit(x, 2, ConstraintSpec(Mode.EIGEN, 12), cfg).assignment.labels, res.assignment.labels)


def test_fit_rejects_too_few_distinct_points():
    with pytest.raises(InvalidInput), pytest.warns(UserWarning):
        fit(np.ones((5, 2)), 2, FREE, FitConfig(n_starts=2))


def test_best_iterate_objective_never_below_first_step():
    x = np.random.default_rng(2).normal(size=(40, 2))
    init = init_random(x, 3, seed=0)
    best, best_obj, trace = run_start(x, init, ConstraintSpec(Mode.EIGEN, 2), FitConfig(alpha=0.1))
    assert best_obj == max(r.objective for r in trace)
    assert validate_params(best, ConstraintSpec(Mode.EIGEN, 2))


def test_comparator_specs():
    assert comparator_spec("tkm").mode is Mode.SPHERICAL
    assert comparator_spec("GR").mode is Mode.COMMON
    assert comparator_spec("g") == ConstraintSpec(Mode.DETERMINANT, 1.0)
    with pytest.raises(InvalidInput):
        comparator_spec("kmeans")


@pytest.mark.parametrize("method", ["tkm", "gr", "g"])
def test_comparators_pin_weights(method):
    rng = np.random.default_rng(9)
    x = np.vstack([rng.normal(size=(60, 2)), rng.normal(size=(20, 2)) + 8])
    res = fit_comparator(x, 2, method, FitConfig(alpha=0.1, n_starts=6))
    np.testing.assert_allclose(res.params.weights, 0.5)
    assert validate_params(res.params, comparator_spec(method))


def test_tkm_labels_invariant_to_scaling():
    rng = np.random.default_rng(11)
    x = np.vstack([rng.normal(size=(30, 2)), rng.normal(size=(30, 2)) + 5])
    cfg = FitConfig(alpha=0.1, n_starts=6, seed=2)
    a = fit_comparator(x, 2, "tkm", cfg).assignment.labels
    b = fit_comparator(x * 7.5, 2, "tkm", cfg).assignment.labels
    np.testing.assert_array_equal(a, b)


def test_thread_count_does_not_change_result(monkeypatch):
    x = np.random.default_rng(8).normal(size=(50, 2))
    spec = ConstraintSpec(Mode.EIGEN, 4)
    one = fit(x, 2, spec, FitConfig(n_starts=12, threads=1))
    four = fit(x, 2, spec, FitConfig(n_starts=12, threads=4))
    np.testing.assert_array_equal(one.assignment.labels, four.assignment.labels)
    assert one.objective == four.objective
    monkeypatch.setenv("TCLUST_THREADS", "3")
    assert worker_count() == 3
    assert worker_count(0) >= 1


def test_dataset_input_accepted():
    x = np.random.default_rng(4).normal(size=(30, 1))
    res = fit(Dataset(x), 1, FREE, FitConfig(alpha=0.0, n_starts=1))
    assert res.params.means[0, 0] == pytest.approx(x.mean())
    assert res.params.covariances[0, 0, 0] == pytest.approx(x.var())
