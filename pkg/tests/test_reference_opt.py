import numpy as np
import pytest

from decopt.objectives import QuadraticObjective, heterogeneous_partition, two_gaussians
from decopt.reference_opt import (
    DivergenceError,
    GradientTable,
    SolverError,
    StepSchedule,
    gd_run,
    new_table,
    pooled_gradients,
    saga_estimator,
    saga_run,
    sgd_step,
    solve_reference,
    svrg_estimator,
    svrg_run,
)


def scalar_quadratic():
    return QuadraticObjective([np.ones((1, 1, 1))], [np.zeros((1, 1))])


class FixedRng:
    """Stands in for a Generator and always returns the same index."""

    def __init__(self, s):
        self.s = s

    def integers(self, high, size=None):
        return self.s if size is None else np.full(size, self.s)


def test_step_schedule():
    assert StepSchedule.constant(0.1)(7) == 0.1
    assert StepSchedule.harmonic(2.0, 1.0)(3) == 0.5
    with pytest.raises(ValueError):
        StepSchedule.constant(0.0)
    with pytest.raises(ValueError):
        StepSchedule.harmonic(-1.0)
    with pytest.raises(ValueError):
        StepSchedule("cosine", alpha=1.0)


def test_gd_one_step_on_scalar_quadratic():
    trace = gd_run(scalar_quadratic(), [3.0], StepSchedule.constant(1.0), 1)
    np.testing.assert_array_equal(trace[-1], [0.0])


def test_gd_monotone_at_inverse_L(quad):
    L = quad.curvature_bounds()[1]
    trace = gd_run(quad, np.zeros(quad.p), StepSchedule.constant(1 / L), 50)
    values = [quad.value(t) for t in trace]
    assert all(b <= a + 1e-14 for a, b in zip(values, values[1:]))


def test_gd_logistic_reaches_tolerance(logistic):
    L = logistic.curvature_bounds()[1]
    trace = gd_run(logistic, np.zeros(logistic.p), StepSchedule.constant(1 / L), 20_000)
    assert np.linalg.norm(logistic.global_gradient(trace[-1])) < 1e-10


def test_divergence_guard():
    with pytest.raises(DivergenceError) as info:
        gd_run(scalar_quadratic(), [1.0], StepSchedule.constant(10.0), 100)
    assert info.value.round == 13


def test_sgd_single_component_is_gd():
    obj = QuadraticObjective([np.array([[[2.0, 0.0], [0.0, 1.0]]])], [np.array([[1.0, -1.0]])])
    theta = np.array([0.5, 0.5])
    expected = theta - 0.1 * obj.global_gradient(theta)
    np.testing.assert_allclose(sgd_step(obj, theta, 0.1, np.random.default_rng(0)), expected, atol=1e-15)


@pytest.mark.parametrize("name", ["quad", "unbalanced_quad"])
def test_sgd_unbiased_by_enumeration(name, request):
    obj = request.getfixturevalue(name)
    theta = np.random.default_rng(0).standard_normal(obj.p)
    steps = [sgd_step(obj, theta, 1.0, FixedRng(s)) for s in range(obj.num_components)]
    np.testing.assert_allclose(theta - np.mean(steps, axis=0), obj.global_gradient(theta), atol=1e-12)


def test_gradient_table_running_average():
    rng = np.random.default_rng(0)
    table = GradientTable(rng.standard_normal((7, 3)), sizes=[3, 4])
    for _ in range(20):
        rows = [int(rng.integers(3)), 3 + int(rng.integers(4))]
        table.replace(rows, rng.standard_normal((2, 3)))
    np.testing.assert_allclose(table.avg[0], table.entries[:3].mean(axis=0), atol=1e-13)
    np.testing.assert_allclose(table.avg[1], table.entries[3:].mean(axis=0), atol=1e-13)


@pytest.mark.parametrize("name", ["quad", "unbalanced_quad", "logistic"])
def test_saga_fresh_table_and_unbiasedness(name, request):
    obj = request.getfixturevalue(name)
    rng = np.random.default_rng(1)
    theta0 = rng.standard_normal(obj.p)
    table = new_table(obj, theta0)
    g, _ = saga_estimator(obj, theta0, table, 2)
    np.testing.assert_allclose(g, obj.global_gradient(theta0), atol=1e-12)
    # scramble the table, then average the estimator over every sample choice
    for s in range(obj.num_components):
        table.replace(s, pooled_gradients(obj, s, rng.standard_normal((1, obj.p))))
    theta = rng.standard_normal(obj.p)
    mean = np.mean([saga_estimator(obj, theta, table, s)[0] for s in range(obj.num_components)], axis=0)
    np.testing.assert_allclose(mean, obj.global_gradient(theta), atol=1e-12)


def test_saga_converges_on_quadratic(quad):
    # frozen budget for alpha = 1/(3 L_max) with seed 0
    L = max(np.linalg.eigvalsh(a.T @ a)[-1] for a in quad.A)
    trace = saga_run(quad, np.zeros(quad.p), 1 / (3 * L), 3000, np.random.default_rng(0))
    assert np.sum((trace[-1] - quad.minimizer()) ** 2) < 1e-10


@pytest.mark.parametrize("name", ["quad", "unbalanced_quad", "logistic"])
def test_svrg_estimator_anchor_and_unbiasedness(name, request):
    obj = request.getfixturevalue(name)
    rng = np.random.default_rng(2)
    anchor = rng.standard_normal(obj.p)
    anchor_grad = obj.global_gradient(anchor)
    for s in range(obj.num_components):
        np.testing.assert_allclose(svrg_estimator(obj, anchor, anchor, anchor_grad, s), anchor_grad, atol=1e-12)
    theta = rng.standard_normal(obj.p)
    mean = np.mean([svrg_estimator(obj, theta, anchor, anchor_grad, s) for s in range(obj.num_components)], axis=0)
    np.testing.assert_allclose(mean, obj.global_gradient(theta), atol=1e-12)


@pytest.mark.parametrize("option", ["average", "last", "random"])
def test_svrg_geometric_decay(quad, option):
    L = max(np.linalg.eigvalsh(a.T @ a)[-1] for a in quad.A)
    trace = svrg_run(quad, np.zeros(quad.p), 0.1 / L, 50, 30, option, np.random.default_rng(0))
    res = np.sum((trace - quad.minimizer()) ** 2, axis=1)
    slope = np.polyfit(np.arange(len(res)), np.log10(res), 1)[0]
    assert slope < -0.1
    assert res[-1] < 1e-8


def test_solve_reference_quadratic_averages_targets():
    targets = np.array([[1.0, 2.0], [3.0, -2.0], [2.0, 3.0]])
    obj = QuadraticObjective([np.stack([np.eye(2)] * 3)], [targets])
    np.testing.assert_allclose(solve_reference(obj), targets.mean(axis=0), atol=1e-14)


@pytest.mark.parametrize("method", ["newton", "gd"])
def test_solve_reference_logistic(method):
    data = two_gaussians(40, 3, separation=1.0, seed=0)
    obj = heterogeneous_partition(data, 4, seed=0, lam=0.05)
    theta = solve_reference(obj, method=method)
    assert np.linalg.norm(obj.global_gradient(theta)) <= 1e-12


def test_solve_reference_reports_failure(logistic):
    with pytest.raises(SolverError):
        solve_reference(logistic, tol=1e-30, max_iter=3)
