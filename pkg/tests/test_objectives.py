import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from decopt.objectives import (
    Dataset,
    LogisticObjective,
    PartitionError,
    QuadraticObjective,
    estimate_stats,
    heterogeneous_partition,
    heterogeneous_quadratic,
    ingest_dataset,
    standardize,
    two_gaussians,
    write_dataset,
)
from decopt.reference_opt import solve_reference

# frozen: heterogeneity bias at the optimum of the default 20-node one-class
# logistic problem (standardized two_gaussians(200, 20, 2.0, seed=0), per_node=10)
ONE_CLASS_BIAS = 0.16067641145257916


def fd_gradient(f, theta, h=1e-6):
    g = np.zeros_like(theta)
    for k in range(theta.size):
        e = np.zeros_like(theta)
        e[k] = h
        g[k] = (f(theta + e) - f(theta - e)) / (2 * h)
    return g


def test_identity_quadratic_gradient():
    obj = QuadraticObjective([np.eye(3)[None]], [np.zeros((1, 3))])
    v = np.array([1.0, -2.0, 0.5])
    np.testing.assert_allclose(obj.component_gradient(0, 0, v), v)


def test_index_errors(quad):
    with pytest.raises(IndexError):
        quad.component_gradient(4, 0, np.zeros(quad.p))
    with pytest.raises(IndexError):
        quad.component_gradient(0, 3, np.zeros(quad.p))


@pytest.mark.parametrize("name", ["quad", "logistic", "unbalanced_quad"])
def test_component_gradients_match_finite_differences(name, request):
    obj = request.getfixturevalue(name)
    rng = np.random.default_rng(0)
    for _ in range(3):
        theta = rng.standard_normal(obj.p)
        for i in range(obj.n):
            for j in range(obj.sizes[i]):
                g = obj.component_gradient(i, j, theta)
                fd = fd_gradient(lambda t: obj.component_value(i, j, t), theta)
                assert np.linalg.norm(g - fd) <= 1e-5 * max(1.0, np.linalg.norm(fd))


def test_batch_gradients_are_averages(unbalanced_quad):
    obj = unbalanced_quad
    theta = np.random.default_rng(1).standard_normal(obj.p)
    for i in range(obj.n):
        comps = [obj.component_gradient(i, j, theta) for j in range(obj.sizes[i])]
        np.testing.assert_allclose(obj.local_batch_gradient(i, theta), np.mean(comps, axis=0), atol=1e-13)
    locals_ = [obj.local_batch_gradient(i, theta) for i in range(obj.n)]
    np.testing.assert_allclose(obj.global_gradient(theta), np.mean(locals_, axis=0), atol=1e-13)
    values = [np.mean([obj.component_value(i, j, theta) for j in range(obj.sizes[i])]) for i in range(obj.n)]
    assert obj.value(theta) == pytest.approx(np.mean(values), rel=1e-13)


def test_single_component_node():
    obj = QuadraticObjective([np.ones((1, 2, 2))], [np.ones((1, 2))])
    theta = np.array([0.3, 0.7])
    np.testing.assert_array_equal(obj.local_batch_gradient(0, theta), obj.component_gradient(0, 0, theta))


def test_quadratic_minimizer_zeroes_gradient(quad):
    theta = quad.minimizer()
    assert np.linalg.norm(quad.global_gradient(theta)) < 1e-10
    # independent oracle: least squares on the stacked, weighted system
    w = np.sqrt(quad.weights)[:, None, None]
    A = (w * quad.A).reshape(-1, quad.p)
    b = (w[:, :, 0] * quad.b).reshape(-1)
    np.testing.assert_allclose(theta, np.linalg.lstsq(A, b, rcond=None)[0], atol=1e-10)


def test_logistic_hessian_matches_gradient_differences(logistic):
    theta = np.random.default_rng(2).standard_normal(logistic.p)
    H = logistic.hessian(theta)
    fd = np.column_stack([
        (logistic.global_gradient(theta + 1e-6 * e) - logistic.global_gradient(theta - 1e-6 * e)) / 2e-6
        for e in np.eye(logistic.p)
    ])
    np.testing.assert_allclose(H, fd, atol=1e-7)


def test_logistic_is_stable_for_large_margins():
    obj = LogisticObjective([[[1.0]]], [[1.0]], lam=0.1)
    for t in (1e3, -1e3):
        theta = np.array([t, 0.0])
        assert np.isfinite(obj.value(theta)) and np.isfinite(obj.global_gradient(theta)).all()


def test_logistic_rejects_bad_inputs():
    with pytest.raises(ValueError):
        LogisticObjective([[[1.0]]], [[2.0]], lam=0.1)
    with pytest.raises(ValueError):
        LogisticObjective([[[1.0]]], [[1.0]], lam=0.0)


def test_estimate_stats_diagonal_hessian():
    A = np.stack([np.diag([1.0, 2.0])] * 2)[None]
    obj = QuadraticObjective(A, np.zeros((1, 2, 2)))
    s = estimate_stats(obj, np.zeros(2), np.zeros(2))
    assert (s.mu, s.L, s.kappa) == pytest.approx((1.0, 4.0, 4.0))


def test_homogeneous_nodes_have_no_bias():
    rng = np.random.default_rng(4)
    A, b = rng.standard_normal((3, 2, 2)), rng.standard_normal((3, 2))
    obj = QuadraticObjective([A] * 4, [b] * 4)
    s = estimate_stats(obj, obj.minimizer(), np.zeros(2))
    assert s.b < 1e-20


def test_one_class_bias_regression():
    raw = two_gaussians(200, 20, separation=2.0, seed=0)
    data = Dataset(standardize(raw.X), raw.y)
    obj = heterogeneous_partition(data, 20, mode="one-class", seed=0, per_node=10)
    s = estimate_stats(obj, solve_reference(obj), np.zeros(obj.p))
    assert s.b == pytest.approx(ONE_CLASS_BIAS, rel=1e-6)


def test_one_class_partition_layout():
    data = two_gaussians(1000, 4, seed=0)
    obj = heterogeneous_partition(data, 100, mode="one-class", seed=0, per_node=10)
    assert list(obj.sizes) == [10] * 100
    labels = obj.labels.reshape(100, 10)
    assert (labels[:50] == -1).all() and (labels[50:] == 1).all()


def test_single_node_takes_everything():
    data = two_gaussians(30, 2, seed=1)
    obj = heterogeneous_partition(data, 1, mode="one-class")
    assert obj.num_components == 30
    np.testing.assert_array_equal(obj.features[:, :-1], data.X)


def test_iid_label_proportions():
    data = two_gaussians(2000, 2, seed=3)
    obj = heterogeneous_partition(data, 20, mode="iid", seed=3, per_node=100)
    pos = (obj.labels.reshape(20, 100) == 1).mean(axis=1)
    # 4 binomial standard deviations around 1/2 for 100 draws
    assert np.abs(pos - 0.5).max() < 4 * 0.05


def test_partition_errors():
    data = two_gaussians(20, 2, seed=0)
    with pytest.raises(PartitionError):
        heterogeneous_partition(data, 4, mode="one-class", per_node=6)
    with pytest.raises(PartitionError):
        heterogeneous_partition(data, 4, mode="sorted")


def test_heterogeneous_quadratic_shared_hessian_variance_is_constant():
    obj = heterogeneous_quadratic(3, 6, 2, noise=0.5, seed=2, shared_hessian=True, cond=3.0)
    rng = np.random.default_rng(0)
    s1 = estimate_stats(obj, obj.minimizer(), rng.standard_normal(2)).sigma_sq
    s2 = estimate_stats(obj, obj.minimizer(), 10 * rng.standard_normal(2)).sigma_sq
    assert s1 == pytest.approx(s2, rel=1e-10)
    assert (obj.curvature_bounds()) == pytest.approx((1.0, 3.0))


def test_two_gaussians_reproducible():
    assert two_gaussians(50, 3, 1.0, seed=9) == two_gaussians(50, 3, 1.0, seed=9)
    assert not two_gaussians(50, 3, 1.0, seed=9) == two_gaussians(50, 3, 1.0, seed=10)


@settings(max_examples=20, deadline=None)
@given(rows=st.integers(2, 30), cols=st.integers(1, 5), seed=st.integers(0, 1000))
def test_standardize_moments(rows, cols, seed):
    X = np.random.default_rng(seed).standard_normal((rows, cols)) * 3 + 1
    Z = standardize(X)
    np.testing.assert_allclose(Z.mean(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(Z.std(axis=0), 1, atol=1e-12)


def test_dataset_round_trip_and_label_map(tmp_path):
    data = two_gaussians(10, 3, seed=0)
    write_dataset(data, tmp_path / "d.csv")
    assert ingest_dataset(tmp_path / "d.csv", normalize=False) == data
    (tmp_path / "m.csv").write_text("3,0.5,1\n8,1.5,2\n3,2.5,3\n")
    got = ingest_dataset(tmp_path / "m.csv", label_map={3: -1, 8: 1})
    np.testing.assert_array_equal(got.y, [-1, 1, -1])
    with pytest.raises(PartitionError):
        ingest_dataset(tmp_path / "m.csv")
    (tmp_path / "r.csv").write_text("1,0.5,1\n-1,1.5\n")
    with pytest.raises(PartitionError):
        ingest_dataset(tmp_path / "r.csv")
    assert isinstance(got, Dataset)
