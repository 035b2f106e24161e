import numpy as np
import pytest

from decopt.objectives import heterogeneous_partition, heterogeneous_quadratic, two_gaussians


@pytest.fixture
def quad():
    return heterogeneous_quadratic(4, 3, 3, spread=1.0, noise=0.2, seed=11)


@pytest.fixture
def logistic():
    data = two_gaussians(24, 3, separation=2.0, seed=5)
    return heterogeneous_partition(data, 4, mode="one-class", seed=5, per_node=6)


@pytest.fixture
def unbalanced_quad():
    from decopt.objectives import QuadraticObjective

    rng = np.random.default_rng(3)
    sizes = [2, 3, 5]
    A = [rng.standard_normal((m, 4, 3)) for m in sizes]
    b = [rng.standard_normal((m, 4)) for m in sizes]
    return QuadraticObjective(A, b)
