"""Node-partitioned finite-sum objectives.

The global objective is ``F(theta) = (1/n) sum_i f_i(theta)`` with local
objectives ``f_i = (1/m_i) sum_j f_{i,j}``. Components are stored flat:
node ``i`` owns global rows ``offsets[i]:offsets[i+1]``. Component indices
``j`` are 0-based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "FiniteSumObjective",
    "QuadraticObjective",
    "LogisticObjective",
    "ObjectiveStats",
    "Dataset",
    "PartitionError",
    "two_gaussians",
    "standardize",
    "heterogeneous_partition",
    "heterogeneous_quadratic",
    "estimate_stats",
    "write_dataset",
    "ingest_dataset",
]


class PartitionError(ValueError):
    pass


def _sigmoid(t: np.ndarray) -> np.ndarray:
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


class FiniteSumObjective:
    """Base class; subclasses implement the row-wise ``_grad_rows`` / ``_value_rows``."""

    p: int

    def __init__(self, sizes):
        sizes = np.asarray(sizes, dtype=int)
        if sizes.ndim != 1 or len(sizes) == 0 or (sizes < 1).any():
            raise ValueError(f"every node needs at least one component, got sizes={sizes}")
        self.sizes = sizes
        self.offsets = np.concatenate([[0], np.cumsum(sizes)])
        self.node_of = np.repeat(np.arange(len(sizes)), sizes)
        # weight of component k in F: 1 / (n * m_i)
        self.weights = 1.0 / (len(sizes) * sizes[self.node_of])

    @property
    def n(self) -> int:
        return len(self.sizes)

    @property
    def num_components(self) -> int:
        return int(self.offsets[-1])

    @property
    def balanced(self) -> bool:
        return bool((self.sizes == self.sizes[0]).all())

    def _grad_rows(self, gidx: np.ndarray, thetas: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _value_rows(self, gidx: np.ndarray, thetas: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hessian(self, theta: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def curvature_bounds(self) -> tuple[float, float]:
        """``(mu, L)``: exact values or certified bounds, per subclass."""
        raise NotImplementedError

    def global_index(self, i: int, j: int) -> int:
        if not 0 <= i < self.n:
            raise IndexError(f"node {i} out of range for n={self.n}")
        if not 0 <= j < self.sizes[i]:
            raise IndexError(f"component {j} out of range for node {i} with m_i={self.sizes[i]}")
        return int(self.offsets[i] + j)

    def component_gradient(self, i: int, j: int, theta: np.ndarray) -> np.ndarray:
        g = self.global_index(i, j)
        return self._grad_rows(np.array([g]), np.asarray(theta, float)[None, :])[0]

    def component_value(self, i: int, j: int, theta: np.ndarray) -> float:
        g = self.global_index(i, j)
        return float(self._value_rows(np.array([g]), np.asarray(theta, float)[None, :])[0])

    def component_gradients(self, gidx, thetas: np.ndarray) -> np.ndarray:
        """Gradients of components ``gidx[k]`` at ``thetas[k]`` (vectorized)."""
        return self._grad_rows(np.asarray(gidx, dtype=int), np.atleast_2d(thetas))

    def component_values(self, gidx, thetas: np.ndarray) -> np.ndarray:
        return self._value_rows(np.asarray(gidx, dtype=int), np.atleast_2d(thetas))

    def all_component_gradients(self, node_thetas: np.ndarray) -> np.ndarray:
        """``(N, p)``: every component gradient, each at its own node's iterate."""
        node_thetas = np.atleast_2d(node_thetas)
        if node_thetas.shape[0] == 1 and self.n > 1:
            node_thetas = np.broadcast_to(node_thetas, (self.n, self.p))
        return self._grad_rows(np.arange(self.num_components), node_thetas[self.node_of])

    def local_batch_gradients(self, node_thetas: np.ndarray) -> np.ndarray:
        """``(n, p)``: row ``i`` is ``grad f_i`` at ``node_thetas[i]``."""
        g = self.all_component_gradients(node_thetas)
        return np.add.reduceat(g, self.offsets[:-1], axis=0) / self.sizes[:, None]

    def local_batch_gradient(self, i: int, theta: np.ndarray) -> np.ndarray:
        lo, hi = self.offsets[i], self.offsets[i + 1]
        th = np.broadcast_to(np.asarray(theta, float), (hi - lo, self.p))
        return self._grad_rows(np.arange(lo, hi), th).mean(axis=0)

    def global_gradient(self, theta: np.ndarray) -> np.ndarray:
        return self.local_batch_gradients(np.asarray(theta, float)[None, :]).mean(axis=0)

    def local_values(self, theta: np.ndarray) -> np.ndarray:
        th = np.broadcast_to(np.asarray(theta, float), (self.num_components, self.p))
        v = self._value_rows(np.arange(self.num_components), th)
        return np.add.reduceat(v, self.offsets[:-1]) / self.sizes

    def value(self, theta: np.ndarray) -> float:
        return float(self.local_values(theta).mean())


class QuadraticObjective(FiniteSumObjective):
    """Least squares components ``f_{i,j}(theta) = 0.5 * ||A_{i,j} theta - b_{i,j}||^2``.

    ``A`` is a list (one entry per node) of ``(m_i, d, p)`` arrays and ``b`` a
    list of ``(m_i, d)`` arrays.
    """

    def __init__(self, A, b):
        A = [np.asarray(a, float) for a in A]
        b = [np.asarray(v, float) for v in b]
        if len(A) != len(b):
            raise ValueError("A and b must list the same number of nodes")
        super().__init__([a.shape[0] for a in A])
        self.A = np.concatenate(A)
        self.b = np.concatenate(b)
        if self.A.ndim != 3 or self.b.shape != self.A.shape[:2]:
            raise ValueError(f"inconsistent shapes A{self.A.shape}, b{self.b.shape}")
        self.p = self.A.shape[2]

    def _grad_rows(self, gidx, thetas):
        A = self.A[gidx]
        resid = np.einsum("kdp,kp->kd", A, thetas) - self.b[gidx]
        return np.einsum("kdp,kd->kp", A, resid)

    def _value_rows(self, gidx, thetas):
        resid = np.einsum("kdp,kp->kd", self.A[gidx], thetas) - self.b[gidx]
        return 0.5 * (resid**2).sum(axis=1)

    def hessian(self, theta=None) -> np.ndarray:
        return np.einsum("k,kdp,kdq->pq", self.weights, self.A, self.A)

    def minimizer(self) -> np.ndarray:
        """Solve the weighted normal equations of the stacked system."""
        rhs = np.einsum("k,kdp,kd->p", self.weights, self.A, self.b)
        return np.linalg.solve(self.hessian(), rhs)

    def curvature_bounds(self):
        ev = np.linalg.eigvalsh(self.hessian())
        return float(ev[0]), float(ev[-1])


class LogisticObjective(FiniteSumObjective):
    """Regularized logistic loss with an unregularized intercept.

    ``f_{i,j}(b, c) = ln(1 + exp(-(b^T x + c) y)) + (lam / 2) ||b||^2`` and the
    parameter vector is ``theta = (b, c)`` with ``p = d + 1``.
    """

    def __init__(self, X, y, lam: float):
        X = [np.atleast_2d(np.asarray(x, float)) for x in X]
        y = [np.asarray(v, float).ravel() for v in y]
        if len(X) != len(y):
            raise ValueError("X and y must list the same number of nodes")
        super().__init__([x.shape[0] for x in X])
        if not lam > 0:
            raise ValueError(f"regularizer weight must be positive, got {lam}")
        labels = np.concatenate(y)
        if not np.isin(labels, (-1.0, 1.0)).all():
            raise ValueError("labels must be -1 or +1")
        feats = np.concatenate(X)
        self.features = np.hstack([feats, np.ones((feats.shape[0], 1))])
        self.labels = labels
        self.lam = float(lam)
        self.p = self.features.shape[1]
        self._reg_mask = np.ones(self.p)
        self._reg_mask[-1] = 0.0

    def _grad_rows(self, gidx, thetas):
        a = self.features[gidx]
        y = self.labels[gidx]
        z = np.einsum("kp,kp->k", a, thetas)
        coef = -y * _sigmoid(-y * z)
        return coef[:, None] * a + self.lam * thetas * self._reg_mask

    def _value_rows(self, gidx, thetas):
        a = self.features[gidx]
        z = np.einsum("kp,kp->k", a, thetas)
        reg = 0.5 * self.lam * ((thetas * self._reg_mask) ** 2).sum(axis=1)
        return np.logaddexp(0.0, -self.labels[gidx] * z) + reg

    def hessian(self, theta) -> np.ndarray:
        s = _sigmoid(self.features @ np.asarray(theta, float))
        curv = self.weights * s * (1.0 - s)
        return np.einsum("k,kp,kq->pq", curv, self.features, self.features) + self.lam * np.diag(self._reg_mask)

    def curvature_bounds(self):
        # mu is the b-block bound (the intercept direction carries no regularizer)
        L = self.lam + 0.25 * float((self.features**2).sum(axis=1).max())
        return self.lam, L


@dataclass(frozen=True)
class ObjectiveStats:
    mu: float
    L: float
    sigma_sq: float
    b: float

    @property
    def kappa(self) -> float:
        return self.L / self.mu


def estimate_stats(obj: FiniteSumObjective, theta_star, theta_probe) -> ObjectiveStats:
    """Curvature constants, sampling variance at ``theta_probe`` and heterogeneity bias at ``theta_star``."""
    mu, L = obj.curvature_bounds()
    probe = np.asarray(theta_probe, float)
    comp = obj.all_component_gradients(probe[None, :])
    local = obj.local_batch_gradients(probe[None, :])
    dev = ((comp - local[obj.node_of]) ** 2).sum(axis=1)
    sigma_sq = float((np.add.reduceat(dev, obj.offsets[:-1]) / obj.sizes).mean())
    at_star = obj.local_batch_gradients(np.asarray(theta_star, float)[None, :])
    bias = float((at_star**2).sum(axis=1).mean())
    return ObjectiveStats(mu=mu, L=L, sigma_sq=sigma_sq, b=bias)


# ---------------------------------------------------------------- datasets


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray

    def __len__(self):
        return len(self.y)

    def __eq__(self, other):
        return (
            isinstance(other, Dataset)
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
        )

    __hash__ = None


def two_gaussians(n_samples: int, dim: int, separation: float = 1.0, seed: int = 0) -> Dataset:
    """Two unit-covariance Gaussian classes with means ``+/- (separation/2) u``.

    ``u`` is a fixed unit vector along the all-ones direction. Labels are
    balanced: the first ``n_samples // 2`` rows are ``-1``.
    """
    rng = np.random.default_rng(seed)
    u = np.ones(dim) / np.sqrt(dim)
    y = np.where(np.arange(n_samples) < n_samples // 2, -1.0, 1.0)
    X = rng.standard_normal((n_samples, dim)) + 0.5 * separation * y[:, None] * u
    return Dataset(X, y)


def standardize(X: np.ndarray) -> np.ndarray:
    """Zero mean and unit standard deviation per column; constant columns are only centered."""
    X = np.asarray(X, float)
    centered = X - X.mean(axis=0)
    sd = X.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    return centered / sd


def heterogeneous_partition(
    data: Dataset,
    n: int,
    mode: str = "one-class",
    seed: int = 0,
    per_node: int | None = None,
    lam: float | None = None,
) -> LogisticObjective:
    """Split a binary dataset over ``n`` nodes as a logistic objective.

    ``mode="one-class"`` gives every node samples of a single label, with
    ``n // 2`` nodes on class ``-1`` and the rest on ``+1``. ``mode="iid"``
    shuffles before splitting. ``lam`` defaults to ``1 / (n * per_node)``.
    """
    if mode not in ("one-class", "iid"):
        raise PartitionError(f"unknown partition mode {mode!r}")
    N = len(data)
    if n < 1:
        raise PartitionError(f"need n >= 1, got {n}")
    if n == 1:
        X, y = [data.X], [data.y]
        total = N
    else:
        per_node = per_node or N // n
        if per_node < 1:
            raise PartitionError(f"{N} samples cannot fill {n} nodes")
        rng = np.random.default_rng(seed)
        if mode == "iid":
            if per_node * n > N:
                raise PartitionError(f"need {per_node * n} samples, dataset has {N}")
            idx = rng.permutation(N)[: per_node * n].reshape(n, per_node)
        else:
            n_neg = n // 2
            pools = {}
            for label, count in ((-1.0, n_neg), (1.0, n - n_neg)):
                pool = np.flatnonzero(data.y == label)
                if len(pool) < count * per_node:
                    raise PartitionError(
                        f"class {label:+.0f} has {len(pool)} samples, needs {count * per_node}"
                    )
                pools[label] = rng.permutation(pool)[: count * per_node].reshape(count, per_node)
            idx = np.concatenate([pools[-1.0], pools[1.0]])
        X = [data.X[row] for row in idx]
        y = [data.y[row] for row in idx]
        total = per_node * n
    return LogisticObjective(X, y, lam if lam is not None else 1.0 / total)


def heterogeneous_quadratic(
    n: int,
    m: int,
    p: int,
    spread: float = 1.0,
    noise: float = 0.1,
    seed: int = 0,
    shared_hessian: bool = False,
    cond: float = 4.0,
) -> QuadraticObjective:
    """Quadratic fixture with node-dependent minimizers.

    Node ``i``'s targets scatter (``noise``) around a node center drawn with
    scale ``spread``; a large ``spread/noise`` ratio makes the heterogeneity
    bias dominate the sampling variance. With ``shared_hessian`` every
    component uses the same diagonal matrix, eigenvalues in ``[1, cond]``,
    so the sampling variance does not depend on ``theta``.
    """
    rng = np.random.default_rng(seed)
    base = np.diag(np.sqrt(np.linspace(1.0, cond, p)))
    A, b = [], []
    for _ in range(n):
        center = spread * rng.standard_normal(p)
        if shared_hessian:
            Ai = np.broadcast_to(base, (m, p, p)).copy()
        else:
            Ai = base + 0.2 * rng.standard_normal((m, p, p)) / np.sqrt(p)
        targets = center + noise * rng.standard_normal((m, p))
        A.append(Ai)
        b.append(np.einsum("kdp,kp->kd", Ai, targets))
    return QuadraticObjective(A, b)


# ---------------------------------------------------------------- CSV I/O


def write_dataset(data: Dataset, path: str | Path) -> None:
    """One sample per line: ``label,x_1,...,x_d`` with round-trip float formatting."""
    lines = []
    for x, y in zip(data.X, data.y):
        lines.append(",".join([str(int(y))] + [repr(float(v)) for v in x]))
    Path(path).write_text("\n".join(lines) + "\n")


def ingest_dataset(path: str | Path, label_map: dict | None = None, normalize: bool = True) -> Dataset:
    """Read a ``label,x_1,...,x_d`` CSV.

    ``label_map`` maps raw integer labels to ``-1/+1`` (e.g. ``{3: -1, 8: 1}``
    for the digit pair); the identity on ``{-1, +1}`` is used when omitted.
    """
    label_map = {-1: -1, 1: 1} if label_map is None else {int(k): int(v) for k, v in label_map.items()}
    rows = [ln.split(",") for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not rows:
        raise PartitionError(f"{path}: no samples")
    width = len(rows[0])
    X, y = [], []
    for k, row in enumerate(rows, start=1):
        if len(row) != width:
            raise PartitionError(f"{path}:{k}: ragged row ({len(row)} fields, expected {width})")
        raw = int(float(row[0]))
        if raw not in label_map:
            raise PartitionError(f"{path}:{k}: label {raw} not in label map")
        y.append(float(label_map[raw]))
        X.append([float(v) for v in row[1:]])
    X = np.array(X, dtype=float).reshape(len(rows), width - 1)
    if normalize:
        X = standardize(X)
    return Dataset(X, np.array(y))
