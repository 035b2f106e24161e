"""Centralized baselines (GD, SGD, SAGA, SVRG) and the reference solver.

Centralized methods see the pooled problem ``F = (1/N) sum_k f^c_k`` over
all ``N`` components. For unbalanced partitions each pooled component is
rescaled by ``N / (n m_i)`` so that uniform sampling stays unbiased for
``grad F``; on balanced partitions the scale is exactly 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .objectives import FiniteSumObjective, QuadraticObjective

__all__ = [
    "GradientTable",
    "StepSchedule",
    "DivergenceError",
    "SolverError",
    "DIVERGENCE_NORM",
    "gd_run",
    "sgd_step",
    "sgd_run",
    "saga_estimator",
    "saga_step",
    "saga_run",
    "svrg_estimator",
    "svrg_outer",
    "svrg_run",
    "solve_reference",
]

DIVERGENCE_NORM = 1e12


class DivergenceError(RuntimeError):
    def __init__(self, round_: int, norm: float):
        super().__init__(f"iterate norm {norm:.3e} exceeded {DIVERGENCE_NORM:.0e} at round {round_}")
        self.round = round_


class SolverError(RuntimeError):
    pass


def check_divergence(k: int, theta: np.ndarray) -> None:
    norm = float(np.linalg.norm(theta))
    if not norm <= DIVERGENCE_NORM:
        raise DivergenceError(k, norm)


class GradientTable:
    """Stored component gradients with incrementally maintained group means.

    ``entries`` is ``(N, p)``; rows are split into consecutive groups of the
    given ``sizes`` (a single group for centralized SAGA, one group per node
    for GT-SAGA). ``avg[g]`` tracks the mean of group ``g``'s rows.
    """

    def __init__(self, entries: np.ndarray, sizes=None):
        self.entries = np.array(entries, dtype=float)
        sizes = [len(self.entries)] if sizes is None else sizes
        self.sizes = np.asarray(sizes, dtype=int)
        offsets = np.concatenate([[0], np.cumsum(self.sizes)])
        if offsets[-1] != len(self.entries):
            raise ValueError(f"group sizes sum to {offsets[-1]}, table has {len(self.entries)} rows")
        self.group_of = np.repeat(np.arange(len(self.sizes)), self.sizes)
        self.avg = np.add.reduceat(self.entries, offsets[:-1], axis=0) / self.sizes[:, None]

    @property
    def running_avg(self) -> np.ndarray:
        return self.avg[0] if len(self.sizes) == 1 else self.avg

    def replace(self, rows, new: np.ndarray) -> None:
        """Overwrite ``entries[rows]``; at most one row per group per call."""
        rows = np.atleast_1d(np.asarray(rows, dtype=int))
        new = np.atleast_2d(new)
        grp = self.group_of[rows]
        self.avg[grp] += (new - self.entries[rows]) / self.sizes[grp][:, None]
        self.entries[rows] = new


@dataclass(frozen=True)
class StepSchedule:
    """``constant``: ``alpha_k = alpha``; ``harmonic``: ``alpha_k = a / (k + k0)``."""

    kind: str = "constant"
    alpha: float = 0.0
    a: float = 0.0
    k0: float = 1.0

    def __post_init__(self):
        if self.kind == "constant":
            ok = self.alpha > 0
        elif self.kind == "harmonic":
            ok = self.a > 0 and self.k0 > 0
        else:
            raise ValueError(f"unknown step schedule {self.kind!r}")
        if not ok:
            raise ValueError(f"step schedule {self} emits non-positive step sizes")

    @classmethod
    def constant(cls, alpha: float) -> "StepSchedule":
        return cls("constant", alpha=alpha)

    @classmethod
    def harmonic(cls, a: float, k0: float = 1.0) -> "StepSchedule":
        return cls("harmonic", a=a, k0=k0)

    def __call__(self, k: int) -> float:
        if self.kind == "constant":
            return self.alpha
        return self.a / (k + self.k0)


def _pooled_scale(obj: FiniteSumObjective, s) -> np.ndarray | float:
    if obj.balanced:
        return 1.0
    return obj.num_components * obj.weights[s]


def pooled_gradients(obj: FiniteSumObjective, s, thetas) -> np.ndarray:
    s = np.atleast_1d(s)
    g = obj.component_gradients(s, thetas)
    scale = _pooled_scale(obj, s)
    return g if np.isscalar(scale) else g * scale[:, None]


def gd_run(obj: FiniteSumObjective, theta0, schedule: StepSchedule, iters: int) -> np.ndarray:
    """Batch gradient descent; returns the ``(iters + 1, p)`` iterate trace."""
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")
    trace = [np.array(theta0, dtype=float)]
    for k in range(iters):
        theta = trace[-1] - schedule(k) * obj.global_gradient(trace[-1])
        check_divergence(k + 1, theta)
        trace.append(theta)
    return np.array(trace)


def sgd_step(obj: FiniteSumObjective, theta, alpha: float, rng: np.random.Generator) -> np.ndarray:
    if not alpha > 0:
        raise ValueError(f"step size must be positive, got {alpha}")
    s = rng.integers(obj.num_components)
    return theta - alpha * pooled_gradients(obj, s, theta[None, :])[0]


def sgd_run(obj, theta0, schedule: StepSchedule, iters: int, rng: np.random.Generator) -> np.ndarray:
    trace = [np.array(theta0, dtype=float)]
    for k in range(iters):
        theta = sgd_step(obj, trace[-1], schedule(k), rng)
        check_divergence(k + 1, theta)
        trace.append(theta)
    return np.array(trace)


def new_table(obj: FiniteSumObjective, theta) -> GradientTable:
    theta = np.asarray(theta, float)
    N = obj.num_components
    return GradientTable(pooled_gradients(obj, np.arange(N), np.broadcast_to(theta, (N, obj.p))))


def saga_estimator(obj, theta, table: GradientTable, s: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(g, fresh)``: the SAGA estimate for sample ``s`` and ``grad f_s(theta)``."""
    fresh = pooled_gradients(obj, s, np.asarray(theta)[None, :])[0]
    return fresh - table.entries[s] + table.running_avg, fresh


def saga_step(obj, theta, table: GradientTable, alpha: float, rng: np.random.Generator):
    """One SAGA iteration; ``table`` is updated in place and also returned."""
    s = int(rng.integers(obj.num_components))
    g, fresh = saga_estimator(obj, theta, table, s)
    table.replace(s, fresh)
    return theta - alpha * g, table


def saga_run(obj, theta0, alpha: float, iters: int, rng: np.random.Generator) -> np.ndarray:
    theta = np.array(theta0, dtype=float)
    table = new_table(obj, theta)
    trace = [theta]
    for k in range(iters):
        theta, table = saga_step(obj, theta, table, alpha, rng)
        check_divergence(k + 1, theta)
        trace.append(theta)
    return np.array(trace)


def svrg_estimator(obj, theta, anchor, anchor_grad, s: int) -> np.ndarray:
    pts = np.stack([np.asarray(theta, float), np.asarray(anchor, float)])
    g = pooled_gradients(obj, np.array([s, s]), pts)
    return g[0] - g[1] + anchor_grad


def svrg_outer(obj, theta, alpha: float, T: int, option: str, rng: np.random.Generator) -> np.ndarray:
    """One outer loop: anchor at ``theta``, ``T`` inner steps, then pick the next outer iterate.

    All ``T`` inner sample indices are drawn up front, in inner-step order.
    """
    if T < 1:
        raise ValueError(f"inner loop length must be >= 1, got {T}")
    anchor = np.array(theta, dtype=float)
    anchor_grad = obj.global_gradient(anchor)
    samples = rng.integers(obj.num_components, size=T)
    inner = [anchor]
    for t in range(T):
        v = svrg_estimator(obj, inner[-1], anchor, anchor_grad, samples[t])
        inner.append(inner[-1] - alpha * v)
    return _select(inner, option, rng)


def _select(inner: list[np.ndarray], option: str, rng: np.random.Generator) -> np.ndarray:
    T = len(inner) - 1
    if option in ("last", "a"):
        return inner[T]
    if option in ("average", "b"):
        return np.mean(inner[:T], axis=0)
    if option in ("random", "c"):
        return inner[int(rng.integers(T))]
    raise ValueError(f"unknown SVRG option {option!r}")


def svrg_run(obj, theta0, alpha: float, T: int, outer_iters: int, option: str = "average",
             rng: np.random.Generator | None = None) -> np.ndarray:
    """SVRG double loop; returns the ``(outer_iters + 1, p)`` outer-iterate trace."""
    rng = rng if rng is not None else np.random.default_rng()
    trace = [np.array(theta0, dtype=float)]
    for k in range(outer_iters):
        theta = svrg_outer(obj, trace[-1], alpha, T, option, rng)
        check_divergence(k + 1, theta)
        trace.append(theta)
    return np.array(trace)


def solve_reference(obj: FiniteSumObjective, tol: float = 1e-12, max_iter: int = 200,
                    method: str = "newton") -> np.ndarray:
    """High-accuracy minimizer of ``F``.

    Quadratics are solved in closed form. Otherwise damped Newton steps with
    Armijo backtracking (``method="gd"`` uses the negative gradient instead,
    with ``max_iter`` scaled up accordingly) run until ``||grad F|| <= tol``.
    """
    if isinstance(obj, QuadraticObjective):
        return obj.minimizer()
    theta = np.zeros(obj.p)
    f = obj.value(theta)
    g = obj.global_gradient(theta)
    iters = max_iter if method == "newton" else 1000 * max_iter
    last_step = 1.0
    for _ in range(iters):
        if np.linalg.norm(g) <= tol:
            return theta
        if method == "newton":
            direction = -np.linalg.solve(obj.hessian(theta), g)
        elif method == "gd":
            direction = -g
        else:
            raise ValueError(f"unknown solver method {method!r}")
        slope = float(g @ direction)
        step = 1.0
        # objective differences this small are below float resolution of f
        tiny = -slope < 1e-13 * (1.0 + abs(f))
        while not tiny:
            cand = theta + step * direction
            f_cand = obj.value(cand)
            if f_cand <= f + 1e-4 * step * slope or step < 1e-20:
                break
            step *= 0.5
        if tiny:
            step = 1.0 if method == "newton" else last_step
            cand = theta + step * direction
            f_cand = obj.value(cand)
        last_step = step
        if np.array_equal(cand, theta):
            break
        theta, f = cand, f_cand
        g = obj.global_gradient(theta)
    if np.linalg.norm(g) <= tol:
        return theta
    raise SolverError(f"gradient norm {np.linalg.norm(g):.3e} still above tol={tol:.1e} after {iters} iterations")
