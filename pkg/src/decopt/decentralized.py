"""Synchronous-round update rules for decentralized first-order methods.

The network state stacks node vectors as rows of ``(n, p)`` arrays. Each
round reads only the previous round's rows, so ``W @ theta`` is exactly
the neighbor exchange. Round functions update ``net`` in place and return
it.

Every node owns an independent generator spawned from the master seed, so
sample paths do not depend on the order in which nodes are processed. A
single-node network uses the same generator as the centralized methods in
:mod:`decopt.reference_opt` for the same seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mixing import MixingMatrix
from .objectives import FiniteSumObjective
from .reference_opt import GradientTable, check_divergence

__all__ = [
    "NetworkState",
    "node_rngs",
    "init_network",
    "dgd_round",
    "dsgd_round",
    "gt_dgd_round",
    "gt_dsgd_round",
    "gt_saga_round",
    "gt_svrg_outer",
    "consensus_error",
    "tracking_error",
    "GT_METHODS",
]

GT_METHODS = ("gt-dgd", "gt-dsgd", "gt-saga", "gt-svrg")


def node_rngs(seed: int, n: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


@dataclass
class NetworkState:
    """Stacked per-node state.

    ``g`` holds each node's current local gradient estimate (batch, sampled,
    SAGA or SVRG depending on the method) and ``tracker`` the gradient
    tracker; both stay ``None`` for methods that do not use them.
    """

    theta: np.ndarray
    rngs: list[np.random.Generator]
    evals: np.ndarray
    k: int = 0
    exchanges: int = 0
    tracker: np.ndarray | None = None
    g: np.ndarray | None = None
    table: GradientTable | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.theta.shape[0]


def init_network(obj: FiniteSumObjective, theta0, seed: int, method: str = "dsgd") -> NetworkState:
    """Build the initial state for ``method``.

    ``theta0`` is either one ``p``-vector shared by all nodes or an
    ``(n, p)`` array. Tracker initializations follow the respective
    methods: ``d_0 = grad f_i`` for GT-DGD, a sampled component gradient for
    GT-DSGD, and the fresh-table SAGA estimate (equal to ``grad f_i``) for
    GT-SAGA. GT-SVRG starts from ``d_0 = v_0 = grad f_i(theta_0)``; that
    value is recomputed, and charged, as the first outer loop's anchor.
    """
    theta = np.array(np.broadcast_to(np.asarray(theta0, float), (obj.n, obj.p)))
    net = NetworkState(theta=theta, rngs=node_rngs(seed, obj.n), evals=np.zeros(obj.n, dtype=np.int64))
    if method == "gt-dgd":
        net.g = obj.local_batch_gradients(theta)
        net.evals += obj.sizes
    elif method == "gt-dsgd":
        net.g = obj.component_gradients(_sample(net, obj), theta)
        net.evals += 1
    elif method == "gt-saga":
        net.table = GradientTable(obj.all_component_gradients(theta), obj.sizes)
        net.evals += obj.sizes
        # the estimate at a fresh table cancels to the batch gradient for any
        # sample; the draw keeps sample paths aligned with centralized SAGA
        rows = _sample(net, obj)
        net.g = net.table.entries[rows] - net.table.entries[rows] + net.table.avg
    elif method == "gt-svrg":
        net.g = obj.local_batch_gradients(theta)
    elif method not in ("dgd", "dsgd"):
        raise ValueError(f"unknown method {method!r}")
    if net.g is not None:
        net.tracker = net.g.copy()
    return net


def _sample(net: NetworkState, obj: FiniteSumObjective) -> np.ndarray:
    """One uniform local index per node, returned as global component rows."""
    local = np.array([rng.integers(m) for rng, m in zip(net.rngs, obj.sizes)], dtype=np.int64)
    return obj.offsets[:-1] + local


def _finish(net: NetworkState, theta: np.ndarray, exchanges: int) -> NetworkState:
    check_divergence(net.k + 1, theta)
    net.theta = theta
    net.k += 1
    net.exchanges += exchanges
    return net


def dgd_round(net: NetworkState, mixing: MixingMatrix, obj: FiniteSumObjective, alpha: float) -> NetworkState:
    """``theta_i <- sum_r w_ir theta_r - alpha grad f_i(theta_i)``."""
    grads = obj.local_batch_gradients(net.theta)
    net.g = grads
    net.evals += obj.sizes
    return _finish(net, mixing.w @ net.theta - alpha * grads, 1)


def dsgd_round(net: NetworkState, mixing: MixingMatrix, obj: FiniteSumObjective, alpha: float) -> NetworkState:
    """DGD with each local batch gradient replaced by one sampled component gradient."""
    grads = obj.component_gradients(_sample(net, obj), net.theta)
    net.g = grads
    net.evals += 1
    return _finish(net, mixing.w @ net.theta - alpha * grads, 1)


def _track(net: NetworkState, mixing: MixingMatrix, g_new: np.ndarray) -> None:
    net.tracker = mixing.w @ net.tracker + g_new - net.g
    net.g = g_new


def gt_dgd_round(net: NetworkState, mixing: MixingMatrix, obj: FiniteSumObjective, alpha: float) -> NetworkState:
    theta_new = mixing.w @ net.theta - alpha * net.tracker
    _track(net, mixing, obj.local_batch_gradients(theta_new))
    net.evals += obj.sizes
    return _finish(net, theta_new, 2)


def gt_dsgd_round(net: NetworkState, mixing: MixingMatrix, obj: FiniteSumObjective, alpha: float) -> NetworkState:
    theta_new = mixing.w @ net.theta - alpha * net.tracker
    _track(net, mixing, obj.component_gradients(_sample(net, obj), theta_new))
    net.evals += 1
    return _finish(net, theta_new, 2)


def gt_saga_round(net: NetworkState, mixing: MixingMatrix, obj: FiniteSumObjective, alpha: float) -> NetworkState:
    theta_new = mixing.w @ net.theta - alpha * net.tracker
    rows = _sample(net, obj)
    fresh = obj.component_gradients(rows, theta_new)
    g_new = fresh - net.table.entries[rows] + net.table.avg
    net.table.replace(rows, fresh)
    _track(net, mixing, g_new)
    net.evals += 1
    return _finish(net, theta_new, 2)


def gt_svrg_outer(
    net: NetworkState,
    mixing: MixingMatrix,
    obj: FiniteSumObjective,
    alpha: float,
    T: int,
    option: str = "a",
    tracker_mode: str = "reanchor",
    inner_hook=None,
) -> NetworkState:
    """One GT-SVRG outer loop (``T`` tracked inner rounds).

    ``tracker_mode="carry"`` carries ``d`` and ``v`` into the next outer loop
    unchanged. ``"reanchor"`` instead restarts ``v`` at the new anchor batch
    gradient and shifts ``d`` by the same difference, which keeps the
    tracker mean equal to the estimator mean. Both modes agree on the first
    outer loop.

    The ``T`` sample indices of a node are drawn up front; the estimator of
    inner step ``t`` (``t = 1..T``) uses slot ``t mod T``. ``inner_hook``,
    if given, is called with ``net`` after every inner tracker update.
    """
    if T < 1:
        raise ValueError(f"inner loop length must be >= 1, got {T}")
    if tracker_mode not in ("reanchor", "carry"):
        raise ValueError(f"unknown tracker mode {tracker_mode!r}")
    anchor = net.theta.copy()
    anchor_grad = obj.local_batch_gradients(anchor)
    net.evals += obj.sizes
    if tracker_mode == "reanchor":
        net.tracker = net.tracker + anchor_grad - net.g
        net.g = anchor_grad.copy()

    slots = np.stack([rng.integers(m, size=T) for rng, m in zip(net.rngs, obj.sizes)])
    base = obj.offsets[:-1]
    rows = np.concatenate([base, base])
    inner = [anchor]
    for t in range(T):
        theta_new = mixing.w @ inner[-1] - alpha * net.tracker
        rows[: net.n] = rows[net.n :] = base + slots[:, (t + 1) % T]
        pair = obj.component_gradients(rows, np.concatenate([theta_new, anchor]))
        v_new = pair[: net.n] - pair[net.n :] + anchor_grad
        _track(net, mixing, v_new)
        check_divergence(net.k + 1, theta_new)
        inner.append(theta_new)
        if inner_hook is not None:
            inner_hook(net)
    net.evals += 2 * T
    net.exchanges += 2 * T

    if option in ("a", "last"):
        theta = inner[T]
    elif option in ("b", "average"):
        theta = np.mean(inner[:T], axis=0)
    elif option in ("c", "random"):
        picks = [int(rng.integers(T)) for rng in net.rngs]
        theta = np.stack([inner[t][i] for i, t in enumerate(picks)])
    else:
        raise ValueError(f"unknown GT-SVRG option {option!r}")
    net.theta = theta
    net.k += 1
    return net


def consensus_error(net: NetworkState) -> float:
    """``(1/n) sum_i ||theta_i - mean(theta)||^2``."""
    dev = net.theta - net.theta.mean(axis=0)
    return float((dev**2).sum(axis=1).mean())


def tracking_error(net: NetworkState) -> float | None:
    """``(1/n) sum_i ||d_i - mean(g)||^2`` for tracking methods, else ``None``."""
    if net.tracker is None:
        return None
    dev = net.tracker - net.g.mean(axis=0)
    return float((dev**2).sum(axis=1).mean())
