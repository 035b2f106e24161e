"""Doubly-stochastic weight matrices and the two consensus primitives.

Stacked network states are ``(n, p)`` arrays: row ``i`` is node ``i``'s
vector. Multiplying by ``W`` from the left is the ``(W kron I_p)`` product.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .topology import Topology, is_connected

__all__ = [
    "MixingMatrix",
    "MixingError",
    "metropolis_weights",
    "lazy_laplacian_weights",
    "spectral_gap",
    "consensus_step",
    "dac_step",
    "save_csv",
    "load_csv",
]

STOCHASTIC_TOL = 1e-12


class MixingError(ValueError):
    pass


@dataclass(frozen=True)
class MixingMatrix:
    """Symmetric doubly-stochastic ``w`` with cached second-largest eigenvalue modulus."""

    w: np.ndarray
    lam: float = field(init=False)

    def __post_init__(self):
        w = np.array(self.w, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise MixingError(f"weight matrix must be square, got shape {w.shape}")
        if (w < 0).any():
            raise MixingError("weight matrix has negative entries")
        if not np.array_equal(w, w.T):
            raise MixingError("weight matrix is not symmetric")
        dev = max(np.abs(w.sum(axis=0) - 1).max(), np.abs(w.sum(axis=1) - 1).max())
        if dev >= STOCHASTIC_TOL:
            raise MixingError(f"weight matrix is not doubly stochastic (deviation {dev:.3e})")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "lam", _second_modulus(w))

    @property
    def n(self) -> int:
        return self.w.shape[0]

    def conforms_to(self, t: Topology) -> bool:
        """True iff off-diagonal support lies inside the edge set of ``t``."""
        i, r = np.nonzero(self.w)
        return all(a == b or t.has_edge(a, b) for a, b in zip(i.tolist(), r.tolist()))


def _second_modulus(w: np.ndarray) -> float:
    if w.shape[0] == 1:
        return 0.0
    ev = np.linalg.eigvalsh(w)
    # drop the Perron eigenvalue 1 (largest), keep the largest modulus of the rest
    return float(max(abs(ev[0]), abs(ev[-2])))


def _symmetrize_exact(w: np.ndarray) -> np.ndarray:
    # fill from the upper triangle so w == w.T bit for bit, then set the diagonal
    off = np.triu(w, k=1)
    off = off + off.T
    np.fill_diagonal(off, 1.0 - off.sum(axis=1))
    return off


def metropolis_weights(t: Topology) -> MixingMatrix:
    """Metropolis-Hastings rule: ``w_ir = 1 / (1 + max(deg_i, deg_r))`` on edges."""
    if not is_connected(t):
        raise MixingError("Metropolis weights need a connected graph")
    deg = t.degrees
    w = np.zeros((t.n, t.n))
    for i, r in t.edges:
        w[i, r] = 1.0 / (1.0 + max(deg[i], deg[r]))
    return MixingMatrix(_symmetrize_exact(w))


def lazy_laplacian_weights(t: Topology, eps: float) -> MixingMatrix:
    """``W = I - eps * L`` for ``0 < eps < 1 / deg_max``."""
    dmax = int(t.degrees.max()) if t.n > 1 else 0
    if not eps > 0 or (dmax > 0 and eps >= 1.0 / dmax):
        raise MixingError(f"eps must lie in (0, 1/deg_max) = (0, {1.0 / max(dmax, 1)}), got {eps}")
    return MixingMatrix(_symmetrize_exact(-eps * t.laplacian()))


def spectral_gap(m: MixingMatrix) -> float:
    """Second-largest eigenvalue modulus ``lambda`` of ``W`` (the gap is ``1 - lambda``)."""
    return _second_modulus(m.w)


def _check(m: MixingMatrix, x: np.ndarray, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] != m.n:
        raise MixingError(f"{name} must have shape (n={m.n}, p), got {x.shape}")
    return x


def consensus_step(m: MixingMatrix, states: np.ndarray) -> np.ndarray:
    """One round of average consensus, ``theta <- W theta``."""
    return m.w @ _check(m, states, "states")


def dac_step(m: MixingMatrix, trackers: np.ndarray, signal_new: np.ndarray, signal_old: np.ndarray) -> np.ndarray:
    """Dynamic average consensus: ``d <- W d + r_new - r_old``.

    Started from ``d_0 = r_0`` the tracker mean equals the signal mean at
    every step, since ``1^T W = 1^T``.
    """
    d = _check(m, trackers, "trackers")
    new = _check(m, signal_new, "signal_new")
    old = _check(m, signal_old, "signal_old")
    if not d.shape == new.shape == old.shape:
        raise MixingError(f"shape mismatch: {d.shape}, {new.shape}, {old.shape}")
    return m.w @ d + new - old


def save_csv(m: MixingMatrix, path: str | Path) -> None:
    """Row-major CSV with shortest round-trip decimal representation."""
    lines = [",".join(repr(float(v)) for v in row) for row in m.w]
    Path(path).write_text("\n".join(lines) + "\n")


def load_csv(path: str | Path) -> MixingMatrix:
    rows = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    return MixingMatrix(np.array([[float(v) for v in ln.split(",")] for ln in rows]))
