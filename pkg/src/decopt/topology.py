"""Undirected communication graphs for decentralized optimization."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Topology",
    "TopologyError",
    "random_geometric",
    "is_connected",
    "path_graph",
    "complete_graph",
    "ring_graph",
    "write_edge_list",
    "read_edge_list",
]

MAX_RETRIES = 1000


class TopologyError(ValueError):
    pass


def _canonical(edges) -> frozenset[tuple[int, int]]:
    out = set()
    for i, r in edges:
        i, r = int(i), int(r)
        if i == r:
            raise TopologyError(f"self-loop at node {i}")
        out.add((min(i, r), max(i, r)))
    return frozenset(out)


@dataclass(frozen=True)
class Topology:
    """Undirected simple graph over nodes ``0..n-1``.

    Edges are stored once as ``(i, r)`` with ``i < r``; symmetry is implied,
    so ``has_edge(i, r) == has_edge(r, i)`` always. ``coords`` holds node
    positions for geometric graphs and is only kept for export.
    """

    n: int
    edges: frozenset[tuple[int, int]]
    coords: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise TopologyError(f"need at least one node, got n={self.n}")
        edges = _canonical(self.edges)
        for i, r in edges:
            if r >= self.n or i < 0:
                raise TopologyError(f"edge ({i}, {r}) out of range for n={self.n}")
        object.__setattr__(self, "edges", edges)
        nbrs: list[list[int]] = [[] for _ in range(self.n)]
        for i, r in sorted(edges):
            nbrs[i].append(r)
            nbrs[r].append(i)
        object.__setattr__(self, "_neighbors", tuple(tuple(sorted(x)) for x in nbrs))

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self._neighbors[i]

    def has_edge(self, i: int, r: int) -> bool:
        return (min(i, r), max(i, r)) in self.edges

    @property
    def degrees(self) -> np.ndarray:
        return np.array([len(x) for x in self._neighbors], dtype=int)

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for i, r in self.edges:
            a[i, r] = a[r, i] = 1.0
        return a

    def laplacian(self) -> np.ndarray:
        a = self.adjacency()
        return np.diag(a.sum(axis=1)) - a


def is_connected(t: Topology) -> bool:
    """Breadth-first search from node 0."""
    seen = {0}
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for r in t.neighbors(i):
            if r not in seen:
                seen.add(r)
                queue.append(r)
    return len(seen) == t.n


def random_geometric(n: int, radius: float, seed: int, max_retries: int = MAX_RETRIES) -> Topology:
    """Random geometric graph on the unit square, redrawn until connected.

    Nodes are placed uniformly at random; ``(i, r)`` is an edge iff the
    Euclidean distance is at most ``radius``. Each retry draws a completely
    fresh set of points from the same generator.
    """
    if n < 2:
        raise TopologyError(f"random_geometric needs n >= 2, got {n}")
    if not 0 < radius <= np.sqrt(2):
        raise TopologyError(f"radius must lie in (0, sqrt(2)], got {radius}")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    for _ in range(max_retries):
        pts = rng.random((n, 2))
        dist = np.linalg.norm(pts[iu] - pts[ju], axis=1)
        mask = dist <= radius
        t = Topology(n, frozenset(zip(iu[mask].tolist(), ju[mask].tolist())), coords=pts)
        if is_connected(t):
            return t
    raise TopologyError(
        f"no connected geometric graph with n={n}, radius={radius} after {max_retries} draws"
    )


def path_graph(n: int) -> Topology:
    if n < 2:
        raise TopologyError(f"path_graph needs n >= 2, got {n}")
    return Topology(n, frozenset((i, i + 1) for i in range(n - 1)))


def complete_graph(n: int) -> Topology:
    if n < 2:
        raise TopologyError(f"complete_graph needs n >= 2, got {n}")
    return Topology(n, frozenset((i, r) for i in range(n) for r in range(i + 1, n)))


def ring_graph(n: int) -> Topology:
    # n == 2 collapses to a single edge (the two ring edges coincide)
    if n < 2:
        raise TopologyError(f"ring_graph needs n >= 2, got {n}")
    return Topology(n, frozenset((i, (i + 1) % n) for i in range(n)))


def write_edge_list(t: Topology, path: str | Path) -> None:
    """Write ``n`` on the first line, then one ``i r`` pair per line (0-indexed)."""
    lines = [str(t.n)] + [f"{i} {r}" for i, r in sorted(t.edges)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path: str | Path) -> Topology:
    rows = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not rows or len(rows[0]) != 1:
        raise TopologyError(f"{path}: first line must hold the node count")
    n = int(rows[0][0])
    edges = []
    for k, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise TopologyError(f"{path}:{k}: expected 'i r', got {' '.join(row)!r}")
        edges.append((int(row[0]), int(row[1])))
    return Topology(n, frozenset(edges))
