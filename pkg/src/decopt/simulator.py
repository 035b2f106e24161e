"""Seeded experiment runs: problem construction, round loop, metric traces."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import decentralized as dec
from . import reference_opt as ref
from .mixing import MixingMatrix, lazy_laplacian_weights, metropolis_weights
from .objectives import (
    FiniteSumObjective,
    heterogeneous_partition,
    heterogeneous_quadratic,
    ingest_dataset,
    standardize,
    two_gaussians,
    Dataset,
)
from .topology import (
    Topology,
    complete_graph,
    path_graph,
    random_geometric,
    read_edge_list,
    ring_graph,
)

__all__ = [
    "GraphConfig",
    "WeightsConfig",
    "ObjectiveConfig",
    "AlgorithmConfig",
    "ScheduleConfig",
    "BudgetConfig",
    "ExperimentConfig",
    "Problem",
    "TraceRecord",
    "Trace",
    "ComparisonError",
    "DECENTRALIZED",
    "CENTRALIZED",
    "ALGORITHMS",
    "build_topology",
    "build_objective",
    "build_problem",
    "run_experiment",
    "compare_experiments",
]

DECENTRALIZED = ("dgd", "dsgd", "gt-dgd", "gt-dsgd", "gt-saga", "gt-svrg")
CENTRALIZED = ("gd", "sgd", "saga", "svrg")
ALGORITHMS = DECENTRALIZED + CENTRALIZED
MAX_RECORDS = 10_000
TRACE_HEADER = "round,epochs,avg_residual,consensus_error,tracking_error,grad_evals"


class ComparisonError(ValueError):
    pass


@dataclass(frozen=True)
class GraphConfig:
    kind: str = "geometric"  # geometric | ring | path | complete | file
    n: int = 20
    radius: float = 0.25
    seed: int = 0
    path: str = ""


@dataclass(frozen=True)
class WeightsConfig:
    rule: str = "metropolis"  # metropolis | laplacian
    eps: float = 0.0


@dataclass(frozen=True)
class ObjectiveConfig:
    """Problem description; ``n`` comes from the graph.

    ``lam = 0`` selects the default ``1/N``. For quadratics ``dim`` is the
    parameter dimension ``p``.
    """

    kind: str = "logistic"  # logistic | quadratic
    dataset: str = ""  # CSV path; empty -> synthetic two-Gaussian data
    label_map: str = ""  # e.g. "3:-1,8:1"
    normalize: bool = True
    per_node: int = 10
    dim: int = 20
    separation: float = 2.0
    partition: str = "one-class"  # one-class | iid
    lam: float = 0.0
    data_seed: int = 0
    spread: float = 1.0
    noise: float = 0.1
    shared_hessian: bool = False
    cond: float = 4.0


@dataclass(frozen=True)
class AlgorithmConfig:
    name: str = "gt-saga"
    T: int = 10
    option: str = "a"
    tracker: str = "reanchor"  # GT-SVRG only: reanchor | carry
    init: str = "zero"  # zero | random


@dataclass(frozen=True)
class ScheduleConfig:
    kind: str = "constant"  # constant | harmonic
    alpha: float = 0.01
    a: float = 1.0
    k0: float = 1.0

    def schedule(self) -> ref.StepSchedule:
        return ref.StepSchedule(self.kind, alpha=self.alpha, a=self.a, k0=self.k0)


@dataclass(frozen=True)
class BudgetConfig:
    """Stop after ``rounds`` rounds or ``epochs`` epochs, whichever is set (both: first hit).

    ``cadence = 0`` records every round up to 10^4 rounds, else every
    ``ceil(rounds / 10^4)``-th round. One SVRG-family round is an outer loop.
    """

    rounds: int = 0
    epochs: float = 0.0
    cadence: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    graph: GraphConfig = field(default_factory=GraphConfig)
    weights: WeightsConfig = field(default_factory=WeightsConfig)
    objective: ObjectiveConfig = field(default_factory=ObjectiveConfig)
    algorithm: AlgorithmConfig = field(default_factory=AlgorithmConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    budget: BudgetConfig = field(default_factory=BudgetConfig)
    seed: int = 0

    def __post_init__(self):
        if self.algorithm.name not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm.name!r}; choose from {', '.join(ALGORITHMS)}")
        b = self.budget
        if b.rounds < 0 or b.epochs < 0 or b.cadence < 0:
            raise ValueError("budget values must be non-negative")
        if self.graph.n < 1:
            raise ValueError(f"graph.n must be positive, got {self.graph.n}")


@dataclass
class Problem:
    topology: Topology | None
    mixing: MixingMatrix
    objective: FiniteSumObjective
    theta_star: np.ndarray


# ---------------------------------------------------------------- construction


def build_topology(g: GraphConfig) -> Topology | None:
    if g.n == 1:
        return None
    if g.kind == "geometric":
        return random_geometric(g.n, g.radius, g.seed)
    if g.kind == "ring":
        return ring_graph(g.n)
    if g.kind == "path":
        return path_graph(g.n)
    if g.kind == "complete":
        return complete_graph(g.n)
    if g.kind == "file":
        t = read_edge_list(g.path)
        if t.n != g.n:
            raise ValueError(f"{g.path} holds {t.n} nodes, config says {g.n}")
        return t
    raise ValueError(f"unknown graph kind {g.kind!r}")


def build_mixing(t: Topology | None, w: WeightsConfig) -> MixingMatrix:
    if t is None:
        return MixingMatrix(np.ones((1, 1)))
    if w.rule == "metropolis":
        return metropolis_weights(t)
    if w.rule == "laplacian":
        return lazy_laplacian_weights(t, w.eps)
    raise ValueError(f"unknown weight rule {w.rule!r}")


def parse_label_map(text: str) -> dict[int, int] | None:
    if not text.strip():
        return None
    out = {}
    for item in text.split(","):
        raw, _, mapped = item.partition(":")
        out[int(raw)] = int(mapped)
    return out


def load_dataset(o: ObjectiveConfig, n: int) -> Dataset:
    if o.dataset:
        return ingest_dataset(o.dataset, parse_label_map(o.label_map), o.normalize)
    data = two_gaussians(n * o.per_node, o.dim, o.separation, o.data_seed)
    return Dataset(standardize(data.X), data.y) if o.normalize else data


def build_objective(o: ObjectiveConfig, n: int) -> FiniteSumObjective:
    if o.kind == "quadratic":
        return heterogeneous_quadratic(
            n, o.per_node, o.dim, o.spread, o.noise, o.data_seed, o.shared_hessian, o.cond
        )
    if o.kind == "logistic":
        data = load_dataset(o, n)
        return heterogeneous_partition(
            data, n, o.partition, o.data_seed, o.per_node if n > 1 else None, o.lam or None
        )
    raise ValueError(f"unknown objective kind {o.kind!r}")


_REFERENCE_CACHE: dict[tuple, tuple[FiniteSumObjective, np.ndarray]] = {}


def build_problem(cfg: ExperimentConfig) -> Problem:
    """Topology, weights, objective and its cached reference minimizer."""
    t = build_topology(cfg.graph)
    mixing = build_mixing(t, cfg.weights)
    key = (cfg.objective, cfg.graph.n)
    if key not in _REFERENCE_CACHE:
        obj = build_objective(cfg.objective, cfg.graph.n)
        _REFERENCE_CACHE[key] = (obj, ref.solve_reference(obj))
    obj, theta_star = _REFERENCE_CACHE[key]
    return Problem(t, mixing, obj, theta_star)


# ---------------------------------------------------------------- traces


@dataclass(frozen=True)
class TraceRecord:
    round: int
    epochs: float
    avg_residual: float
    consensus_error: float
    tracking_error: float | None
    grad_evals: int
    wall_time: float = field(default=0.0, compare=False)

    def csv_row(self) -> str:
        te = "" if self.tracking_error is None else repr(self.tracking_error)
        return f"{self.round},{self.epochs!r},{self.avg_residual!r},{self.consensus_error!r},{te},{self.grad_evals}"


class Trace(list):
    """A list of :class:`TraceRecord` with CSV export and column access."""

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self], dtype=float)

    def to_csv_text(self) -> str:
        return "\n".join([TRACE_HEADER] + [r.csv_row() for r in self]) + "\n"

    def to_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv_text())

    @classmethod
    def from_csv(cls, source: str | Path) -> "Trace":
        text = Path(source).read_text()
        lines = text.splitlines()
        if not lines or lines[0] != TRACE_HEADER:
            raise ValueError(f"{source}: not a trace CSV")
        out = cls()
        for ln in lines[1:]:
            k, ep, res, ce, te, ge = ln.split(",")
            out.append(TraceRecord(int(k), float(ep), float(res), float(ce), float(te) if te else None, int(ge)))
        return out

    def plateau(self, frac: float = 0.2) -> float:
        """Mean ``avg_residual`` over the trailing ``frac`` of records."""
        res = self.column("avg_residual")
        return float(res[-max(1, int(len(res) * frac)):].mean())

    def log_slope(self, lo: float = 0.0, hi: float = math.inf) -> float:
        """Least-squares slope of ``log10(avg_residual)`` against epochs on ``[lo, hi]``."""
        ep, res = self.column("epochs"), self.column("avg_residual")
        mask = (ep >= lo) & (ep <= hi) & (res > 0)
        return float(np.polyfit(ep[mask], np.log10(res[mask]), 1)[0])


# ---------------------------------------------------------------- running


def _epochs_per_round(name: str, obj: FiniteSumObjective, T: int) -> float:
    inv = 1.0 / obj.sizes
    N = obj.num_components
    return {
        "dgd": 1.0, "gt-dgd": 1.0, "gd": 1.0,
        "dsgd": inv.mean(), "gt-dsgd": inv.mean(), "gt-saga": inv.mean(),
        "gt-svrg": float(((obj.sizes + 2 * T) * inv).mean()),
        "sgd": 1.0 / N, "saga": 1.0 / N, "svrg": (N + 2 * T) / N,
    }[name]


def _round_budget(cfg: ExperimentConfig, obj: FiniteSumObjective, init_epochs: float) -> int:
    b = cfg.budget
    limits = []
    if b.rounds:
        limits.append(b.rounds)
    if b.epochs:
        per = _epochs_per_round(cfg.algorithm.name, obj, cfg.algorithm.T)
        limits.append(max(0, math.ceil((b.epochs - init_epochs) / per - 1e-9)))
    return min(limits) if limits else 0


def _initial_theta(cfg: ExperimentConfig, obj: FiniteSumObjective) -> np.ndarray:
    if cfg.algorithm.init == "zero":
        return np.zeros(obj.p)
    if cfg.algorithm.init == "random":
        rng = np.random.default_rng([cfg.seed, 0x5EED])
        return rng.standard_normal((obj.n, obj.p))
    raise ValueError(f"unknown init {cfg.algorithm.init!r}")


class _Centralized:
    """Single-iterate runner for the pooled baselines, presented like a one-node network."""

    def __init__(self, cfg: ExperimentConfig, obj: FiniteSumObjective):
        self.cfg, self.obj = cfg, obj
        theta0 = _initial_theta(cfg, obj)
        self.theta = theta0 if theta0.ndim == 1 else theta0.mean(axis=0)
        self.rng = dec.node_rngs(cfg.seed, 1)[0]
        self.evals = 0
        self.table = None
        if cfg.algorithm.name == "saga":
            self.table = ref.new_table(obj, self.theta)
            self.evals = obj.num_components

    def step(self, k: int) -> None:
        a, obj, sched = self.cfg.algorithm, self.obj, self.cfg.schedule.schedule()
        N = obj.num_components
        if a.name == "gd":
            self.theta = self.theta - sched(k) * obj.global_gradient(self.theta)
            self.evals += N
        elif a.name == "sgd":
            self.theta = ref.sgd_step(obj, self.theta, sched(k), self.rng)
            self.evals += 1
        elif a.name == "saga":
            self.theta, self.table = ref.saga_step(obj, self.theta, self.table, sched(k), self.rng)
            self.evals += 1
        else:
            self.theta = ref.svrg_outer(obj, self.theta, sched(k), a.T, a.option, self.rng)
            self.evals += N + 2 * a.T
        ref.check_divergence(k + 1, self.theta)

    def record(self, k: int, theta_star: np.ndarray, t0: float) -> TraceRecord:
        return TraceRecord(
            k, self.evals / self.obj.num_components, float(((self.theta - theta_star) ** 2).sum()),
            0.0, None, int(self.evals), time.perf_counter() - t0,
        )


class _Decentralized:
    ROUND = {
        "dgd": dec.dgd_round, "dsgd": dec.dsgd_round, "gt-dgd": dec.gt_dgd_round,
        "gt-dsgd": dec.gt_dsgd_round, "gt-saga": dec.gt_saga_round,
    }

    def __init__(self, cfg: ExperimentConfig, problem: Problem):
        self.cfg, self.p = cfg, problem
        obj = problem.objective
        self.net = dec.init_network(obj, _initial_theta(cfg, obj), cfg.seed, cfg.algorithm.name)

    def step(self, k: int) -> None:
        a, p = self.cfg.algorithm, self.p
        alpha = self.cfg.schedule.schedule()(k)
        if a.name == "gt-svrg":
            dec.gt_svrg_outer(self.net, p.mixing, p.objective, alpha, a.T, a.option, a.tracker)
        else:
            self.ROUND[a.name](self.net, p.mixing, p.objective, alpha)

    def record(self, k: int, theta_star: np.ndarray, t0: float) -> TraceRecord:
        net, obj = self.net, self.p.objective
        resid = float(((net.theta - theta_star) ** 2).sum(axis=1).mean())
        return TraceRecord(
            k, float((net.evals / obj.sizes).mean()), resid, dec.consensus_error(net),
            dec.tracking_error(net), int(net.evals.sum()), time.perf_counter() - t0,
        )


def run_experiment(cfg: ExperimentConfig, problem: Problem | None = None) -> Trace:
    """Run ``cfg`` and return its metric trace (bit-reproducible for a fixed config).

    Raises :class:`~decopt.reference_opt.DivergenceError` carrying the
    offending round when an iterate norm exceeds the guard.
    """
    problem = problem or build_problem(cfg)
    obj = problem.objective
    if cfg.algorithm.name in CENTRALIZED:
        runner = _Centralized(cfg, obj)
    else:
        runner = _Decentralized(cfg, problem)
    t0 = time.perf_counter()
    trace = Trace([runner.record(0, problem.theta_star, t0)])
    rounds = _round_budget(cfg, obj, trace[0].epochs)
    cadence = cfg.budget.cadence or max(1, math.ceil(rounds / MAX_RECORDS))
    for k in range(rounds):
        runner.step(k)
        if (k + 1) % cadence == 0 or k + 1 == rounds:
            trace.append(runner.record(k + 1, problem.theta_star, t0))
    return trace


@dataclass
class Comparison:
    epochs: np.ndarray
    residuals: dict[str, np.ndarray]
    traces: dict[str, Trace]


def compare_experiments(configs: dict[str, ExperimentConfig], grid_size: int = 200) -> Comparison:
    """Run several configs on a shared problem and align residuals on one epoch grid.

    Each grid point takes the residual of the last record at or before it.
    """
    if not configs:
        raise ComparisonError("nothing to compare")
    first = next(iter(configs.values()))
    for name, c in configs.items():
        if c.graph != first.graph or c.objective != first.objective or c.weights != first.weights:
            raise ComparisonError(f"experiment {name!r} uses a different graph, weights or objective")
    problem = build_problem(first)
    traces = {name: run_experiment(c, problem) for name, c in configs.items()}
    hi = min(t[-1].epochs for t in traces.values())
    lo = max(t[0].epochs for t in traces.values())
    grid = np.linspace(lo, hi, grid_size) if hi > lo else np.array([lo])
    residuals = {}
    for name, t in traces.items():
        ep, res = t.column("epochs"), t.column("avg_residual")
        idx = np.clip(np.searchsorted(ep, grid, side="right") - 1, 0, len(ep) - 1)
        residuals[name] = res[idx]
    return Comparison(grid, residuals, traces)
