"""Command-line front end: ``decopt {gen-graph,gen-data,solve-ref,run,compare}``.

Exit status is 0 on success, 1 on validation errors (bad arguments,
missing files, config schema violations) and 2 on runtime failures
(divergence, reference solver). Errors are reported as one JSON line on
stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, load_comparison, load_config, parse_overrides
from .mixing import MixingError, save_csv
from .objectives import PartitionError, estimate_stats, two_gaussians, write_dataset
from .reference_opt import DivergenceError, SolverError
from .simulator import (
    ComparisonError,
    WeightsConfig,
    build_mixing,
    build_problem,
    compare_experiments,
    run_experiment,
)
from .topology import TopologyError, random_geometric, write_edge_list

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class _Invalid(Exception):
    """Wraps an error raised while validating inputs."""


def _validating(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (FileNotFoundError, ConfigError, ValueError) as e:
        raise _Invalid(e) from e


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_gen_graph(args) -> None:
    t = _validating(random_geometric, args.n, args.radius, args.seed)
    out = _out_dir(args)
    write_edge_list(t, out / args.name)
    if args.weights:
        save_csv(build_mixing(t, _weights_from(args)), out / "weights.csv")


def _weights_from(args) -> WeightsConfig:
    return WeightsConfig(rule=args.weights, eps=args.eps)


def cmd_gen_data(args) -> None:
    data = _validating(two_gaussians, args.n_samples, args.dim, args.separation, args.seed)
    write_dataset(data, _out_dir(args) / args.name)


def _load(args):
    return _validating(load_config, args.config, _validating(parse_overrides, args.set))


def cmd_solve_ref(args) -> None:
    cfg = _load(args)
    problem = build_problem(cfg)
    out = _out_dir(args)
    theta = problem.theta_star
    (out / "theta_star.txt").write_text("\n".join(repr(float(v)) for v in theta) + "\n")
    stats = estimate_stats(problem.objective, theta, np.zeros_like(theta))
    summary = {
        "p": int(theta.size),
        "grad_norm": float(np.linalg.norm(problem.objective.global_gradient(theta))),
        "mu": stats.mu, "L": stats.L, "kappa": stats.kappa,
        "sigma_sq_at_zero": stats.sigma_sq, "bias_b": stats.b,
        "lambda": problem.mixing.lam,
    }
    (out / "reference.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary))


def cmd_run(args) -> None:
    cfg = _load(args)
    trace = run_experiment(cfg)
    name = args.name or f"{Path(args.config).stem}.csv"
    trace.to_csv(_out_dir(args) / name)
    last = trace[-1]
    print(json.dumps({"rounds": last.round, "epochs": last.epochs, "avg_residual": last.avg_residual}))


def cmd_compare(args) -> None:
    configs = _validating(load_comparison, args.config, _validating(parse_overrides, args.set))
    try:
        result = compare_experiments(configs)
    except ComparisonError as e:
        raise _Invalid(e) from e
    out = _out_dir(args)
    for name, trace in result.traces.items():
        trace.to_csv(out / f"{name}.csv")
    names = list(result.residuals)
    rows = ["epochs," + ",".join(names)]
    for k, ep in enumerate(result.epochs):
        rows.append(",".join([repr(float(ep))] + [repr(float(result.residuals[n][k])) for n in names]))
    (out / "aligned.csv").write_text("\n".join(rows) + "\n")
    print(json.dumps({n: float(t[-1].avg_residual) for n, t in result.traces.items()}))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Invalid(argparse.ArgumentError(None, message))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="decopt", description="Decentralized stochastic optimization experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, config_required=True):
        if config_required:
            p.add_argument("--config", required=True, help="INI experiment config")
            p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override a config entry")
        p.add_argument("--out-dir", default="out", help="all outputs are written under this directory")

    p = sub.add_parser("gen-graph", help="random geometric graph as an edge list")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--radius", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--name", default="graph.txt")
    p.add_argument("--weights", choices=("metropolis", "laplacian"), help="also write weights.csv")
    p.add_argument("--eps", type=float, default=0.0, help="Laplacian step for --weights laplacian")
    common(p, config_required=False)
    p.set_defaults(func=cmd_gen_graph)

    p = sub.add_parser("gen-data", help="synthetic two-Gaussian binary dataset as CSV")
    p.add_argument("--n-samples", type=int, required=True)
    p.add_argument("--dim", type=int, default=20)
    p.add_argument("--separation", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--name", default="data.csv")
    common(p, config_required=False)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("solve-ref", help="reference minimizer and objective statistics")
    common(p)
    p.set_defaults(func=cmd_solve_ref)

    p = sub.add_parser("run", help="run one experiment and write its trace CSV")
    common(p)
    p.add_argument("--name", help="trace file name (default: <config stem>.csv)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="run every [variant] of a comparison config")
    common(p)
    p.set_defaults(func=cmd_compare)
    return parser


def _fail(kind: str, err: BaseException, code: int) -> int:
    print(json.dumps({"error": kind, "type": type(err).__name__, "message": str(err)}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_INVALID
    except _Invalid as e:
        cause = e.__cause__ or e.args[0]
        if isinstance(cause, FileNotFoundError):
            kind = "file-not-found"
        elif isinstance(cause, argparse.ArgumentError):
            kind = "usage"
        elif isinstance(cause, (TopologyError, MixingError, PartitionError)):
            kind = "invalid-input"
        else:
            kind = "invalid-config"
        return _fail(kind, cause, EXIT_INVALID)
    except (TopologyError, MixingError, PartitionError) as e:
        return _fail("invalid-input", e, EXIT_INVALID)
    except FileNotFoundError as e:
        return _fail("file-not-found", e, EXIT_INVALID)
    except (DivergenceError, SolverError) as e:
        return _fail("runtime", e, EXIT_RUNTIME)
    except Exception as e:  # noqa: BLE001 - any other failure is a runtime error
        return _fail("runtime", e, EXIT_RUNTIME)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
