"""Run a comparison config and print residuals at a few epoch checkpoints.

    python3 scripts/run_comparison.py configs/small_logistic.cfg --out-dir out/small
    python3 scripts/run_comparison.py configs/fig4.cfg --set budget.epochs=100

Per-variant trace CSVs and the epoch-aligned residual table are written
to ``--out-dir``.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from decopt.config import load_comparison, parse_overrides
from decopt.simulator import compare_experiments


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("config")
    parser.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE")
    parser.add_argument("--out-dir", default=None)
    parser.add_argument("--checkpoints", type=int, default=6)
    args = parser.parse_args(argv)

    configs = load_comparison(args.config, parse_overrides(args.set))
    result = compare_experiments(configs)
    out = Path(args.out_dir or Path("out") / Path(args.config).stem)
    out.mkdir(parents=True, exist_ok=True)
    for name, trace in result.traces.items():
        trace.to_csv(out / f"{name}.csv")
    table = np.column_stack([result.epochs] + list(result.residuals.values()))
    np.savetxt(out / "aligned.csv", table, delimiter=",", header="epochs," + ",".join(result.residuals), comments="")

    picks = np.linspace(0, len(result.epochs) - 1, args.checkpoints).astype(int)
    names = list(result.residuals)
    print(f"{'epochs':>8} " + " ".join(f"{n:>12}" for n in names))
    for k in picks:
        print(f"{result.epochs[k]:8.1f} " + " ".join(f"{result.residuals[n][k]:12.3e}" for n in names))
    for name, trace in result.traces.items():
        lo = trace[0].epochs
        print(f"{name}: log10-residual slope {trace.log_slope(lo):.4f} per epoch, final {trace[-1].avg_residual:.3e}")
    print(f"traces written to {out}")


if __name__ == "__main__":
    main()
