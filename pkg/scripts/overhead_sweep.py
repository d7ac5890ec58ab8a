"""Baseline vs SRF signaling cost over the reference scenarios.

Usage: python scripts/overhead_sweep.py [--seed N] [--csv out.csv]
"""

import argparse
import sys
from pathlib import Path

from srfsim.metrics import RunResult, emit_csv, savings_percent, total_cost
from srfsim.netmodel import load_scenario
from srfsim.simulator import run

ROOT = Path(__file__).resolve().parent.parent


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--csv")
    args = ap.parse_args()

    rows = []
    print(f"{'scenario':<8} {'baseline':>9} {'srf':>6} {'savings%':>9}")
    for path in sorted((ROOT / "scenarios").glob("ref-*.scn")):
        scn = load_scenario(path)
        costs = {}
        for mode in ("baseline", "srf"):
            ledger, _, _ = run(scn.topology, scn.trace, mode, args.seed, scn.config)
            costs[mode] = (len(ledger), total_cost(ledger))
            rows.append(RunResult(path.stem, mode, args.seed, *costs[mode]))
        pct = savings_percent(costs["baseline"][1], costs["srf"][1])
        rows.append(RunResult(path.stem, "compare", args.seed, *costs["srf"], pct))
        print(f"{path.stem:<8} {costs['baseline'][1]:>9} {costs['srf'][1]:>6} {pct:>9}")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            emit_csv(rows, fh)
    else:
        emit_csv(rows, sys.stdout)


if __name__ == "__main__":
    main()
