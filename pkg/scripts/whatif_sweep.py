"""Sweep the what-if modulation r for one model and report share responses.

For each intervention and each r on a grid, runs the paired-seed
counterfactual and collects the percent change of every platform/opinion
share.  Output is a JSON table keyed by intervention name.

Usage:
  python3 scripts/whatif_sweep.py --model model.json --data data_dir --out sweep.json
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import numpy as np

from attention_market.datasets import load_dataset, load_model
from attention_market.interventions import WhatIfScenario, whatif_run


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--model", required=True)
    parser.add_argument("--data", required=True)
    parser.add_argument("--changepoint", type=int, default=None,
                        help="default: half the horizon")
    parser.add_argument("--grid", default="-0.5,0,0.5,1.0")
    parser.add_argument("--sims", type=int, default=50)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", required=True)
    args = parser.parse_args()

    model = load_model(args.model)
    bundle = load_dataset(args.data)
    T = bundle.counts.T
    changepoint = args.changepoint or T // 2
    grid = [float(r) for r in args.grid.split(",")]

    table = {}
    for k, name in enumerate(bundle.interventions):
        rows = []
        for r in grid:
            result = whatif_run(
                model.params1, model.params2, bundle.signals,
                WhatIfScenario(k=k, r=r, changepoint=changepoint,
                               n_sims=args.sims, seed=args.seed),
                stats=model.stats,
            )
            rows.append({
                "r": r,
                "share_percent_change": result.percent_change.tolist(),
                "volume_percent_change": result.volume_percent_change.tolist(),
            })
            print(f"{name} r={r:+.2f}: max |share change| "
                  f"{np.nanmax(np.abs(result.percent_change)):.2f}%")
        table[name] = rows

    out = {
        "changepoint": changepoint,
        "n_sims": args.sims,
        "seed": args.seed,
        "platforms": list(bundle.platforms),
        "opinions": list(bundle.opinions),
        "sweep": table,
    }
    Path(args.out).write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
