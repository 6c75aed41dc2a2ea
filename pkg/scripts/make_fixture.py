"""Build a small self-contained demo fixture: dataset plus fitted model.

Creates a directory holding a synthetic dataset, the generating truth model,
and a model fitted to it, ready for `attention-market serve` or the
dashboard integration tests.

Usage:
  python3 scripts/make_fixture.py --out fixtures/demo
"""

from __future__ import annotations

import argparse

from attention_market.cli import main as cli


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="fixtures/demo")
    parser.add_argument("--T", type=int, default=120)
    # default world draws strong excitation everywhere, which keeps the
    # conditional-intensity features informative enough to pin the split
    parser.add_argument("--seed", type=int, default=270)
    args = parser.parse_args()

    import json
    import tempfile
    from pathlib import Path

    out = Path(args.out)
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump({"T": args.T, "n_groups": 1, "samples_per_group": 1,
                   "seed": args.seed}, fh)
        synth_cfg = fh.name
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        # raw features: the standardized variant can stall in a basin that
        # collapses one split column to zero on short synthetic runs
        json.dump({"n_restarts": 2, "feature_transform": "raw",
                   "max_iterations": 2000, "seed": 0}, fh)
        fit_cfg = fh.name

    code = cli(["synth", "--config", synth_cfg, "--out", str(out / "data")])
    if code == 0:
        code = cli(["fit", "--data", str(out / "data"), "--config", fit_cfg,
                    "--out", str(out / "model.json")])
    if code == 0:
        print(f"fixture ready: serve with\n  attention-market serve "
              f"--model {out / 'model.json'} --data {out / 'data'}")
    raise SystemExit(code)


if __name__ == "__main__":
    main()
