"""Command-line front end.

Subcommands cover the full workflow: generate synthetic data, fit, evaluate
a holdout, forecast, report elasticities, run what-if scenarios, and serve
the HTTP API.  Every output file is deterministic for a fixed seed: keys are
sorted, no timestamps are written, and the resolved configuration (defaults
merged with overrides) is echoed into each report.

Exit codes: 0 success, 1 usage problems (bad flags or flag/data mismatches),
2 malformed data or model files, 3 numerical failures such as simulation
blow-ups.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .datasets import (
    DataError,
    DatasetBundle,
    ModelArtifact,
    SyntheticConfig,
    generate_synthetic,
    load_dataset,
    load_model,
    save_dataset,
    save_model,
)
from .fitting import FitOptions, fit
from .interventions import WhatIfScenario, compute_elasticities, whatif_run
from .metrics import HoldoutSplit, run_holdout
from .shares import build_features
from .simulate import IntensityExplosion, SimulationSpec, predict


class UsageError(Exception):
    """Semantically invalid flags (wrong ranges, missing combinations)."""


class Parser(argparse.ArgumentParser):
    """argparse, but usage failures exit 1 instead of 2."""

    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _read_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise DataError(f"missing config file: {p}")
    try:
        config = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"config file is not valid JSON: {exc}") from None
    if not isinstance(config, dict):
        raise DataError("config file must hold a JSON object")
    return config


def _build_options(config: dict, args) -> FitOptions:
    fields = set(FitOptions.__dataclass_fields__)
    unknown = set(config) - fields
    if unknown:
        raise UsageError(f"unknown fit option(s): {sorted(unknown)}")
    merged = dict(config)
    if getattr(args, "seed", None) is not None:
        merged["seed"] = args.seed
    if getattr(args, "threads", None) is not None:
        merged["n_jobs"] = args.threads
    if getattr(args, "no_interventions", False):
        merged["freeze_gamma"] = True
    if merged.get("stats_window") is not None:
        merged["stats_window"] = tuple(merged["stats_window"])
    try:
        return FitOptions(**merged)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _jsonable(obj):
    """Recursively convert numpy values; NaN becomes null."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return None if not np.isfinite(value) else value
    return obj


def _write_json(path, obj) -> None:
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_range(text: str, flag: str) -> tuple[int, int]:
    parts = text.split(":")
    if len(parts) != 2:
        raise UsageError(f"{flag} must look like START:END, got {text!r}")
    try:
        a, b = int(parts[0]), int(parts[1])
    except ValueError:
        raise UsageError(f"{flag} must hold integers, got {text!r}") from None
    if a > b:
        raise UsageError(f"{flag} must satisfy START <= END, got {text!r}")
    return a, b


def _load_bundle(path: str) -> DatasetBundle:
    return load_dataset(path)


def _resolve_intervention(bundle: DatasetBundle, name_or_index: str) -> int:
    names = list(bundle.interventions)
    if name_or_index in names:
        return names.index(name_or_index)
    try:
        k = int(name_or_index)
    except ValueError:
        raise UsageError(
            f"unknown intervention {name_or_index!r}; have {names}"
        ) from None
    if not 0 <= k < len(names):
        raise UsageError(f"intervention index {k} outside 0..{len(names) - 1}")
    return k


def cmd_synth(args) -> int:
    config = _read_config(args.config)
    fields = set(SyntheticConfig.__dataclass_fields__)
    unknown = set(config) - fields
    if unknown:
        raise UsageError(f"unknown synthetic option(s): {sorted(unknown)}")
    if args.seed is not None:
        config["seed"] = args.seed
    for key in ("mu_split",):
        if key in config:
            config[key] = tuple(tuple(row) for row in config[key])
    for key in ("alpha_range", "gamma_range", "beta_range"):
        if key in config:
            config[key] = tuple(config[key])
    try:
        cfg = SyntheticConfig(**config)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    dataset = generate_synthetic(cfg)
    if not 0 <= args.group < cfg.n_groups:
        raise UsageError(f"--group must be in 0..{cfg.n_groups - 1}")
    if not 0 <= args.sample < cfg.samples_per_group:
        raise UsageError(f"--sample must be in 0..{cfg.samples_per_group - 1}")
    out = Path(args.out)
    bundle = dataset.bundle(group=args.group, sample=args.sample)
    save_dataset(bundle, out)
    truth = ModelArtifact(
        params1=dataset.params1,
        params2=dataset.params2,
        feature_transform="raw",
        platforms=bundle.platforms,
        opinions=bundle.opinions,
        interventions=bundle.interventions,
    )
    save_model(truth, out / "truth_model.json")
    _write_json(
        out / "manifest.json",
        {
            "command": "synth",
            "resolved_config": asdict(cfg),
            "group": args.group,
            "sample": args.sample,
        },
    )
    print(f"wrote dataset to {out}")
    return 0


def cmd_fit(args) -> int:
    bundle = _load_bundle(args.data)
    options = _build_options(_read_config(args.config), args)
    result = fit(bundle.signals, bundle.counts, options)
    model = ModelArtifact(
        params1=result.params1,
        params2=result.params2,
        feature_transform=options.feature_transform,
        stats=result.stats,
        platforms=bundle.platforms,
        opinions=bundle.opinions,
        interventions=bundle.interventions,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    report = {
        "command": "fit",
        "resolved_options": _options_dict(options),
        "tier1": {
            "loglik": result.tier1.loglik,
            "converged": result.tier1.converged,
            "iterations": result.tier1.iterations,
            "grad_norm": result.tier1.grad_norm,
        },
        "tier2": {
            "loglik": result.tier2.loglik,
            "converged": result.tier2.converged,
            "iterations": result.tier2.iterations,
            "grad_norm": result.tier2.grad_norm,
        },
    }
    _write_json(out.with_suffix(".report.json"), report)
    print(f"wrote model to {out}")
    return 0


def _options_dict(options: FitOptions) -> dict:
    d = asdict(options)
    if d.get("stats_window") is not None:
        d["stats_window"] = list(d["stats_window"])
    return d


def cmd_eval(args) -> int:
    bundle = _load_bundle(args.data)
    options = _build_options(_read_config(args.config), args)
    try:
        split = HoldoutSplit(train_end=args.train_end, test_end=args.test_end)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if bundle.counts.T < split.test_end:
        raise UsageError(
            f"--test-end {split.test_end} exceeds the dataset horizon T={bundle.counts.T}"
        )
    report = run_holdout(
        bundle.signals,
        bundle.counts,
        split,
        options,
        n_replicates=args.replicates,
        seed=args.seed if args.seed is not None else 0,
        share_mode=args.share_mode,
    )
    payload = {
        "command": "eval",
        "resolved_options": _options_dict(options),
        "platforms": list(bundle.platforms),
        "opinions": list(bundle.opinions),
        **report.to_dict(),
    }
    _write_json(args.out, payload)
    print(f"wrote evaluation report to {args.out}")
    return 0


def _model_and_bundle(args) -> tuple[ModelArtifact, DatasetBundle]:
    model = load_model(args.model)
    bundle = _load_bundle(args.data)
    if model.feature_transform == "standardized" and model.stats is None:
        raise DataError("model uses standardized features but carries no stats")
    P, M = bundle.counts.P, bundle.counts.M
    if model.params2.P != P or model.params2.M != M:
        raise DataError(
            f"model is for (P, M)=({model.params2.P}, {model.params2.M}), "
            f"dataset has ({P}, {M})"
        )
    return model, bundle


def cmd_simulate(args) -> int:
    model, bundle = _model_and_bundle(args)
    start, end = _parse_range(args.horizon, "--horizon")
    if not 1 <= start <= end <= bundle.counts.T:
        raise UsageError(
            f"--horizon must fit 1..{bundle.counts.T}, got {start}:{end}"
        )
    spec = SimulationSpec(
        params1=model.params1,
        params2=model.params2,
        signals=bundle.signals,
        horizon=(start, end),
        prefix=bundle.counts if start > 1 else None,
        n_replicates=args.replicates,
        seed=args.seed if args.seed is not None else 0,
        stats=model.stats,
    )
    pred = predict(spec, share_mode=args.share_mode)
    _write_json(
        args.out,
        {
            "command": "simulate",
            "horizon": [start, end],
            "n_replicates": args.replicates,
            "seed": args.seed if args.seed is not None else 0,
            "share_mode": args.share_mode,
            "platforms": list(bundle.platforms),
            "opinions": list(bundle.opinions),
            "volume_mean": pred.nbar,
            "share_mean": pred.sbar,
            "opinion_count_mean": pred.nbar_opinion,
        },
    )
    print(f"wrote forecast to {args.out}")
    return 0


def cmd_elasticity(args) -> int:
    model, bundle = _model_and_bundle(args)
    panel = build_features(
        model.params1,
        model.params2.split,
        bundle.signals,
        bundle.counts,
        transform=model.feature_transform,
        stats=model.stats,
    )
    report = compute_elasticities(model.params2, panel)
    bins = None
    if args.window is not None:
        bins = _parse_range(args.window, "--window")
        if not 1 <= bins[0] <= bins[1] <= report.T:
            raise UsageError(f"--window must fit 1..{report.T}, got {args.window}")
    endo_mean, endo_cov = report.time_average("endogenous", bins=bins)
    int_mean, int_cov = report.time_average("intervention", bins=bins)
    _write_json(
        args.out,
        {
            "command": "elasticity",
            "window": list(bins) if bins else [1, report.T],
            "platforms": list(bundle.platforms),
            "opinions": list(bundle.opinions),
            "interventions": list(bundle.interventions),
            "endogenous_mean": endo_mean,
            "endogenous_coverage": endo_cov,
            "intervention_mean": int_mean,
            "intervention_coverage": int_cov,
        },
    )
    print(f"wrote elasticities to {args.out}")
    return 0


def cmd_whatif(args) -> int:
    model, bundle = _model_and_bundle(args)
    k = _resolve_intervention(bundle, args.intervention)
    try:
        scenario = WhatIfScenario(
            k=k,
            r=args.r,
            changepoint=args.changepoint,
            n_sims=args.sims,
            seed=args.seed if args.seed is not None else 0,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not 1 <= scenario.changepoint < bundle.counts.T:
        raise UsageError(
            f"--changepoint must be in 1..{bundle.counts.T - 1}, got {scenario.changepoint}"
        )
    result = whatif_run(
        model.params1, model.params2, bundle.signals, scenario, stats=model.stats
    )
    band_low, band_high = result.percent_change_band()
    _write_json(
        args.out,
        {
            "command": "whatif",
            "scenario": {
                "intervention": bundle.interventions[k],
                "k": k,
                "r": scenario.r,
                "changepoint": scenario.changepoint,
                "n_sims": scenario.n_sims,
                "seed": scenario.seed,
            },
            "platforms": list(bundle.platforms),
            "opinions": list(bundle.opinions),
            "share_percent_change": result.percent_change,
            "share_change_low": band_low,
            "share_change_high": band_high,
            "volume_percent_change": result.volume_percent_change,
            "baseline_share": result.baseline_share,
            "treated_share": result.treated_share,
        },
    )
    print(f"wrote what-if result to {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import make_app

    model, bundle = _model_and_bundle(args)
    app = make_app(model, bundle, frontend_dir=args.frontend)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> Parser:
    parser = Parser(prog="attention-market", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True, out=True):
        if seed:
            p.add_argument("--seed", type=int, default=None, help="override the seed")
        if out:
            p.add_argument("--out", required=True, help="output path")

    p = sub.add_parser("synth", help="generate a synthetic dataset directory")
    p.add_argument("--config", help="JSON file with generator overrides")
    p.add_argument("--group", type=int, default=0)
    p.add_argument("--sample", type=int, default=0)
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="fit both tiers to a dataset")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--config", help="JSON file with fit option overrides")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--no-interventions", action="store_true",
                   help="pin intervention loadings at zero")
    common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="holdout evaluation: fit, forecast, score")
    p.add_argument("--data", required=True)
    p.add_argument("--config", help="JSON file with fit option overrides")
    p.add_argument("--train-end", type=int, required=True)
    p.add_argument("--test-end", type=int, required=True)
    p.add_argument("--replicates", type=int, default=5)
    p.add_argument("--share-mode", choices=["mean_realized", "share_of_means"],
                   default="mean_realized")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--no-interventions", action="store_true")
    common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simulate", help="forecast with a fitted model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--horizon", required=True, help="START:END bins to simulate")
    p.add_argument("--replicates", type=int, default=5)
    p.add_argument("--share-mode", choices=["mean_realized", "share_of_means"],
                   default="mean_realized")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("elasticity", help="time-averaged elasticity report")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--window", help="START:END bins to average over")
    common(p, seed=False)
    p.set_defaults(func=cmd_elasticity)

    p = sub.add_parser("whatif", help="counterfactual intervention run")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--intervention", required=True,
                   help="intervention name or index")
    p.add_argument("--r", type=float, required=True, help="modulation in [-1, 1]")
    p.add_argument("--changepoint", type=int, required=True)
    p.add_argument("--sims", type=int, default=50)
    common(p)
    p.set_defaults(func=cmd_whatif)

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--frontend", default=None,
                   help="directory with built static assets to serve at /")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except IntensityExplosion as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
