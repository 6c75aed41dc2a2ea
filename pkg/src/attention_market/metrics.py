"""Forecast evaluation: SMAPE on volumes, KL divergence on shares, parameter
RMSE, and the end-to-end holdout protocol (fit on an observed window,
simulate the forecast window repeatedly, score the averages).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import CountPanel, SignalSet
from .fitting import FitOptions, FitResult, fit
from .likelihoods import loglik_tier1, loglik_tier2
from .simulate import SimulationSpec, predict


@dataclass(frozen=True)
class HoldoutSplit:
    """Observed bins 1..train_end, forecast bins train_end+1..test_end."""

    train_end: int
    test_end: int

    def __post_init__(self) -> None:
        if not 1 <= self.train_end < self.test_end:
            raise ValueError(
                f"need 1 <= train_end < test_end, got {self.train_end}, {self.test_end}"
            )

    @property
    def forecast_range(self) -> tuple[int, int]:
        return (self.train_end + 1, self.test_end)

    @property
    def n_forecast(self) -> int:
        return self.test_end - self.train_end


def smape_by_platform(predicted: np.ndarray, actual: np.ndarray) -> np.ndarray:
    """Symmetric percentage error per platform, in [0, 100].

    Per bin: |pred - act| / (|pred| + |act|), with 0/0 counted as a perfect
    0.  Averaged over bins and scaled to percent.
    """
    predicted = np.asarray(predicted, dtype=float)
    actual = np.asarray(actual, dtype=float)
    if predicted.shape != actual.shape or predicted.ndim != 2:
        raise ValueError(
            f"expected matching (P, H) arrays, got {predicted.shape} and {actual.shape}"
        )
    num = np.abs(predicted - actual)
    den = np.abs(predicted) + np.abs(actual)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(den == 0, 0.0, num / np.where(den == 0, 1.0, den))
    return 100.0 * ratio.mean(axis=1)


def smape(predicted: np.ndarray, actual: np.ndarray) -> float:
    """Platform-averaged symmetric percentage error."""
    return float(smape_by_platform(predicted, actual).mean())


def kl_divergence(
    actual: np.ndarray,
    predicted: np.ndarray,
    eps: float = 1e-6,
    flipped: bool = False,
) -> float:
    """KL(actual || predicted) for one distribution pair.

    Both sides are smoothed by eps and renormalized so empty categories stay
    finite.  `flipped` returns the reversed-ratio sum some reports print,
    which is exactly the negation.
    """
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if a.shape != p.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {p.shape}")
    a = (a + eps) / (a.sum() + eps * a.size)
    p = (p + eps) / (p.sum() + eps * p.size)
    value = float(np.sum(a * (np.log(a) - np.log(p))))
    return -value if flipped else value


def kl_shares(
    actual: np.ndarray,
    predicted: np.ndarray,
    eps: float = 1e-6,
    flipped: bool = False,
) -> np.ndarray:
    """Per-(platform, bin) KL of actual share vectors from predicted ones.

    Inputs are (P, M, H); the M axis is smoothed and renormalized per bin.
    Returns (P, H).
    """
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if a.shape != p.shape or a.ndim != 3:
        raise ValueError(f"expected matching (P, M, H) arrays, got {a.shape} and {p.shape}")
    M = a.shape[1]
    a = (a + eps) / (a.sum(axis=1, keepdims=True) + eps * M)
    p = (p + eps) / (p.sum(axis=1, keepdims=True) + eps * M)
    value = np.sum(a * (np.log(a) - np.log(p)), axis=1)
    return -value if flipped else value


def rmse_by_type(
    estimates: Sequence[Mapping[str, np.ndarray]],
    truth: Mapping[str, np.ndarray],
) -> dict[str, float]:
    """Root-mean-square estimation error per parameter family.

    Each estimate maps family names (e.g. 'mu', 'alpha') to arrays shaped
    like the truth entry; errors pool over estimates and array entries.
    """
    estimates = list(estimates)
    if not estimates:
        raise ValueError("no estimates given")
    out = {}
    for name, target in truth.items():
        target = np.asarray(target, dtype=float)
        sq = []
        for est in estimates:
            if name not in est:
                raise KeyError(f"estimate is missing family {name!r}")
            arr = np.asarray(est[name], dtype=float)
            if arr.shape != target.shape:
                raise ValueError(
                    f"family {name!r}: estimate shape {arr.shape} != truth {target.shape}"
                )
            sq.append((arr - target) ** 2)
        out[name] = float(np.sqrt(np.mean(sq)))
    return out


@dataclass
class HoldoutReport:
    """Holdout-protocol scores plus the fit they came from."""

    split: HoldoutSplit
    n_replicates: int
    seed: int
    share_mode: str
    smape: float
    smape_by_platform: list[float]
    baseline_smape: float
    baseline_smape_by_platform: list[float]
    kl: float
    kl_by_platform: list[float]
    n_empty_actual_bins: int
    tier1_holdout_loglik: float
    tier2_holdout_loglik: float
    fit_result: FitResult = field(repr=False)

    def to_dict(self) -> dict:
        """JSON-friendly summary (fit internals reduced to scalars)."""
        return {
            "split": {"train_end": self.split.train_end, "test_end": self.split.test_end},
            "n_replicates": self.n_replicates,
            "seed": self.seed,
            "share_mode": self.share_mode,
            "smape": self.smape,
            "smape_by_platform": list(self.smape_by_platform),
            "baseline_smape": self.baseline_smape,
            "baseline_smape_by_platform": list(self.baseline_smape_by_platform),
            "kl": self.kl,
            "kl_by_platform": list(self.kl_by_platform),
            "n_empty_actual_bins": self.n_empty_actual_bins,
            "tier1_holdout_loglik": self.tier1_holdout_loglik,
            "tier2_holdout_loglik": self.tier2_holdout_loglik,
            "fit": {
                "tier1_loglik": self.fit_result.tier1.loglik,
                "tier2_loglik": self.fit_result.tier2.loglik,
                "tier1_converged": self.fit_result.tier1.converged,
                "tier2_converged": self.fit_result.tier2.converged,
            },
        }


def run_holdout(
    signals: SignalSet,
    counts: CountPanel,
    split: HoldoutSplit,
    options: FitOptions | None = None,
    n_replicates: int = 5,
    seed: int = 0,
    share_mode: str = "mean_realized",
    fit_result: FitResult | None = None,
) -> HoldoutReport:
    """Fit on the observed window, forecast the holdout window, score both tiers.

    The baseline predictor repeats the training-window mean volume.  Holdout
    log-likelihoods score the *observed* forecast bins under the fitted
    model (unpenalized, frozen training stats), so ablations with different
    penalty terms stay comparable.  Pass `fit_result` to reuse an existing
    fit instead of refitting.
    """
    options = options or FitOptions()
    if counts.T < split.test_end or signals.T < split.test_end:
        raise ValueError(
            f"need data through bin {split.test_end}, have counts T={counts.T}, signals T={signals.T}"
        )
    train_counts = counts.truncated(split.train_end)
    train_signals = signals.truncated(split.train_end)
    if fit_result is None:
        fit_result = fit(train_signals, train_counts, options)
    horizon_signals = signals.truncated(split.test_end)
    spec = SimulationSpec(
        params1=fit_result.params1,
        params2=fit_result.params2,
        signals=horizon_signals,
        horizon=split.forecast_range,
        prefix=train_counts,
        n_replicates=n_replicates,
        seed=seed,
        stats=fit_result.stats,
    )
    pred = predict(spec, share_mode=share_mode)

    observed = counts.truncated(split.test_end)
    fr = slice(split.train_end, split.test_end)
    actual_totals = observed.platform_totals()[:, fr]
    sm_platform = smape_by_platform(pred.nbar, actual_totals)

    train_mean = train_counts.platform_totals().mean(axis=1)
    baseline = np.repeat(train_mean[:, None], split.n_forecast, axis=1)
    base_platform = smape_by_platform(baseline, actual_totals)

    actual_shares = observed.realized_shares()[:, :, fr]
    defined = ~np.isnan(actual_shares[:, 0, :])  # (P, H); NaN rows mark empty bins
    kl_bins = kl_shares(np.nan_to_num(actual_shares), pred.sbar)
    kl_platform = np.array(
        [
            kl_bins[p, defined[p]].mean() if defined[p].any() else np.nan
            for p in range(kl_bins.shape[0])
        ]
    )
    n_empty = int((~defined).sum())

    t1_holdout = loglik_tier1(
        fit_result.params1,
        horizon_signals,
        observed,
        split=fit_result.tier1.split,
        bin_range=split.forecast_range,
    )
    t2_holdout = loglik_tier2(
        fit_result.params2,
        fit_result.params1,
        horizon_signals,
        observed,
        transform=fit_result.options.feature_transform,
        stats=fit_result.stats,
        lambda_reg=0.0,
        bin_range=split.forecast_range,
    )
    return HoldoutReport(
        split=split,
        n_replicates=n_replicates,
        seed=seed,
        share_mode=share_mode,
        smape=float(sm_platform.mean()),
        smape_by_platform=[float(v) for v in sm_platform],
        baseline_smape=float(base_platform.mean()),
        baseline_smape_by_platform=[float(v) for v in base_platform],
        kl=float(np.nanmean(kl_platform)),
        kl_by_platform=[float(v) for v in kl_platform],
        n_empty_actual_bins=n_empty,
        tier1_holdout_loglik=t1_holdout,
        tier2_holdout_loglik=t2_holdout,
        fit_result=fit_result,
    )
