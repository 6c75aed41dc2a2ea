"""Sensitivity analysis and counterfactuals.

Elasticities answer "if this tendency input moved 1%, how many percent would
this share move": e = v * dT/dv acted through the softmax, which gives
e_i = v * dz/dv * (load_i - sum_m s_m load_m) for a share i reacting to a
feature with loading vector `load`.  Cells where the input value is zero
have no well-defined relative change and are masked out rather than zeroed.

What-if runs modulate one intervention series after a changepoint by a
fraction r of its historical mean, re-simulate with the seed paired to an
r = 0 baseline, and report the percent change of window-mean shares.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import SignalSet
from .shares import FeaturePanel, Tier2Params, share_series
from .simulate import SimulationSpec, simulate
from .volume import Tier1Params


def endogenous_elasticity(params2: Tier2Params, panel: FeaturePanel):
    """Elasticity of every share to every conditional intensity.

    Returns (values, defined): values[p, q, i, j, t] is the elasticity of
    share i on platform p to lam^q(t|j); defined marks cells whose input is
    positive.  Standardization scales enter through dz/dv; frozen stats are
    treated as constants.
    """
    s = share_series(params2, panel)  # (P, M, T)
    beta = params2.beta
    v = panel.lam_cond  # (Q, J, T)
    if panel.stats.transform == "standardized":
        weight = v / ((1.0 + v) * panel.stats.lam_scale[..., None])
    else:
        weight = v
    bmean = np.einsum("pmt,pqmj->pqjt", s, beta)
    centered = beta[..., None] - bmean[:, :, None, :, :]  # (P, Q, M, J, T)
    values = weight[None, :, None, :, :] * centered
    defined = np.broadcast_to(v[None, :, None, :, :] > 0, values.shape)
    return values, defined


def intervention_elasticity(params2: Tier2Params, panel: FeaturePanel):
    """Elasticity of every share to every smoothed intervention.

    Returns (values, defined): values[p, i, k, t] is the elasticity of share
    i on platform p to xbar_k(t); defined marks nonzero inputs (the first
    bin is always undefined since smoothed histories start at zero).
    """
    s = share_series(params2, panel)
    gamma = params2.gamma
    v = panel.xbar  # (K, T)
    if panel.stats.transform == "standardized":
        weight = v / panel.stats.xbar_scale[:, None]
    else:
        weight = v
    gmean = np.einsum("pmt,pmk->pkt", s, gamma)
    centered = gamma[..., None] - gmean[:, None, :, :]  # (P, M, K, T)
    values = weight[None, None] * centered
    defined = np.broadcast_to(v[None, None] != 0, values.shape)
    return values, defined


@dataclass
class ElasticityReport:
    """Per-bin elasticity panels with validity masks."""

    endogenous: np.ndarray  # (P, Q, M, J, T)
    endogenous_defined: np.ndarray
    intervention: np.ndarray  # (P, M, K, T)
    intervention_defined: np.ndarray

    @property
    def T(self) -> int:
        return self.endogenous.shape[-1]

    def time_average(self, kind: str, bins: tuple[int, int] | None = None):
        """Mean over defined bins in a 1-based inclusive range.

        Returns (mean, coverage) where coverage is the fraction of bins in
        the range that were defined; cells never defined give NaN means.
        """
        if kind == "endogenous":
            values, defined = self.endogenous, self.endogenous_defined
        elif kind == "intervention":
            values, defined = self.intervention, self.intervention_defined
        else:
            raise ValueError(f"kind must be 'endogenous' or 'intervention', got {kind!r}")
        a, b = (1, self.T) if bins is None else bins
        if not 1 <= a <= b <= self.T:
            raise ValueError(f"bins must satisfy 1 <= a <= b <= {self.T}, got {(a, b)}")
        sl = slice(a - 1, b)
        d = defined[..., sl]
        v = values[..., sl]
        hits = d.sum(axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = np.where(hits > 0, (v * d).sum(axis=-1) / np.maximum(hits, 1), np.nan)
        coverage = hits / (b - a + 1)
        return mean, coverage


def compute_elasticities(params2: Tier2Params, panel: FeaturePanel) -> ElasticityReport:
    """Both elasticity families for one feature panel."""
    endo, endo_def = endogenous_elasticity(params2, panel)
    inter, inter_def = intervention_elasticity(params2, panel)
    return ElasticityReport(
        endogenous=endo,
        endogenous_defined=endo_def,
        intervention=inter,
        intervention_defined=inter_def,
    )


def modulate_intervention(
    X: np.ndarray,
    k: int,
    r: float,
    changepoint: int,
    mean_range: tuple[int, int] | None = None,
) -> np.ndarray:
    """Shift series k by r times its historical mean after the changepoint.

    Bins t > changepoint become X_k(t) + r * mean(X_k over mean_range);
    mean_range defaults to everything up to the changepoint.  Returns a new
    array; the input is untouched.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"X must have shape (K, T), got ndim={X.ndim}")
    K, T = X.shape
    if not 0 <= k < K:
        raise ValueError(f"k must be in 0..{K - 1}, got {k}")
    if not 1 <= changepoint < T:
        raise ValueError(f"changepoint must be in 1..{T - 1}, got {changepoint}")
    a, b = (1, changepoint) if mean_range is None else mean_range
    if not 1 <= a <= b <= T:
        raise ValueError(f"mean_range must satisfy 1 <= a <= b <= {T}, got {(a, b)}")
    out = X.copy()
    out[k, changepoint:] += r * X[k, a - 1 : b].mean()
    return out


@dataclass(frozen=True)
class WhatIfScenario:
    """One counterfactual: modulate intervention k by fraction r after a changepoint."""

    k: int
    r: float
    changepoint: int
    n_sims: int = 50
    seed: int = 0
    mean_range: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        if not -1.0 <= self.r <= 1.0:
            raise ValueError(f"r must be in [-1, 1], got {self.r}")
        if self.n_sims < 1:
            raise ValueError("n_sims must be >= 1")
        if self.changepoint < 1:
            raise ValueError("changepoint must be >= 1")


@dataclass
class WhatIfResult:
    """Paired-simulation outcome of one scenario.

    Window means are taken over bins after the changepoint; shares use each
    replicate's realized allocation with model-share fallback in empty bins.
    percent_change is 100 * (treated - baseline) / baseline; cells the
    scenario left bit-identical (all of them when r = 0, thanks to the seed
    pairing) report exactly 0, and a move away from a zero baseline is NaN.
    """

    scenario: WhatIfScenario
    baseline_share: np.ndarray  # (P, M)
    treated_share: np.ndarray  # (P, M)
    percent_change: np.ndarray  # (P, M)
    baseline_volume: np.ndarray  # (P,)
    treated_volume: np.ndarray  # (P,)
    volume_percent_change: np.ndarray  # (P,)
    replicate_baseline_share: np.ndarray  # (R, P, M)
    replicate_treated_share: np.ndarray  # (R, P, M)

    def replicate_percent_change(self) -> np.ndarray:
        """Paired percent share change per replicate, (R, P, M).

        Same convention as percent_change: a bit-identical cell is 0, a move
        away from a zero baseline is NaN.
        """
        base = self.replicate_baseline_share
        treat = self.replicate_treated_share
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(
                treat == base, 0.0,
                np.where(base != 0, 100.0 * (treat - base) / base, np.nan),
            )

    def percent_change_band(
        self, low: float = 10.0, high: float = 90.0
    ) -> tuple[np.ndarray, np.ndarray]:
        """Across-replicate percentile band of the paired percent changes.

        Each array is (P, M); cells whose change is undefined in every
        replicate come back NaN.
        """
        per = self.replicate_percent_change()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return (
                np.nanpercentile(per, low, axis=0),
                np.nanpercentile(per, high, axis=0),
            )


def _window_share_means(result, start_bin: int):
    """Per-replicate window means of realized shares and volumes."""
    sl = slice(start_bin - result.spec.horizon[0], None)
    counts = result.counts[..., sl]
    totals = counts.sum(axis=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        realized = counts / totals[:, :, None, :]
    empty = np.broadcast_to(totals[:, :, None, :] == 0, realized.shape)
    realized = np.where(empty, result.model_shares[..., sl], realized)
    return realized.mean(axis=-1), totals.mean(axis=-1)  # (R, P, M), (R, P)


def whatif_run(
    params1: Tier1Params,
    params2: Tier2Params,
    signals: SignalSet,
    scenario: WhatIfScenario,
    stats=None,
    cap: float = 1e9,
) -> WhatIfResult:
    """Simulate the scenario against its own r = 0 baseline.

    Both runs start from bin 1, share the seed, and span the full signal
    horizon; only bins after the changepoint can differ, and only through
    the modulated intervention series.
    """
    T = signals.T
    if not 1 <= scenario.changepoint < T:
        raise ValueError(f"changepoint must be in 1..{T - 1}, got {scenario.changepoint}")
    if not 0 <= scenario.k < signals.K:
        raise ValueError(f"k must be in 0..{signals.K - 1}, got {scenario.k}")

    def run(r: float):
        X = modulate_intervention(
            signals.X, scenario.k, r, scenario.changepoint, scenario.mean_range
        )
        modded = SignalSet(S=signals.S, X=X, names=signals.names)
        spec = SimulationSpec(
            params1=params1,
            params2=params2,
            signals=modded,
            horizon=(1, T),
            n_replicates=scenario.n_sims,
            seed=scenario.seed,
            stats=stats,
            cap=cap,
        )
        return simulate(spec)

    # always simulate both arms, even at r = 0: the exact-zero effect there
    # is a property of the seed pairing, not a shortcut
    base = run(0.0)
    treat = run(scenario.r)
    window_start = scenario.changepoint + 1
    base_share, base_vol = _window_share_means(base, window_start)
    treat_share, treat_vol = _window_share_means(treat, window_start)
    b_share = base_share.mean(axis=0)
    t_share = treat_share.mean(axis=0)
    b_vol = base_vol.mean(axis=0)
    t_vol = treat_vol.mean(axis=0)
    # a cell the scenario left untouched is a 0% change even at baseline 0;
    # only a change away from a zero baseline is genuinely undefined
    with np.errstate(invalid="ignore", divide="ignore"):
        pct = np.where(
            t_share == b_share, 0.0,
            np.where(b_share != 0, 100.0 * (t_share - b_share) / b_share, np.nan),
        )
        vol_pct = np.where(
            t_vol == b_vol, 0.0,
            np.where(b_vol != 0, 100.0 * (t_vol - b_vol) / b_vol, np.nan),
        )
    return WhatIfResult(
        scenario=scenario,
        baseline_share=b_share,
        treated_share=t_share,
        percent_change=pct,
        baseline_volume=b_vol,
        treated_volume=t_vol,
        volume_percent_change=vol_pct,
        replicate_baseline_share=base_share,
        replicate_treated_share=treat_share,
    )
