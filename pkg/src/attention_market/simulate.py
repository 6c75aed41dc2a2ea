"""Forward simulation of the two-tier model.

Counts are generated bin by bin: conditional intensities come from the
kernel-smoothed history, tendencies and shares from the tier-2 parameters,
and opinion counts are Poisson draws at rate lam^p(t) * s_i^p(t).  All
replicates advance in lockstep (batched draws from one generator), so a
fixed seed fixes the entire output.

Feature handling mirrors estimation: when the simulation spec carries frozen
FeatureStats the standardized pipeline is applied with those scales; with
no stats the raw pipeline feeds intensities and smoothed interventions
straight into the tendencies.  Rates are never clamped here; a rate or
draw beyond `cap` aborts with an IntensityExplosion carrying the offending
coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CountPanel, SignalSet, build_smoothed_interventions
from .shares import FeatureStats, Tier2Params
from .volume import Tier1Params


class IntensityExplosion(RuntimeError):
    """Simulated dynamics exceeded the count cap."""

    def __init__(self, bin_index: int, replicate: int, platform: int, value: float, cap: float):
        self.bin_index = bin_index
        self.replicate = replicate
        self.platform = platform
        self.value = value
        self.cap = cap
        super().__init__(
            f"simulation exploded at bin {bin_index} (replicate {replicate}, "
            f"platform {platform}): value {value:.3e} exceeds cap {cap:.3e}"
        )


@dataclass(frozen=True)
class SimulationSpec:
    """One forward-simulation request.

    horizon is the 1-based inclusive range of bins to generate; `prefix`
    supplies observed counts for every bin before horizon[0] (None only when
    starting at bin 1).  `stats` switches the feature pipeline: frozen
    standardized scales when given, raw features when None.
    """

    params1: Tier1Params
    params2: Tier2Params
    signals: SignalSet
    horizon: tuple[int, int]
    prefix: CountPanel | None = None
    n_replicates: int = 1
    seed: int | None = None
    stats: FeatureStats | None = None
    cap: float = 1e9

    def __post_init__(self) -> None:
        start, end = self.horizon
        if not 1 <= start <= end <= self.signals.T:
            raise ValueError(
                f"horizon must satisfy 1 <= start <= end <= {self.signals.T}, got {self.horizon}"
            )
        if start > 1:
            if self.prefix is None:
                raise ValueError(f"horizon starts at bin {start}; a prefix is required")
            if self.prefix.T < start - 1:
                raise ValueError(
                    f"prefix covers {self.prefix.T} bins, need at least {start - 1}"
                )
            if (self.prefix.P, self.prefix.M) != (
                self.params2.P,
                self.params2.M,
            ):
                raise ValueError("prefix shape does not match the model")
        if self.n_replicates < 1:
            raise ValueError("n_replicates must be >= 1")
        if self.cap <= 0:
            raise ValueError("cap must be positive")
        self.params2.split.check_against(self.params1)


@dataclass
class SimulationResult:
    """Replicate-stacked output over the simulated horizon.

    counts: (R, P, M, H) draws; intensity: (R, P, H) platform rates;
    model_shares: (R, P, M, H) the softmax shares that produced each bin.
    H spans horizon[0]..horizon[1].
    """

    spec: SimulationSpec
    counts: np.ndarray
    intensity: np.ndarray
    model_shares: np.ndarray

    @property
    def horizon(self) -> tuple[int, int]:
        return self.spec.horizon

    def to_panels(self) -> list[CountPanel]:
        """Full panels over bins 1..horizon[1], prefix included verbatim."""
        start, end = self.spec.horizon
        R, P, M, _ = self.counts.shape
        out = []
        for r in range(R):
            n = np.zeros((P, M, end), dtype=np.int64)
            if start > 1:
                n[:, :, : start - 1] = self.spec.prefix.n[:, :, : start - 1]
            n[:, :, start - 1 :] = self.counts[r]
            out.append(CountPanel(n=n))
        return out


def _feature_state(spec: SimulationSpec):
    """Per-bin transformed intervention features and the lam transformer."""
    xbar = build_smoothed_interventions(spec.signals.X, spec.params1.theta)
    stats = spec.stats if spec.stats is not None else FeatureStats.identity()
    return stats.x_features(xbar), stats


def simulate(spec: SimulationSpec) -> SimulationResult:
    """Generate counts over the horizon; deterministic under spec.seed."""
    start, end = spec.horizon
    P, M = spec.params2.P, spec.params2.M
    R = spec.n_replicates
    theta = spec.params1.theta
    alpha = spec.params1.alpha
    mu_split = spec.params2.split.mu_split
    gamma, beta = spec.params2.gamma, spec.params2.beta
    signals = spec.signals
    x_feat, stats = _feature_state(spec)
    rng = np.random.default_rng(spec.seed)

    # smoothed count state at the next bin, advanced through the prefix
    conv = np.zeros((R, P, M))
    if start > 1:
        pre = spec.prefix.n[:, :, : start - 1].astype(float)
        for t_idx in range(start - 1):
            conv = (1.0 - theta) * conv + theta * pre[None, :, :, t_idx]

    H = end - start + 1
    counts = np.zeros((R, P, M, H), dtype=np.int64)
    intensity = np.zeros((R, P, H))
    model_shares = np.zeros((R, P, M, H))

    for h, t in enumerate(range(start, end + 1)):
        S_col = (
            signals.S[:, t - 1]
            if signals.per_opinion
            else np.full(M, signals.S[t - 1])
        )
        lam_cond = mu_split[None] * S_col[None, None, :] + np.einsum(
            "pq,rqj->rpj", alpha, conv
        )
        lam_plat = lam_cond.sum(axis=2)
        if np.any(lam_plat > spec.cap):
            r, p = np.argwhere(lam_plat > spec.cap)[0]
            raise IntensityExplosion(t, int(r), int(p), float(lam_plat[r, p]), spec.cap)
        z = stats.lam_features(lam_cond[..., None])[..., 0]
        tend = np.einsum("pqij,rqj->rpi", beta, z)
        if gamma.shape[-1]:
            tend += np.einsum("pik,k->pi", gamma, x_feat[:, t - 1])[None]
        tend -= tend.max(axis=2, keepdims=True)
        e = np.exp(tend)
        s = e / e.sum(axis=2, keepdims=True)
        rate = lam_plat[:, :, None] * s
        draw = rng.poisson(rate)
        if np.any(draw > spec.cap):
            r, p, _ = np.argwhere(draw > spec.cap)[0]
            raise IntensityExplosion(
                t, int(r), int(p), float(draw[r, p].max()), spec.cap
            )
        counts[..., h] = draw
        intensity[..., h] = lam_plat
        model_shares[..., h] = s
        conv = (1.0 - theta) * conv + theta * draw
    return SimulationResult(
        spec=spec, counts=counts, intensity=intensity, model_shares=model_shares
    )


@dataclass
class Prediction:
    """Replicate-averaged forecasts over the horizon.

    nbar: (P, H) mean platform volume; sbar: (P, M, H) predicted shares;
    nbar_opinion: (P, M, H) mean opinion counts.
    """

    horizon: tuple[int, int]
    nbar: np.ndarray
    sbar: np.ndarray
    nbar_opinion: np.ndarray
    n_replicates: int


def predict(spec: SimulationSpec, share_mode: str = "mean_realized") -> Prediction:
    """Forecast volumes and shares by averaging simulated replicates.

    share_mode "mean_realized" (default) averages each replicate's realized
    per-bin shares, substituting that replicate's model share when a bin has
    zero volume.  "share_of_means" divides mean opinion counts by mean
    platform volume (uniform-model fallback only if every replicate is
    empty, via the mean model share).
    """
    if share_mode not in ("mean_realized", "share_of_means"):
        raise ValueError(f"unknown share_mode {share_mode!r}")
    result = simulate(spec)
    totals = result.counts.sum(axis=2)  # (R, P, H)
    nbar = totals.mean(axis=0)
    nbar_opinion = result.counts.mean(axis=0)
    if share_mode == "mean_realized":
        with np.errstate(invalid="ignore", divide="ignore"):
            realized = result.counts / totals[:, :, None, :]
        empty = np.broadcast_to(totals[:, :, None, :] == 0, realized.shape)
        realized = np.where(empty, result.model_shares, realized)
        sbar = realized.mean(axis=0)
    else:
        with np.errstate(invalid="ignore", divide="ignore"):
            sbar = nbar_opinion / nbar[:, None, :]
        fallback = result.model_shares.mean(axis=0)
        sbar = np.where(np.broadcast_to(nbar[:, None, :] == 0, sbar.shape), fallback, sbar)
    return Prediction(
        horizon=spec.horizon,
        nbar=nbar,
        sbar=sbar,
        nbar_opinion=nbar_opinion,
        n_replicates=spec.n_replicates,
    )
