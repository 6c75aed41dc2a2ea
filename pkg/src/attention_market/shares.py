"""Tier 2: allocation of platform volume across opinions.

Each opinion i on platform p carries a tendency

    T_i^p(t) = sum_k gamma[p,i,k] * x_k(t) + sum_{q,j} beta[p,q,i,j] * z_{qj}(t)

built from kernel-smoothed intervention series and opinion-conditional
intensities.  Shares are the within-platform softmax of tendencies, and the
opinion-level rate is the platform rate times the share.

Two feature pipelines are supported.  "raw" feeds the smoothed interventions
and conditional intensities in as-is.  "standardized" compresses intensities
with log1p and z-scores both feature families over a training window; the
fitted FeatureStats are frozen so later predictions reuse the training
scales instead of leaking information from the forecast window.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import softmax

from .core import CountPanel, SignalSet, _freeze, build_smoothed_interventions
from .volume import (
    Tier1Params,
    Tier1ParamsSplit,
    conditional_intensity_series,
    platform_intensity_series,
)

TRANSFORMS = ("raw", "standardized")


class ConstantFeatureWarning(UserWarning):
    """A feature had zero variance over the stats window; its scale was pinned to 1."""


@dataclass(frozen=True)
class Tier2Params:
    """Share parameters.

    gamma: (P, M, K) intervention loadings; beta: (P, Q, M, J) cross-opinion
    loadings (platform p, opinion i reacting to platform q, opinion j);
    split: opinion-level baseline split used for the conditional intensities.
    Negative entries are meaningful (inhibition), so only shapes and
    finiteness are enforced.
    """

    gamma: np.ndarray
    beta: np.ndarray
    split: Tier1ParamsSplit

    def __post_init__(self) -> None:
        gamma = np.asarray(self.gamma, dtype=float).copy()
        beta = np.asarray(self.beta, dtype=float).copy()
        P, M = self.split.P, self.split.M
        if gamma.ndim != 3 or gamma.shape[:2] != (P, M):
            raise ValueError(
                f"gamma must have shape ({P}, {M}, K), got {gamma.shape}"
            )
        if beta.shape != (P, P, M, M):
            raise ValueError(
                f"beta must have shape ({P}, {P}, {M}, {M}), got {beta.shape}"
            )
        if not np.all(np.isfinite(gamma)) or not np.all(np.isfinite(beta)):
            raise ValueError("gamma and beta must be finite")
        object.__setattr__(self, "gamma", _freeze(gamma))
        object.__setattr__(self, "beta", _freeze(beta))

    @property
    def P(self) -> int:
        return self.split.P

    @property
    def M(self) -> int:
        return self.split.M

    @property
    def K(self) -> int:
        return self.gamma.shape[2]


def _window_slice(T: int, window: tuple[int, int] | None) -> slice:
    if window is None:
        return slice(0, T)
    a, b = window
    if not 1 <= a <= b <= T:
        raise ValueError(f"stats window must satisfy 1 <= a <= b <= {T}, got {window}")
    return slice(a - 1, b)


@dataclass(frozen=True)
class FeatureStats:
    """Frozen feature-scaling state.

    For the standardized transform, lam_* hold per-(platform, opinion)
    moments of log1p(conditional intensity) and xbar_* hold per-series
    moments of the smoothed interventions, all over the window they were
    fitted on.  The raw transform is the identity and carries no moments.
    """

    transform: str
    lam_mean: np.ndarray | None = None
    lam_scale: np.ndarray | None = None
    xbar_mean: np.ndarray | None = None
    xbar_scale: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.transform not in TRANSFORMS:
            raise ValueError(f"transform must be one of {TRANSFORMS}, got {self.transform}")
        if self.transform == "standardized":
            for name in ("lam_mean", "lam_scale", "xbar_mean", "xbar_scale"):
                arr = getattr(self, name)
                if arr is None:
                    raise ValueError(f"standardized stats require {name}")
                arr = np.asarray(arr, dtype=float).copy()
                object.__setattr__(self, name, _freeze(arr))
            if np.any(self.lam_scale <= 0) or np.any(self.xbar_scale <= 0):
                raise ValueError("scales must be positive")

    @classmethod
    def identity(cls) -> "FeatureStats":
        return cls(transform="raw")

    @classmethod
    def fit(
        cls,
        lam_cond: np.ndarray,
        xbar: np.ndarray,
        window: tuple[int, int] | None = None,
    ) -> "FeatureStats":
        """Standardized stats over bins a..b (1-based, default: all bins).

        Population moments (ddof=0).  Zero-variance features keep their mean
        but get scale 1 so centering still applies; a ConstantFeatureWarning
        reports which features were pinned.
        """
        sl = _window_slice(lam_cond.shape[-1], window)
        lam_log = np.log1p(lam_cond[..., sl])
        lam_mean = lam_log.mean(axis=-1)
        lam_scale = lam_log.std(axis=-1)
        xw = xbar[..., sl]
        xbar_mean = xw.mean(axis=-1)
        xbar_scale = xw.std(axis=-1)
        flat = [
            f"intensity[{q},{j}]"
            for q, j in zip(*np.nonzero(lam_scale == 0))
        ] + [f"intervention[{k}]" for k in np.nonzero(xbar_scale == 0)[0]]
        if flat:
            warnings.warn(
                f"zero-variance features {flat}; scale pinned to 1",
                ConstantFeatureWarning,
                stacklevel=2,
            )
        lam_scale = np.where(lam_scale == 0, 1.0, lam_scale)
        xbar_scale = np.where(xbar_scale == 0, 1.0, xbar_scale)
        return cls(
            transform="standardized",
            lam_mean=lam_mean,
            lam_scale=lam_scale,
            xbar_mean=xbar_mean,
            xbar_scale=xbar_scale,
        )

    def lam_features(self, lam_cond: np.ndarray) -> np.ndarray:
        if self.transform == "raw":
            return lam_cond
        return (np.log1p(lam_cond) - self.lam_mean[..., None]) / self.lam_scale[..., None]

    def x_features(self, xbar: np.ndarray) -> np.ndarray:
        if self.transform == "raw":
            return xbar
        return (xbar - self.xbar_mean[:, None]) / self.xbar_scale[:, None]


@dataclass(frozen=True)
class FeaturePanel:
    """Tendency inputs over bins 1..T.

    lam_cond and xbar are the untransformed series; lam_feat and x_feat are
    what the tendencies actually consume, produced by `stats`.
    """

    lam_cond: np.ndarray
    xbar: np.ndarray
    lam_feat: np.ndarray
    x_feat: np.ndarray
    stats: FeatureStats

    @property
    def T(self) -> int:
        return self.lam_cond.shape[-1]


def build_features(
    params: Tier1Params,
    split: Tier1ParamsSplit,
    signals: SignalSet,
    counts: CountPanel,
    transform: str = "standardized",
    stats: FeatureStats | None = None,
    stats_window: tuple[int, int] | None = None,
) -> FeaturePanel:
    """Assemble tendency inputs from history and exogenous series.

    The smoothed interventions reuse the tier-1 memory parameter.  Pass
    previously fitted `stats` to apply frozen scales; otherwise stats are
    fitted here over `stats_window` (standardized) or are the identity (raw).
    """
    if stats is not None and stats.transform != transform:
        raise ValueError(
            f"stats were fitted for transform={stats.transform!r}, requested {transform!r}"
        )
    lam_cond = conditional_intensity_series(params, split, signals, counts)
    xbar = build_smoothed_interventions(signals.X, params.theta)
    if stats is None:
        stats = (
            FeatureStats.identity()
            if transform == "raw"
            else FeatureStats.fit(lam_cond, xbar, stats_window)
        )
    return FeaturePanel(
        lam_cond=lam_cond,
        xbar=xbar,
        lam_feat=stats.lam_features(lam_cond),
        x_feat=stats.x_features(xbar),
        stats=stats,
    )


def tendency_series(params: Tier2Params, panel: FeaturePanel) -> np.ndarray:
    """T_i^p(t) for all bins, shape (P, M, T)."""
    out = np.einsum("pqij,qjt->pit", params.beta, panel.lam_feat)
    if params.K:
        out += np.einsum("pik,kt->pit", params.gamma, panel.x_feat)
    return out


def tendency(params: Tier2Params, panel: FeaturePanel, p: int, i: int, t: int) -> float:
    return float(tendency_series(params, panel)[p, i, t - 1])


def shares_from_tendencies(tendencies: np.ndarray, axis: int | None = None) -> np.ndarray:
    """Within-platform softmax of tendencies.

    The opinion axis defaults to 0 for vectors and 1 for (P, M, T) panels.
    Max-subtraction keeps large tendencies from overflowing.
    """
    arr = np.asarray(tendencies, dtype=float)
    if axis is None:
        if arr.ndim == 1:
            axis = 0
        elif arr.ndim == 3:
            axis = 1
        else:
            raise ValueError(f"pass axis explicitly for ndim={arr.ndim}")
    return softmax(arr, axis=axis)


def share_series(params: Tier2Params, panel: FeaturePanel) -> np.ndarray:
    """s_i^p(t), shape (P, M, T); each platform-bin column sums to 1."""
    return shares_from_tendencies(tendency_series(params, panel), axis=1)


def opinion_intensity_series(
    params1: Tier1Params,
    params2: Tier2Params,
    signals: SignalSet,
    counts: CountPanel,
    panel: FeaturePanel | None = None,
    transform: str = "standardized",
    stats: FeatureStats | None = None,
) -> np.ndarray:
    """Opinion-level rates lam^p(t) * s_i^p(t), shape (P, M, T)."""
    if panel is None:
        panel = build_features(
            params1, params2.split, signals, counts, transform=transform, stats=stats
        )
    lam = platform_intensity_series(params1, signals, counts, split=params2.split)
    return lam[:, None, :] * share_series(params2, panel)


def opinion_intensity(
    params1: Tier1Params,
    params2: Tier2Params,
    signals: SignalSet,
    counts: CountPanel,
    p: int,
    i: int,
    t: int,
    **kwargs,
) -> float:
    """lam^p_i(t) at a single 1-based bin."""
    return float(
        opinion_intensity_series(params1, params2, signals, counts, **kwargs)[p, i, t - 1]
    )
