"""Tier 1: platform-level attention volume as a multivariate discrete-time
self-exciting count process.

The rate for platform p at bin t combines an exogenous part scaled by search
interest with excitation from past counts on every platform:

    lam^p(t) = mu^p * S(t) + sum_q alpha[p,q] * sum_{s<t} f(t-s) * N^q(s)

where f is the geometric memory kernel.  Splitting mu across opinions gives
the opinion-conditional rate lam^p(t|j), which uses only opinion j's own past
counts in the excitation sum and adds back up to lam^p(t) exactly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import CountPanel, SignalSet, _check_theta, _freeze, smoothed_history


class InstabilityWarning(UserWarning):
    """Excitation matrix admits explosive cascades (spectral radius >= 1)."""


def branching_spectral_radius(alpha: np.ndarray) -> float:
    """Largest |eigenvalue| of the excitation matrix.

    The kernel weights sum to at most 1, so alpha itself is the branching
    matrix; radius >= 1 means expected cascade sizes diverge.
    """
    return float(np.max(np.abs(np.linalg.eigvals(np.asarray(alpha, dtype=float)))))


@dataclass(frozen=True)
class Tier1Params:
    """Volume parameters: baselines mu (P,), excitation alpha (P, P), memory theta."""

    mu: np.ndarray
    alpha: np.ndarray
    theta: float

    def __post_init__(self) -> None:
        mu = np.asarray(self.mu, dtype=float).copy()
        alpha = np.asarray(self.alpha, dtype=float).copy()
        if mu.ndim != 1:
            raise ValueError(f"mu must have shape (P,), got ndim={mu.ndim}")
        P = mu.shape[0]
        if alpha.shape != (P, P):
            raise ValueError(f"alpha must have shape ({P}, {P}), got {alpha.shape}")
        if not np.all(np.isfinite(mu)) or np.any(mu < 0):
            raise ValueError("mu must be finite and non-negative")
        if not np.all(np.isfinite(alpha)) or np.any(alpha < 0):
            raise ValueError("alpha must be finite and non-negative")
        theta = _check_theta(self.theta)
        radius = branching_spectral_radius(alpha)
        if radius >= 1.0:
            warnings.warn(
                f"excitation spectral radius {radius:.3f} >= 1; "
                "simulated volumes may explode",
                InstabilityWarning,
                stacklevel=2,
            )
        object.__setattr__(self, "mu", _freeze(mu))
        object.__setattr__(self, "alpha", _freeze(alpha))
        object.__setattr__(self, "theta", theta)

    @property
    def P(self) -> int:
        return self.mu.shape[0]


@dataclass(frozen=True)
class Tier1ParamsSplit:
    """Opinion-level baseline split mu_split (P, M); rows sum to the platform mu."""

    mu_split: np.ndarray

    def __post_init__(self) -> None:
        ms = np.asarray(self.mu_split, dtype=float).copy()
        if ms.ndim != 2:
            raise ValueError(f"mu_split must have shape (P, M), got ndim={ms.ndim}")
        if not np.all(np.isfinite(ms)) or np.any(ms < 0):
            raise ValueError("mu_split must be finite and non-negative")
        object.__setattr__(self, "mu_split", _freeze(ms))

    @property
    def P(self) -> int:
        return self.mu_split.shape[0]

    @property
    def M(self) -> int:
        return self.mu_split.shape[1]

    @property
    def mu(self) -> np.ndarray:
        """Implied platform baselines, shape (P,)."""
        return self.mu_split.sum(axis=1)

    def check_against(self, params: Tier1Params, tol: float = 1e-9) -> None:
        """Raise unless each row sums to the corresponding platform baseline."""
        if self.P != params.P:
            raise ValueError(f"split has P={self.P}, params have P={params.P}")
        gap = np.abs(self.mu - params.mu)
        limit = tol * np.maximum(1.0, np.abs(params.mu))
        if np.any(gap > limit):
            raise ValueError(
                f"mu_split rows sum to {self.mu}, expected {params.mu} (tol {tol})"
            )


def _require_split(split: Tier1ParamsSplit | None, why: str) -> Tier1ParamsSplit:
    if split is None:
        raise ValueError(f"a Tier1ParamsSplit is required {why}")
    return split


def _exo_series(
    params: Tier1Params, signals: SignalSet, split: Tier1ParamsSplit | None
) -> np.ndarray:
    """Exogenous platform rates, shape (P, T)."""
    if signals.per_opinion:
        split = _require_split(split, "when signals carry per-opinion S_j")
        split.check_against(params)
        # sum_j mu_j^p S_j(t)
        return np.einsum("pj,jt->pt", split.mu_split, signals.S)
    return params.mu[:, None] * signals.S[None, :]


def _exo_split_series(
    params: Tier1Params, signals: SignalSet, split: Tier1ParamsSplit
) -> np.ndarray:
    """Opinion-level exogenous rates mu_j^p S_j(t), shape (P, M, T)."""
    split.check_against(params)
    if signals.per_opinion:
        if signals.M != split.M:
            raise ValueError(f"signals have M={signals.M}, split has M={split.M}")
        return split.mu_split[:, :, None] * signals.S[None, :, :]
    return split.mu_split[:, :, None] * signals.S[None, None, :]


def excitation_state(counts: CountPanel, theta: float) -> np.ndarray:
    """Kernel-smoothed per-opinion count history, shape (P, M, T).

    Entry [q, j, t-1] is sum_{s<t} f(t-s) n^q_j(s); summing over j gives the
    platform-level history by linearity of the kernel sum.
    """
    return smoothed_history(counts.n, theta)


def platform_intensity_series(
    params: Tier1Params,
    signals: SignalSet,
    counts: CountPanel,
    split: Tier1ParamsSplit | None = None,
) -> np.ndarray:
    """lam^p(t) for all bins, shape (P, T)."""
    if counts.T != signals.T:
        raise ValueError(f"counts cover T={counts.T} bins, signals T={signals.T}")
    if counts.P != params.P:
        raise ValueError(f"counts have P={counts.P}, params have P={params.P}")
    conv = smoothed_history(counts.platform_totals(), params.theta)
    return _exo_series(params, signals, split) + params.alpha @ conv


def platform_intensity(
    params: Tier1Params,
    signals: SignalSet,
    counts: CountPanel,
    p: int,
    t: int,
    split: Tier1ParamsSplit | None = None,
) -> float:
    """lam^p(t) at a single 1-based bin."""
    return float(platform_intensity_series(params, signals, counts, split)[p, t - 1])


def conditional_intensity_series(
    params: Tier1Params,
    split: Tier1ParamsSplit,
    signals: SignalSet,
    counts: CountPanel,
) -> np.ndarray:
    """Opinion-conditional rates lam^p(t|j), shape (P, M, T).

    Excitation routes only through opinion j's own past counts on each
    platform, so summing over j recovers platform_intensity_series exactly.
    """
    if counts.T != signals.T:
        raise ValueError(f"counts cover T={counts.T} bins, signals T={signals.T}")
    if (counts.P, counts.M) != (split.P, split.M):
        raise ValueError(
            f"counts have (P, M)=({counts.P}, {counts.M}), "
            f"split has ({split.P}, {split.M})"
        )
    conv = excitation_state(counts, params.theta)
    exo = _exo_split_series(params, signals, split)
    return exo + np.einsum("pq,qjt->pjt", params.alpha, conv)


def conditional_opinion_intensity(
    params: Tier1Params,
    split: Tier1ParamsSplit,
    signals: SignalSet,
    counts: CountPanel,
    p: int,
    j: int,
    t: int,
) -> float:
    """lam^p(t|j) at a single 1-based bin."""
    return float(conditional_intensity_series(params, split, signals, counts)[p, j, t - 1])


def emit_counts(lam, rng: np.random.Generator):
    """Draw Poisson counts at the given rates (scalar or any array shape)."""
    lam_arr = np.asarray(lam, dtype=float)
    if not np.all(np.isfinite(lam_arr)):
        raise ValueError("intensities must be finite")
    if np.any(lam_arr < 0):
        raise ValueError("intensities must be non-negative")
    draw = rng.poisson(lam_arr)
    return int(draw) if np.isscalar(lam) else draw.astype(np.int64)


def uniform_split(params: Tier1Params, M: int) -> Tier1ParamsSplit:
    """Even mu split across M opinions; handy as a default and in tests."""
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    return Tier1ParamsSplit(mu_split=np.repeat(params.mu[:, None] / M, M, axis=1))
