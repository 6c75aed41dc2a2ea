"""Shared building blocks: problem dimensions, the geometric memory kernel,
exogenous signal containers, and event-count panels.

Time bins are 1-based throughout the public API: a series of length T covers
bins t = 1..T, stored at array index t - 1.  All history sums are strict
(they run over s < t), so nothing at bin t ever feeds back into bin t.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Dimensions:
    """Problem size: P platforms, M opinions, K intervention series, T bins."""

    P: int
    M: int
    K: int
    T: int

    def __post_init__(self) -> None:
        for name in ("P", "M", "T"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.K < 0:
            raise ValueError(f"K must be >= 0, got {self.K}")


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not 0.0 < theta <= 1.0:
        raise ValueError(f"memory parameter theta must be in (0, 1], got {theta}")
    return theta


def kernel_pmf(theta: float, lag) -> np.ndarray | float:
    """Geometric memory weight f(d) = theta * (1 - theta)**(d - 1) for d >= 1.

    Lags d <= 0 get weight 0, so callers can pass raw t - s differences
    without guarding the boundary.  Accepts scalar or array lags.
    """
    theta = _check_theta(theta)
    lag_arr = np.asarray(lag)
    valid = lag_arr >= 1
    # exponent clipped to keep 0**negative out of the masked-off branch
    expo = np.where(valid, lag_arr - 1, 0)
    out = np.where(valid, theta * (1.0 - theta) ** expo, 0.0)
    return float(out) if np.isscalar(lag) else out


def kernel_pmf_dtheta(theta: float, lag) -> np.ndarray | float:
    """d/dtheta of kernel_pmf, same masking conventions.

    For d >= 1: (1-theta)**(d-1) - theta*(d-1)*(1-theta)**(d-2), with the
    second term pinned to 0 at d = 1 where its exponent would go negative.
    """
    theta = _check_theta(theta)
    lag_arr = np.asarray(lag)
    valid = lag_arr >= 1
    e1 = np.where(valid, lag_arr - 1, 0)
    first = (1.0 - theta) ** e1
    tail = lag_arr >= 2
    e2 = np.where(tail, lag_arr - 2, 0)
    second = np.where(tail, theta * (lag_arr - 1) * (1.0 - theta) ** e2, 0.0)
    out = np.where(valid, first - second, 0.0)
    return float(out) if np.isscalar(lag) else out


def kernel_convolve(series, theta: float, t: int, window: int | None = None) -> float:
    """History sum sum_{s < t} f(t - s) * series[s] at a single 1-based bin t.

    `window`, if given, truncates the history to the most recent `window`
    bins (s >= t - window).  The default keeps the full history.
    """
    theta = _check_theta(theta)
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if not 1 <= t <= x.shape[0] + 1:
        raise ValueError(f"t must be in 1..T+1, got {t} for T={x.shape[0]}")
    if window is not None and window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    lo = 0 if window is None else max(0, t - 1 - window)
    hist = x[lo : t - 1]
    if hist.size == 0:
        return 0.0
    lags = t - np.arange(lo + 1, t)
    return float(kernel_pmf(theta, lags) @ hist)


def smoothed_history(series, theta: float) -> np.ndarray:
    """All-bins history sums: out[t-1] = sum_{s < t} f(t - s) * series[s].

    Evaluated by the rolling recurrence conv(t+1) = (1-theta)*conv(t)
    + theta*series[t], expressed as a linear filter so batched inputs
    (any leading axes, time on the last axis) run in O(T) without a
    Python loop.
    """
    theta = _check_theta(theta)
    x = np.asarray(series, dtype=float)
    if x.shape[-1] == 0:
        return np.zeros_like(x)
    # y[i] = theta * x[i-1] + (1 - theta) * y[i-1]  (rest initial conditions)
    return lfilter([0.0, theta], [1.0, -(1.0 - theta)], x, axis=-1)


def build_smoothed_interventions(X, theta: float) -> np.ndarray:
    """Kernel-smoothed intervention panel Xbar with Xbar[k, t-1] = sum_{s<t} f(t-s) X[k, s]."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"X must have shape (K, T), got ndim={X.ndim}")
    return smoothed_history(X, theta)


@dataclass(frozen=True)
class SignalSet:
    """Exogenous inputs over bins 1..T.

    S is the search-interest scaler: shape (T,) when shared across opinions
    or (M, T) when each opinion carries its own series.  X holds the K
    intervention series, shape (K, T); `names` labels its rows.
    """

    S: np.ndarray
    X: np.ndarray
    names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        S = np.asarray(self.S, dtype=float).copy()
        X = np.asarray(self.X, dtype=float).copy()
        if S.ndim not in (1, 2):
            raise ValueError(f"S must have shape (T,) or (M, T), got ndim={S.ndim}")
        if X.ndim != 2:
            raise ValueError(f"X must have shape (K, T), got ndim={X.ndim}")
        if S.shape[-1] != X.shape[-1]:
            raise ValueError(
                f"S and X disagree on T: {S.shape[-1]} vs {X.shape[-1]}"
            )
        if not np.all(np.isfinite(S)):
            raise ValueError("S contains non-finite values")
        if not np.all(np.isfinite(X)):
            raise ValueError("X contains non-finite values")
        if np.any(S < 0):
            raise ValueError("S must be non-negative")
        names = tuple(self.names) if self.names else tuple(f"x{k}" for k in range(X.shape[0]))
        if len(names) != X.shape[0]:
            raise ValueError(f"expected {X.shape[0]} intervention names, got {len(names)}")
        object.__setattr__(self, "S", _freeze(S))
        object.__setattr__(self, "X", _freeze(X))
        object.__setattr__(self, "names", names)

    @property
    def T(self) -> int:
        return self.X.shape[-1]

    @property
    def K(self) -> int:
        return self.X.shape[0]

    @property
    def per_opinion(self) -> bool:
        """True when each opinion has its own S_j series."""
        return self.S.ndim == 2

    @property
    def M(self) -> int | None:
        return self.S.shape[0] if self.per_opinion else None

    def S_for(self, j: int) -> np.ndarray:
        """Series scaling opinion j's exogenous rate (shared S when not split)."""
        return self.S[j] if self.per_opinion else self.S

    def S_total(self) -> np.ndarray:
        """Shared S, or the opinion-summed... no: per-opinion mode has no single
        platform scaler; callers must weight S_j by the mu split.  Raises there."""
        if self.per_opinion:
            raise ValueError("per-opinion signals have no shared S; weight S_for(j) by the mu split")
        return self.S

    def truncated(self, T: int) -> "SignalSet":
        """First T bins of every series."""
        if not 1 <= T <= self.T:
            raise ValueError(f"T must be in 1..{self.T}, got {T}")
        return SignalSet(S=self.S[..., :T], X=self.X[:, :T], names=self.names)


@dataclass(frozen=True)
class CountPanel:
    """Observed or simulated event counts, shape (P, M, T), non-negative ints."""

    n: np.ndarray

    def __post_init__(self) -> None:
        n = np.asarray(self.n)
        if n.ndim != 3:
            raise ValueError(f"counts must have shape (P, M, T), got ndim={n.ndim}")
        if n.size and not np.issubdtype(n.dtype, np.integer):
            frac, _ = np.modf(np.asarray(n, dtype=float))
            if np.any(frac != 0):
                raise ValueError("counts must be integers")
        n = np.asarray(n, dtype=np.int64).copy()
        if np.any(n < 0):
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "n", _freeze(n))

    @property
    def P(self) -> int:
        return self.n.shape[0]

    @property
    def M(self) -> int:
        return self.n.shape[1]

    @property
    def T(self) -> int:
        return self.n.shape[2]

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.n.shape

    def platform_totals(self) -> np.ndarray:
        """Per-platform volume N^p(t), shape (P, T)."""
        return self.n.sum(axis=1)

    def realized_shares(self, fallback: np.ndarray | None = None) -> np.ndarray:
        """Within-platform shares n / N, shape (P, M, T).

        Bins with zero volume are undefined; they take `fallback` values
        (same shape) when provided, else NaN.
        """
        totals = self.platform_totals()[:, None, :]
        with np.errstate(invalid="ignore", divide="ignore"):
            shares = self.n / totals
        empty = np.broadcast_to(totals == 0, shares.shape)
        if fallback is not None:
            fb = np.asarray(fallback, dtype=float)
            if fb.shape != shares.shape:
                raise ValueError(f"fallback shape {fb.shape} != {shares.shape}")
            shares = np.where(empty, fb, shares)
        else:
            shares = np.where(empty, np.nan, shares)
        return shares

    def truncated(self, T: int) -> "CountPanel":
        if not 1 <= T <= self.T:
            raise ValueError(f"T must be in 1..{self.T}, got {T}")
        return CountPanel(n=self.n[:, :, :T])
