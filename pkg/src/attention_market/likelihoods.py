"""Poisson log-likelihoods and analytic gradients for both tiers.

Tier 1 scores platform volumes N^p(t) against lam^p(t).  Tier 2 scores
opinion counts n^p_i(t) against lam^p(t) * s_i^p(t), holding the tier-1
excitation structure fixed and optimizing the share parameters together
with the opinion-level baseline split.

Counts may be a single panel or a sequence of panels sharing one SignalSet;
sequences are scored jointly (summed), which is how grouped replicates are
fitted.  Intensities are clamped below at `floor` inside the likelihood
only; gradients are masked accordingly so clamped bins contribute zero.

A ridge penalty lambda_reg * ||gamma||^2 is subtracted from the tier-2
objective to keep intervention loadings from chasing noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter
from scipy.special import gammaln, logsumexp

from .core import CountPanel, SignalSet, build_smoothed_interventions, smoothed_history
from .shares import FeatureStats, Tier2Params
from .volume import Tier1Params, Tier1ParamsSplit

INTENSITY_FLOOR = 1e-10


def _stack_counts(counts) -> np.ndarray:
    """Samples as one (G, P, M, T) array."""
    if isinstance(counts, CountPanel):
        panels = [counts]
    else:
        panels = list(counts)
        if not panels:
            raise ValueError("counts must contain at least one panel")
    shape = panels[0].dims
    for panel in panels[1:]:
        if panel.dims != shape:
            raise ValueError(f"panels disagree on shape: {panel.dims} vs {shape}")
    return np.stack([p.n for p in panels]).astype(float)


def _dtheta_filter(series: np.ndarray, conv: np.ndarray, theta: float) -> np.ndarray:
    """d/dtheta of smoothed_history(series, theta), given the smoothed series.

    Differentiating conv(t+1) = (1-theta) conv(t) + theta series(t) gives
    D(t+1) = (1-theta) D(t) + (series(t) - conv(t)), another linear filter.
    """
    return lfilter([0.0, 1.0], [1.0, -(1.0 - theta)], series - conv, axis=-1)


def _exo_terms(params: Tier1Params, signals: SignalSet, split):
    """Exogenous platform rate (P, T) plus the per-opinion S matrix used by grads."""
    if signals.per_opinion:
        if split is None:
            raise ValueError("per-opinion signals require a Tier1ParamsSplit")
        split.check_against(params)
        exo = np.einsum("pj,jt->pt", split.mu_split, signals.S)
    else:
        exo = params.mu[:, None] * signals.S[None, :]
    return exo


def _bin_mask(T: int, bin_range: tuple[int, int] | None) -> np.ndarray:
    mask = np.zeros(T)
    if bin_range is None:
        mask[:] = 1.0
    else:
        a, b = bin_range
        if not 1 <= a <= b <= T:
            raise ValueError(f"bin_range must satisfy 1 <= a <= b <= {T}, got {bin_range}")
        mask[a - 1 : b] = 1.0
    return mask


def _tier1_core(
    params: Tier1Params,
    signals: SignalSet,
    stacked: np.ndarray,
    split,
    floor: float,
    want_grad: bool,
    bin_range: tuple[int, int] | None = None,
):
    N = stacked.sum(axis=2)  # (G, P, T)
    if N.shape[-1] != signals.T:
        raise ValueError(f"counts cover T={N.shape[-1]} bins, signals T={signals.T}")
    if N.shape[1] != params.P:
        raise ValueError(f"counts have P={N.shape[1]}, params have P={params.P}")
    mask = _bin_mask(N.shape[-1], bin_range)
    conv = smoothed_history(N, params.theta)  # (G, P, T)
    lam = _exo_terms(params, signals, split)[None] + np.einsum(
        "pq,gqt->gpt", params.alpha, conv
    )
    lamc = np.maximum(lam, floor)
    value = float(np.sum(mask[None, None] * (N * np.log(lamc) - lamc - gammaln(N + 1.0))))
    if not want_grad:
        return value, None
    resid = mask[None, None] * np.where(lam > floor, N / lamc - 1.0, 0.0)  # (G, P, T)
    grads: dict[str, np.ndarray | float] = {}
    if signals.per_opinion:
        grads["mu_split"] = np.einsum("gpt,jt->pj", resid, signals.S)
    else:
        grads["mu"] = np.einsum("gpt,t->p", resid, signals.S)
    grads["alpha"] = np.einsum("gpt,gqt->pq", resid, conv)
    dconv = _dtheta_filter(N, conv, params.theta)
    grads["theta"] = float(np.einsum("gpt,pq,gqt->", resid, params.alpha, dconv))
    return value, grads


def loglik_tier1(
    params: Tier1Params,
    signals: SignalSet,
    counts,
    split: Tier1ParamsSplit | None = None,
    floor: float = INTENSITY_FLOOR,
    bin_range: tuple[int, int] | None = None,
) -> float:
    """Joint log-likelihood of platform volumes under tier 1.

    `bin_range` (1-based, inclusive) restricts which bins are scored;
    histories always use the full series.
    """
    value, _ = _tier1_core(
        params, signals, _stack_counts(counts), split, floor, False, bin_range
    )
    return value


def grad_tier1(
    params: Tier1Params,
    signals: SignalSet,
    counts,
    split: Tier1ParamsSplit | None = None,
    floor: float = INTENSITY_FLOOR,
) -> dict:
    """Natural-scale gradient of loglik_tier1.

    Keys: 'alpha' (P, P), 'theta' (scalar), and 'mu' (P,) or 'mu_split'
    (P, M) depending on whether signals are per-opinion.
    """
    _, grads = _tier1_core(params, signals, _stack_counts(counts), split, floor, True)
    return grads


@dataclass
class Tier2Workspace:
    """Everything about a tier-2 objective that does not move with its parameters.

    The excitation part of the conditional intensities depends only on the
    tier-1 estimate and observed counts, so it is computed once per fit; each
    objective evaluation then only re-applies the baseline split, features,
    and softmax.
    """

    theta1: Tier1Params
    signals: SignalSet
    stacked: np.ndarray  # (G, P, M, T) float counts
    excitation: np.ndarray  # (G, P, M, T) history part of lam^p(t|j)
    S_opinion: np.ndarray  # (M, T): S_j rows, or the shared S tiled
    xbar: np.ndarray  # (K, T)
    transform: str
    frozen_stats: FeatureStats | None
    stats_window: tuple[int, int] | None
    lambda_reg: float
    floor: float
    bin_mask: np.ndarray  # (T,) float 0/1, bins contributing to the objective
    gammaln_term: float
    x_feat: np.ndarray  # (K, T), precomputed (never depends on tier-2 params)
    xbar_mean: np.ndarray | None
    xbar_scale: np.ndarray | None

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return self.stacked.shape

    @property
    def window_slice(self) -> slice:
        T = self.stacked.shape[-1]
        if self.stats_window is None:
            return slice(0, T)
        a, b = self.stats_window
        return slice(a - 1, b)


def make_tier2_workspace(
    theta1: Tier1Params,
    signals: SignalSet,
    counts,
    transform: str = "standardized",
    stats: FeatureStats | None = None,
    stats_window: tuple[int, int] | None = None,
    lambda_reg: float = 1.0,
    floor: float = INTENSITY_FLOOR,
    bin_range: tuple[int, int] | None = None,
) -> Tier2Workspace:
    """Precompute the split-independent pieces of the tier-2 objective.

    `bin_range` (1-based, inclusive) restricts which bins are scored, e.g.
    for held-out evaluation; histories always use the full series.
    """
    if transform not in ("raw", "standardized"):
        raise ValueError(f"unknown transform {transform!r}")
    if stats is not None and stats.transform != transform:
        raise ValueError(
            f"stats were fitted for transform={stats.transform!r}, requested {transform!r}"
        )
    stacked = _stack_counts(counts)
    G, P, M, T = stacked.shape
    if T != signals.T:
        raise ValueError(f"counts cover T={T} bins, signals T={signals.T}")
    if P != theta1.P:
        raise ValueError(f"counts have P={P}, params have P={theta1.P}")
    if signals.per_opinion and signals.M != M:
        raise ValueError(f"signals have M={signals.M}, counts have M={M}")
    conv = smoothed_history(stacked, theta1.theta)  # (G, P, M, T)
    excitation = np.einsum("pq,gqjt->gpjt", theta1.alpha, conv)
    S_opinion = (
        np.asarray(signals.S)
        if signals.per_opinion
        else np.broadcast_to(signals.S, (M, T))
    )
    xbar = build_smoothed_interventions(signals.X, theta1.theta)
    mask = _bin_mask(T, bin_range)
    gl = float(np.sum(mask[None, None, None, :] * gammaln(stacked + 1.0)))
    # intervention features never depend on tier-2 params; fix them now
    if transform == "raw":
        x_feat = xbar
        xm = xs = None
    elif stats is not None:
        x_feat = stats.x_features(xbar)
        xm, xs = stats.xbar_mean, stats.xbar_scale
    else:
        sl = slice(0, T) if stats_window is None else slice(stats_window[0] - 1, stats_window[1])
        xw = xbar[:, sl]
        xm = xw.mean(axis=1)
        xs = xw.std(axis=1)
        xs = np.where(xs == 0, 1.0, xs)
        x_feat = (xbar - xm[:, None]) / xs[:, None]
    return Tier2Workspace(
        theta1=theta1,
        signals=signals,
        stacked=stacked,
        excitation=excitation,
        S_opinion=np.asarray(S_opinion, dtype=float),
        xbar=xbar,
        transform=transform,
        frozen_stats=stats,
        stats_window=stats_window,
        lambda_reg=lambda_reg,
        floor=floor,
        bin_mask=mask,
        gammaln_term=gl,
        x_feat=x_feat,
        xbar_mean=xm,
        xbar_scale=xs,
    )


def tier2_value_and_grad(
    ws: Tier2Workspace,
    gamma: np.ndarray,
    beta: np.ndarray,
    mu_split: np.ndarray,
    want_grad: bool = True,
):
    """Evaluate the tier-2 objective, optionally with natural-scale gradients.

    Returns (value, grads) where grads has keys 'gamma', 'beta', 'mu_split'
    (each the derivative treating every entry as free; constraint handling
    is the optimizer's business).  Feature stats follow the workspace: frozen
    stats are constants, otherwise standardized moments are recomputed from
    the current split and differentiated through.
    """
    G, P, M, T = ws.dims
    mask = ws.bin_mask
    lam_cond = mu_split[None, :, :, None] * ws.S_opinion[None, None] + ws.excitation
    lam_plat = lam_cond.sum(axis=2)  # (G, P, T)
    lamc = np.maximum(lam_plat, ws.floor)
    N = ws.stacked.sum(axis=2)

    refit_stats = ws.transform == "standardized" and ws.frozen_stats is None
    if ws.transform == "raw":
        z = lam_cond
    elif ws.frozen_stats is not None:
        z = ws.frozen_stats.lam_features(lam_cond)
    else:
        g = np.log1p(lam_cond)
        sl = ws.window_slice
        gm = g[..., sl].mean(axis=-1)  # (G, P, M)
        gs = g[..., sl].std(axis=-1)
        pinned = gs == 0
        gs = np.where(pinned, 1.0, gs)
        z = (g - gm[..., None]) / gs[..., None]

    tend = np.einsum("pqij,gqjt->gpit", beta, z)
    if gamma.shape[-1]:
        tend += np.einsum("pik,kt->pit", gamma, ws.x_feat)[None]
    log_s = tend - logsumexp(tend, axis=2, keepdims=True)

    value = float(
        np.sum(mask[None, None] * (N * np.log(lamc) - lamc))
        + np.sum(mask[None, None, None] * ws.stacked * log_s)
        - ws.gammaln_term
        - ws.lambda_reg * float(np.sum(gamma * gamma))
    )
    if not want_grad:
        return value, None

    s = np.exp(log_s)
    resid_share = mask[None, None, None] * (ws.stacked - N[:, :, None, :] * s)  # (G,P,M,T)
    d_gamma = np.einsum("gpit,kt->pik", resid_share, ws.x_feat) - 2.0 * ws.lambda_reg * gamma
    d_beta = np.einsum("gpit,gqjt->pqij", resid_share, z)

    # split gradient, platform Poisson part: d lam_plat / d mu_split[q, j] = S_j
    resid_plat = mask[None, None] * np.where(lam_plat > ws.floor, N / lamc - 1.0, 0.0)
    d_mu = np.einsum("gqt,jt->qj", resid_plat, ws.S_opinion)

    # split gradient, share part: through z_{qj}
    back = np.einsum("gpit,pqij->gqjt", resid_share, beta)
    if ws.transform == "raw":
        dz = np.broadcast_to(ws.S_opinion[None, None], lam_cond.shape)
        d_mu += np.einsum("gqjt,gqjt->qj", back, dz)
    elif ws.frozen_stats is not None:
        h = ws.S_opinion[None, None] / (1.0 + lam_cond)
        d_mu += np.einsum(
            "gqjt,gqjt->qj", back, h / ws.frozen_stats.lam_scale[None, ..., None]
        )
    else:
        h = ws.S_opinion[None, None] / (1.0 + lam_cond)
        mh = h[..., ws.window_slice].mean(axis=-1)  # (G, P, M)
        centered = g[..., ws.window_slice] - gm[..., None]
        ds = np.where(
            pinned, 0.0, (centered * h[..., ws.window_slice]).mean(axis=-1) / gs
        )
        dz = (h - mh[..., None]) / gs[..., None] - z * (ds / gs)[..., None]
        d_mu += np.einsum("gqjt,gqjt->qj", back, dz)

    return value, {"gamma": d_gamma, "beta": d_beta, "mu_split": d_mu}


def loglik_tier2(
    params2: Tier2Params,
    theta1: Tier1Params,
    signals: SignalSet,
    counts,
    transform: str = "standardized",
    stats: FeatureStats | None = None,
    stats_window: tuple[int, int] | None = None,
    lambda_reg: float = 1.0,
    floor: float = INTENSITY_FLOOR,
    bin_range: tuple[int, int] | None = None,
) -> float:
    """Penalized joint log-likelihood of opinion counts under tier 2."""
    ws = make_tier2_workspace(
        theta1,
        signals,
        counts,
        transform=transform,
        stats=stats,
        stats_window=stats_window,
        lambda_reg=lambda_reg,
        floor=floor,
        bin_range=bin_range,
    )
    value, _ = tier2_value_and_grad(
        ws, params2.gamma, params2.beta, params2.split.mu_split, want_grad=False
    )
    return value


def grad_tier2(
    params2: Tier2Params,
    theta1: Tier1Params,
    signals: SignalSet,
    counts,
    transform: str = "standardized",
    stats: FeatureStats | None = None,
    stats_window: tuple[int, int] | None = None,
    lambda_reg: float = 1.0,
    floor: float = INTENSITY_FLOOR,
    bin_range: tuple[int, int] | None = None,
) -> dict:
    """Natural-scale gradient of loglik_tier2 over gamma, beta, mu_split."""
    ws = make_tier2_workspace(
        theta1,
        signals,
        counts,
        transform=transform,
        stats=stats,
        stats_window=stats_window,
        lambda_reg=lambda_reg,
        floor=floor,
        bin_range=bin_range,
    )
    _, grads = tier2_value_and_grad(
        ws, params2.gamma, params2.beta, params2.split.mu_split, want_grad=True
    )
    return grads
