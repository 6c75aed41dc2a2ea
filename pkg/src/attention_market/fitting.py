"""Two-stage maximum-likelihood estimation.

Stage 1 fits the volume parameters (mu, alpha, theta) to platform totals.
Stage 2 holds those fixed and fits the share parameters (gamma, beta)
together with the opinion-level baseline split, which is parameterized as
mu_split[p] = mu_hat[p] * softmax(w[p]) so the row-sum constraint holds by
construction.

Positivity in stage 1 is handled either by a log/sigmoid reparameterization
(the default) or by box bounds on the natural scale; both run through
scipy's L-BFGS-B with analytic gradients.  Multi-start jitter guards
against bad basins; ties prefer the smallest loading norm.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy.optimize import minimize
from scipy.special import softmax

from .core import CountPanel, SignalSet
from .likelihoods import (
    INTENSITY_FLOOR,
    Tier2Workspace,
    _stack_counts,
    _tier1_core,
    make_tier2_workspace,
    tier2_value_and_grad,
)
from .shares import FeatureStats, Tier2Params
from .volume import Tier1Params, Tier1ParamsSplit

_LOG_FLOOR = np.log(1e-10)
_LOG_CEIL = np.log(1e6)


@dataclass(frozen=True)
class FitOptions:
    """Knobs shared by both stages.

    parameter_transform: "log" reparameterizes mu/alpha/theta onto the real
    line; "box" optimizes natural-scale values under bounds.
    feature_transform: tendency feature pipeline ("standardized" or "raw").
    freeze_gamma pins intervention loadings at zero (the no-interventions
    ablation).  stats_window restricts standardization moments (1-based,
    inclusive); None uses every bin of the data being fitted.
    """

    parameter_transform: str = "log"
    feature_transform: str = "standardized"
    max_iterations: int = 500
    gradient_tolerance: float = 1e-5
    lambda_reg: float = 1.0
    n_restarts: int = 3
    seed: int | None = None
    n_jobs: int = 1
    freeze_gamma: bool = False
    stats_window: tuple[int, int] | None = None
    floor: float = INTENSITY_FLOOR

    def __post_init__(self) -> None:
        if self.parameter_transform not in ("log", "box"):
            raise ValueError(f"parameter_transform must be 'log' or 'box', got {self.parameter_transform!r}")
        if self.feature_transform not in ("raw", "standardized"):
            raise ValueError(f"feature_transform must be 'raw' or 'standardized', got {self.feature_transform!r}")
        if self.max_iterations < 1 or self.n_restarts < 1:
            raise ValueError("max_iterations and n_restarts must be >= 1")
        if self.lambda_reg < 0:
            raise ValueError("lambda_reg must be >= 0")


@dataclass
class PackedObjective:
    """A flattened view of one stage's optimization problem.

    value_and_grad maps a packed vector to (negative objective, gradient);
    pack/unpack translate between parameter objects and packed vectors.
    """

    value_and_grad: Callable[[np.ndarray], tuple[float, np.ndarray]]
    x0: np.ndarray
    bounds: list[tuple[float | None, float | None]] | None
    pack: Callable
    unpack: Callable


def _sigmoid(x: np.ndarray | float):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=float)))


def _logit(p: float) -> float:
    p = min(max(p, 1e-12), 1 - 1e-12)
    return float(np.log(p) - np.log1p(-p))


def _initial_tier1(signals: SignalSet, stacked: np.ndarray):
    """Moment-style starting point: mu matches mean counts per unit signal."""
    if signals.per_opinion:
        mean_n = stacked.mean(axis=(0, 3))  # (P, M)
        mean_s = signals.S.mean(axis=1)  # (M,)
        mu0 = mean_n / np.maximum(mean_s, 1e-12)[None, :]
        return np.maximum(mu0, 1e-6)
    mean_n = stacked.sum(axis=2).mean(axis=(0, 2))  # (P,)
    mean_s = max(float(np.mean(signals.S)), 1e-12)
    return np.maximum(mean_n / mean_s, 1e-6)


def make_tier1_objective(
    signals: SignalSet, counts, options: FitOptions
) -> PackedObjective:
    stacked = _stack_counts(counts)
    P = stacked.shape[1]
    M = stacked.shape[2]
    per_opinion = signals.per_opinion
    n_mu = P * M if per_opinion else P
    log_mode = options.parameter_transform == "log"

    def unpack(x: np.ndarray):
        mu_block = x[:n_mu]
        alpha_block = x[n_mu : n_mu + P * P]
        if log_mode:
            mu_vals = np.exp(mu_block)
            alpha = np.exp(alpha_block).reshape(P, P)
            theta = float(_sigmoid(x[-1]))
        else:
            mu_vals = mu_block.copy()
            alpha = alpha_block.reshape(P, P).copy()
            theta = float(x[-1])
        if per_opinion:
            split = Tier1ParamsSplit(mu_split=mu_vals.reshape(P, M))
            params = Tier1Params(mu=split.mu, alpha=alpha, theta=theta)
            return params, split
        params = Tier1Params(mu=mu_vals, alpha=alpha, theta=theta)
        return params, None

    def pack(params: Tier1Params, split: Tier1ParamsSplit | None = None) -> np.ndarray:
        mu_vals = split.mu_split.ravel() if per_opinion else params.mu
        alpha = params.alpha.ravel()
        if log_mode:
            return np.concatenate(
                [
                    np.log(np.maximum(mu_vals, 1e-10)),
                    np.log(np.maximum(alpha, 1e-10)),
                    [_logit(params.theta)],
                ]
            )
        return np.concatenate([mu_vals, alpha, [params.theta]])

    def value_and_grad(x: np.ndarray):
        mu_block = x[:n_mu]
        alpha_block = x[n_mu : n_mu + P * P]
        if log_mode:
            mu_vals = np.exp(mu_block)
            alpha = np.exp(alpha_block).reshape(P, P)
            theta = float(_sigmoid(x[-1]))
        else:
            mu_vals = np.asarray(mu_block)
            alpha = np.asarray(alpha_block).reshape(P, P)
            theta = float(x[-1])
        with warnings.catch_warnings():
            # intermediate iterates may cross the stability boundary; only
            # the final estimate should warn
            warnings.simplefilter("ignore")
            if per_opinion:
                split = Tier1ParamsSplit(mu_split=mu_vals.reshape(P, M))
                params = Tier1Params(mu=split.mu, alpha=alpha, theta=theta)
            else:
                split = None
                params = Tier1Params(mu=mu_vals, alpha=alpha, theta=theta)
        value, grads = _tier1_core(params, signals, stacked, split, options.floor, True)
        g_mu = grads["mu_split"].ravel() if per_opinion else grads["mu"]
        g_alpha = grads["alpha"].ravel()
        g_theta = grads["theta"]
        if log_mode:
            g_mu = g_mu * mu_vals
            g_alpha = g_alpha * alpha.ravel()
            g_theta = g_theta * theta * (1.0 - theta)
        grad = np.concatenate([g_mu, g_alpha, [g_theta]])
        return -value, -grad

    stacked_init = _initial_tier1(signals, stacked)
    if per_opinion:
        split0 = Tier1ParamsSplit(mu_split=stacked_init)
        params0 = Tier1Params(
            mu=split0.mu, alpha=np.full((P, P), 0.05), theta=0.5
        )
        x0 = pack(params0, split0)
    else:
        params0 = Tier1Params(
            mu=stacked_init, alpha=np.full((P, P), 0.05), theta=0.5
        )
        x0 = pack(params0)

    if log_mode:
        bounds = [(_LOG_FLOOR, _LOG_CEIL)] * (n_mu + P * P) + [(-20.0, 20.0)]
    else:
        bounds = [(1e-10, 1e6)] * n_mu + [(0.0, 10.0)] * (P * P) + [(1e-6, 1.0)]
    return PackedObjective(
        value_and_grad=value_and_grad, x0=x0, bounds=bounds, pack=pack, unpack=unpack
    )


@dataclass
class Tier1Fit:
    params: Tier1Params
    split: Tier1ParamsSplit | None
    loglik: float
    converged: bool
    iterations: int
    grad_norm: float


def _run_lbfgsb(objective: PackedObjective, x0: np.ndarray, options: FitOptions):
    res = minimize(
        objective.value_and_grad,
        x0,
        jac=True,
        method="L-BFGS-B",
        bounds=objective.bounds,
        options={
            "maxiter": options.max_iterations,
            "gtol": options.gradient_tolerance,
            "ftol": 1e-12,
        },
    )
    grad_norm = float(np.max(np.abs(res.jac)))
    converged = bool(res.success) or grad_norm <= options.gradient_tolerance
    return res, grad_norm, converged


def _restart_points(x0: np.ndarray, options: FitOptions, scale: float = 0.3):
    rng = np.random.default_rng(options.seed)
    points = [x0]
    for _ in range(options.n_restarts - 1):
        points.append(x0 + rng.normal(0.0, scale, size=x0.shape))
    return points


def fit_tier1(signals: SignalSet, counts, options: FitOptions | None = None) -> Tier1Fit:
    """Maximum-likelihood volume parameters from platform totals."""
    options = options or FitOptions()
    objective = make_tier1_objective(signals, counts, options)
    best = None
    for x_start in _restart_points(objective.x0, options):
        res, grad_norm, converged = _run_lbfgsb(objective, x_start, options)
        candidate = (res.fun, res, grad_norm, converged)
        if best is None or candidate[0] < best[0] - 1e-9:
            best = candidate
    _, res, grad_norm, converged = best
    params, split = objective.unpack(res.x)
    return Tier1Fit(
        params=params,
        split=split,
        loglik=-float(res.fun),
        converged=converged,
        iterations=int(res.nit),
        grad_norm=grad_norm,
    )


def make_tier2_objective(
    theta1: Tier1Params,
    signals: SignalSet,
    counts,
    options: FitOptions,
    workspace: Tier2Workspace | None = None,
) -> PackedObjective:
    ws = workspace if workspace is not None else make_tier2_workspace(
        theta1,
        signals,
        counts,
        transform=options.feature_transform,
        stats_window=options.stats_window,
        lambda_reg=options.lambda_reg,
        floor=options.floor,
    )
    G, P, M, T = ws.dims
    K = signals.K
    mu_hat = theta1.mu
    n_gamma = 0 if options.freeze_gamma else P * M * K
    n_beta = P * P * M * M

    def split_from_w(w: np.ndarray) -> np.ndarray:
        return mu_hat[:, None] * softmax(w.reshape(P, M), axis=1)

    def unpack(x: np.ndarray) -> Tier2Params:
        gamma = (
            np.zeros((P, M, K))
            if options.freeze_gamma
            else x[:n_gamma].reshape(P, M, K)
        )
        beta = x[n_gamma : n_gamma + n_beta].reshape(P, P, M, M)
        mu_split = split_from_w(x[n_gamma + n_beta :])
        return Tier2Params(
            gamma=gamma, beta=beta, split=Tier1ParamsSplit(mu_split=mu_split)
        )

    def pack(params2: Tier2Params) -> np.ndarray:
        ratio = params2.split.mu_split / np.maximum(mu_hat[:, None], 1e-300)
        w = np.log(np.maximum(ratio, 1e-12))
        parts = [] if options.freeze_gamma else [params2.gamma.ravel()]
        parts += [params2.beta.ravel(), w.ravel()]
        return np.concatenate(parts)

    def value_and_grad(x: np.ndarray):
        gamma = (
            np.zeros((P, M, K))
            if options.freeze_gamma
            else x[:n_gamma].reshape(P, M, K)
        )
        beta = x[n_gamma : n_gamma + n_beta].reshape(P, P, M, M)
        w = x[n_gamma + n_beta :].reshape(P, M)
        sm = softmax(w, axis=1)
        mu_split = mu_hat[:, None] * sm
        value, grads = tier2_value_and_grad(ws, gamma, beta, mu_split, want_grad=True)
        # chain rule through mu_split = mu_hat * softmax(w)
        g_mu = grads["mu_split"]
        inner = np.sum(sm * g_mu, axis=1, keepdims=True)
        g_w = mu_hat[:, None] * sm * (g_mu - inner)
        parts = [] if options.freeze_gamma else [grads["gamma"].ravel()]
        parts += [grads["beta"].ravel(), g_w.ravel()]
        return -value, -np.concatenate(parts)

    # empirical split as starting point; flat loadings
    counts_pm = ws.stacked.sum(axis=(0, 3)) + 1.0  # (P, M), Laplace-smoothed
    w0 = np.log(counts_pm / counts_pm.sum(axis=1, keepdims=True))
    x0 = np.concatenate(
        ([] if options.freeze_gamma else [np.zeros(n_gamma)])
        + [np.zeros(n_beta), w0.ravel()]
    )
    n_free = n_gamma + n_beta + P * M
    bounds = [(-50.0, 50.0)] * (n_gamma + n_beta) + [(-30.0, 30.0)] * (P * M)
    assert len(bounds) == n_free
    return PackedObjective(
        value_and_grad=value_and_grad, x0=x0, bounds=bounds, pack=pack, unpack=unpack
    )


@dataclass
class Tier2Fit:
    params: Tier2Params
    loglik: float
    converged: bool
    iterations: int
    grad_norm: float
    stats: FeatureStats | None


def _loading_norm(params2: Tier2Params) -> float:
    return float(np.sum(params2.gamma**2) + np.sum(params2.beta**2))


def fit_tier2(
    theta1: Tier1Params,
    signals: SignalSet,
    counts,
    options: FitOptions | None = None,
    init_split: Tier1ParamsSplit | None = None,
) -> Tier2Fit:
    """Maximum-likelihood share parameters given a fitted tier 1.

    With a single opinion the shares are identically 1 and nothing is
    identifiable, so M = 1 is rejected.
    """
    options = options or FitOptions()
    stacked = _stack_counts(counts)
    if stacked.shape[2] < 2:
        raise ValueError("tier-2 fitting needs at least two opinions (M >= 2)")
    ws = make_tier2_workspace(
        theta1,
        signals,
        counts,
        transform=options.feature_transform,
        stats_window=options.stats_window,
        lambda_reg=options.lambda_reg,
        floor=options.floor,
    )
    objective = make_tier2_objective(theta1, signals, counts, options, workspace=ws)
    x0 = objective.x0
    if init_split is not None:
        seeded = Tier2Params(
            gamma=np.zeros((ws.dims[1], ws.dims[2], signals.K)),
            beta=np.zeros((ws.dims[1],) * 2 + (ws.dims[2],) * 2),
            split=init_split,
        )
        x0 = objective.pack(seeded)
    best = None
    for x_start in _restart_points(x0, options, scale=0.2):
        res, grad_norm, converged = _run_lbfgsb(objective, x_start, options)
        params2 = objective.unpack(res.x)
        key = (res.fun, _loading_norm(params2))
        if best is None or key[0] < best[0][0] - 1e-6 or (
            abs(key[0] - best[0][0]) <= 1e-6 and key[1] < best[0][1]
        ):
            best = (key, res, grad_norm, converged, params2)
    _, res, grad_norm, converged, params2 = best
    stats = None
    if options.feature_transform == "standardized":
        # freeze the standardization achieved at the optimum for later use
        lam_cond = (
            params2.split.mu_split[None, :, :, None] * ws.S_opinion[None, None]
            + ws.excitation
        )
        sl = ws.window_slice
        g = np.log1p(lam_cond)
        # pool moments over samples and window bins so the frozen stats are
        # well defined even for jointly fitted groups
        flat = np.moveaxis(g[..., sl], 0, -1).reshape(g.shape[1], g.shape[2], -1)
        lam_mean = flat.mean(axis=-1)
        lam_scale = flat.std(axis=-1)
        lam_scale = np.where(lam_scale == 0, 1.0, lam_scale)
        stats = FeatureStats(
            transform="standardized",
            lam_mean=lam_mean,
            lam_scale=lam_scale,
            xbar_mean=ws.xbar_mean,
            xbar_scale=ws.xbar_scale,
        )
    return Tier2Fit(
        params=params2,
        loglik=-float(res.fun),
        converged=converged,
        iterations=int(res.nit),
        grad_norm=grad_norm,
        stats=stats,
    )


@dataclass
class FitResult:
    """Both stages for one dataset (or one jointly fitted group)."""

    tier1: Tier1Fit
    tier2: Tier2Fit
    options: FitOptions

    @property
    def params1(self) -> Tier1Params:
        return self.tier1.params

    @property
    def params2(self) -> Tier2Params:
        return self.tier2.params

    @property
    def stats(self) -> FeatureStats | None:
        return self.tier2.stats


def fit(signals: SignalSet, counts, options: FitOptions | None = None) -> FitResult:
    """Run both stages on one dataset."""
    options = options or FitOptions()
    t1 = fit_tier1(signals, counts, options)
    t2 = fit_tier2(t1.params, signals, counts, options, init_split=t1.split)
    return FitResult(tier1=t1, tier2=t2, options=options)


def joint_fit(
    signals: SignalSet,
    groups: Sequence,
    options: FitOptions | None = None,
) -> list[FitResult]:
    """Fit each group (a CountPanel or a sequence fitted jointly) separately.

    Groups share one SignalSet.  n_jobs > 1 fans groups out over processes.
    """
    options = options or FitOptions()
    groups = list(groups)
    if not groups:
        raise ValueError("no groups to fit")
    if options.n_jobs != 1 and len(groups) > 1:
        return Parallel(n_jobs=options.n_jobs)(
            delayed(fit)(signals, g, options) for g in groups
        )
    return [fit(signals, g, options) for g in groups]
