import numpy as np
import pytest
from scipy import stats as sps

from attention_market.core import CountPanel, SignalSet
from attention_market.likelihoods import (
    INTENSITY_FLOOR,
    grad_tier1,
    grad_tier2,
    loglik_tier1,
    loglik_tier2,
    make_tier2_workspace,
    tier2_value_and_grad,
)
from attention_market.shares import FeatureStats, Tier2Params, build_features, share_series
from attention_market.volume import (
    Tier1Params,
    Tier1ParamsSplit,
    platform_intensity_series,
)


def random_instance(seed, P=2, M=2, K=2, T=25, G=1, per_opinion=False):
    rng = np.random.default_rng(seed)
    mu = rng.uniform(2.0, 10.0, P)
    params1 = Tier1Params(
        mu=mu,
        alpha=rng.uniform(0.05, 0.35, (P, P)),
        theta=rng.uniform(0.2, 0.8),
    )
    w = rng.uniform(0.2, 1.0, (P, M))
    split = Tier1ParamsSplit(mu_split=mu[:, None] * w / w.sum(1, keepdims=True))
    params2 = Tier2Params(
        gamma=rng.normal(0, 0.15, (P, M, K)),
        beta=rng.normal(0, 0.08, (P, P, M, M)),
        split=split,
    )
    S = rng.uniform(0.5, 2.0, (M, T) if per_opinion else T)
    signals = SignalSet(S=S, X=rng.uniform(0, 6, (K, T)))
    panels = [CountPanel(n=rng.poisson(3.0, (P, M, T))) for _ in range(G)]
    counts = panels[0] if G == 1 else panels
    return params1, params2, signals, counts


class TestLoglikTier1:
    def test_single_bin_hand_value(self):
        # lam = 2, observed 0 events: log p = -2
        params = Tier1Params(mu=np.array([2.0]), alpha=np.zeros((1, 1)), theta=0.5)
        signals = SignalSet(S=np.ones(1), X=np.zeros((0, 1)))
        counts = CountPanel(n=np.zeros((1, 1, 1), dtype=int))
        assert loglik_tier1(params, signals, counts) == pytest.approx(-2.0)

    def test_matches_scipy_poisson(self):
        params1, _, signals, counts = random_instance(3, T=40)
        lam = platform_intensity_series(params1, signals, counts)
        lam = np.maximum(lam, INTENSITY_FLOOR)
        expected = sps.poisson.logpmf(counts.platform_totals(), lam).sum()
        assert loglik_tier1(params1, signals, counts) == pytest.approx(expected, rel=1e-12)

    def test_sequence_sums_over_panels(self):
        params1, _, signals, counts = random_instance(4, G=3)
        total = loglik_tier1(params1, signals, counts)
        parts = sum(loglik_tier1(params1, signals, c) for c in counts)
        assert total == pytest.approx(parts, rel=1e-12)

    def test_per_opinion_needs_split(self):
        params1, params2, signals, counts = random_instance(5, per_opinion=True)
        with pytest.raises(ValueError):
            loglik_tier1(params1, signals, counts)
        value = loglik_tier1(params1, signals, counts, split=params2.split)
        assert np.isfinite(value)

    def test_zero_intensity_bin_is_floored(self):
        params = Tier1Params(mu=np.array([1.0]), alpha=np.zeros((1, 1)), theta=0.5)
        signals = SignalSet(S=np.zeros(2), X=np.zeros((0, 2)))
        counts = CountPanel(n=np.zeros((1, 1, 2), dtype=int))
        value = loglik_tier1(params, signals, counts)
        assert value == pytest.approx(-2 * INTENSITY_FLOOR, abs=1e-15)


def tier1_fd(params, signals, counts, split, which, index, h=1e-6):
    """Central difference of loglik_tier1 in one coordinate."""

    def build(delta):
        mu = params.mu.copy()
        alpha = params.alpha.copy()
        theta = params.theta
        ms = None if split is None else split.mu_split.copy()
        if which == "mu":
            mu = mu.copy()
            mu[index] += delta
        elif which == "alpha":
            alpha[index] += delta
        elif which == "theta":
            theta += delta
        elif which == "mu_split":
            ms[index] += delta
            mu = ms.sum(axis=1)
        p = Tier1Params(mu=mu, alpha=alpha, theta=theta)
        s = None if ms is None else Tier1ParamsSplit(mu_split=ms)
        return loglik_tier1(p, signals, counts, split=s)

    return (build(h) - build(-h)) / (2 * h)


class TestGradTier1:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_finite_differences(self, seed):
        params1, _, signals, counts = random_instance(seed, G=2)
        grads = grad_tier1(params1, signals, counts)
        for p in range(2):
            fd = tier1_fd(params1, signals, counts, None, "mu", p)
            assert grads["mu"][p] == pytest.approx(fd, rel=1e-5, abs=1e-6)
            for q in range(2):
                fd = tier1_fd(params1, signals, counts, None, "alpha", (p, q))
                assert grads["alpha"][p, q] == pytest.approx(fd, rel=1e-5, abs=1e-6)
        fd = tier1_fd(params1, signals, counts, None, "theta", None)
        assert grads["theta"] == pytest.approx(fd, rel=1e-4, abs=1e-5)

    def test_per_opinion_split_gradient(self):
        params1, params2, signals, counts = random_instance(7, per_opinion=True)
        grads = grad_tier1(params1, signals, counts, split=params2.split)
        assert "mu_split" in grads and grads["mu_split"].shape == (2, 2)
        for idx in [(0, 0), (1, 1)]:
            fd = tier1_fd(params1, signals, counts, params2.split, "mu_split", idx)
            assert grads["mu_split"][idx] == pytest.approx(fd, rel=1e-5, abs=1e-6)


class TestLoglikTier2:
    def test_matches_scipy_poisson_raw(self):
        params1, params2, signals, counts = random_instance(11)
        panel = build_features(params1, params2.split, signals, counts, transform="raw")
        s = share_series(params2, panel)
        lam = platform_intensity_series(params1, signals, counts, split=params2.split)
        rate = np.maximum(lam, INTENSITY_FLOOR)[:, None, :] * s
        expected = sps.poisson.logpmf(counts.n, rate).sum() - 1.0 * np.sum(
            params2.gamma**2
        )
        got = loglik_tier2(params2, params1, signals, counts, transform="raw")
        assert got == pytest.approx(expected, rel=1e-10)

    def test_matches_scipy_poisson_standardized(self):
        params1, params2, signals, counts = random_instance(13)
        panel = build_features(params1, params2.split, signals, counts)
        s = share_series(params2, panel)
        lam = platform_intensity_series(params1, signals, counts, split=params2.split)
        rate = np.maximum(lam, INTENSITY_FLOOR)[:, None, :] * s
        expected = sps.poisson.logpmf(counts.n, rate).sum() - np.sum(params2.gamma**2)
        got = loglik_tier2(params2, params1, signals, counts)
        assert got == pytest.approx(expected, rel=1e-10)

    def test_penalty_scaling(self):
        params1, params2, signals, counts = random_instance(17)
        a = loglik_tier2(params2, params1, signals, counts, lambda_reg=0.0)
        b = loglik_tier2(params2, params1, signals, counts, lambda_reg=2.0)
        assert a - b == pytest.approx(2.0 * np.sum(params2.gamma**2), rel=1e-9)

    def test_bin_range_restricts_scored_bins(self):
        params1, params2, signals, counts = random_instance(19, T=30)
        full = loglik_tier2(params2, params1, signals, counts, lambda_reg=0.0)
        head = loglik_tier2(
            params2, params1, signals, counts, lambda_reg=0.0, bin_range=(1, 20)
        )
        tail = loglik_tier2(
            params2, params1, signals, counts, lambda_reg=0.0, bin_range=(21, 30)
        )
        assert head + tail == pytest.approx(full, rel=1e-10)

    def test_frozen_stats_differ_from_refit_on_new_window(self):
        params1, params2, signals, counts = random_instance(23, T=40)
        stats = build_features(params1, params2.split, signals, counts).stats
        frozen = loglik_tier2(params2, params1, signals, counts, stats=stats)
        refit = loglik_tier2(params2, params1, signals, counts)
        assert frozen == pytest.approx(refit, rel=1e-9)  # same window, same stats
        short = loglik_tier2(
            params2, params1, signals, counts, stats_window=(1, 20)
        )
        assert short != pytest.approx(refit, rel=1e-9)


def tier2_fd(params2, params1, signals, counts, which, index, h=1e-5, **kw):
    def build(delta):
        gamma = params2.gamma.copy()
        beta = params2.beta.copy()
        ms = params2.split.mu_split.copy()
        if which == "gamma":
            gamma[index] += delta
        elif which == "beta":
            beta[index] += delta
        elif which == "mu_split":
            ms[index] += delta
        ws = make_tier2_workspace(params1, signals, counts, **kw)
        value, _ = tier2_value_and_grad(ws, gamma, beta, ms, want_grad=False)
        return value

    return (build(h) - build(-h)) / (2 * h)


class TestGradTier2:
    @pytest.mark.parametrize("transform", ["raw", "standardized"])
    @pytest.mark.parametrize("seed", [0, 5])
    def test_matches_finite_differences(self, seed, transform):
        params1, params2, signals, counts = random_instance(seed, G=2)
        kw = dict(transform=transform)
        grads = grad_tier2(params2, params1, signals, counts, **kw)
        for idx in [(0, 0, 0), (1, 1, 1), (0, 1, 0)]:
            fd = tier2_fd(params2, params1, signals, counts, "gamma", idx, **kw)
            assert grads["gamma"][idx] == pytest.approx(fd, rel=1e-4, abs=1e-6)
        for idx in [(0, 0, 0, 0), (1, 0, 1, 0), (0, 1, 1, 1)]:
            fd = tier2_fd(params2, params1, signals, counts, "beta", idx, **kw)
            assert grads["beta"][idx] == pytest.approx(fd, rel=1e-4, abs=1e-6)
        for idx in [(0, 0), (1, 1), (0, 1)]:
            fd = tier2_fd(params2, params1, signals, counts, "mu_split", idx, **kw)
            assert grads["mu_split"][idx] == pytest.approx(fd, rel=1e-4, abs=1e-6)

    def test_frozen_stats_gradient(self):
        params1, params2, signals, counts = random_instance(29)
        stats = build_features(params1, params2.split, signals, counts).stats
        kw = dict(transform="standardized", stats=stats)
        grads = grad_tier2(params2, params1, signals, counts, **kw)
        for idx in [(0, 0), (1, 1)]:
            fd = tier2_fd(params2, params1, signals, counts, "mu_split", idx, **kw)
            assert grads["mu_split"][idx] == pytest.approx(fd, rel=1e-4, abs=1e-6)

    def test_per_opinion_signals_gradient(self):
        params1, params2, signals, counts = random_instance(31, per_opinion=True)
        grads = grad_tier2(params2, params1, signals, counts, transform="raw")
        for idx in [(0, 0), (1, 0)]:
            fd = tier2_fd(
                params2, params1, signals, counts, "mu_split", idx, transform="raw"
            )
            assert grads["mu_split"][idx] == pytest.approx(fd, rel=1e-4, abs=1e-6)

    def test_share_residual_sums_to_zero(self):
        # shifting every opinion's tendency together leaves shares unchanged,
        # so the gradient along that direction (sum over reacting opinion i)
        # must vanish exactly
        params1, params2, signals, counts = random_instance(37)
        grads = grad_tier2(params2, params1, signals, counts, lambda_reg=0.0)
        resid_dir = grads["beta"].sum(axis=2)  # sum over reacting opinion i
        np.testing.assert_allclose(resid_dir, 0.0, atol=1e-8)


class TestWorkspaceValidation:
    def test_shape_mismatches(self):
        params1, params2, signals, counts = random_instance(41)
        bad = CountPanel(n=np.zeros((3, 2, 25), dtype=int))
        with pytest.raises(ValueError):
            make_tier2_workspace(params1, signals, bad)
        with pytest.raises(ValueError):
            make_tier2_workspace(params1, signals, counts, bin_range=(0, 5))
        with pytest.raises(ValueError):
            make_tier2_workspace(params1, signals, counts, transform="nope")

    def test_stats_transform_mismatch(self):
        params1, params2, signals, counts = random_instance(43)
        with pytest.raises(ValueError):
            make_tier2_workspace(
                params1, signals, counts, transform="raw", stats=FeatureStats(
                    transform="standardized",
                    lam_mean=np.zeros((2, 2)),
                    lam_scale=np.ones((2, 2)),
                    xbar_mean=np.zeros(2),
                    xbar_scale=np.ones(2),
                ),
            )
