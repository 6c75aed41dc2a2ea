"""Dataset and model persistence plus synthetic data generation.

A dataset directory holds three files:

    counts.csv   time,platform,opinion,count     (every combination, once)
    signals.csv  time,series,value               (series: S, S:<opinion>, X:<name>)
    meta.json    {"platforms": [...], "opinions": [...], "interventions": [...]}

Label order in meta.json is authoritative; CSV row order is normalized on
save so a load/save cycle is byte-identical.  Model files are JSON with a
schema tag and a sha256 checksum over the canonical payload, so version
skew and tampering fail loudly instead of producing quiet nonsense.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import CountPanel, SignalSet
from .shares import FeatureStats, Tier2Params
from .simulate import SimulationSpec, simulate
from .volume import Tier1Params, Tier1ParamsSplit

MODEL_SCHEMA = "attention-market/model/1"


class DataError(ValueError):
    """Malformed dataset or model input."""


class ModelFormatError(DataError):
    """Model file schema is missing or from an incompatible major version."""


class ChecksumError(DataError):
    """Model payload does not match its recorded checksum."""


@dataclass(frozen=True)
class DatasetBundle:
    """Counts and signals with their label vocabulary."""

    counts: CountPanel
    signals: SignalSet
    platforms: tuple[str, ...]
    opinions: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.platforms) != self.counts.P:
            raise DataError(
                f"{len(self.platforms)} platform labels for P={self.counts.P}"
            )
        if len(self.opinions) != self.counts.M:
            raise DataError(f"{len(self.opinions)} opinion labels for M={self.counts.M}")
        if self.signals.T != self.counts.T:
            raise DataError(
                f"signals cover T={self.signals.T} bins, counts T={self.counts.T}"
            )
        if self.signals.per_opinion and self.signals.M != self.counts.M:
            raise DataError(
                f"per-opinion signals have M={self.signals.M}, counts M={self.counts.M}"
            )
        object.__setattr__(self, "platforms", tuple(self.platforms))
        object.__setattr__(self, "opinions", tuple(self.opinions))

    @property
    def interventions(self) -> tuple[str, ...]:
        return self.signals.names

    def truncated(self, T: int) -> "DatasetBundle":
        return DatasetBundle(
            counts=self.counts.truncated(T),
            signals=self.signals.truncated(T),
            platforms=self.platforms,
            opinions=self.opinions,
        )


def save_dataset(bundle: DatasetBundle, directory) -> None:
    """Write counts.csv, signals.csv, and meta.json under `directory`."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    T = bundle.counts.T
    with open(directory / "counts.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "platform", "opinion", "count"])
        for t in range(1, T + 1):
            for p, plat in enumerate(bundle.platforms):
                for m, op in enumerate(bundle.opinions):
                    writer.writerow([t, plat, op, int(bundle.counts.n[p, m, t - 1])])
    with open(directory / "signals.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "series", "value"])
        if bundle.signals.per_opinion:
            for m, op in enumerate(bundle.opinions):
                for t in range(1, T + 1):
                    writer.writerow([t, f"S:{op}", repr(float(bundle.signals.S[m, t - 1]))])
        else:
            for t in range(1, T + 1):
                writer.writerow([t, "S", repr(float(bundle.signals.S[t - 1]))])
        for k, name in enumerate(bundle.signals.names):
            for t in range(1, T + 1):
                writer.writerow([t, f"X:{name}", repr(float(bundle.signals.X[k, t - 1]))])
    meta = {
        "platforms": list(bundle.platforms),
        "opinions": list(bundle.opinions),
        "interventions": list(bundle.signals.names),
        "T": T,
    }
    with open(directory / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_rows(path: Path, expected_header: list[str]) -> list[list[str]]:
    if not path.exists():
        raise DataError(f"missing file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path.name} is empty") from None
        if header != expected_header:
            raise DataError(
                f"{path.name} header must be {','.join(expected_header)}, got {','.join(header)}"
            )
        return [row for row in reader if row]


def _parse_time(raw: str, T: int, path: str) -> int:
    try:
        t = int(raw)
    except ValueError:
        raise DataError(f"{path}: time {raw!r} is not an integer") from None
    if not 1 <= t <= T:
        raise DataError(f"{path}: time {t} outside 1..{T}")
    return t


def load_dataset(directory) -> DatasetBundle:
    """Read a dataset directory, validating grid completeness and labels."""
    directory = Path(directory)
    meta_path = directory / "meta.json"
    if not meta_path.exists():
        raise DataError(f"missing file: {meta_path}")
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"meta.json is not valid JSON: {exc}") from None
    for key in ("platforms", "opinions", "interventions", "T"):
        if key not in meta:
            raise DataError(f"meta.json is missing {key!r}")
    platforms = list(meta["platforms"])
    opinions = list(meta["opinions"])
    interventions = list(meta["interventions"])
    T = int(meta["T"])
    if T < 1 or not platforms or not opinions:
        raise DataError("meta.json must declare T >= 1 and non-empty label lists")

    p_index = {name: i for i, name in enumerate(platforms)}
    m_index = {name: i for i, name in enumerate(opinions)}
    n = np.full((len(platforms), len(opinions), T), -1, dtype=np.int64)
    for row in _read_rows(directory / "counts.csv", ["time", "platform", "opinion", "count"]):
        if len(row) != 4:
            raise DataError(f"counts.csv: malformed row {row!r}")
        t = _parse_time(row[0], T, "counts.csv")
        if row[1] not in p_index:
            raise DataError(f"counts.csv: unknown platform {row[1]!r}")
        if row[2] not in m_index:
            raise DataError(f"counts.csv: unknown opinion {row[2]!r}")
        try:
            count = int(row[3])
        except ValueError:
            raise DataError(f"counts.csv: count {row[3]!r} is not an integer") from None
        if count < 0:
            raise DataError(f"counts.csv: negative count at time {t}")
        p, m = p_index[row[1]], m_index[row[2]]
        if n[p, m, t - 1] != -1:
            raise DataError(
                f"counts.csv: duplicate entry for time {t}, {row[1]}, {row[2]}"
            )
        n[p, m, t - 1] = count
    missing = np.argwhere(n < 0)
    if missing.size:
        p, m, t = missing[0]
        raise DataError(
            f"counts.csv: no entry for time {t + 1}, {platforms[p]}, {opinions[m]}"
        )

    shared_S = np.full(T, np.nan)
    split_S = np.full((len(opinions), T), np.nan)
    X = np.full((len(interventions), T), np.nan)
    k_index = {name: k for k, name in enumerate(interventions)}
    saw_shared = saw_split = False
    for row in _read_rows(directory / "signals.csv", ["time", "series", "value"]):
        if len(row) != 3:
            raise DataError(f"signals.csv: malformed row {row!r}")
        t = _parse_time(row[0], T, "signals.csv")
        series = row[1]
        try:
            value = float(row[2])
        except ValueError:
            raise DataError(f"signals.csv: value {row[2]!r} is not a number") from None
        if series == "S":
            saw_shared = True
            target, idx = shared_S, (t - 1,)
        elif series.startswith("S:"):
            saw_split = True
            label = series[2:]
            if label not in m_index:
                raise DataError(f"signals.csv: unknown opinion in series {series!r}")
            target, idx = split_S, (m_index[label], t - 1)
        elif series.startswith("X:"):
            label = series[2:]
            if label not in k_index:
                raise DataError(f"signals.csv: unknown intervention in series {series!r}")
            target, idx = X, (k_index[label], t - 1)
        else:
            raise DataError(f"signals.csv: unknown series {series!r}")
        if not np.isnan(target[idx]):
            raise DataError(f"signals.csv: duplicate entry for {series} at time {t}")
        target[idx] = value
    if saw_shared and saw_split:
        raise DataError("signals.csv mixes shared S and per-opinion S: series")
    if not saw_shared and not saw_split:
        raise DataError("signals.csv has no S series")
    S = split_S if saw_split else shared_S
    if np.any(np.isnan(S)):
        raise DataError("signals.csv: S series has missing bins")
    if np.any(np.isnan(X)):
        raise DataError("signals.csv: intervention series have missing bins")
    try:
        signals = SignalSet(S=S, X=X, names=tuple(interventions))
        counts = CountPanel(n=n)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    return DatasetBundle(
        counts=counts,
        signals=signals,
        platforms=tuple(platforms),
        opinions=tuple(opinions),
    )


def standardize_intervention(news, S) -> np.ndarray:
    """Remove the search-interest component from raw news volume.

    Each series is shifted by S scaled so the peaks align:
    out_k(t) = news_k(t) - (max_t news_k / max_t S) * S(t).  The result is
    centered against platform-wide attention and can go negative.
    """
    news = np.atleast_2d(np.asarray(news, dtype=float))
    S = np.asarray(S, dtype=float)
    if S.ndim != 1 or news.shape[1] != S.shape[0]:
        raise DataError(
            f"news (K, T) and S (T,) disagree: {news.shape} vs {S.shape}"
        )
    s_max = S.max()
    if s_max <= 0:
        raise DataError("S must have a positive maximum to standardize against")
    ratio = news.max(axis=1) / s_max
    return news - ratio[:, None] * S[None, :]


@dataclass(frozen=True)
class SyntheticConfig:
    """Generator settings; defaults reproduce the reference experiment setup.

    Baselines and theta are fixed; alpha, gamma, beta are drawn uniformly
    from the given ranges once per generated world.
    """

    mu_split: tuple = ((15.0, 5.0), (5.0, 20.0))
    theta: float = 0.5
    alpha_range: tuple[float, float] = (0.0, 0.5)
    gamma_range: tuple[float, float] = (0.0, 0.1)
    beta_range: tuple[float, float] = (0.0, 0.1)
    T: int = 300
    n_groups: int = 20
    samples_per_group: int = 20
    seed: int = 0

    def __post_init__(self) -> None:
        ms = np.asarray(self.mu_split, dtype=float)
        if ms.ndim != 2:
            raise ValueError("mu_split must be a (P, M) table")
        for name in ("alpha_range", "gamma_range", "beta_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} must satisfy low <= high, got {(lo, hi)}")
        if self.T < 1 or self.n_groups < 1 or self.samples_per_group < 1:
            raise ValueError("T, n_groups, samples_per_group must be >= 1")

    @property
    def P(self) -> int:
        return len(self.mu_split)

    @property
    def M(self) -> int:
        return len(self.mu_split[0])


def default_signals(T: int) -> SignalSet:
    """Reference exogenous series: flat search interest, two shifted sines."""
    t = np.arange(1, T + 1, dtype=float)
    X = np.vstack(
        [5.0 * np.sin(0.1 * t) + 5.0, 10.0 * np.sin(0.05 * t + 1.25) + 10.0]
    )
    return SignalSet(S=np.ones(T), X=X, names=("drift", "pulse"))


@dataclass
class SyntheticDataset:
    """A generated world: true parameters, signals, and grouped samples."""

    config: SyntheticConfig
    params1: Tier1Params
    params2: Tier2Params
    signals: SignalSet
    groups: list  # n_groups lists of samples_per_group CountPanels

    def truncated(self, T: int) -> "SyntheticDataset":
        """Same draws observed for fewer bins."""
        return SyntheticDataset(
            config=self.config,
            params1=self.params1,
            params2=self.params2,
            signals=self.signals.truncated(T),
            groups=[[panel.truncated(T) for panel in g] for g in self.groups],
        )

    def bundle(self, group: int = 0, sample: int = 0) -> DatasetBundle:
        """One sample wrapped with generic labels."""
        panel = self.groups[group][sample]
        return DatasetBundle(
            counts=panel,
            signals=self.signals,
            platforms=tuple(f"platform{p}" for p in range(panel.P)),
            opinions=tuple(f"opinion{m}" for m in range(panel.M)),
        )


def generate_synthetic(config: SyntheticConfig | None = None) -> SyntheticDataset:
    """Draw one world and simulate all its grouped samples.

    Generation runs the raw feature pipeline: tendencies consume conditional
    intensities and smoothed interventions directly, so the drawn gamma and
    beta live on the same scale the estimator recovers.
    """
    config = config or SyntheticConfig()
    rng = np.random.default_rng(config.seed)
    P, M = config.P, config.M
    ms = np.asarray(config.mu_split, dtype=float)
    split = Tier1ParamsSplit(mu_split=ms)
    alpha = rng.uniform(*config.alpha_range, size=(P, P))
    params1 = Tier1Params(mu=split.mu, alpha=alpha, theta=config.theta)
    gamma = rng.uniform(*config.gamma_range, size=(P, M, 2))
    beta = rng.uniform(*config.beta_range, size=(P, P, M, M))
    params2 = Tier2Params(gamma=gamma, beta=beta, split=split)
    signals = default_signals(config.T)
    sim_seed = int(rng.integers(2**63))
    spec = SimulationSpec(
        params1=params1,
        params2=params2,
        signals=signals,
        horizon=(1, config.T),
        n_replicates=config.n_groups * config.samples_per_group,
        seed=sim_seed,
    )
    panels = simulate(spec).to_panels()
    groups = [
        panels[g * config.samples_per_group : (g + 1) * config.samples_per_group]
        for g in range(config.n_groups)
    ]
    return SyntheticDataset(
        config=config, params1=params1, params2=params2, signals=signals, groups=groups
    )


@dataclass
class ModelArtifact:
    """Everything a consumer needs to predict: both tiers, frozen stats, labels."""

    params1: Tier1Params
    params2: Tier2Params
    feature_transform: str
    stats: FeatureStats | None = None
    platforms: tuple[str, ...] = ()
    opinions: tuple[str, ...] = ()
    interventions: tuple[str, ...] = ()


def _payload_from_artifact(model: ModelArtifact) -> dict:
    stats = None
    if model.stats is not None and model.stats.transform == "standardized":
        stats = {
            "lam_mean": model.stats.lam_mean.tolist(),
            "lam_scale": model.stats.lam_scale.tolist(),
            "xbar_mean": model.stats.xbar_mean.tolist(),
            "xbar_scale": model.stats.xbar_scale.tolist(),
        }
    return {
        "tier1": {
            "mu": model.params1.mu.tolist(),
            "alpha": model.params1.alpha.tolist(),
            "theta": model.params1.theta,
        },
        "tier2": {
            "gamma": model.params2.gamma.tolist(),
            "beta": model.params2.beta.tolist(),
            "mu_split": model.params2.split.mu_split.tolist(),
        },
        "feature_transform": model.feature_transform,
        "stats": stats,
        "labels": {
            "platforms": list(model.platforms),
            "opinions": list(model.opinions),
            "interventions": list(model.interventions),
        },
    }


def _canonical(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def save_model(model: ModelArtifact, path) -> None:
    """Write a schema-tagged, checksummed model file."""
    payload = _payload_from_artifact(model)
    checksum = hashlib.sha256(_canonical(payload).encode()).hexdigest()
    doc = {"schema": MODEL_SCHEMA, "checksum": checksum, "payload": payload}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> ModelArtifact:
    """Read a model file, verifying schema version and checksum."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing file: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"model file is not valid JSON: {exc}") from None
    schema = doc.get("schema")
    if not isinstance(schema, str) or "/" not in schema:
        raise ModelFormatError(f"model file has no usable schema tag: {schema!r}")
    family, _, version = schema.rpartition("/")
    expected_family, _, expected_version = MODEL_SCHEMA.rpartition("/")
    if family != expected_family or version.split(".")[0] != expected_version:
        raise ModelFormatError(
            f"unsupported model schema {schema!r}; this build reads {MODEL_SCHEMA!r}"
        )
    payload = doc.get("payload")
    if payload is None:
        raise ModelFormatError("model file has no payload")
    checksum = hashlib.sha256(_canonical(payload).encode()).hexdigest()
    if checksum != doc.get("checksum"):
        raise ChecksumError(
            "model payload does not match its checksum; file is corrupt or edited"
        )
    try:
        t1 = payload["tier1"]
        t2 = payload["tier2"]
        split = Tier1ParamsSplit(mu_split=np.asarray(t2["mu_split"], dtype=float))
        params1 = Tier1Params(
            mu=np.asarray(t1["mu"], dtype=float),
            alpha=np.asarray(t1["alpha"], dtype=float),
            theta=float(t1["theta"]),
        )
        params2 = Tier2Params(
            gamma=np.asarray(t2["gamma"], dtype=float),
            beta=np.asarray(t2["beta"], dtype=float),
            split=split,
        )
        stats = None
        if payload.get("stats") is not None:
            s = payload["stats"]
            stats = FeatureStats(
                transform="standardized",
                lam_mean=np.asarray(s["lam_mean"], dtype=float),
                lam_scale=np.asarray(s["lam_scale"], dtype=float),
                xbar_mean=np.asarray(s["xbar_mean"], dtype=float),
                xbar_scale=np.asarray(s["xbar_scale"], dtype=float),
            )
        labels = payload.get("labels", {})
        return ModelArtifact(
            params1=params1,
            params2=params2,
            feature_transform=str(payload["feature_transform"]),
            stats=stats,
            platforms=tuple(labels.get("platforms", ())),
            opinions=tuple(labels.get("opinions", ())),
            interventions=tuple(labels.get("interventions", ())),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"model payload is malformed: {exc}") from None
