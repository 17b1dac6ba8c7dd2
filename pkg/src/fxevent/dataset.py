"""Training-window construction and normalization.

One sample per detected event sequence: the feature rows for the n bars ending at
the crossover (inclusive), with the close at the retracement point as the scalar
target. Samples whose window would touch the indicator warm-up region are skipped,
never imputed.
"""

from __future__ import annotations

import csv
import hashlib
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .events import EventSequence
from .indicators import FeatureMatrix
from .market_data import CandleSeries


@dataclass(frozen=True)
class Sample:
    window: np.ndarray  # (n_timesteps, n_features), oldest row first, last row = crossover bar
    target: float  # close at the retracement bar
    e2_index: int  # crossover bar index in the source series (-1 when unknown)
    e3_index: int  # retracement bar index (-1 when unknown)
    e2_ts: int
    e3_ts: int

    def __post_init__(self):
        self.window.setflags(write=False)


@dataclass(frozen=True)
class Dataset:
    samples: tuple[Sample, ...]
    n_timesteps: int
    role: str  # "train" | "test"
    norm_fingerprint: str | None = None  # set once apply_norm has transformed the samples
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        for s in self.samples:
            if s.window.shape[0] != self.n_timesteps:
                raise ConfigError(
                    f"sample window has {s.window.shape[0]} rows, dataset expects {self.n_timesteps}"
                )

    def __len__(self) -> int:
        return len(self.samples)

    def windows(self) -> np.ndarray:
        """(n_samples, n_timesteps, n_features) stack; empty datasets yield shape (0, n, 0)."""
        if not self.samples:
            return np.zeros((0, self.n_timesteps, 0))
        return np.stack([s.window for s in self.samples])

    def targets(self) -> np.ndarray:
        return np.array([s.target for s in self.samples])


def build_samples(
    features: FeatureMatrix,
    sequences: list[EventSequence],
    n: int,
    series: CandleSeries,
) -> tuple[list[Sample], int]:
    """One window per sequence covering feature rows [e2-n+1 .. e2]; returns (samples, skipped).

    Skips (and tallies) sequences whose window would start before the feature
    warm-up ends. Windows are verbatim slices of the feature matrix.
    """
    if n < 1:
        raise ConfigError(f"n_timesteps must be >= 1, got {n}")
    samples: list[Sample] = []
    skipped = 0
    for seq in sequences:
        e2 = seq.cross.index
        start = e2 - n + 1
        if start < features.warmup_len or start < 0:
            skipped += 1
            continue
        window = features.values[start : e2 + 1].copy()
        samples.append(
            Sample(
                window=window,
                target=float(series.closes[seq.retrace_index]),
                e2_index=e2,
                e3_index=seq.retrace_index,
                e2_ts=int(series.timestamps[e2]),
                e3_ts=int(series.timestamps[seq.retrace_index]),
            )
        )
    return samples, skipped


@dataclass(frozen=True)
class NormStats:
    """Z-score statistics fitted on training data only."""

    feature_mean: np.ndarray  # (n_features,)
    feature_std: np.ndarray  # (n_features,), floored to 1.0 where degenerate
    target_mean: float
    target_std: float

    def __post_init__(self):
        self.feature_mean.setflags(write=False)
        self.feature_std.setflags(write=False)

    @property
    def fingerprint(self) -> str:
        digest = hashlib.sha256()
        digest.update(self.feature_mean.tobytes())
        digest.update(self.feature_std.tobytes())
        digest.update(np.float64(self.target_mean).tobytes())
        digest.update(np.float64(self.target_std).tobytes())
        return digest.hexdigest()[:16]


def fit_normalizer(train: Dataset) -> NormStats:
    """Per-feature mean/std over all rows of all training windows, plus target mean/std.

    Standard deviations below 1e-12 are replaced by 1.0 (with a warning) so constant
    columns pass through centered instead of exploding.
    """
    if len(train) == 0:
        raise ConfigError("cannot fit normalizer on an empty dataset")
    rows = train.windows().reshape(-1, train.samples[0].window.shape[1])
    mean = rows.mean(axis=0)
    std = rows.std(axis=0)
    degenerate = std < 1e-12
    if degenerate.any():
        warnings.warn(
            f"{int(degenerate.sum())} constant feature column(s); std guarded to 1.0",
            UserWarning,
            stacklevel=2,
        )
        std = np.where(degenerate, 1.0, std)
    targets = train.targets()
    t_std = float(targets.std())
    if t_std < 1e-12:
        warnings.warn("constant targets; target std guarded to 1.0", UserWarning, stacklevel=2)
        t_std = 1.0
    return NormStats(mean, std, float(targets.mean()), t_std)


def apply_norm(ds: Dataset, stats: NormStats) -> Dataset:
    """Z-score features and targets; the result carries the stats fingerprint."""
    samples = tuple(
        replace(
            s,
            window=(s.window - stats.feature_mean) / stats.feature_std,
            target=(s.target - stats.target_mean) / stats.target_std,
        )
        for s in ds.samples
    )
    return Dataset(samples, ds.n_timesteps, ds.role, stats.fingerprint, ds.feature_names)


def apply_target(y: float, stats: NormStats) -> float:
    return (y - stats.target_mean) / stats.target_std


def invert_target(y_norm, stats: NormStats):
    """Undo the target z-score; accepts scalars or arrays."""
    return y_norm * stats.target_std + stats.target_mean


def save_dataset(ds: Dataset, prefix) -> None:
    """Write `<prefix>_windows.csv` and `<prefix>_targets.csv`.

    Windows are flattened row-major with header `sample_id,timestep,<feature names>`;
    targets carry `sample_id,e2_ts,e3_ts,target`. Values round-trip float64 exactly.
    """
    n_feat = ds.samples[0].window.shape[1] if ds.samples else 0
    names = list(ds.feature_names) if ds.feature_names else [f"f{j}" for j in range(n_feat)]
    with open(f"{prefix}_windows.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "timestep", *names])
        for sid, s in enumerate(ds.samples):
            for t in range(ds.n_timesteps):
                writer.writerow([sid, t, *[repr(float(v)) for v in s.window[t]]])
    with open(f"{prefix}_targets.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "e2_ts", "e3_ts", "target"])
        for sid, s in enumerate(ds.samples):
            writer.writerow([sid, s.e2_ts, s.e3_ts, repr(float(s.target))])


def load_dataset(prefix, role: str = "train") -> Dataset:
    """Read the CSV pair written by save_dataset.

    Source-series bar indices are not part of the wire format, so reloaded samples
    carry e2_index = e3_index = -1.
    """
    window_rows: dict[int, list[tuple[int, list[float]]]] = {}
    with open(f"{prefix}_windows.csv", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        feature_names = tuple(header[2:])
        for row in reader:
            sid, t = int(row[0]), int(row[1])
            window_rows.setdefault(sid, []).append((t, [float(v) for v in row[2:]]))
    meta = {}
    with open(f"{prefix}_targets.csv", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            meta[int(row[0])] = (int(row[1]), int(row[2]), float(row[3]))
    samples = []
    n_timesteps = 0
    for sid in sorted(window_rows):
        rows = sorted(window_rows[sid])
        window = np.array([vals for _, vals in rows])
        e2_ts, e3_ts, target = meta[sid]
        n_timesteps = window.shape[0]
        samples.append(Sample(window, target, -1, -1, e2_ts, e3_ts))
    if not samples:
        raise ConfigError(f"{prefix}_windows.csv holds no samples")
    return Dataset(tuple(samples), n_timesteps, role, feature_names=feature_names)
