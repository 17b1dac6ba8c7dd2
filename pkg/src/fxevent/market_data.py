"""OHLC candle series: CSV ingestion and validation, date splits, synthetic generation.

Timestamps are integer epoch seconds (UTC). Bar spacing is not enforced beyond
strictly increasing order, so session gaps (weekends) pass through untouched.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError

DEFAULT_PIP_SIZE = 1e-4


@dataclass(frozen=True)
class Candle:
    timestamp: int
    open: float
    high: float
    low: float
    close: float


@dataclass(frozen=True)
class CandleSeries:
    """Validated, immutable OHLC series backed by parallel numpy arrays."""

    symbol: str
    pip_size: float
    timestamps: np.ndarray  # int64, strictly increasing
    opens: np.ndarray
    highs: np.ndarray
    lows: np.ndarray
    closes: np.ndarray

    def __post_init__(self):
        if self.pip_size <= 0:
            raise ConfigError(f"pip_size must be > 0, got {self.pip_size}")
        for name in ("timestamps", "opens", "highs", "lows", "closes"):
            arr = getattr(self, name)
            if arr.ndim != 1 or len(arr) != len(self.timestamps):
                raise DataError(f"field {name} misaligned with timestamps")
            arr.setflags(write=False)

    def __len__(self) -> int:
        return len(self.timestamps)

    def __getitem__(self, i: int) -> Candle:
        return Candle(
            int(self.timestamps[i]),
            float(self.opens[i]),
            float(self.highs[i]),
            float(self.lows[i]),
            float(self.closes[i]),
        )

    @property
    def candles(self) -> list[Candle]:
        return [self[i] for i in range(len(self))]


@dataclass(frozen=True)
class SplitSpec:
    """Chronological cutoff: bars strictly before `cutoff_timestamp` form the training half."""

    cutoff_timestamp: int


def make_series(symbol, pip_size, timestamps, opens, highs, lows, closes, source="<memory>") -> CandleSeries:
    """Build a CandleSeries from arrays, sorting by timestamp and enforcing all invariants.

    Out-of-order rows are sorted (benign export artifact); duplicate timestamps are
    rejected (ambiguous). Every bar must satisfy high >= max(open, close),
    low <= min(open, close) and all prices > 0.
    """
    ts = np.asarray(timestamps, dtype=np.int64)
    o = np.asarray(opens, dtype=np.float64)
    h = np.asarray(highs, dtype=np.float64)
    l = np.asarray(lows, dtype=np.float64)
    c = np.asarray(closes, dtype=np.float64)
    if len(ts) == 0:
        raise DataError(f"{source}: no candles")

    order = np.argsort(ts, kind="stable")
    if not np.array_equal(order, np.arange(len(ts))):
        ts, o, h, l, c = ts[order], o[order], h[order], l[order], c[order]
    dup = np.nonzero(np.diff(ts) == 0)[0]
    if dup.size:
        raise DataError(f"{source}: duplicate timestamp {int(ts[dup[0]])}")

    bad = np.nonzero((h < np.maximum(o, c)) | (l > np.minimum(o, c)) | (l <= 0))[0]
    if bad.size:
        i = int(bad[0])
        raise DataError(
            f"{source}: OHLC invariant violated at ts={int(ts[i])} "
            f"(o={o[i]} h={h[i]} l={l[i]} c={c[i]})"
        )
    return CandleSeries(symbol, float(pip_size), ts, o, h, l, c)


def parse_timestamp(text: str) -> int:
    """Epoch seconds from an integer literal or an ISO-8601 UTC timestamp."""
    s = text.strip()
    try:
        return int(s)
    except ValueError:
        pass
    try:
        dt = datetime.fromisoformat(s.replace("Z", "+00:00"))
    except ValueError as exc:
        raise DataError(f"unparseable timestamp {text!r}") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def load_csv(path, symbol: str, pip_size: float = DEFAULT_PIP_SIZE) -> CandleSeries:
    """Load `timestamp,open,high,low,close` CSV (header required) into a validated series.

    Timestamps may be epoch seconds or ISO-8601 UTC. A volume column, if present,
    is ignored. Errors name the offending 1-based line number.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"candle CSV not found: {path}")
    required = ("timestamp", "open", "high", "low", "close")
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file")
        missing = [col for col in required if col not in reader.fieldnames]
        if missing:
            raise DataError(f"{path}: missing columns {missing}")
        for rec in reader:
            line = reader.line_num
            try:
                ts = parse_timestamp(rec["timestamp"])
                o, h, l, c = (float(rec[k]) for k in ("open", "high", "low", "close"))
            except (DataError, TypeError, ValueError) as exc:
                raise DataError(f"{path}: malformed row at line {line}: {exc}") from exc
            if h < max(o, c) or l > min(o, c) or l <= 0:
                raise DataError(
                    f"{path}: OHLC invariant violated at line {line} (o={o} h={h} l={l} c={c})"
                )
            rows.append((ts, o, h, l, c))
    if not rows:
        raise DataError(f"{path}: no data rows")
    ts, o, h, l, c = map(np.asarray, zip(*rows))
    return make_series(symbol, pip_size, ts, o, h, l, c, source=str(path))


def save_csv(series: CandleSeries, path) -> None:
    """Write a series back to the CSV input format (epoch-second timestamps)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "open", "high", "low", "close"])
        for i in range(len(series)):
            writer.writerow(
                [
                    int(series.timestamps[i]),
                    repr(float(series.opens[i])),
                    repr(float(series.highs[i])),
                    repr(float(series.lows[i])),
                    repr(float(series.closes[i])),
                ]
            )


def _subset(series: CandleSeries, mask: np.ndarray) -> CandleSeries:
    return CandleSeries(
        series.symbol,
        series.pip_size,
        series.timestamps[mask].copy(),
        series.opens[mask].copy(),
        series.highs[mask].copy(),
        series.lows[mask].copy(),
        series.closes[mask].copy(),
    )


def split_by_date(series: CandleSeries, spec: SplitSpec) -> tuple[CandleSeries, CandleSeries]:
    """Split into (train, test): train holds bars with timestamp < cutoff, test the rest.

    An empty half is legal (cutoff outside the series range) and only warns.
    """
    mask = series.timestamps < spec.cutoff_timestamp
    train, test = _subset(series, mask), _subset(series, ~mask)
    if len(train) == 0 or len(test) == 0:
        warnings.warn(
            f"degenerate split at cutoff={spec.cutoff_timestamp}: "
            f"train={len(train)} test={len(test)} bars",
            UserWarning,
            stacklevel=2,
        )
    return train, test


@dataclass(frozen=True)
class RegimeParams:
    """Synthetic generator knobs.

    The price path is a chain of trend legs. Each leg ramps at a per-bar slope and,
    partway through, gives back most of its gain in a brief counter-move (the
    retracement dip) before rejoining the trend line, so pivot / crossover /
    retracement events all occur at a predictable cadence. Gaussian noise and
    random wicks are added on top; both may be zeroed for degenerate regimes.
    """

    start_price: float = 1.10
    pip: float = 1e-4
    leg_len: tuple[int, int] = (36, 62)  # bars per trend leg, inclusive range
    slope_pips: tuple[float, float] = (1.2, 2.5)  # per-bar drift magnitude
    notch_frac: tuple[float, float] = (0.38, 0.52)  # leg fraction where the dip starts
    notch_retrace: tuple[float, float] = (0.84, 0.92)  # fraction of gain given back
    notch_down_bars: int = 3  # 0 disables the counter-move
    notch_recover_bars: int = 3
    noise_pips: float = 0.25
    wick_pips: float = 0.6
    trend: str = "alternate"  # "alternate" | "up" | "down"
    reversion_pips: float = 250.0  # price-level pull toward start_price; 0 disables
    start_timestamp: int = 1577836800  # 2020-01-01T00:00:00Z
    bar_seconds: int = 900

    def __post_init__(self):
        if self.start_price <= 0 or self.pip <= 0:
            raise ConfigError("start_price and pip must be > 0")
        if not (1 <= self.leg_len[0] <= self.leg_len[1]):
            raise ConfigError(f"leg_len range invalid: {self.leg_len}")
        if self.slope_pips[0] <= 0 or self.slope_pips[0] > self.slope_pips[1]:
            raise ConfigError(f"slope_pips range invalid: {self.slope_pips}")
        if self.noise_pips < 0 or self.wick_pips < 0 or self.reversion_pips < 0:
            raise ConfigError("noise_pips, wick_pips and reversion_pips must be >= 0")
        if self.notch_down_bars < 0 or self.notch_recover_bars < 0:
            raise ConfigError("notch bar counts must be >= 0")


def synthetic_series(seed: int, n: int, regime: RegimeParams = RegimeParams(), symbol: str = "SYN") -> CandleSeries:
    """Deterministic synthetic OHLC series; pure function of (seed, n, regime)."""
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    if regime.trend not in ("alternate", "up", "down"):
        raise ConfigError(f"unknown trend mode {regime.trend!r}")
    if regime.notch_down_bars > 0 and regime.notch_recover_bars < 1:
        raise ConfigError("notch_recover_bars must be >= 1 when the counter-move is enabled")

    rng = np.random.default_rng(seed)
    pip = regime.pip
    closes = np.empty(n)
    direction = -1.0 if regime.trend == "down" else 1.0

    t = 0
    leg_start_price = regime.start_price
    while t < n:
        leg_len = int(rng.integers(regime.leg_len[0], regime.leg_len[1] + 1))
        slope = rng.uniform(*regime.slope_pips) * pip * direction
        if regime.reversion_pips > 0:
            # shrink legs that run away from the anchor, stretch legs pulling back,
            # so the level stays range-bound and train/test windows overlap
            drift = (leg_start_price - regime.start_price) / (regime.reversion_pips * pip)
            slope *= float(np.clip(1.0 - np.sign(slope) * drift, 0.6, 1.6))
        path = leg_start_price + slope * np.arange(1, leg_len + 1)

        if regime.notch_down_bars > 0:
            down, rec = regime.notch_down_bars, regime.notch_recover_bars
            ns = int(round(leg_len * rng.uniform(*regime.notch_frac)))
            retrace = rng.uniform(*regime.notch_retrace)
            if 1 <= ns and ns + down + rec <= leg_len:
                gain = slope * ns  # signed move from leg start to the dip start
                bottom = path[ns - 1] - retrace * gain
                # V-shaped detour: down to `bottom`, then back onto the trend line
                path[ns : ns + down] = path[ns - 1] + (bottom - path[ns - 1]) * (
                    np.arange(1, down + 1) / down
                )
                rejoin = leg_start_price + slope * (ns + down + rec)
                path[ns + down : ns + down + rec] = bottom + (rejoin - bottom) * (
                    np.arange(1, rec + 1) / rec
                )

        take = min(leg_len, n - t)
        closes[t : t + take] = path[:take]
        leg_start_price = path[-1]
        t += take
        if regime.trend == "alternate":
            direction = -direction

    if regime.noise_pips > 0:
        closes = closes + rng.normal(0.0, regime.noise_pips * pip, size=n)

    opens = np.empty(n)
    opens[0] = regime.start_price
    opens[1:] = closes[:-1]
    wick_hi = rng.uniform(0.0, 1.0, size=n) * regime.wick_pips * pip
    wick_lo = rng.uniform(0.0, 1.0, size=n) * regime.wick_pips * pip
    highs = np.maximum(opens, closes) + wick_hi
    lows = np.minimum(opens, closes) - wick_lo
    if np.any(lows <= 0):
        raise ConfigError("regime drove prices non-positive; raise start_price or lower slope")

    timestamps = regime.start_timestamp + regime.bar_seconds * np.arange(n, dtype=np.int64)
    return CandleSeries(symbol, pip, timestamps, opens, highs, lows, closes)
