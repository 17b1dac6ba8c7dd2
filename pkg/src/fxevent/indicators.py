"""Technical indicator kernels and the 28-column feature matrix.

All kernels return float64 arrays aligned to the input series, with NaN marking
the undefined warm-up prefix. NaN is the only undefined marker; warm-up cells are
never silently zero-filled.

Conventions pinned here so independent re-computations agree:
  * EMA is seeded with the first price (ema[0] = close[0]) and k = 2/(n+1).
  * RSI and ADX use Wilder smoothing: avg = (prev*(n-1) + current) / n, seeded by
    a plain mean over the first n terms.
  * Bollinger uses the population (ddof=0) standard deviation.
  * Degenerate inputs map to bounded neutral values: RSI 50 on zero movement,
    Williams %R -50 on a flat window, DX 0 when both DIs vanish.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigError
from .market_data import CandleSeries


@dataclass(frozen=True)
class IndicatorParams:
    macd_fast: int = 12
    macd_slow: int = 26
    macd_signal: int = 9
    boll_window: int = 20
    boll_k: float = 2.0
    sma_periods: tuple[int, ...] = (5, 10, 15, 20, 25, 30, 36)
    rsi_periods: tuple[int, ...] = (5, 14, 20, 25)
    adx_periods: tuple[int, ...] = (5, 10, 15, 20, 25, 30, 35)
    wr_periods: tuple[int, ...] = (5, 14, 20, 25)

    def __post_init__(self):
        periods = (
            (self.macd_fast, self.macd_slow, self.macd_signal, self.boll_window)
            + self.sma_periods
            + self.rsi_periods
            + self.adx_periods
            + self.wr_periods
        )
        if any(p < 1 for p in periods):
            raise ConfigError("all indicator periods must be >= 1")
        if self.macd_fast >= self.macd_slow:
            raise ConfigError(f"macd_fast must be < macd_slow, got {self.macd_fast}/{self.macd_slow}")
        if self.boll_window < 2:
            raise ConfigError("boll_window must be >= 2")

    def column_names(self) -> list[str]:
        """Canonical column order: MACD triple, SMA, RSI, ADX, Bollinger triple, WR."""
        names = ["macd", "macd_signal", "macd_hist"]
        names += [f"sma{p}" for p in self.sma_periods]
        names += [f"rsi{p}" for p in self.rsi_periods]
        names += [f"adx{p}" for p in self.adx_periods]
        names += ["boll_lower", "boll_middle", "boll_upper"]
        names += [f"wr{p}" for p in self.wr_periods]
        return names


@dataclass(frozen=True)
class FeatureMatrix:
    """Per-bar indicator values; rows before `warmup_len` contain NaN and are unusable."""

    columns: tuple[str, ...]
    values: np.ndarray  # (n_bars, n_columns) float64, NaN in the warm-up region
    warmup_len: int

    def __post_init__(self):
        self.values.setflags(write=False)

    def __len__(self) -> int:
        return self.values.shape[0]


def _nan_prefix(n: int) -> np.ndarray:
    return np.full(n, np.nan)


def sma(close: np.ndarray, n: int) -> np.ndarray:
    """Simple moving average; defined from index n-1."""
    if n < 1:
        raise ConfigError(f"sma period must be >= 1, got {n}")
    close = np.asarray(close, dtype=np.float64)
    out = _nan_prefix(len(close))
    if n <= len(close):
        out[n - 1 :] = sliding_window_view(close, n).mean(axis=1)
    return out


def ema(close: np.ndarray, n: int) -> np.ndarray:
    """Exponential moving average: out[t] = k*close[t] + (1-k)*out[t-1], k = 2/(n+1).

    Seeded with the first finite value, so a clean series is defined from index 0.
    """
    if n < 1:
        raise ConfigError(f"ema period must be >= 1, got {n}")
    close = np.asarray(close, dtype=np.float64)
    out = _nan_prefix(len(close))
    if len(close) == 0:
        return out
    finite = np.nonzero(np.isfinite(close))[0]
    if finite.size == 0:
        return out
    start = int(finite[0])
    k = 2.0 / (n + 1.0)
    acc = close[start]
    out[start] = acc
    for t in range(start + 1, len(close)):
        acc = close[t] * k + acc * (1.0 - k)
        out[t] = acc
    return out


def macd(close: np.ndarray, params: IndicatorParams = IndicatorParams()) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(macd, signal, histogram): fast EMA minus slow EMA, its EMA, and their difference."""
    line = ema(close, params.macd_fast) - ema(close, params.macd_slow)
    signal = ema(line, params.macd_signal)
    return line, signal, line - signal


def rsi(close: np.ndarray, n: int) -> np.ndarray:
    """Wilder's relative strength index in [0, 100]; defined from index n.

    Zero average movement in both directions yields the neutral 50.
    """
    if n < 1:
        raise ConfigError(f"rsi period must be >= 1, got {n}")
    close = np.asarray(close, dtype=np.float64)
    out = _nan_prefix(len(close))
    if len(close) <= n:
        return out
    delta = np.diff(close)
    gains = np.maximum(delta, 0.0)
    losses = np.maximum(-delta, 0.0)
    avg_gain = gains[:n].mean()
    avg_loss = losses[:n].mean()
    for t in range(n, len(close)):
        if t > n:
            avg_gain = (avg_gain * (n - 1) + gains[t - 1]) / n
            avg_loss = (avg_loss * (n - 1) + losses[t - 1]) / n
        if avg_loss == 0.0 and avg_gain == 0.0:
            out[t] = 50.0
        elif avg_loss == 0.0:
            out[t] = 100.0
        else:
            out[t] = 100.0 - 100.0 / (1.0 + avg_gain / avg_loss)
    return out


def adx(high: np.ndarray, low: np.ndarray, close: np.ndarray, n: int) -> np.ndarray:
    """Wilder's average directional index in [0, 100]; defined from index 2n-1.

    DX is defined as 0 whenever +DI + -DI vanishes (no directional movement).
    """
    if n < 1:
        raise ConfigError(f"adx period must be >= 1, got {n}")
    high = np.asarray(high, dtype=np.float64)
    low = np.asarray(low, dtype=np.float64)
    close = np.asarray(close, dtype=np.float64)
    m = len(close)
    out = _nan_prefix(m)
    if m < 2 * n:
        return out

    up = high[1:] - high[:-1]
    down = low[:-1] - low[1:]
    plus_dm = np.where((up > down) & (up > 0.0), up, 0.0)
    minus_dm = np.where((down > up) & (down > 0.0), down, 0.0)
    tr = np.maximum.reduce(
        [high[1:] - low[1:], np.abs(high[1:] - close[:-1]), np.abs(low[1:] - close[:-1])]
    )

    # Wilder-smooth +DM, -DM and TR (arrays indexed by bar t >= 1), then DX from t = n.
    sm_plus, sm_minus, sm_tr = plus_dm[:n].mean(), minus_dm[:n].mean(), tr[:n].mean()
    dx = _nan_prefix(m)
    for t in range(n, m):
        if t > n:
            sm_plus = (sm_plus * (n - 1) + plus_dm[t - 1]) / n
            sm_minus = (sm_minus * (n - 1) + minus_dm[t - 1]) / n
            sm_tr = (sm_tr * (n - 1) + tr[t - 1]) / n
        plus_di = 100.0 * sm_plus / sm_tr if sm_tr > 0.0 else 0.0
        minus_di = 100.0 * sm_minus / sm_tr if sm_tr > 0.0 else 0.0
        di_sum = plus_di + minus_di
        dx[t] = 100.0 * abs(plus_di - minus_di) / di_sum if di_sum > 0.0 else 0.0

    acc = dx[n : 2 * n].mean()
    out[2 * n - 1] = acc
    for t in range(2 * n, m):
        acc = (acc * (n - 1) + dx[t]) / n
        out[t] = acc
    return out


def directional_indicators(high, low, close, n: int) -> tuple[np.ndarray, np.ndarray]:
    """(+DI, -DI) on the same smoothing as `adx`; defined from index n. Diagnostic helper."""
    high = np.asarray(high, dtype=np.float64)
    low = np.asarray(low, dtype=np.float64)
    close = np.asarray(close, dtype=np.float64)
    m = len(close)
    plus_out, minus_out = _nan_prefix(m), _nan_prefix(m)
    if m <= n:
        return plus_out, minus_out
    up = high[1:] - high[:-1]
    down = low[:-1] - low[1:]
    plus_dm = np.where((up > down) & (up > 0.0), up, 0.0)
    minus_dm = np.where((down > up) & (down > 0.0), down, 0.0)
    tr = np.maximum.reduce(
        [high[1:] - low[1:], np.abs(high[1:] - close[:-1]), np.abs(low[1:] - close[:-1])]
    )
    sm_plus, sm_minus, sm_tr = plus_dm[:n].mean(), minus_dm[:n].mean(), tr[:n].mean()
    for t in range(n, m):
        if t > n:
            sm_plus = (sm_plus * (n - 1) + plus_dm[t - 1]) / n
            sm_minus = (sm_minus * (n - 1) + minus_dm[t - 1]) / n
            sm_tr = (sm_tr * (n - 1) + tr[t - 1]) / n
        plus_out[t] = 100.0 * sm_plus / sm_tr if sm_tr > 0.0 else 0.0
        minus_out[t] = 100.0 * sm_minus / sm_tr if sm_tr > 0.0 else 0.0
    return plus_out, minus_out


def bollinger(close: np.ndarray, params: IndicatorParams = IndicatorParams()) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(lower, middle, upper) bands: SMA +- k * population stddev over the window."""
    close = np.asarray(close, dtype=np.float64)
    w, k = params.boll_window, params.boll_k
    middle = sma(close, w)
    dev = _nan_prefix(len(close))
    if w <= len(close):
        dev[w - 1 :] = sliding_window_view(close, w).std(axis=1)
    return middle - k * dev, middle, middle + k * dev


def williams_r(high: np.ndarray, low: np.ndarray, close: np.ndarray, n: int) -> np.ndarray:
    """Williams %R in [-100, 0]; defined from index n-1. Flat windows map to -50."""
    if n < 1:
        raise ConfigError(f"williams_r period must be >= 1, got {n}")
    high = np.asarray(high, dtype=np.float64)
    low = np.asarray(low, dtype=np.float64)
    close = np.asarray(close, dtype=np.float64)
    out = _nan_prefix(len(close))
    if n > len(close):
        return out
    hh = sliding_window_view(high, n).max(axis=1)
    ll = sliding_window_view(low, n).min(axis=1)
    span = hh - ll
    with np.errstate(invalid="ignore", divide="ignore"):
        wr = (hh - close[n - 1 :]) / span * -100.0
    wr[span == 0.0] = -50.0
    out[n - 1 :] = wr
    return out


def feature_matrix(series: CandleSeries, params: IndicatorParams = IndicatorParams()) -> FeatureMatrix:
    """Assemble all indicator columns (28 with default params) in canonical order.

    warmup_len is the first row at which every column is defined; with default
    params that is 2*35 - 1 = 69 (the slowest ADX).
    """
    closes, highs, lows = series.closes, series.highs, series.lows
    cols: list[np.ndarray] = []
    line, signal, hist = macd(closes, params)
    cols += [line, signal, hist]
    cols += [sma(closes, p) for p in params.sma_periods]
    cols += [rsi(closes, p) for p in params.rsi_periods]
    cols += [adx(highs, lows, closes, p) for p in params.adx_periods]
    lower, middle, upper = bollinger(closes, params)
    cols += [lower, middle, upper]
    cols += [williams_r(highs, lows, closes, p) for p in params.wr_periods]

    values = np.column_stack(cols)
    warmup = 0
    for j in range(values.shape[1]):
        finite = np.nonzero(np.isfinite(values[:, j]))[0]
        first = int(finite[0]) if finite.size else len(series)
        warmup = max(warmup, first)
    if warmup >= len(series):
        warnings.warn(
            f"series of {len(series)} bars is shorter than the indicator warm-up; "
            "feature matrix has no usable rows",
            UserWarning,
            stacklevel=2,
        )
        warmup = len(series)
    else:
        assert np.all(np.isfinite(values[warmup:])), "indicator produced NaN past its warm-up"
    return FeatureMatrix(tuple(params.column_names()), values, warmup)


def save_features_csv(series: CandleSeries, features: FeatureMatrix, path) -> None:
    """Export `timestamp` plus named indicator columns; undefined cells are empty."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", *features.columns])
        for i in range(len(features)):
            row = [int(series.timestamps[i])]
            row += ["" if not np.isfinite(v) else repr(float(v)) for v in features.values[i]]
            writer.writerow(row)
