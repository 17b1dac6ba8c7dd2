"""Entry-event detection: pivot, moving-average crossover, and retracement.

A tradeable setup is the ordered triple

    pivot (trend turn)  ->  crossover (trend confirmation)  ->  retracement (entry target)

The ZigZag pivot semantics are pinned exactly so an independent brute-force
re-derivation matches index for index:

  (a) candidacy: bar i is a trough candidate iff low[i] is <= every low in the
      clamped window [i-depth, i+depth] and strictly below every *earlier* low in
      that window (ties resolve to the earliest bar); peaks mirror on highs.
  (b) deviation: an opposite-kind pivot is emitted only if its price differs from
      the previous pivot's price by at least deviation_pips * pip_size.
  (c) backstep: adjacent emitted pivots are at least `backstep` bars apart.

  Candidates are processed in index order, troughs before peaks at an equal
  index. A same-kind candidate replaces the current provisional pivot only when
  it is strictly more extreme and keeps >= backstep bars to the pivot before it.
  A candidate that fails (b) or (c) is discarded, not remembered. Fewer than two
  surviving pivots means the deviation rule never confirmed any movement, and
  the result is empty.

  confirm_index = min(index + depth, n - 1): the first bar at which the
  candidacy window is complete, i.e. when rules (a)-(c) become decidable. Note
  pivots still repaint beyond that bar (a later, more extreme same-kind
  candidate can replace a provisional pivot), which is the known look-ahead
  caveat of this detector; `causal_filter` in the experiment config drops
  sequences whose crossover precedes the pivot's confirm_index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigError
from .market_data import CandleSeries

TROUGH = "trough"
PEAK = "peak"
BULLISH = "bullish"
BEARISH = "bearish"
UP = "up"
DOWN = "down"


@dataclass(frozen=True)
class Pivot:
    index: int
    kind: str  # TROUGH | PEAK
    price: float  # low at a trough, high at a peak
    confirm_index: int


@dataclass(frozen=True)
class ZigZagParams:
    depth: int = 12
    deviation_pips: float = 5.0
    backstep: int = 3

    def __post_init__(self):
        if self.depth < 1:
            raise ConfigError(f"depth must be >= 1, got {self.depth}")
        if self.deviation_pips <= 0:
            raise ConfigError(f"deviation_pips must be > 0, got {self.deviation_pips}")
        if self.backstep < 0:
            raise ConfigError(f"backstep must be >= 0, got {self.backstep}")


@dataclass(frozen=True)
class CrossEvent:
    index: int
    direction: str  # BULLISH | BEARISH


@dataclass(frozen=True)
class RetraceParams:
    local_radius: int = 3  # half-width of the strict local-extremum test
    lookahead: int = 60  # bars after the crossover in which the entry must appear

    def __post_init__(self):
        if self.local_radius < 1:
            raise ConfigError(f"local_radius must be >= 1, got {self.local_radius}")
        if self.lookahead <= self.local_radius:
            raise ConfigError("lookahead must exceed local_radius")


@dataclass(frozen=True)
class EventSequence:
    pivot: Pivot
    cross: CrossEvent
    retrace_index: int
    retrace_price: float  # close at retrace_index, the prediction target
    trend: str  # UP | DOWN

    def __post_init__(self):
        if not (self.pivot.index < self.cross.index < self.retrace_index):
            raise ConfigError(
                f"event ordering violated: {self.pivot.index} < {self.cross.index} "
                f"< {self.retrace_index} required"
            )
        ok_up = self.trend == UP and self.pivot.kind == TROUGH and self.cross.direction == BULLISH
        ok_down = self.trend == DOWN and self.pivot.kind == PEAK and self.cross.direction == BEARISH
        if not (ok_up or ok_down):
            raise ConfigError(f"trend {self.trend} inconsistent with pivot/cross kinds")


@dataclass
class SequenceDiagnostics:
    """Tally of how pivot/cross chains resolved; emitted + no_retracement = eligible_crossovers."""

    pivots: int = 0
    pivots_unmatched: int = 0
    eligible_crossovers: int = 0
    no_retracement: int = 0
    emitted: int = 0
    dropped_noncausal: int = 0


def _window_candidates(values: np.ndarray, depth: int, is_trough: bool) -> np.ndarray:
    """Boolean candidacy mask per rule (a). -inf padding emulates the clamped window."""
    v = -values if is_trough else values  # reduce both kinds to "window maximum"
    padded = np.concatenate([np.full(depth, -np.inf), v, np.full(depth, -np.inf)])
    window_max = sliding_window_view(padded, 2 * depth + 1).max(axis=1)
    earlier_max = sliding_window_view(padded[: len(v) + depth - 1], depth).max(axis=1)
    return (v >= window_max) & (v > earlier_max)


def zigzag(series: CandleSeries, params: ZigZagParams = ZigZagParams()) -> list[Pivot]:
    """Alternating peak/trough pivots under the depth/deviation/backstep rules above."""
    n = len(series)
    if n < 2 * params.depth + 1:
        return []
    lows, highs = series.lows, series.highs
    trough_ok = _window_candidates(lows, params.depth, is_trough=True)
    peak_ok = _window_candidates(highs, params.depth, is_trough=False)

    candidates: list[tuple[int, str, float]] = []
    for i in range(n):
        if trough_ok[i]:
            candidates.append((i, TROUGH, float(lows[i])))
        if peak_ok[i]:
            candidates.append((i, PEAK, float(highs[i])))

    deviation = params.deviation_pips * series.pip_size
    pivots: list[tuple[int, str, float]] = []
    for i, kind, price in candidates:
        if not pivots:
            pivots.append((i, kind, price))
            continue
        last_i, last_kind, last_price = pivots[-1]
        if kind == last_kind:
            more_extreme = price < last_price if kind == TROUGH else price > last_price
            prev_ok = len(pivots) < 2 or i - pivots[-2][0] >= params.backstep
            if more_extreme and prev_ok:
                pivots[-1] = (i, kind, price)
        else:
            if abs(price - last_price) >= deviation and i - last_i >= params.backstep:
                pivots.append((i, kind, price))

    if len(pivots) < 2:
        # a lone provisional pivot never met the deviation rule; no zigzag movement
        return []
    return [
        Pivot(i, kind, price, min(i + params.depth, n - 1)) for i, kind, price in pivots
    ]


def crossovers(fast: np.ndarray, slow: np.ndarray) -> list[CrossEvent]:
    """Sign changes of fast - slow. NaN warm-up prefixes are skipped; a run of exact
    zeros carries the preceding sign, so a touch-and-bounce does not fire."""
    fast = np.asarray(fast, dtype=np.float64)
    slow = np.asarray(slow, dtype=np.float64)
    if fast.shape != slow.shape:
        raise ConfigError(f"length mismatch: fast {fast.shape} vs slow {slow.shape}")
    d = fast - slow
    events: list[CrossEvent] = []
    prev_sign = 0
    for t in range(len(d)):
        if not np.isfinite(d[t]):
            continue
        sign = 0 if d[t] == 0.0 else (1 if d[t] > 0.0 else -1)
        if sign == 0:
            continue
        if prev_sign != 0 and sign != prev_sign:
            events.append(CrossEvent(t, BULLISH if sign > 0 else BEARISH))
        prev_sign = sign
    return events


def find_retracement(
    series: CandleSeries,
    cross: CrossEvent,
    trend: str,
    params: RetraceParams = RetraceParams(),
    barrier: int | None = None,
) -> tuple[int, float] | None:
    """First counter-trend close after the crossover, or None.

    For an up trend: the first t in the open interval
    (cross.index, min(cross.index + lookahead, barrier)) where close[t] is a
    strict local minimum over [t - m, t + m] and close[t] < close[cross.index].
    Down trends mirror with a local maximum above the crossover close. The
    extremum window must lie fully inside the series.
    """
    closes = series.closes
    n = len(closes)
    if barrier is None:
        barrier = n
    m = params.local_radius
    ref = closes[cross.index]
    end = min(cross.index + params.lookahead, barrier)
    for t in range(cross.index + 1, end):
        if t - m < 0 or t + m >= n:
            continue
        window = closes[t - m : t + m + 1]
        c = closes[t]
        if trend == UP:
            if c < ref and c < np.delete(window, m).min():
                return t, float(c)
        else:
            if c > ref and c > np.delete(window, m).max():
                return t, float(c)
    return None


def assemble_sequences(
    pivots: list[Pivot],
    crosses: list[CrossEvent],
    series: CandleSeries,
    params: RetraceParams = RetraceParams(),
) -> tuple[list[EventSequence], SequenceDiagnostics]:
    """Chain pivot -> first direction-matched crossover -> retracement into sequences.

    Each pivot claims the first unused, direction-consistent crossover strictly
    between itself and the next pivot; a crossover consumed by a pivot is spent
    even when no retracement follows. Incomplete chains are dropped and tallied.
    """
    diags = SequenceDiagnostics(pivots=len(pivots))
    sequences: list[EventSequence] = []
    used = [False] * len(crosses)
    for p_idx, pivot in enumerate(pivots):
        next_pivot_index = pivots[p_idx + 1].index if p_idx + 1 < len(pivots) else len(series)
        want = BULLISH if pivot.kind == TROUGH else BEARISH
        trend = UP if pivot.kind == TROUGH else DOWN
        chosen = None
        for c_idx, cross in enumerate(crosses):
            if used[c_idx] or cross.direction != want:
                continue
            if pivot.index < cross.index < next_pivot_index:
                chosen = c_idx
                break
            if cross.index >= next_pivot_index:
                break
        if chosen is None:
            diags.pivots_unmatched += 1
            continue
        used[chosen] = True
        diags.eligible_crossovers += 1
        cross = crosses[chosen]
        hit = find_retracement(series, cross, trend, params, barrier=next_pivot_index)
        if hit is None:
            diags.no_retracement += 1
            continue
        sequences.append(EventSequence(pivot, cross, hit[0], hit[1], trend))
        diags.emitted += 1
    sequences.sort(key=lambda s: s.cross.index)
    return sequences, diags


def filter_causal(
    sequences: list[EventSequence], diags: SequenceDiagnostics | None = None
) -> list[EventSequence]:
    """Drop sequences whose crossover fires before the pivot was confirmable."""
    kept = [s for s in sequences if s.cross.index >= s.pivot.confirm_index]
    if diags is not None:
        diags.dropped_noncausal += len(sequences) - len(kept)
    return kept
