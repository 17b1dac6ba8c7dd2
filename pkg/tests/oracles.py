"""Naive definitional re-implementations used as test oracles.

Everything here is written for transparency, not speed: per-index window scans
and step-by-step recurrences, independent of the library's vectorized kernels.
"""

import numpy as np


def naive_sma(x, n):
    out = np.full(len(x), np.nan)
    for t in range(n - 1, len(x)):
        total = 0.0
        for v in x[t - n + 1 : t + 1]:
            total += v
        out[t] = total / n
    return out


def naive_ema(x, n):
    out = np.full(len(x), np.nan)
    if len(x) == 0:
        return out
    k = 2.0 / (n + 1.0)
    out[0] = x[0]
    for t in range(1, len(x)):
        out[t] = x[t] * k + out[t - 1] * (1.0 - k)
    return out


def naive_macd(x, fast, slow, signal_n):
    line = naive_ema(x, fast) - naive_ema(x, slow)
    signal = naive_ema(line, signal_n)
    return line, signal, line - signal


def naive_rsi(x, n):
    out = np.full(len(x), np.nan)
    if len(x) <= n:
        return out
    gains, losses = [], []
    for t in range(1, len(x)):
        d = x[t] - x[t - 1]
        gains.append(max(d, 0.0))
        losses.append(max(-d, 0.0))
    avg_gain = sum(gains[:n]) / n
    avg_loss = sum(losses[:n]) / n
    for t in range(n, len(x)):
        if t > n:
            avg_gain = (avg_gain * (n - 1) + gains[t - 1]) / n
            avg_loss = (avg_loss * (n - 1) + losses[t - 1]) / n
        if avg_gain == 0.0 and avg_loss == 0.0:
            out[t] = 50.0
        elif avg_loss == 0.0:
            out[t] = 100.0
        else:
            out[t] = 100.0 - 100.0 / (1.0 + avg_gain / avg_loss)
    return out


def naive_adx(high, low, close, n):
    m = len(close)
    out = np.full(m, np.nan)
    if m < 2 * n:
        return out
    plus_dm, minus_dm, tr = [], [], []
    for t in range(1, m):
        up = high[t] - high[t - 1]
        dn = low[t - 1] - low[t]
        plus_dm.append(up if (up > dn and up > 0) else 0.0)
        minus_dm.append(dn if (dn > up and dn > 0) else 0.0)
        tr.append(max(high[t] - low[t], abs(high[t] - close[t - 1]), abs(low[t] - close[t - 1])))
    sp = sum(plus_dm[:n]) / n
    sm = sum(minus_dm[:n]) / n
    st = sum(tr[:n]) / n
    dx = {}
    for t in range(n, m):
        if t > n:
            sp = (sp * (n - 1) + plus_dm[t - 1]) / n
            sm = (sm * (n - 1) + minus_dm[t - 1]) / n
            st = (st * (n - 1) + tr[t - 1]) / n
        pdi = 100.0 * sp / st if st > 0 else 0.0
        mdi = 100.0 * sm / st if st > 0 else 0.0
        dx[t] = 100.0 * abs(pdi - mdi) / (pdi + mdi) if pdi + mdi > 0 else 0.0
    acc = sum(dx[t] for t in range(n, 2 * n)) / n
    out[2 * n - 1] = acc
    for t in range(2 * n, m):
        acc = (acc * (n - 1) + dx[t]) / n
        out[t] = acc
    return out


def naive_bollinger(x, window, k):
    n = len(x)
    lower = np.full(n, np.nan)
    middle = np.full(n, np.nan)
    upper = np.full(n, np.nan)
    for t in range(window - 1, n):
        w = x[t - window + 1 : t + 1]
        mu = sum(w) / window
        var = sum((v - mu) ** 2 for v in w) / window
        sd = var**0.5
        middle[t] = mu
        lower[t] = mu - k * sd
        upper[t] = mu + k * sd
    return lower, middle, upper


def naive_williams_r(high, low, close, n):
    out = np.full(len(close), np.nan)
    for t in range(n - 1, len(close)):
        hh = max(high[t - n + 1 : t + 1])
        ll = min(low[t - n + 1 : t + 1])
        if hh == ll:
            out[t] = -50.0
        else:
            out[t] = (hh - close[t]) / (hh - ll) * -100.0
    return out


def zigzag_bruteforce(series, depth, deviation_pips, backstep):
    """Literal application of the pivot rules.

    (a) a trough candidate's low is <= every low in the clamped +-depth window and
        strictly below every earlier low in it (peaks mirror on highs);
    (b) an opposite-kind pivot needs a >= deviation move from the previous pivot;
    (c) adjacent pivots sit >= backstep bars apart.
    Candidates scan in index order, trough before peak at equal index; a same-kind
    candidate replaces the provisional pivot only when strictly more extreme and
    still >= backstep bars from the pivot before it.

    Returns a list of (index, kind, price, confirm_index) tuples.
    """
    n = len(series)
    if n < 2 * depth + 1:
        return []
    lows, highs = series.lows, series.highs

    def is_candidate(i, values, want_min):
        lo = max(0, i - depth)
        hi = min(n - 1, i + depth)
        for j in range(lo, hi + 1):
            if j == i:
                continue
            a, b = values[i], values[j]
            if want_min:
                better = a < b
            else:
                better = a > b
            if j < i and not better:
                return False
            if j > i and not (better or a == b):
                return False
        return True

    candidates = []
    for i in range(n):
        if is_candidate(i, lows, want_min=True):
            candidates.append((i, "trough", float(lows[i])))
        if is_candidate(i, highs, want_min=False):
            candidates.append((i, "peak", float(highs[i])))

    deviation = deviation_pips * series.pip_size
    pivots = []
    for i, kind, price in candidates:
        if not pivots:
            pivots.append([i, kind, price])
            continue
        last = pivots[-1]
        if kind == last[1]:
            if kind == "trough":
                more_extreme = price < last[2]
            else:
                more_extreme = price > last[2]
            prev_ok = len(pivots) < 2 or i - pivots[-2][0] >= backstep
            if more_extreme and prev_ok:
                pivots[-1] = [i, kind, price]
        else:
            if abs(price - last[2]) >= deviation and i - last[0] >= backstep:
                pivots.append([i, kind, price])
    if len(pivots) < 2:
        return []
    return [(i, kind, price, min(i + depth, n - 1)) for i, kind, price in pivots]


def crossovers_reference(fast, slow):
    """Sign-tracking scan over fast - slow; zero runs inherit the prior sign."""
    events = []
    prev = 0
    for t in range(len(fast)):
        d = fast[t] - slow[t]
        if not np.isfinite(d) or d == 0:
            continue
        cur = 1 if d > 0 else -1
        if prev != 0 and cur != prev:
            events.append((t, "bullish" if cur > 0 else "bearish"))
        prev = cur
    return events


def retracement_scan(closes, e2_index, trend, m, lookahead, barrier):
    """Literal first-qualifying-bar scan of the retracement rule."""
    n = len(closes)
    ref = closes[e2_index]
    for t in range(e2_index + 1, min(e2_index + lookahead, barrier)):
        if t - m < 0 or t + m >= n:
            continue
        neighbors = [closes[j] for j in range(t - m, t + m + 1) if j != t]
        if trend == "up" and closes[t] < ref and all(closes[t] < v for v in neighbors):
            return t, closes[t]
        if trend == "down" and closes[t] > ref and all(closes[t] > v for v in neighbors):
            return t, closes[t]
    return None


def adam_reference(theta0, grads, lr=1e-3, b1=0.9, b2=0.999, eps=1e-8):
    """Hand-stepped scalar Adam trajectory for a fixed gradient sequence."""
    theta, m, v = theta0, 0.0, 0.0
    out = []
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        theta = theta - lr * m_hat / (v_hat**0.5 + eps)
        out.append(theta)
    return out
