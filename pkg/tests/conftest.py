import numpy as np
import pytest

from fxevent.market_data import CandleSeries, synthetic_series


def random_walk_series(rng, n, start=1.10, vol_pips=8.0, pip=1e-4, symbol="RND"):
    """Random-walk OHLC bars with valid invariants; noisier than the leg generator."""
    closes = start + np.cumsum(rng.normal(0.0, vol_pips * pip, size=n))
    closes = np.maximum(closes, 0.01)
    opens = np.empty(n)
    opens[0] = start
    opens[1:] = closes[:-1]
    highs = np.maximum(opens, closes) + np.abs(rng.normal(0.0, 2 * pip, size=n))
    lows = np.minimum(opens, closes) - np.abs(rng.normal(0.0, 2 * pip, size=n))
    ts = 1_600_000_000 + 900 * np.arange(n, dtype=np.int64)
    return CandleSeries(symbol, pip, ts, opens, highs, lows, closes)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture(scope="session")
def synth():
    return synthetic_series(7, 5000)


@pytest.fixture(scope="session")
def small_synth():
    return synthetic_series(3, 1200)


@pytest.fixture
def walk(rng):
    return random_walk_series(rng, 600)
