"""Experiment configuration: a single INI-style file of key-value sections.

Every knob has a documented default; `write_example` emits a config.example
listing all of them. Values echo back into the run manifest so a run is fully
reproducible from its output directory.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .events import RetraceParams, ZigZagParams
from .indicators import IndicatorParams
from .market_data import RegimeParams, parse_timestamp
from .nn.models import KINDS, TrainHyper


@dataclass
class DataConfig:
    source: str = "synthetic"  # "synthetic" | "csv"
    csv_path: str = ""
    symbol: str = "SYN"
    pip_size: float = 1e-4
    synth_seed: int = 7
    synth_n: int = 5000


@dataclass
class SplitConfig:
    # Exactly one of the two: an absolute cutoff, or a fraction of the series span.
    cutoff: int | None = None
    cutoff_fraction: float | None = 0.8


@dataclass
class EventConfig:
    cross_fast: int = 5
    cross_slow: int = 20
    causal_filter: bool = False


@dataclass
class GridConfig:
    kinds: tuple[str, ...] = ("rnn", "lstm", "bilstm", "gru")
    timesteps: tuple[int, ...] = (30, 60)


@dataclass
class ModelArch:
    layers: int = 2
    hidden: int = 64
    val_fraction: float = 0.1


@dataclass
class ExperimentConfig:
    data: DataConfig = field(default_factory=DataConfig)
    regime: RegimeParams = field(default_factory=RegimeParams)
    split: SplitConfig = field(default_factory=SplitConfig)
    indicators: IndicatorParams = field(default_factory=IndicatorParams)
    zigzag: ZigZagParams = field(default_factory=ZigZagParams)
    events: EventConfig = field(default_factory=EventConfig)
    retrace: RetraceParams = field(default_factory=RetraceParams)
    grid: GridConfig = field(default_factory=GridConfig)
    arch: ModelArch = field(default_factory=ModelArch)
    training: TrainHyper = field(default_factory=TrainHyper)
    out_dir: str = "out"
    seed: int = 42
    save_models: bool = False

    def validate(self):
        if self.data.source not in ("synthetic", "csv"):
            raise ConfigError(f"data.source must be synthetic or csv, got {self.data.source!r}")
        if self.data.source == "csv" and not self.data.csv_path:
            raise ConfigError("data.source=csv requires data.csv")
        if not self.grid.kinds:
            raise ConfigError("grid.kinds must name at least one model")
        for k in self.grid.kinds:
            if k not in KINDS:
                raise ConfigError(f"unknown grid kind {k!r}, expected subset of {KINDS}")
        if not self.grid.timesteps:
            raise ConfigError("grid.timesteps must name at least one window length")
        if (self.split.cutoff is None) == (self.split.cutoff_fraction is None):
            raise ConfigError("set exactly one of split.cutoff / split.cutoff_fraction")
        if self.events.cross_fast >= self.events.cross_slow:
            raise ConfigError("crossover.fast must be < crossover.slow")
        return self


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v.strip()) for v in text.split(",") if v.strip())


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v.strip()) for v in text.split(",") if v.strip())


def _pair(vals, what):
    if len(vals) != 2:
        raise ConfigError(f"{what} expects two comma-separated values, got {vals}")
    return vals[0], vals[1]


def load_config(path) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    cfg = ExperimentConfig()

    if parser.has_section("data"):
        s = parser["data"]
        cfg.data = DataConfig(
            source=s.get("source", cfg.data.source),
            csv_path=s.get("csv", cfg.data.csv_path),
            symbol=s.get("symbol", cfg.data.symbol),
            pip_size=s.getfloat("pip_size", cfg.data.pip_size),
            synth_seed=s.getint("seed", cfg.data.synth_seed),
            synth_n=s.getint("n", cfg.data.synth_n),
        )
    if parser.has_section("regime"):
        s = parser["regime"]
        d = cfg.regime
        cfg.regime = RegimeParams(
            start_price=s.getfloat("start_price", d.start_price),
            pip=s.getfloat("pip", d.pip),
            leg_len=_pair(_ints(s.get("leg_len", "%d,%d" % d.leg_len)), "regime.leg_len"),
            slope_pips=_pair(_floats(s.get("slope_pips", "%g,%g" % d.slope_pips)), "regime.slope_pips"),
            notch_frac=_pair(_floats(s.get("notch_frac", "%g,%g" % d.notch_frac)), "regime.notch_frac"),
            notch_retrace=_pair(
                _floats(s.get("notch_retrace", "%g,%g" % d.notch_retrace)), "regime.notch_retrace"
            ),
            notch_down_bars=s.getint("notch_down_bars", d.notch_down_bars),
            notch_recover_bars=s.getint("notch_recover_bars", d.notch_recover_bars),
            noise_pips=s.getfloat("noise_pips", d.noise_pips),
            wick_pips=s.getfloat("wick_pips", d.wick_pips),
            trend=s.get("trend", d.trend),
            reversion_pips=s.getfloat("reversion_pips", d.reversion_pips),
        )
    if parser.has_section("split"):
        s = parser["split"]
        cutoff = s.get("cutoff", "").strip()
        fraction = s.get("cutoff_fraction", "").strip()
        cfg.split = SplitConfig(
            cutoff=parse_timestamp(cutoff) if cutoff else None,
            cutoff_fraction=float(fraction) if fraction else (None if cutoff else 0.8),
        )
    if parser.has_section("indicators"):
        s = parser["indicators"]
        d = cfg.indicators
        cfg.indicators = IndicatorParams(
            macd_fast=s.getint("macd_fast", d.macd_fast),
            macd_slow=s.getint("macd_slow", d.macd_slow),
            macd_signal=s.getint("macd_signal", d.macd_signal),
            boll_window=s.getint("boll_window", d.boll_window),
            boll_k=s.getfloat("boll_k", d.boll_k),
            sma_periods=_ints(s.get("sma_periods", ",".join(map(str, d.sma_periods)))),
            rsi_periods=_ints(s.get("rsi_periods", ",".join(map(str, d.rsi_periods)))),
            adx_periods=_ints(s.get("adx_periods", ",".join(map(str, d.adx_periods)))),
            wr_periods=_ints(s.get("wr_periods", ",".join(map(str, d.wr_periods)))),
        )
    if parser.has_section("zigzag"):
        s = parser["zigzag"]
        d = cfg.zigzag
        cfg.zigzag = ZigZagParams(
            depth=s.getint("depth", d.depth),
            deviation_pips=s.getfloat("deviation_pips", d.deviation_pips),
            backstep=s.getint("backstep", d.backstep),
        )
    if parser.has_section("crossover"):
        s = parser["crossover"]
        cfg.events.cross_fast = s.getint("fast", cfg.events.cross_fast)
        cfg.events.cross_slow = s.getint("slow", cfg.events.cross_slow)
    if parser.has_section("events"):
        cfg.events.causal_filter = parser["events"].getboolean(
            "causal_filter", cfg.events.causal_filter
        )
    if parser.has_section("retracement"):
        s = parser["retracement"]
        cfg.retrace = RetraceParams(
            local_radius=s.getint("local_radius", cfg.retrace.local_radius),
            lookahead=s.getint("lookahead", cfg.retrace.lookahead),
        )
    if parser.has_section("grid"):
        s = parser["grid"]
        cfg.grid = GridConfig(
            kinds=tuple(v.strip() for v in s.get("kinds", ",".join(cfg.grid.kinds)).split(",") if v.strip()),
            timesteps=_ints(s.get("timesteps", ",".join(map(str, cfg.grid.timesteps)))),
        )
    if parser.has_section("model"):
        s = parser["model"]
        cfg.arch = ModelArch(
            layers=s.getint("layers", cfg.arch.layers),
            hidden=s.getint("hidden", cfg.arch.hidden),
            val_fraction=s.getfloat("val_fraction", cfg.arch.val_fraction),
        )
    if parser.has_section("training"):
        s = parser["training"]
        d = cfg.training
        cfg.training = TrainHyper(
            lr=s.getfloat("lr", d.lr),
            batch_size=s.getint("batch_size", d.batch_size),
            max_epochs=s.getint("max_epochs", d.max_epochs),
            patience=s.getint("patience", d.patience),
            clip_norm=s.getfloat("clip_norm", d.clip_norm),
        )
    if parser.has_section("output"):
        s = parser["output"]
        cfg.out_dir = s.get("dir", cfg.out_dir)
        cfg.save_models = s.getboolean("save_models", cfg.save_models)
    if parser.has_section("run"):
        cfg.seed = parser["run"].getint("seed", cfg.seed)
    return cfg.validate()


EXAMPLE = """\
# fxevent experiment configuration (all values shown are the defaults)

[data]
source = synthetic        ; synthetic | csv
# csv = path/to/series.csv
symbol = SYN
pip_size = 1e-4
seed = 7                  ; synthetic generator seed
n = 5000                  ; synthetic bar count

[regime]
start_price = 1.10
pip = 1e-4
leg_len = 36,62           ; bars per trend leg (inclusive range)
slope_pips = 1.2,2.5      ; per-bar drift magnitude
notch_frac = 0.38,0.52    ; where in the leg the retracement dip starts
notch_retrace = 0.84,0.92 ; fraction of the leg's gain given back
notch_down_bars = 3       ; 0 disables the dip
notch_recover_bars = 3
noise_pips = 0.25
wick_pips = 0.6
trend = alternate         ; alternate | up | down
reversion_pips = 250      ; price-level pull toward start_price; 0 disables

[split]
cutoff_fraction = 0.8     ; or: cutoff = 2019-01-01T00:00:00Z (epoch seconds also accepted)

[indicators]
macd_fast = 12
macd_slow = 26
macd_signal = 9
boll_window = 20
boll_k = 2.0
sma_periods = 5,10,15,20,25,30,36
rsi_periods = 5,14,20,25
adx_periods = 5,10,15,20,25,30,35
wr_periods = 5,14,20,25

[zigzag]
depth = 12
deviation_pips = 5
backstep = 3

[crossover]
fast = 5                  ; EMA periods forming the confirmation crossover
slow = 20

[events]
causal_filter = false     ; drop sequences whose crossover precedes pivot confirmation

[retracement]
local_radius = 3
lookahead = 60

[grid]
kinds = rnn,lstm,bilstm,gru
timesteps = 30,60

[model]
layers = 2
hidden = 64
val_fraction = 0.1

[training]
lr = 1e-3
batch_size = 32
max_epochs = 100
patience = 10
clip_norm = 5.0

[output]
dir = out
save_models = false

[run]
seed = 42
"""


def write_example(path) -> None:
    Path(path).write_text(EXAMPLE)
