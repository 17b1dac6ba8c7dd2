"""Full pipeline orchestration: data -> features -> events -> datasets -> grid -> reports.

Sequences are detected once on the full series; each one is assigned to the
train or test split by the timestamp of its crossover bar. Metrics are computed
on raw prices after inverting the target normalization. All emitted files are
deterministic for a fixed config (wall-clock timings never reach disk), so two
identical runs produce byte-identical output trees.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import dataset as ds_mod
from . import events as ev_mod
from .config import ExperimentConfig
from .errors import ConfigError
from .indicators import ema, feature_matrix
from .market_data import CandleSeries, load_csv, synthetic_series
from .metrics import MetricsReport
from .nn.models import ModelConfig, predict, save_model, train

_KIND_CODES = {"rnn": 1, "lstm": 2, "bilstm": 3, "gru": 4}


def cell_seed(global_seed: int, kind: str, n_timesteps: int) -> int:
    """Per-cell seed independent of grid composition: SeedSequence((seed, kind, n))."""
    ss = np.random.SeedSequence((global_seed, _KIND_CODES[kind], n_timesteps))
    return int(ss.generate_state(1)[0])


def resolve_cutoff(series: CandleSeries, cfg: ExperimentConfig) -> int:
    if cfg.split.cutoff is not None:
        return int(cfg.split.cutoff)
    frac = cfg.split.cutoff_fraction
    idx = min(len(series) - 1, max(0, int(len(series) * frac)))
    return int(series.timestamps[idx])


def baseline_persistence(ds: ds_mod.Dataset, series: CandleSeries) -> np.ndarray:
    """No-change forecast: the close at the crossover bar, per sample."""
    for s in ds.samples:
        if s.e2_index < 0:
            raise ConfigError("persistence baseline needs samples with source-series indices")
    return np.array([float(series.closes[s.e2_index]) for s in ds.samples])


def emit_predictions(samples, true, pred, path) -> None:
    """Per-sample prediction CSV ordered by crossover time; enough to re-plot
    predicted-vs-real curves with any tool."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["e2_timestamp", "e3_timestamp", "true_price", "predicted_price", "abs_error", "pct_error"]
        )
        for s, t, p in zip(samples, true, pred):
            writer.writerow(
                [
                    s.e2_ts,
                    s.e3_ts,
                    repr(float(t)),
                    repr(float(p)),
                    repr(abs(float(t) - float(p))),
                    repr(abs(float(t) - float(p)) / float(t) * 100.0),
                ]
            )


@dataclass
class CellResult:
    kind: str
    n_timesteps: int
    seed: int
    metrics: MetricsReport | None = None
    error: str | None = None
    train_samples: int = 0
    test_samples: int = 0
    best_epoch: int = 0
    epochs_run: int = 0


@dataclass
class ExperimentResult:
    out_dir: Path
    cells: list[CellResult] = field(default_factory=list)
    persistence: dict[int, MetricsReport] = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def failed(self) -> list[CellResult]:
        return [c for c in self.cells if c.error is not None]


def _load_series(cfg: ExperimentConfig) -> CandleSeries:
    if cfg.data.source == "csv":
        return load_csv(cfg.data.csv_path, cfg.data.symbol, cfg.data.pip_size)
    return synthetic_series(cfg.data.synth_seed, cfg.data.synth_n, cfg.regime, cfg.data.symbol)


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    cfg.validate()
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = ExperimentResult(out_dir=out_dir)

    series = _load_series(cfg)
    cutoff = resolve_cutoff(series, cfg)
    features = feature_matrix(series, cfg.indicators)

    fast = ema(series.closes, cfg.events.cross_fast)
    slow = ema(series.closes, cfg.events.cross_slow)
    pivots = ev_mod.zigzag(series, cfg.zigzag)
    crosses = ev_mod.crossovers(fast, slow)
    sequences, diags = ev_mod.assemble_sequences(pivots, crosses, series, cfg.retrace)
    if cfg.events.causal_filter:
        sequences = ev_mod.filter_causal(sequences, diags)

    result.diagnostics = {
        "bars": len(series),
        "cutoff": cutoff,
        "pivots": diags.pivots,
        "pivots_unmatched": diags.pivots_unmatched,
        "eligible_crossovers": diags.eligible_crossovers,
        "no_retracement": diags.no_retracement,
        "sequences": len(sequences),
        "dropped_noncausal": diags.dropped_noncausal,
    }

    per_n: dict[int, dict] = {}
    for n in sorted(set(cfg.grid.timesteps)):
        samples, skipped = ds_mod.build_samples(features, sequences, n, series)
        train_samples = tuple(s for s in samples if s.e2_ts < cutoff)
        test_samples = tuple(s for s in samples if s.e2_ts >= cutoff)
        entry = {"skipped": skipped, "train": len(train_samples), "test": len(test_samples)}
        if not train_samples or not test_samples:
            entry["error"] = (
                f"n={n}: degenerate split (train={len(train_samples)}, test={len(test_samples)})"
            )
            per_n[n] = entry
            continue
        train_ds = ds_mod.Dataset(train_samples, n, "train", feature_names=features.columns)
        test_ds = ds_mod.Dataset(test_samples, n, "test", feature_names=features.columns)
        stats = ds_mod.fit_normalizer(train_ds)
        entry.update(
            train_ds=ds_mod.apply_norm(train_ds, stats),
            test_ds=ds_mod.apply_norm(test_ds, stats),
            stats=stats,
            true=test_ds.targets(),
            test_raw=test_ds,
        )
        persist = baseline_persistence(test_ds, series)
        result.persistence[n] = MetricsReport.compute("persistence", n, entry["true"], persist)
        per_n[n] = entry

    for kind in cfg.grid.kinds:
        for n in cfg.grid.timesteps:
            seed = cell_seed(cfg.seed, kind, n)
            cell = CellResult(kind=kind, n_timesteps=n, seed=seed)
            result.cells.append(cell)
            entry = per_n[n]
            cell.train_samples = entry["train"]
            cell.test_samples = entry["test"]
            if "error" in entry:
                cell.error = entry["error"]
                continue
            try:
                mc = ModelConfig(
                    kind=kind,
                    n_timesteps=n,
                    input_dim=len(features.columns),
                    layers=cfg.arch.layers,
                    hidden=cfg.arch.hidden,
                    seed=seed,
                )
                model, report = train(entry["train_ds"], cfg.arch.val_fraction, mc, cfg.training)
                pred = predict(model, entry["test_ds"], entry["stats"])
                cell.metrics = MetricsReport.compute(kind, n, entry["true"], pred)
                cell.best_epoch = report.best_epoch
                cell.epochs_run = report.epochs_run
                emit_predictions(
                    entry["test_raw"].samples,
                    entry["true"],
                    pred,
                    out_dir / f"predictions_{kind}_{n}.csv",
                )
                _write_train_report(report, out_dir / f"train_report_{kind}_{n}.json")
                if cfg.save_models:
                    models_dir = out_dir / "models"
                    models_dir.mkdir(exist_ok=True)
                    save_model(model, models_dir / f"{kind}_{n}.model.txt")
            except Exception as exc:  # isolate the failing grid cell
                cell.error = f"{type(exc).__name__}: {exc}"

    _write_reports(cfg, result, per_n)
    return result


def _write_train_report(report, path) -> None:
    # wall time deliberately excluded: emitted files must be replay-identical
    payload = {
        "train_losses": report.train_losses,
        "val_losses": report.val_losses,
        "best_epoch": report.best_epoch,
        "epochs_run": report.epochs_run,
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def _write_reports(cfg: ExperimentConfig, result: ExperimentResult, per_n: dict) -> None:
    out_dir = result.out_dir

    manifest = {
        "config": {
            "data": asdict(cfg.data),
            "regime": asdict(cfg.regime),
            "split": asdict(cfg.split),
            "indicators": asdict(cfg.indicators),
            "zigzag": asdict(cfg.zigzag),
            "events": asdict(cfg.events),
            "retracement": asdict(cfg.retrace),
            "grid": asdict(cfg.grid),
            "model": asdict(cfg.arch),
            "training": asdict(cfg.training),
            "seed": cfg.seed,
        },
        "diagnostics": result.diagnostics,
        "datasets": {
            str(n): {k: v for k, v in entry.items() if k in ("skipped", "train", "test", "error")}
            for n, entry in per_n.items()
        },
        "cells": [
            {
                "kind": c.kind,
                "n_timesteps": c.n_timesteps,
                "seed": c.seed,
                "error": c.error,
                "best_epoch": c.best_epoch,
                "epochs_run": c.epochs_run,
            }
            for c in result.cells
        ],
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    rows = []
    for c in result.cells:
        if c.metrics is None:
            continue
        m = c.metrics
        rows.append(
            {
                "model": c.kind,
                "timesteps": c.n_timesteps,
                "mse": m.mse,
                "rmse": m.rmse,
                "mae": m.mae,
                "mape_pct": m.mape,
                "n": m.n,
            }
        )
    persistence_rows = [
        {
            "timesteps": n,
            "mse": m.mse,
            "rmse": m.rmse,
            "mae": m.mae,
            "mape_pct": m.mape,
            "n": m.n,
        }
        for n, m in sorted(result.persistence.items())
    ]
    report = {
        "symbol": cfg.data.symbol,
        "cells": rows,
        "persistence": persistence_rows,
        "failed": [
            {"model": c.kind, "timesteps": c.n_timesteps, "error": c.error} for c in result.failed
        ],
    }
    (out_dir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")

    lines = [
        f"experiment results for {cfg.data.symbol}",
        "",
        f"{'model':<12} {'n':>4} {'MSE(1e-3)':>12} {'RMSE(1e-3)':>12} {'MAE(1e-3)':>12} "
        f"{'MAPE(%)':>10} {'count':>6}",
    ]
    for c in result.cells:
        if c.metrics is not None:
            lines.append(c.metrics.scaled_row())
        else:
            lines.append(f"{c.kind:<12} {c.n_timesteps:>4} FAILED: {c.error}")
    lines.append("")
    for n, m in sorted(result.persistence.items()):
        lines.append(m.scaled_row())
    (out_dir / "report.txt").write_text("\n".join(lines) + "\n")
