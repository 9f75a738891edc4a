"""
CLI entry point for the STGCN forecaster. Wires the pipeline:
build-graph -> train -> eval / predict, plus gradcheck and synth for self-verification.

Every subcommand reads a single JSON run manifest (--manifest) with repeatable
--set key=value overrides. Exit codes: 0 success, 1 gradcheck failure,
2 input errors, 3 numeric errors.
"""

import argparse
import json
import logging
import os
import sys
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from errors import DivergenceError, InputError, NumericError
from graph import LaplacianBundle, WeightedGraph, normalized_laplacian, read_adjacency_csv, read_distance_csv
from graph.adjacency import render_adjacency_csv
from ingest.manifest import RunManifest, load_manifest
from ingest.speeds import read_speed_csv
from ingest.synthetic import SynthConfig, write_synthetic
from layers.gradcheck import run_layer_gradchecks
from layers.model import StgcnModel
from normalize.models import WindowedDataset, ZScoreStats
from normalize.util import align_stations
from normalize.windows import PreparedData, prepare_datasets
from report.renderer import render, render_csv, render_series_csv, render_text
from scoring.baseline import HistoricalAverage, historical_average
from scoring.metrics import horizon_reports
from storage.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from storage.history import write_history_csv
from training.rollout import direct_predict, rollout_many
from training.trainer import TrainResult, model_from_checkpoint, train

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(name)s - %(message)s"
EXIT_OK = 0
EXIT_GRADCHECK_FAILED = 1
EXIT_INPUT = 2
EXIT_NUMERIC = 3
REPORT_EXTENSIONS = {'md': 'md', 'markdown': 'md', 'html': 'html', 'json': 'json'}


def _write_text(path: str, content: str, what: str) -> None:
    try:
        with open(path, 'w', encoding='utf-8', newline='') as fh:
            fh.write(content)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from None
    print(f"Wrote {what} to {path}")


def _checkpoint_name(manifest: RunManifest, horizon: Optional[int] = None) -> str:
    if manifest.horizon_mode == 'direct' and horizon is not None:
        return f"checkpoint_h{horizon}.stgc"
    return 'checkpoint.stgc'


def _history_name(manifest: RunManifest, horizon: Optional[int] = None) -> str:
    if manifest.horizon_mode == 'direct' and horizon is not None:
        return f"history_h{horizon}.csv"
    return 'history.csv'


# ---- shared loading -------------------------------------------------------


def load_graph(manifest: RunManifest) -> WeightedGraph:
    """Graph from the manifest's distance file, or from a precomputed adjacency file."""
    if manifest.distance_csv:
        return read_distance_csv(manifest.require('distance_csv'), manifest.adjacency)
    if manifest.adjacency_csv:
        return read_adjacency_csv(manifest.require('adjacency_csv'))
    raise InputError("manifest sets neither 'distance_csv' nor 'adjacency_csv'")


def load_bundle(manifest: RunManifest) -> Tuple[WeightedGraph, LaplacianBundle]:
    graph = load_graph(manifest)
    if graph.edge_count == 0:
        logger.warning("Graph has no edges: every node is isolated")
    bundle = normalized_laplacian(graph)
    logger.info("Graph: n=%d edges=%d lambda_max=%.6f", graph.n, graph.edge_count, bundle.lambda_max)
    return graph, bundle


def load_data(manifest: RunManifest, graph: WeightedGraph) -> PreparedData:
    series = read_speed_csv(manifest.require('speed_csv'), manifest.interval_minutes)
    series = align_stations(series, graph.node_ids)
    return prepare_datasets(series, manifest.history, manifest.max_horizon, manifest.split, manifest.workdays_only)


def _read_checkpoint(manifest: RunManifest, path: Optional[str], horizon: Optional[int] = None) -> Checkpoint:
    path = path or manifest.output_path(_checkpoint_name(manifest, horizon))
    if not os.path.exists(path):
        raise InputError(f"checkpoint not found: {path} (run 'train' first)")
    return load_checkpoint(path)


def _checkpoint_stats(checkpoint: Checkpoint) -> ZScoreStats:
    stats = checkpoint.descriptor.get('stats') or {}
    try:
        return ZScoreStats(mean=float(stats['mean']), std=float(stats['std']))
    except (KeyError, TypeError, ValueError):
        raise InputError("checkpoint descriptor has no usable normalization statistics") from None


# ---- build-graph ----------------------------------------------------------


def cmd_build_graph(manifest: RunManifest) -> int:
    graph, bundle = load_bundle(manifest)
    manifest.ensure_output_dir()
    _write_text(manifest.output_path('adjacency.csv'), render_adjacency_csv(graph), 'adjacency')
    summary = {
        'n': graph.n,
        'edges': graph.edge_count,
        'lambda_max': bundle.lambda_max,
        'sigma_sq': manifest.adjacency.sigma_sq,
        'epsilon': manifest.adjacency.epsilon,
    }
    _write_text(manifest.output_path('graph_summary.json'), json.dumps(summary, indent=2, sort_keys=True) + "\n", 'graph summary')
    return EXIT_OK


# ---- train ----------------------------------------------------------------


def build_model(manifest: RunManifest, bundle: LaplacianBundle, node_ids: Sequence[str]) -> StgcnModel:
    cfg = manifest.train
    return StgcnModel(
        bundle,
        history=manifest.history,
        channels=cfg.channels,
        kt=cfg.kt,
        variant=manifest.variant,
        k=cfg.k,
        seed=manifest.seed,
        node_ids=list(node_ids),
    )


def print_parameters(model: StgcnModel) -> None:
    print(f"Model parameters: {model.parameter_count()}")
    for line in model.parameter_shapes():
        print(f"  {line}")


def _write_history(manifest: RunManifest, records, horizon: Optional[int]) -> None:
    path = manifest.output_path(_history_name(manifest, horizon))
    write_history_csv(records, path)
    print(f"Wrote training history to {path}")


def _train_one(manifest: RunManifest, bundle: LaplacianBundle, graph: WeightedGraph, data: PreparedData, horizon: Optional[int]) -> TrainResult:
    target_step = horizon - 1 if horizon is not None else 0
    checkpoint_path = manifest.output_path(_checkpoint_name(manifest, horizon))
    model = build_model(manifest, bundle, graph.node_ids)
    if horizon is None or horizon == manifest.horizons[0]:
        print_parameters(model)
    try:
        result = train(model, data.datasets['train'], data.datasets['val'], manifest.train, target_step)
    except DivergenceError as exc:
        if exc.checkpoint is not None:
            save_checkpoint(exc.checkpoint, checkpoint_path)
            print(f"Wrote last good checkpoint to {checkpoint_path}")
        _write_history(manifest, exc.history, horizon)
        raise
    save_checkpoint(result.checkpoint, checkpoint_path)
    print(f"Wrote checkpoint to {checkpoint_path}")
    _write_history(manifest, result.history, horizon)
    return result


def cmd_train(manifest: RunManifest) -> int:
    graph, bundle = load_bundle(manifest)
    data = load_data(manifest, graph)
    manifest.ensure_output_dir()
    horizons: List[Optional[int]] = list(manifest.horizons) if manifest.horizon_mode == 'direct' else [None]
    for horizon in horizons:
        if horizon is not None:
            logger.info("Direct mode: training the model for horizon %d", horizon)
        _train_one(manifest, bundle, graph, data, horizon)
    return EXIT_OK


# ---- eval / predict -------------------------------------------------------


def stgcn_forecast(manifest: RunManifest, bundle: LaplacianBundle, dataset: WindowedDataset, checkpoint_path: Optional[str], workers: int) -> np.ndarray:
    """
    (N, H_max, n) forecasts in original units for every window of ``dataset``.

    Rollout mode fills every step; direct mode fills only the configured horizons (NaN elsewhere).
    """
    if manifest.horizon_mode == 'rollout':
        checkpoint = _read_checkpoint(manifest, checkpoint_path)
        model = model_from_checkpoint(checkpoint, bundle)
        return rollout_many(model, dataset.history, manifest.max_horizon, _checkpoint_stats(checkpoint), workers=workers)
    out = np.full((len(dataset), manifest.max_horizon, dataset.n), np.nan)
    for h in manifest.horizons:
        checkpoint = _read_checkpoint(manifest, None, h)
        model = model_from_checkpoint(checkpoint, bundle)
        out[:, h - 1, :] = direct_predict(model, dataset.history, _checkpoint_stats(checkpoint), workers=workers)
    return out


def ha_forecast(manifest: RunManifest, data: PreparedData, dataset: WindowedDataset) -> np.ndarray:
    profile = HistoricalAverage.fit(data.series, data.rows['train'])
    return historical_average(profile, dataset, manifest.max_horizon)


def _test_split(data: PreparedData) -> WindowedDataset:
    dataset = data.datasets['test']
    if len(dataset) == 0:
        raise InputError("test split has no windows")
    return dataset


def _eval_summary(manifest: RunManifest, dataset: WindowedDataset) -> Dict[str, object]:
    return {
        'variant': manifest.variant,
        'horizon_mode': manifest.horizon_mode,
        'history': manifest.history,
        'horizons': list(manifest.horizons),
        'test_windows': len(dataset),
        'stations': dataset.n,
    }


def cmd_eval(manifest: RunManifest, checkpoint_path: Optional[str] = None, fmt: Optional[str] = None, workers: int = 1) -> int:
    graph, bundle = load_bundle(manifest)
    data = load_data(manifest, graph)
    dataset = _test_split(data)
    interval = manifest.interval_minutes
    reports = horizon_reports(stgcn_forecast(manifest, bundle, dataset, checkpoint_path, workers), dataset.targets, manifest.horizons, 'stgcn', interval)
    reports += horizon_reports(ha_forecast(manifest, data, dataset), dataset.targets, manifest.horizons, 'ha', interval)
    manifest.ensure_output_dir()
    print(render_text(reports))
    _write_text(manifest.output_path('metrics.csv'), render_csv(reports), 'metrics')
    if fmt:
        ext = REPORT_EXTENSIONS.get(fmt.lower())
        if ext is None:
            raise InputError(f"unknown report format '{fmt}' (choose from md, html, json)")
        rendered = render(reports, fmt, title='STGCN Forecast Metrics', summary=_eval_summary(manifest, dataset))
        _write_text(manifest.output_path(f"metrics.{ext}"), rendered + "\n", 'report')
    return EXIT_OK


def _stamp(value: pd.Timestamp) -> str:
    return value.strftime('%Y-%m-%dT%H:%M:%S')


def _target_stamps(dataset: WindowedDataset, interval: int, step: int) -> Optional[pd.DatetimeIndex]:
    if dataset.target_times is None:
        return None
    return dataset.target_times + pd.Timedelta(minutes=interval * step)


def forecast_rows(manifest: RunManifest, dataset: WindowedDataset, pred: np.ndarray, window: int, ids: Sequence[str]) -> List[list]:
    """timestamp,station,horizon_minutes,forecast rows for one window; timestamps are blank without a time index."""
    rows = []
    for h in manifest.horizons:
        stamps = _target_stamps(dataset, manifest.interval_minutes, h - 1)
        stamp = _stamp(stamps[window]) if stamps is not None else ''
        for j, station in enumerate(ids):
            rows.append([stamp, station, h * manifest.interval_minutes, repr(float(pred[window, h - 1, j]))])
    return rows


def series_rows(manifest: RunManifest, dataset: WindowedDataset, stgcn: np.ndarray, ha: np.ndarray, ids: Sequence[str]) -> List[list]:
    """Rows for every test window and configured horizon, ordered by horizon, window, station."""
    rows = []
    for h in manifest.horizons:
        stamps = _target_stamps(dataset, manifest.interval_minutes, h - 1)
        for i in range(len(dataset)):
            stamp = _stamp(stamps[i]) if stamps is not None else ''
            for j, station in enumerate(ids):
                s = h - 1
                rows.append([stamp, station, h * manifest.interval_minutes, repr(float(dataset.targets[i, s, j])), repr(float(stgcn[i, s, j])), repr(float(ha[i, s, j]))])
    return rows


def _select_window(dataset: WindowedDataset, window: Optional[int]) -> int:
    if window is None:
        return len(dataset) - 1
    if not -len(dataset) <= window < len(dataset):
        raise InputError(f"--window {window} outside the test split's {len(dataset)} window(s)")
    return window % len(dataset)


def cmd_predict(manifest: RunManifest, checkpoint_path: Optional[str] = None, window: Optional[int] = None, series: bool = False, workers: int = 1) -> int:
    graph, bundle = load_bundle(manifest)
    data = load_data(manifest, graph)
    dataset = _test_split(data)
    manifest.ensure_output_dir()
    stgcn = stgcn_forecast(manifest, bundle, dataset, checkpoint_path, workers)
    if series:
        rows = series_rows(manifest, dataset, stgcn, ha_forecast(manifest, data, dataset), graph.node_ids)
        _write_text(manifest.output_path('series.csv'), render_series_csv(rows), 'forecast series')
        return EXIT_OK
    index = _select_window(dataset, window)
    body = "timestamp,station,horizon_minutes,forecast\n" + "".join(",".join(str(v) for v in row) + "\n" for row in forecast_rows(manifest, dataset, stgcn, index, graph.node_ids))
    _write_text(manifest.output_path('forecast.csv'), body, f"forecast for test window {index}")
    return EXIT_OK


# ---- gradcheck / synth ----------------------------------------------------


def cmd_gradcheck(seed: int = 0, tolerance: float = 1e-4) -> int:
    results = run_layer_gradchecks(seed=seed, tolerance=tolerance)
    failed = 0
    for name, result in results:
        status = 'PASS' if result.passed else 'FAIL'
        failed += 0 if result.passed else 1
        print(f"{status} {name} (max relative error {result.max_relative_error:.3e})")
    print(f"{len(results) - failed}/{len(results)} layer gradient checks passed")
    return EXIT_OK if failed == 0 else EXIT_GRADCHECK_FAILED


def cmd_synth(out_dir: str, n: int, days: int, seed: int) -> int:
    try:
        cfg = SynthConfig(n=n, days=days, seed=seed)
        paths = write_synthetic(out_dir, cfg)
    except OSError as exc:
        raise InputError(f"cannot write synthetic data to {out_dir}: {exc}") from None
    for name, path in paths.items():
        print(f"Wrote {name} to {path}")
    return EXIT_OK


# ---- argument parsing -----------------------------------------------------


def _common_parent() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--manifest", type=str, default="", help="Path to the JSON run manifest")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE", help="Override a manifest value (dotted keys, JSON scalars); repeatable")
    common.add_argument("--log-level", type=str, default="INFO", help="Logging level (DEBUG, INFO, WARNING, ERROR)")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parent()
    parser = argparse.ArgumentParser(description="Spatio-temporal graph convolutional traffic forecaster")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("build-graph", parents=[common], help="Build the weighted adjacency and its Laplacian summary")
    sub.add_parser("train", parents=[common], help="Train the model and write checkpoint and history")

    p_eval = sub.add_parser("eval", parents=[common], help="Evaluate STGCN and the historical average on the test split")
    p_eval.add_argument("--checkpoint", type=str, default="", help="Checkpoint path (default: <output_dir>/checkpoint.stgc)")
    p_eval.add_argument("--format", type=str, default="", help="Also write the report as md, html or json")
    p_eval.add_argument("--workers", type=int, default=None, help="Inference threads (default: train.workers)")

    p_pred = sub.add_parser("predict", parents=[common], help="Forecast one test window, or the whole test split with --series")
    p_pred.add_argument("--checkpoint", type=str, default="", help="Checkpoint path (default: <output_dir>/checkpoint.stgc)")
    p_pred.add_argument("--window", type=int, default=None, help="Test window index (default: the last window)")
    p_pred.add_argument("--series", action="store_true", help="Write truth/stgcn/ha for every test window to series.csv")
    p_pred.add_argument("--workers", type=int, default=None, help="Inference threads (default: train.workers)")

    p_grad = sub.add_parser("gradcheck", parents=[common], help="Finite-difference gradient check of every layer type")
    p_grad.add_argument("--seed", type=int, default=0)
    p_grad.add_argument("--tolerance", type=float, default=1e-4)

    p_synth = sub.add_parser("synth", parents=[common], help="Generate a synthetic graph-diffusion speed dataset")
    p_synth.add_argument("--out", type=str, required=True, help="Output directory")
    p_synth.add_argument("--n", type=int, default=20, help="Number of stations")
    p_synth.add_argument("--days", type=int, default=40, help="Number of workdays")
    p_synth.add_argument("--seed", type=int, default=42)
    return parser


def _configure_logging(level_name: str) -> None:
    level = getattr(logging, str(level_name).upper(), None)
    if not isinstance(level, int):
        raise InputError(f"unknown log level '{level_name}'")
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)


def _workers(args, manifest: RunManifest) -> int:
    workers = args.workers if args.workers is not None else manifest.train.workers
    if workers < 1:
        raise InputError(f"--workers must be >= 1, got {workers}")
    return workers


def dispatch(args) -> int:
    if args.command == "gradcheck":
        return cmd_gradcheck(args.seed, args.tolerance)
    if args.command == "synth":
        return cmd_synth(args.out, args.n, args.days, args.seed)
    manifest = load_manifest(args.manifest or None, args.overrides)
    if args.command == "build-graph":
        return cmd_build_graph(manifest)
    if args.command == "train":
        return cmd_train(manifest)
    if args.command == "eval":
        return cmd_eval(manifest, args.checkpoint or None, args.format or None, _workers(args, manifest))
    return cmd_predict(manifest, args.checkpoint or None, args.window, args.series, _workers(args, manifest))


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _configure_logging(args.log_level)
        return dispatch(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
