"""
Synthetic traffic generator with genuinely spatial dynamics.

Stations are points of a random geometric graph. A deviation process diffuses over the
graph's propagation matrix every step,

    d_{t+1} = persistence * ((1 - diffusion) d_t + diffusion * P d_t) + N(0, (noise * amplitude)^2)

and the observed speed is base + amplitude * sin(2 pi tod + phase_i) + d_t. Only workdays
are emitted, and a small seeded fraction of cells is blanked out.
"""

import json
import logging
import os
from dataclasses import asdict, dataclass
from typing import Dict, List, Tuple

import numpy as np
import pandas as pd

from errors import InputError
from graph.adjacency import build_adjacency
from graph.models import AdjacencyConfig
from graph.spectral import normalized_laplacian
from ingest.speeds import write_speed_csv
from normalize.models import SpeedSeries

logger = logging.getLogger(__name__)

MINUTES_PER_DAY = 24 * 60


@dataclass(frozen=True)
class SynthConfig:
    n: int = 20
    days: int = 40
    seed: int = 42
    interval_minutes: int = 5
    area: float = 10.0
    base_speed: float = 60.0
    amplitude: float = 10.0
    diffusion: float = 0.3
    persistence: float = 0.97
    noise: float = 0.05
    missing_fraction: float = 0.002
    start: str = '2024-01-01'

    def __post_init__(self):
        if self.n < 1 or self.days < 1:
            raise InputError(f"synthetic data needs n >= 1 and days >= 1, got n={self.n}, days={self.days}")
        if MINUTES_PER_DAY % self.interval_minutes:
            raise InputError(f"interval_minutes must divide a day, got {self.interval_minutes}")
        if not 0 <= self.diffusion <= 1 or not 0 < self.persistence < 1:
            raise InputError("diffusion must lie in [0, 1] and persistence in (0, 1)")
        if not 0 <= self.missing_fraction < 0.5:
            raise InputError(f"missing_fraction must lie in [0, 0.5), got {self.missing_fraction}")


@dataclass
class SyntheticData:
    series: SpeedSeries
    distances: List[Tuple[str, str, float]]
    config: SynthConfig


def workday_timestamps(cfg: SynthConfig) -> pd.DatetimeIndex:
    """``cfg.days`` workdays from ``cfg.start`` at ``cfg.interval_minutes`` spacing."""
    days = pd.bdate_range(start=cfg.start, periods=cfg.days)
    offsets = pd.to_timedelta(np.arange(0, MINUTES_PER_DAY, cfg.interval_minutes), unit='min')
    return days.repeat(len(offsets)) + pd.TimedeltaIndex(np.tile(offsets, len(days)))


def station_layout(cfg: SynthConfig, rng: np.random.Generator) -> Tuple[List[str], List[Tuple[str, str, float]]]:
    width = len(str(cfg.n))
    ids = [f"s{i:0{width}d}" for i in range(1, cfg.n + 1)]
    points = rng.uniform(0.0, cfg.area, size=(cfg.n, 2))
    distances = []
    for i in range(cfg.n):
        for j in range(i + 1, cfg.n):
            distances.append((ids[i], ids[j], round(float(np.linalg.norm(points[i] - points[j])), 4)))
    return ids, distances


def generate(cfg: SynthConfig = SynthConfig()) -> SyntheticData:
    rng = np.random.default_rng(cfg.seed)
    ids, distances = station_layout(cfg, rng)
    index = {sid: k for k, sid in enumerate(ids)}
    graph = build_adjacency([(index[a], index[b], d) for a, b, d in distances], cfg.n, AdjacencyConfig(), ids)
    propagation = normalized_laplacian(graph).propagation

    stamps = workday_timestamps(cfg)
    tod = (stamps.hour * 60 + stamps.minute).to_numpy() / MINUTES_PER_DAY
    phases = rng.uniform(0.0, 2.0 * np.pi, size=cfg.n)
    daily = cfg.amplitude * np.sin(2.0 * np.pi * tod[:, None] + phases[None, :])

    noise_std = cfg.noise * cfg.amplitude
    shocks = rng.normal(0.0, noise_std, size=(len(stamps), cfg.n))
    deviation = np.zeros((len(stamps), cfg.n))
    state = np.zeros(cfg.n)
    for t in range(len(stamps)):
        state = cfg.persistence * ((1.0 - cfg.diffusion) * state + cfg.diffusion * (propagation @ state)) + shocks[t]
        deviation[t] = state
    values = cfg.base_speed + daily + deviation

    if cfg.missing_fraction > 0:
        mask = rng.random(values.shape) < cfg.missing_fraction
        mask[0] = False  # every station keeps an observed first reading
        values[mask] = np.nan
    logger.info("Generated %d workday(s) x %d station(s), %d edge(s), %d missing cell(s)", cfg.days, cfg.n, graph.edge_count, int(np.isnan(values).sum()))
    return SyntheticData(SpeedSeries(values, ids, stamps, cfg.interval_minutes), distances, cfg)


def synthetic_manifest(cfg: SynthConfig) -> Dict[str, object]:
    return {
        'speed_csv': 'speeds.csv',
        'distance_csv': 'distances.csv',
        'output_dir': 'out',
        'preset': 'desk',
        'variant': 'cheb',
        'interval_minutes': cfg.interval_minutes,
        'seed': cfg.seed,
        'synthetic': asdict(cfg),
    }


def write_synthetic(out_dir: str, cfg: SynthConfig = SynthConfig()) -> Dict[str, str]:
    """Write speeds.csv, distances.csv and manifest.json into ``out_dir``; returns their paths."""
    data = generate(cfg)
    os.makedirs(out_dir, exist_ok=True)
    paths = {name: os.path.join(out_dir, name) for name in ('speeds.csv', 'distances.csv', 'manifest.json')}
    write_speed_csv(data.series, paths['speeds.csv'])
    with open(paths['distances.csv'], 'w', encoding='utf-8', newline='') as fh:
        fh.write('from,to,distance\n')
        for a, b, d in data.distances:
            fh.write(f"{a},{b},{d!r}\n")
    with open(paths['manifest.json'], 'w', encoding='utf-8') as fh:
        json.dump(synthetic_manifest(cfg), fh, indent=2, sort_keys=True)
        fh.write('\n')
    return paths


__all__ = ["SynthConfig", "SyntheticData", "generate", "write_synthetic", "workday_timestamps", "synthetic_manifest"]
