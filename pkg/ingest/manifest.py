"""
Run manifest: the single JSON document that drives every CLI subcommand.

Precedence, lowest first: config/defaults.yaml, the named preset, the manifest file,
then repeated ``--set key=value`` overrides (dotted keys, JSON-scalar values).
Relative paths resolve against the manifest's directory.
"""

import copy
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from errors import InputError
from graph.models import AdjacencyConfig
from normalize.windows import SplitSpec
from training.config import TrainConfig, load_defaults, load_preset, train_config_from

logger = logging.getLogger(__name__)

VARIANTS = ('cheb', 'first_order')
HORIZON_MODES = ('rollout', 'direct')
PATH_KEYS = ('speed_csv', 'distance_csv', 'adjacency_csv', 'output_dir')
DEFAULTS_KEYS = ('variant', 'history', 'horizons', 'split', 'split_unit', 'workdays_only', 'interval_minutes', 'seed', 'horizon_mode', 'adjacency')


@dataclass
class RunManifest:
    base_dir: str
    output_dir: str
    speed_csv: Optional[str] = None
    distance_csv: Optional[str] = None
    adjacency_csv: Optional[str] = None
    variant: str = 'cheb'
    history: int = 12
    horizons: List[int] = field(default_factory=lambda: [3, 6, 9])
    split: SplitSpec = field(default_factory=SplitSpec)
    workdays_only: bool = True
    interval_minutes: int = 5
    seed: int = 0
    horizon_mode: str = 'rollout'
    adjacency: AdjacencyConfig = field(default_factory=AdjacencyConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    preset: Optional[str] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    @property
    def max_horizon(self) -> int:
        return max(self.horizons)

    def output_path(self, name: str) -> str:
        return os.path.join(self.output_dir, name)

    def ensure_output_dir(self) -> str:
        try:
            os.makedirs(self.output_dir, exist_ok=True)
        except OSError as exc:
            raise InputError(f"cannot create output dir {self.output_dir}: {exc}") from None
        return self.output_dir

    def require(self, key: str) -> str:
        value = getattr(self, key)
        if not value:
            raise InputError(f"manifest does not set '{key}'")
        if not os.path.exists(value):
            raise InputError(f"{key} not found: {value}")
        return value


def parse_override(item: str) -> tuple:
    """'a.b=value' -> (['a', 'b'], parsed); values are JSON scalars, falling back to the raw string."""
    if '=' not in item:
        raise InputError(f"--set expects key=value, got '{item}'")
    key, raw = item.split('=', 1)
    key = key.strip()
    if not key:
        raise InputError(f"--set has an empty key: '{item}'")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.split('.'), value


def apply_overrides(data: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    out = copy.deepcopy(data)
    for item in overrides or []:
        path, value = parse_override(item)
        node = out
        for part in path[:-1]:
            child = node.get(part)
            if not isinstance(child, dict):
                child = {}
                node[part] = child
            node = child
        node[path[-1]] = value
    return out


def deep_merge(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
    out = copy.deepcopy(base)
    for key, value in (update or {}).items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def read_manifest_file(path: str) -> Dict[str, Any]:
    try:
        with open(path, 'r', encoding='utf-8') as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read manifest {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(data, dict):
        raise InputError(f"{path}: manifest must be a JSON object")
    return data


def _resolve(base_dir: str, value: Optional[str]) -> Optional[str]:
    if not value:
        return None
    return value if os.path.isabs(value) else os.path.normpath(os.path.join(base_dir, value))


def _int_list(key: str, value: Any) -> List[int]:
    items = value if isinstance(value, list) else [value]
    try:
        out = [int(v) for v in items]
    except (TypeError, ValueError):
        raise InputError(f"manifest '{key}' must be a list of integers, got {value!r}") from None
    if not out or any(v < 1 for v in out):
        raise InputError(f"manifest '{key}' must hold positive integers, got {value!r}")
    return out


def build_manifest(data: Dict[str, Any], base_dir: str, defaults: Optional[Dict[str, Any]] = None) -> RunManifest:
    """Merge defaults, the preset named in ``data`` and ``data`` itself into a RunManifest."""
    defaults = defaults or load_defaults()
    merged = deep_merge(defaults['manifest'], {'train': defaults['train']})
    preset = data.get('preset')
    if preset:
        merged = deep_merge(merged, load_preset(str(preset), defaults))
    merged = deep_merge(merged, data)

    variant = str(merged['variant'])
    if variant not in VARIANTS:
        raise InputError(f"variant must be one of {VARIANTS}, got '{variant}'")
    horizon_mode = str(merged['horizon_mode'])
    if horizon_mode not in HORIZON_MODES:
        raise InputError(f"horizon_mode must be one of {HORIZON_MODES}, got '{horizon_mode}'")
    history = _int_list('history', merged['history'])[0]
    adjacency = merged.get('adjacency') or {}
    try:
        adj_cfg = AdjacencyConfig(float(adjacency.get('sigma_sq', 10.0)), float(adjacency.get('epsilon', 0.5)))
        split = SplitSpec(tuple(float(r) for r in merged['split']), str(merged['split_unit']))
        seed = int(merged['seed'])
        interval = int(merged['interval_minutes'])
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid manifest value: {exc}") from None
    train = train_config_from(dict(merged.get('train') or {}), seed=seed)
    if variant == 'first_order' and train.k != 1:
        logger.info("first_order variant uses K=1 (configured K=%d ignored)", train.k)
        train.k = 1

    known = set(DEFAULTS_KEYS) | set(PATH_KEYS) | {'train', 'preset'}
    return RunManifest(
        base_dir=base_dir,
        output_dir=_resolve(base_dir, merged.get('output_dir')) or os.path.join(base_dir, 'out'),
        speed_csv=_resolve(base_dir, merged.get('speed_csv')),
        distance_csv=_resolve(base_dir, merged.get('distance_csv')),
        adjacency_csv=_resolve(base_dir, merged.get('adjacency_csv')),
        variant=variant,
        history=history,
        horizons=sorted(set(_int_list('horizons', merged['horizons']))),
        split=split,
        workdays_only=bool(merged['workdays_only']),
        interval_minutes=interval,
        seed=seed,
        horizon_mode=horizon_mode,
        adjacency=adj_cfg,
        train=train,
        preset=str(preset) if preset else None,
        extra={k: v for k, v in merged.items() if k not in known},
    )


def load_manifest(path: Optional[str], overrides: Sequence[str] = ()) -> RunManifest:
    """Read ``path`` (or start from an empty manifest in the working directory) and apply overrides."""
    if path:
        data = read_manifest_file(path)
        base_dir = os.path.dirname(os.path.abspath(path))
    else:
        data = {}
        base_dir = os.getcwd()
    data = apply_overrides(data, overrides)
    manifest = build_manifest(data, base_dir)
    logger.debug("Manifest: variant=%s M=%d horizons=%s preset=%s", manifest.variant, manifest.history, manifest.horizons, manifest.preset)
    return manifest


__all__ = ["RunManifest", "load_manifest", "build_manifest", "apply_overrides", "parse_override", "deep_merge", "read_manifest_file"]
