"""
Training configuration: TrainConfig, YAML defaults and named presets.

Defaults live in config/defaults.yaml. When the file or PyYAML is unavailable the built-in
mappings below are used instead; unknown keys are ignored and values are coerced to the
type of the matching default.
"""

import copy
import importlib.util
import logging
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

from errors import InputError

logger = logging.getLogger(__name__)

DEFAULTS_FILENAME = 'defaults.yaml'

DEFAULT_TRAIN: Dict[str, Any] = {
    'epochs': 50,
    'batch_size': 50,
    'lr0': 1e-3,
    'lr_decay': 0.7,
    'decay_every_epochs': 5,
    'rmsprop_rho': 0.9,
    'rmsprop_eps': 1e-8,
    'k': 3,
    'kt': 3,
    'channels': [[1, 16, 64], [64, 16, 64]],
    'workers': 1,
}

DEFAULT_MANIFEST: Dict[str, Any] = {
    'variant': 'cheb',
    'history': 12,
    'horizons': [3, 6, 9],
    'split': [0.6, 0.2, 0.2],
    'split_unit': 'day',
    'workdays_only': True,
    'interval_minutes': 5,
    'seed': 0,
    'horizon_mode': 'rollout',
    'adjacency': {'sigma_sq': 10.0, 'epsilon': 0.5},
}

DEFAULT_PRESETS: Dict[str, Dict[str, Any]] = {
    'standard_cheb': {'variant': 'cheb', 'train': {'k': 3, 'kt': 3}},
    'standard_first_order': {'variant': 'first_order', 'train': {'k': 1, 'kt': 3}},
    'desk': {'train': {'epochs': 20, 'channels': [[1, 16, 32], [32, 16, 32]]}},
}


@dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 50
    lr0: float = 1e-3
    lr_decay: float = 0.7
    decay_every_epochs: int = 5
    rmsprop_rho: float = 0.9
    rmsprop_eps: float = 1e-8
    seed: int = 0
    k: int = 3
    kt: int = 3
    channels: List[List[int]] = field(default_factory=lambda: [[1, 16, 64], [64, 16, 64]])
    workers: int = 1

    def __post_init__(self):
        checks = [
            (self.lr0 > 0, f"lr0 must be positive, got {self.lr0}"),
            (0 < self.lr_decay <= 1, f"lr_decay must lie in (0, 1], got {self.lr_decay}"),
            (self.batch_size >= 1, f"batch_size must be >= 1, got {self.batch_size}"),
            (self.epochs >= 1, f"epochs must be >= 1, got {self.epochs}"),
            (self.decay_every_epochs >= 1, f"decay_every_epochs must be >= 1, got {self.decay_every_epochs}"),
            (0 <= self.rmsprop_rho < 1, f"rmsprop_rho must lie in [0, 1), got {self.rmsprop_rho}"),
            (self.rmsprop_eps > 0, f"rmsprop_eps must be positive, got {self.rmsprop_eps}"),
            (self.k >= 1 and self.kt >= 1, f"kernel sizes must be >= 1, got K={self.k}, K_t={self.kt}"),
            (self.workers >= 1, f"workers must be >= 1, got {self.workers}"),
            (bool(self.channels) and all(len(c) == 3 for c in self.channels), f"channels must be a list of triples, got {self.channels}"),
        ]
        for ok, message in checks:
            if not ok:
                raise InputError(message)

    def lr_at(self, epoch: int) -> float:
        """lr0 * lr_decay ** floor(epoch / decay_every_epochs)."""
        return self.lr0 * self.lr_decay ** (epoch // self.decay_every_epochs)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _coerce(key: str, value: Any, default: Any) -> Any:
    try:
        if isinstance(default, bool):
            if isinstance(value, str):
                return value.strip().lower() in ('1', 'true', 'yes', 'on')
            return bool(value)
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, list) and not isinstance(value, list):
            raise ValueError(value)
    except (TypeError, ValueError):
        raise InputError(f"config value for '{key}' has the wrong type: {value!r}") from None
    return value


def train_config_from(values: Dict[str, Any], seed: Optional[int] = None) -> TrainConfig:
    """Build a TrainConfig from a mapping; unknown keys are ignored."""
    known = {k: _coerce(k, v, DEFAULT_TRAIN[k]) for k, v in values.items() if k in DEFAULT_TRAIN}
    unknown = sorted(set(values) - set(DEFAULT_TRAIN) - {'seed'})
    if unknown:
        logger.warning("Ignoring unknown train key(s): %s", ', '.join(unknown))
    merged = {**DEFAULT_TRAIN, **known}
    merged['channels'] = [[int(c) for c in triple] for triple in merged['channels']]
    if seed is not None:
        merged['seed'] = int(seed)
    elif 'seed' in values:
        merged['seed'] = int(values['seed'])
    return TrainConfig(**merged)


def _default_path() -> str:
    return os.path.join(os.path.dirname(os.path.dirname(__file__)), 'config', DEFAULTS_FILENAME)


def load_defaults(path: Optional[str] = None) -> Dict[str, Any]:
    """
    Load {'manifest': ..., 'train': ..., 'presets': ...} from YAML when available.
    PyYAML is looked up before import so a missing package falls back to the built-ins.
    """
    data: Dict[str, Any] = {}
    path = path or _default_path()
    if os.path.exists(path) and importlib.util.find_spec('yaml') is not None:
        import yaml

        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = yaml.safe_load(f) or {}
        except yaml.YAMLError as exc:
            raise InputError(f"{path}: invalid YAML: {exc}") from None
    manifest = copy.deepcopy(DEFAULT_MANIFEST)
    manifest.update({k: v for k, v in (data.get('manifest') or {}).items() if k in DEFAULT_MANIFEST})
    train = copy.deepcopy(DEFAULT_TRAIN)
    train.update({k: _coerce(k, v, DEFAULT_TRAIN[k]) for k, v in (data.get('train') or {}).items() if k in DEFAULT_TRAIN})
    presets = copy.deepcopy(DEFAULT_PRESETS)
    presets.update(data.get('presets') or {})
    return {'manifest': manifest, 'train': train, 'presets': presets}


def load_preset(name: str, defaults: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    presets = (defaults or load_defaults())['presets']
    if name not in presets:
        raise InputError(f"unknown preset '{name}'; available: {', '.join(sorted(presets))}")
    return copy.deepcopy(presets[name])


__all__ = ["TrainConfig", "train_config_from", "load_defaults", "load_preset", "DEFAULT_TRAIN", "DEFAULT_MANIFEST", "DEFAULT_PRESETS"]
