"""
Metric report model.
"""

from dataclasses import asdict, dataclass
from typing import Any, Dict


@dataclass
class MetricReport:
    """Errors of one model at one horizon, in original units (MAPE in percent)."""

    model: str
    horizon_steps: int
    horizon_minutes: int
    mae: float
    mape: float
    rmse: float
    n: int
    mape_excluded: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


__all__ = ["MetricReport"]
