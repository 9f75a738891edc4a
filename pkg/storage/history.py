"""
Training history CSV: `epoch,train_loss,val_mae,val_rmse,lr`, one row per epoch.
"""

import csv
import io
from dataclasses import dataclass
from typing import List, Sequence

from errors import InputError

HISTORY_COLUMNS = ('epoch', 'train_loss', 'val_mae', 'val_rmse', 'lr')


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_mae: float
    val_rmse: float
    lr: float


def render_history_csv(records: Sequence[EpochRecord]) -> str:
    output = io.StringIO()
    writer = csv.writer(output, lineterminator='\n')
    writer.writerow(HISTORY_COLUMNS)
    for r in records:
        writer.writerow([r.epoch, repr(float(r.train_loss)), repr(float(r.val_mae)), repr(float(r.val_rmse)), repr(float(r.lr))])
    return output.getvalue()


def write_history_csv(records: Sequence[EpochRecord], path: str) -> None:
    with open(path, 'w', encoding='utf-8', newline='') as fh:
        fh.write(render_history_csv(records))


def read_history_csv(path: str) -> List[EpochRecord]:
    with open(path, 'r', encoding='utf-8', newline='') as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != HISTORY_COLUMNS:
            raise InputError(f"{path}:1: expected header {','.join(HISTORY_COLUMNS)}")
        records = []
        for lineno, row in enumerate(reader, start=2):
            try:
                records.append(EpochRecord(int(row['epoch']), float(row['train_loss']), float(row['val_mae']), float(row['val_rmse']), float(row['lr'])))
            except (TypeError, ValueError):
                raise InputError(f"{path}:{lineno}: malformed history row") from None
    return records


__all__ = ["EpochRecord", "HISTORY_COLUMNS", "render_history_csv", "write_history_csv", "read_history_csv"]
