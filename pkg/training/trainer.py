"""
Training loop.

Each epoch reshuffles the training windows with an RNG seeded by (seed, epoch), runs
mini-batch RMSprop on the 1/B-scaled L2 objective and evaluates next-step MAE/RMSE on the
validation split in original units. The parameters with the best validation MAE are kept.
A non-finite loss or gradient aborts with DivergenceError carrying the last good checkpoint.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from autograd.tensor import Tensor, backward
from errors import DivergenceError, InputError, NumericError
from layers.model import StgcnModel
from normalize.models import WindowedDataset
from storage.checkpoint import Checkpoint
from storage.history import EpochRecord
from training.config import TrainConfig
from training.loss import batch_objective
from training.optim import RMSprop, TrainState
from training.rollout import DEFAULT_INFERENCE_BATCH, predict_batches

logger = logging.getLogger(__name__)


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    history: List[EpochRecord] = field(default_factory=list)
    best_epoch: int = -1


def make_checkpoint(model: StgcnModel, dataset: WindowedDataset, state: Dict[str, np.ndarray], target_step: int = 0, epoch: int = -1) -> Checkpoint:
    descriptor = {
        'format': 'stgcn-checkpoint',
        'model': model.descriptor(),
        'stats': dataset.stats.to_dict(),
        'target_step': int(target_step),
        'epoch': int(epoch),
    }
    return Checkpoint(descriptor=descriptor, state={k: v.copy() for k, v in state.items()})


def evaluate_next_step(model: StgcnModel, dataset: WindowedDataset, target_step: int = 0, workers: int = 1) -> Tuple[float, float]:
    """(MAE, RMSE) in original units of one-shot predictions for target step ``target_step``."""
    pred = dataset.stats.denormalize(predict_batches(model, dataset.inputs(), DEFAULT_INFERENCE_BATCH, workers))
    err = pred - dataset.targets[:, target_step, :]
    return float(np.mean(np.abs(err))), float(np.sqrt(np.mean(err * err)))


def _run_epoch(model: StgcnModel, state: TrainState, train: WindowedDataset, cfg: TrainConfig, target_step: int) -> float:
    rng = np.random.default_rng([cfg.seed, state.epoch])
    order = rng.permutation(len(train))
    total = 0.0
    for start in range(0, len(order), cfg.batch_size):
        idx = order[start:start + cfg.batch_size]
        model.zero_grad()
        pred = model(Tensor(train.inputs(idx)))
        objective, batch_sum = batch_objective(pred, train.normalized_targets(target_step, idx))
        if not np.isfinite(batch_sum):
            raise NumericError(f"non-finite loss at epoch {state.epoch}, step {state.steps}")
        backward(objective)
        state.optimizer.step(state.lr)
        state.steps += 1
        total += batch_sum
    return total / len(order)


def train(
    model: StgcnModel,
    train_set: WindowedDataset,
    val_set: Optional[WindowedDataset],
    cfg: TrainConfig,
    target_step: int = 0,
    on_epoch: Optional[Callable[[EpochRecord], None]] = None,
) -> TrainResult:
    """
    Train ``model`` in place and leave it holding the best parameters.

    Without a validation set, selection uses the training windows themselves.
    """
    if len(train_set) == 0:
        raise InputError("training split has no windows")
    if not 0 <= target_step < train_set.H:
        raise InputError(f"target step {target_step} outside the stored horizon H={train_set.H}")
    val_set = val_set if val_set is not None and len(val_set) else train_set
    state = TrainState(optimizer=RMSprop(list(model.named_parameters()), cfg.rmsprop_rho, cfg.rmsprop_eps))
    state.best_state = model.state_dict()
    history: List[EpochRecord] = []

    for epoch in range(cfg.epochs):
        state.epoch = epoch
        state.lr = cfg.lr_at(epoch)
        try:
            train_loss = _run_epoch(model, state, train_set, cfg, target_step)
        except NumericError as exc:
            last_good = make_checkpoint(model, train_set, state.best_state, target_step, state.best_epoch)
            raise DivergenceError(f"training diverged: {exc}", checkpoint=last_good, history=history) from exc
        val_mae, val_rmse = evaluate_next_step(model, val_set, target_step, cfg.workers)
        record = EpochRecord(epoch=epoch, train_loss=train_loss, val_mae=val_mae, val_rmse=val_rmse, lr=state.lr)
        history.append(record)
        if val_mae < state.best_val_mae:
            state.best_val_mae = val_mae
            state.best_epoch = epoch
            state.best_state = model.state_dict()
        logger.info("epoch %d/%d lr=%.3g train_loss=%.6f val_mae=%.4f val_rmse=%.4f", epoch + 1, cfg.epochs, state.lr, train_loss, val_mae, val_rmse)
        if on_epoch is not None:
            on_epoch(record)

    model.load_state(state.best_state)
    logger.info("Best validation MAE %.4f at epoch %d", state.best_val_mae, state.best_epoch)
    checkpoint = make_checkpoint(model, train_set, state.best_state, target_step, state.best_epoch)
    return TrainResult(checkpoint=checkpoint, history=history, best_epoch=state.best_epoch)


def model_from_checkpoint(checkpoint: Checkpoint, bundle) -> StgcnModel:
    model = StgcnModel.from_descriptor(checkpoint.model_descriptor, bundle)
    model.load_state(checkpoint.state)
    return model


__all__ = ["train", "TrainResult", "evaluate_next_step", "make_checkpoint", "model_from_checkpoint"]
