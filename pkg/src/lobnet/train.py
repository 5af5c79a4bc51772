"""Mini-batch training loop with early stopping on validation accuracy.

One loop owns all mutable state (parameters and optimizer moments). Batches
of 32, ADAM at lr 0.01 with epsilon 1, shuffling driven by the schedule
seed, so two runs from the same seed walk an identical trajectory. The best
validation accuracy epoch is kept (ties favour the earlier epoch) and
training stops after ``patience`` epochs without improvement.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import TrainingDivergedError, ValidationError
from .model import ModelConfig, forward, loss_and_grads
from .nn import AdamState, adam_init, adam_step

logger = logging.getLogger(__name__)

HISTORY_FIELDS = ("epoch", "train_loss", "train_acc", "val_acc")


@dataclass(frozen=True)
class TrainSchedule:
    batch_size: int = 32
    max_epochs: int = 100
    patience: int = 20
    lr: float = 0.01
    adam_epsilon: float = 1.0
    beta1: float = 0.9
    beta2: float = 0.999
    seed: int = 0
    stop_at_val_acc: float | None = None  # optional target-accuracy stop


class ClassifierData:
    """Adapter from a window dataset and one horizon to model batches.

    Classes -1/0/+1 map to indices 0/1/2.
    """

    def __init__(self, windows, horizon: int):
        self.windows = windows
        self.horizon = horizon

    def __len__(self) -> int:
        return len(self.windows)

    def batch(self, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = self.windows.inputs(idx)[:, None, :, :]
        y = self.windows.labels_for(self.horizon, idx) + 1
        return x, y


@dataclass
class TrainResult:
    params: dict[str, np.ndarray]
    optimizer: AdamState
    history: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    best_val_acc: float = float("nan")
    stop_reason: str = "max-epochs"


def evaluate_accuracy(params, data: ClassifierData, cfg: ModelConfig, batch_size: int = 256) -> float:
    if len(data) == 0:
        raise ValidationError("cannot evaluate accuracy on an empty dataset")
    correct = 0
    for start in range(0, len(data), batch_size):
        idx = np.arange(start, min(start + batch_size, len(data)))
        x, y = data.batch(idx)
        probs = forward(params, x, cfg)
        correct += int((probs.argmax(axis=1) == y).sum())
    return correct / len(data)


def write_history(path, history: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=HISTORY_FIELDS)
        writer.writeheader()
        for row in history:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def train(
    params: dict[str, np.ndarray],
    train_data: ClassifierData,
    val_data: ClassifierData | None,
    schedule: TrainSchedule,
    cfg: ModelConfig,
    out_dir=None,
) -> TrainResult:
    """Optimise ``params`` in place; returns the best-validation snapshot."""
    n = len(train_data)
    if n == 0:
        raise ValidationError("training dataset is empty")
    rng = np.random.default_rng(schedule.seed)
    optimizer = adam_init(params)
    result = TrainResult(params=params, optimizer=optimizer)
    best_params = {k: v.copy() for k, v in params.items()}
    best_acc = -np.inf
    epochs_since_best = 0

    for epoch in range(1, schedule.max_epochs + 1):
        order = rng.permutation(n)
        total_loss = 0.0
        correct = 0
        for start in range(0, n, schedule.batch_size):
            idx = order[start : start + schedule.batch_size]
            x, y = train_data.batch(idx)
            loss, probs, grads = loss_and_grads(params, x, y, cfg)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, batch {start // schedule.batch_size} "
                    f"(lr={schedule.lr}, batch_size={schedule.batch_size})"
                )
            adam_step(
                params, grads, optimizer,
                lr=schedule.lr, beta1=schedule.beta1, beta2=schedule.beta2,
                epsilon=schedule.adam_epsilon,
            )
            total_loss += loss * len(idx)
            correct += int((probs.argmax(axis=1) == y).sum())
        train_loss = total_loss / n
        train_acc = correct / n
        val_acc = evaluate_accuracy(params, val_data, cfg) if val_data is not None else float("nan")
        result.history.append(
            {"epoch": epoch, "train_loss": train_loss, "train_acc": train_acc, "val_acc": val_acc}
        )
        logger.info(
            "epoch %d: train_loss %.4f train_acc %.4f val_acc %s",
            epoch, train_loss, train_acc, "n/a" if np.isnan(val_acc) else f"{val_acc:.4f}",
        )
        if val_data is not None:
            if val_acc > best_acc:
                best_acc = val_acc
                best_params = {k: v.copy() for k, v in params.items()}
                result.best_epoch = epoch
                epochs_since_best = 0
            else:
                epochs_since_best += 1
            if schedule.stop_at_val_acc is not None and val_acc >= schedule.stop_at_val_acc:
                result.stop_reason = "target-accuracy"
                break
            if epochs_since_best >= schedule.patience:
                result.stop_reason = "early-stopping"
                break
        else:
            result.best_epoch = epoch

    if val_data is not None:
        result.params = best_params
        result.best_val_acc = best_acc
    else:
        result.params = params
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_history(out_dir / "history.csv", result.history)
        from .checkpoint import Checkpoint, save_checkpoint

        save_checkpoint(
            out_dir / "checkpoint.lobc",
            Checkpoint(
                params=result.params,
                adam=optimizer,
                rng_state=rng.bit_generator.state,
                meta={"best_epoch": result.best_epoch, "stop_reason": result.stop_reason},
            ),
        )
    return result
