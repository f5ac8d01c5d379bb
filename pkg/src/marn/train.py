"""Training loop and evaluation pass.

Each epoch shuffles the training set with a seeded generator, accumulates
gradients over fixed-order mini-batches of mean sequence loss, applies one
Adam step per batch (optionally after global-norm clipping), and scores
the validation set. The parameters returned are those of the best
validation-loss epoch. Everything is a pure function of (configs, data,
seed), which is what makes training runs byte-reproducible.
"""

from dataclasses import dataclass

import numpy as np

from .metrics import metrics
from .model import predict, sequence_loss
from .optim import Adam
from .store import bind, harvest
from .tape import Tape, add, backward, scale


class DivergenceError(RuntimeError):
    """Raised when a training loss stops being finite."""


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 16
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float = 1.0  # None disables clipping
    patience: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.lr < 0:
            raise ValueError("epochs, batch size and learning rate must be valid")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    val_metric: float


def mean_loss(cfg, store, seqs):
    """Mean task loss over a list of sequences, no gradients."""
    total = 0.0
    for seq in seqs:
        total += float(sequence_loss(seq, cfg, store))
    return total / len(seqs)


def _batch_step(cfg, store, batch, optimizer, clip_norm):
    tape = Tape()
    binding = bind(store, tape)
    total = None
    for seq in batch:
        loss = sequence_loss(seq, cfg, binding, tape)
        total = loss if total is None else add(total, loss, tape)
    mean = scale(total, 1.0 / len(batch), tape)
    value = float(mean.value)
    if not np.isfinite(value):
        return value
    store.zero_grads()
    backward(tape, mean)
    harvest(binding, store)
    if clip_norm is not None:
        norm = store.grad_norm()
        if norm > clip_norm:
            store.scale_grads(clip_norm / norm)
    optimizer.step()
    return value


def train(cfg, split, tcfg, init=None):
    """Fit the configured variant; returns (best params, epoch history).

    ``init`` overrides the seed-derived initial parameters. Training aborts
    with DivergenceError (naming epoch and batch) if a loss goes non-finite.
    """
    from .model import init_params

    if not split.train or not split.val:
        raise ValueError("train and validation splits must be non-empty")
    store = init.copy() if init is not None else init_params(cfg)
    optimizer = Adam(store, lr=tcfg.lr, beta1=tcfg.beta1, beta2=tcfg.beta2, eps=tcfg.eps)
    rng = np.random.default_rng(tcfg.seed)
    history = []
    best_store = store.copy()
    best_val = np.inf
    stale = 0

    for epoch in range(tcfg.epochs):
        order = rng.permutation(len(split.train))
        epoch_losses = []
        for start in range(0, len(order), tcfg.batch_size):
            batch = [split.train[i] for i in order[start : start + tcfg.batch_size]]
            value = _batch_step(cfg, store, batch, optimizer, tcfg.clip_norm)
            if not np.isfinite(value):
                raise DivergenceError(
                    f"non-finite loss in epoch {epoch}, batch starting at "
                    f"index {start} (sequence ids "
                    f"{[s.id for s in batch]})"
                )
            epoch_losses.append(value)
        val_loss = mean_loss(cfg, store, split.val)
        if not np.isfinite(val_loss):
            raise DivergenceError(f"non-finite validation loss in epoch {epoch}")
        report = evaluate(store, cfg, split.val)
        val_metric = (
            report.accuracy if cfg.task.kind == "classification" else report.mae
        )
        history.append(
            EpochRecord(
                epoch=epoch,
                train_loss=float(np.mean(epoch_losses)),
                val_loss=val_loss,
                val_metric=val_metric,
            )
        )
        if val_loss < best_val:
            best_val = val_loss
            best_store = store.copy()
            stale = 0
        else:
            stale += 1
            if stale >= tcfg.patience:
                break
    return best_store, history


def evaluate(store, cfg, seqs):
    """Deterministic single scoring pass; never mutates parameters."""
    if not seqs:
        raise ValueError("cannot evaluate an empty split")
    preds = [predict(seq, cfg, store) for seq in seqs]
    labels = [seq.label for seq in seqs]
    return metrics(preds, labels, cfg.task)


HISTORY_HEADER = "epoch,train_loss,val_loss,val_metric"


def write_history_csv(history, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(HISTORY_HEADER + "\n")
        for rec in history:
            fh.write(
                f"{rec.epoch},{rec.train_loss:.17g},{rec.val_loss:.17g},"
                f"{rec.val_metric:.17g}\n"
            )
