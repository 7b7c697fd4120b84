"""Batch-size-1 training loop with early stopping."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import List

import numpy as np

from ..errors import DivergedLoss, EmptyDataset, InvalidConfig, ShapeMismatch
from .network import backward, forward
from .optim import RAdamLookahead
from .targets import multitask_loss

logger = logging.getLogger(__name__)


@dataclass
class TrainingConfig:
    learning_rate: float = 0.0015
    clip_norm: float = 0.5
    max_epochs: int = 150
    early_stop_patience: int = 20
    lookahead_k: int = 5
    lookahead_alpha: float = 0.5
    seed: int = 0

    def validate(self):
        if self.learning_rate <= 0 or self.clip_norm <= 0:
            raise InvalidConfig('learning_rate and clip_norm must be positive')
        if not 0 < self.lookahead_alpha <= 1:
            raise InvalidConfig('lookahead_alpha must lie in (0, 1]')
        if self.lookahead_k < 1 or self.max_epochs < 1 or self.early_stop_patience < 1:
            raise InvalidConfig('lookahead_k, max_epochs and patience must be >= 1')


class EarlyStopping:
    """Track the best validation loss; signal a stop after `patience` epochs without improvement."""

    def __init__(self, patience):
        self.patience = patience
        self.best = math.inf
        self.best_epoch = 0
        self.bad_epochs = 0

    def update(self, epoch, loss):
        """Record `loss` for `epoch`; returns True if it is a new best."""
        if loss < self.best:
            self.best, self.best_epoch, self.bad_epochs = loss, epoch, 0
            return True
        self.bad_epochs += 1
        return False

    @property
    def should_stop(self):
        return self.bad_epochs >= self.patience


@dataclass
class TrainingHistory:
    epochs: List[int] = field(default_factory=list)
    train_loss: List[float] = field(default_factory=list)
    val_loss: List[float] = field(default_factory=list)
    best_epoch: int = 0

    def to_csv(self, path):
        with open(path, 'w', newline='') as fh:
            writer = csv.writer(fh)
            writer.writerow(['epoch', 'train_loss', 'val_loss'])
            for row in zip(self.epochs, self.train_loss, self.val_loss):
                writer.writerow([row[0], repr(row[1]), repr(row[2])])


def loss_and_grads(weights, spec, targets, training_mode=False, rng=None):
    out, cache = forward(weights, spec, training_mode, rng, return_cache=True)
    loss, g_beat, g_tempo = multitask_loss(out, targets)
    dtype = cache['final'].dtype
    grads = backward(weights, cache, g_beat.astype(dtype), g_tempo.astype(dtype))
    return loss, grads


def evaluate_loss(weights, dataset):
    """Mean multitask loss over `dataset` with dropout disabled."""
    losses = [multitask_loss(forward(weights, spec), tgt)[0] for spec, tgt in dataset]
    return float(np.mean(losses))


def _check(weights, dataset):
    for spec, tgt in dataset:
        frames = spec.values.shape[0]
        if len(tgt.beat_target) != frames or len(tgt.tempo_target) != weights.cfg.tempo_bins:
            raise ShapeMismatch('targets do not match spectrogram/model shapes')


def train(weights, dataset, cfg=None, validation=None, callback=None):
    """
    Fit the network one sequence at a time.

    Parameters
    ----------
    weights : TcnWeights
        Starting point; not modified.
    dataset : list of (Spectrogram, FrameTargets)
        Sequences of any length; each is its own batch.
    cfg : TrainingConfig, optional
    validation : list of (Spectrogram, FrameTargets), optional
        Drives early stopping. Defaults to the training set.
    callback : callable, optional
        Called as ``callback(epoch, train_loss, val_loss)`` after each epoch.

    Returns
    -------
    best : TcnWeights
        Weights of the epoch with the lowest validation loss.
    history : TrainingHistory

    """
    cfg = cfg or TrainingConfig()
    cfg.validate()
    if not dataset:
        raise EmptyDataset('training set is empty')
    validation = validation or dataset
    _check(weights, dataset)
    _check(weights, validation)

    rng = np.random.default_rng(cfg.seed)
    current = weights.copy()
    opt = RAdamLookahead(current.tensors, lr=cfg.learning_rate, clip_norm=cfg.clip_norm,
                         k=cfg.lookahead_k, alpha=cfg.lookahead_alpha)
    stopper = EarlyStopping(cfg.early_stop_patience)
    history = TrainingHistory()
    best = current.copy()

    for epoch in range(1, cfg.max_epochs + 1):
        losses = []
        for i in rng.permutation(len(dataset)):
            spec, tgt = dataset[i]
            loss, grads = loss_and_grads(current, spec, tgt, training_mode=True, rng=rng)
            if not math.isfinite(loss):
                raise DivergedLoss(f'non-finite loss at epoch {epoch}')
            opt.step(current.tensors, grads)
            losses.append(loss)
        train_loss = float(np.mean(losses))
        val_loss = evaluate_loss(current, validation)
        if not math.isfinite(val_loss):
            raise DivergedLoss(f'non-finite validation loss at epoch {epoch}')
        history.epochs.append(epoch)
        history.train_loss.append(train_loss)
        history.val_loss.append(val_loss)
        if stopper.update(epoch, val_loss):
            best = current.copy()
            history.best_epoch = epoch
        logger.info('epoch %d train %.5f val %.5f', epoch, train_loss, val_loss)
        if callback is not None:
            callback(epoch, train_loss, val_loss)
        if stopper.should_stop:
            logger.info('early stop after epoch %d (best %d)', epoch, stopper.best_epoch)
            break
    return best, history
