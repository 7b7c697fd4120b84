"""Multitask TCN: network, targets and loss, optimizer, training, weight files."""

from .network import (ModelOutput, TcnConfig, TcnWeights, backward, forward, init_model,
                      receptive_field)
from .optim import RAdamLookahead, clip_by_global_norm, global_norm, optimizer_step
from .serialization import load_weights, save_weights
from .targets import FrameTargets, encode_targets, multitask_loss
from .training import EarlyStopping, TrainingConfig, TrainingHistory, evaluate_loss, train

__all__ = [
    'EarlyStopping', 'FrameTargets', 'ModelOutput', 'RAdamLookahead', 'TcnConfig',
    'TcnWeights', 'TrainingConfig', 'TrainingHistory', 'backward', 'clip_by_global_norm',
    'encode_targets', 'evaluate_loss', 'forward', 'global_norm', 'init_model',
    'load_weights', 'multitask_loss', 'optimizer_step', 'receptive_field', 'save_weights',
    'train',
]
