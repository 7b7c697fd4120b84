from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientLength, InvalidConfig


@dataclass
class BeatActivation:
    """Per-frame beat probability sampled at `fps` frames per second."""

    values: np.ndarray
    fps: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if len(self.values) < 1:
            raise ValueError('beat activation must have at least one frame')
        if self.fps <= 0:
            raise ValueError('fps must be positive')
        if np.any(self.values < 0) or np.any(self.values > 1) or not np.all(np.isfinite(self.values)):
            raise ValueError('beat activation values must lie in [0, 1]')

    def __len__(self):
        return len(self.values)


@dataclass
class TempoActivation:
    """Probability mass over 1-BPM bins; bin ``b`` stands for ``b`` BPM."""

    mass: np.ndarray

    def __post_init__(self):
        self.mass = np.asarray(self.mass, dtype=np.float64).reshape(-1)
        if np.any(self.mass < 0) or abs(self.mass.sum() - 1.0) > 1e-6:
            raise ValueError('tempo activation must be a probability distribution')


@dataclass
class BeatSequence:
    """Strictly ascending beat times in seconds."""

    times: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64).reshape(-1)
        if np.any(self.times < 0) or np.any(np.diff(self.times) <= 0):
            raise ValueError('beat times must be non-negative and strictly ascending')

    def __len__(self):
        return len(self.times)


@dataclass
class TempoEstimate:
    bpm: float
    confidence: float
    method: str
    clamped: bool = False


@dataclass
class DecoderConfig:
    bpm_min: float = 40.0
    bpm_max: float = 250.0
    comb_alpha: float = 0.79
    dbn_tempo_change_prob: float = 0.02
    dbn_tempo_penalty: float = 100.0
    smoothing_width: int = 7
    # Hamming window (seconds) applied to the beat activation before ACF and
    # comb filter scoring; 0 disables
    act_smooth: float = 0.14

    def __post_init__(self):
        if not 0 < self.bpm_min < self.bpm_max:
            raise InvalidConfig('need 0 < bpm_min < bpm_max')
        if not 0 < self.comb_alpha < 1:
            raise InvalidConfig('comb_alpha must lie in (0, 1)')
        if not 0 < self.dbn_tempo_change_prob < 1:
            raise InvalidConfig('dbn_tempo_change_prob must lie in (0, 1)')
        if self.smoothing_width < 1:
            raise InvalidConfig('smoothing_width must be at least 1')
        if self.act_smooth < 0:
            raise InvalidConfig('act_smooth must be non-negative')

    def lag_range(self, fps):
        """Inclusive integer lag bounds (frames per beat) for this BPM range."""
        lo = max(1, math.ceil(60.0 * fps / self.bpm_max - 1e-9))
        hi = math.floor(60.0 * fps / self.bpm_min + 1e-9)
        return lo, hi


def check_length(act, cfg):
    lo, hi = cfg.lag_range(act.fps)
    if len(act) < 2 * lo or hi < lo:
        raise InsufficientLength(
            f'activation has {len(act)} frames; at least {2 * lo} are needed')
    return lo, hi


def smooth_activation(act, cfg):
    """
    Activation convolved with an odd-length Hamming window of about
    ``cfg.act_smooth`` seconds (plain array, not renormalized to [0, 1]).
    """
    half = int(np.floor(cfg.act_smooth * act.fps / 2.0 + 0.5))
    if half < 1:
        return act.values
    return np.convolve(act.values, np.hamming(2 * half + 1), mode='same')
