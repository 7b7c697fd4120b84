"""
Synthetic click tracks and beat activations with known ground truth.

`brute_force_tempo` is an intentionally naive oracle. It shares no code with
:mod:`tempokit.postproc` and is only meant to cross-check the decoders.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .annotations import ClipAnnotation, write_beats
from .audio import SAMPLE_RATE, AudioClip, write_audio
from .errors import InsufficientLength, InvalidSpec
from .postproc.types import BeatActivation


@dataclass
class ClickTrackSpec:
    bpm: float = 120.0
    duration: float = 10.0
    sample_rate: int = SAMPLE_RATE
    click_freq: float = 1000.0
    click_len: float = 0.02
    timing_jitter_std: float = 0.0
    seed: int = 0

    def validate(self):
        if not 0 < self.bpm < 1000:
            raise InvalidSpec(f'bpm must be in (0, 1000), got {self.bpm}')
        if not self.duration > 0:
            raise InvalidSpec(f'duration must be positive, got {self.duration}')
        if self.sample_rate <= 0 or self.click_freq <= 0 or self.click_len <= 0:
            raise InvalidSpec('sample_rate, click_freq and click_len must be positive')
        if self.timing_jitter_std < 0:
            raise InvalidSpec('timing_jitter_std must be non-negative')


@dataclass
class SyntheticActivationSpec:
    bpm: float = 120.0
    fps: float = 100.0
    duration: float = 10.0
    pulse_width: int = 1
    noise_std: float = 0.0
    phase: float = 0.0
    seed: int = 0
    jitter_std: float = 0.0

    def validate(self):
        if not 0 < self.bpm < 1000:
            raise InvalidSpec(f'bpm must be in (0, 1000), got {self.bpm}')
        if self.fps <= 0 or self.duration <= 0:
            raise InvalidSpec('fps and duration must be positive')
        if self.pulse_width < 1:
            raise InvalidSpec('pulse_width must be at least 1 frame')
        if self.noise_std < 0 or self.jitter_std < 0 or self.phase < 0:
            raise InvalidSpec('noise_std, jitter_std and phase must be non-negative')


def _beat_grid(bpm, duration, phase, jitter_std, rng):
    period = 60.0 / bpm
    n = int(math.floor((duration - phase) / period - 1e-12)) + 1 if duration > phase else 0
    times = phase + np.arange(n) * period
    if jitter_std > 0:
        times = times + rng.normal(0.0, jitter_std, size=n)
    times = np.clip(times, 0.0, None)
    times = np.sort(times[times < duration])
    # a huge jitter could collapse neighbours; keep the sequence strictly ascending
    keep = np.concatenate([[True], np.diff(times) > 0]) if len(times) else np.zeros(0, bool)
    return times[keep]


def gen_click_track(spec):
    """
    Render decaying sinusoid clicks at every beat over silence.

    Returns
    -------
    clip : AudioClip
    annotation : ClipAnnotation
        Exact (possibly jittered) beat times and ``spec.bpm``.

    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    times = _beat_grid(spec.bpm, spec.duration, 0.0, spec.timing_jitter_std, rng)
    sr = spec.sample_rate
    n = int(round(spec.duration * sr))
    samples = np.zeros(n)
    click_n = max(1, int(round(spec.click_len * sr)))
    t = np.arange(click_n) / sr
    click = 0.5 * np.sin(2 * np.pi * spec.click_freq * t) * np.exp(-5.0 * t / spec.click_len)
    for onset in np.floor(times * sr + 0.5).astype(np.int64):
        end = min(n, onset + click_n)
        samples[onset:end] += click[:end - onset]
    np.clip(samples, -1.0, 1.0, out=samples)
    return AudioClip(samples, sr), ClipAnnotation(times, float(spec.bpm))


def activation_from_beats(times, duration, fps=100.0, pulse_width=1):
    """
    Oracle beat activation: noise-free triangular pulses at the given beat times.

    Parameters
    ----------
    times : array_like
        Beat times in seconds.
    duration : float
        Clip length in seconds; the activation has ``ceil(duration * fps)`` frames.
    fps : float, optional
    pulse_width : int, optional
        Half-width of each pulse in frames.

    Returns
    -------
    BeatActivation

    """
    n = max(1, int(math.ceil(duration * fps - 1e-9)))
    values = np.zeros(n)
    w = int(pulse_width)
    offsets = np.arange(-w, w + 1)
    shape = 1.0 - np.abs(offsets) / (w + 1.0)
    for frame in np.floor(np.asarray(times, float) * fps + 0.5).astype(np.int64):
        idx = frame + offsets
        ok = (idx >= 0) & (idx < n)
        values[idx[ok]] = np.maximum(values[idx[ok]], shape[ok])
    return BeatActivation(values, float(fps))


def gen_activation(spec):
    """
    Triangular beat pulses plus clipped Gaussian noise.

    A pulse of half-width ``w`` has value ``1 - |j| / (w + 1)`` at offset
    ``j``, so ``w = 1`` gives shoulders of 0.5 next to each beat frame.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    times = _beat_grid(spec.bpm, spec.duration, spec.phase, spec.jitter_std, rng)
    values = activation_from_beats(times, spec.duration, spec.fps, spec.pulse_width).values
    n = len(values)
    if spec.noise_std > 0:
        values = values + rng.normal(0.0, spec.noise_std, size=n)
    values = np.clip(values, 0.0, 1.0)
    return BeatActivation(values, float(spec.fps)), ClipAnnotation(times, float(spec.bpm))


def brute_force_tempo(act, bpm_min=40.0, bpm_max=250.0):
    """
    Exhaustive autocorrelation tempo with plain Python loops.

    Every integer lag in ``[ceil(60 fps / bpm_max), floor(60 fps / bpm_min)]``
    is scored by ``r[lag] / r[0]``; the smallest lag wins ties.
    """
    values = [float(v) for v in act.values]
    fps = act.fps
    n = len(values)
    lo = math.ceil(60.0 * fps / bpm_max)
    hi = math.floor(60.0 * fps / bpm_min)
    if n < 2 * lo:
        raise InsufficientLength(f'{n} frames, need at least {2 * lo}')
    energy = 0.0
    for i in range(n):
        energy += values[i] * values[i]
    best_lag, best = lo, -1.0
    for lag in range(lo, hi + 1):
        total = 0.0
        for i in range(n - lag):
            total += values[i] * values[i + lag]
        score = total / energy if energy > 0 else 0.0
        if score > best:
            best, best_lag = score, lag
    return 60.0 * fps / best_lag


def write_click_dataset(directory, specs, dataset='synthetic', prefix='click'):
    """
    Render click tracks to WAV + beats files and a manifest JSON.

    Returns the manifest path. Entry ids are ``{prefix}{index:03d}``.
    """
    os.makedirs(directory, exist_ok=True)
    entries = []
    for i, spec in enumerate(specs):
        clip_id = f'{prefix}{i:03d}'
        clip, ann = gen_click_track(spec)
        wav = f'{clip_id}.wav'
        beats = f'{clip_id}.beats'
        write_audio(os.path.join(directory, wav), clip)
        write_beats(os.path.join(directory, beats), ann.beat_times)
        entries.append({'id': clip_id, 'audio': wav, 'beats': beats, 'bpm': spec.bpm})
    path = os.path.join(directory, 'manifest.json')
    with open(path, 'w') as fh:
        json.dump({'dataset': dataset, 'entries': entries}, fh, indent=2)
    return path
