"""
Audio decoding and STFT log-filterbank spectrograms.

Frames are placed at centers ``round(t * sample_rate / fps)`` rather than on a
fixed integer hop, so non-integer hops such as 44100 / 95 stay exact.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.io import wavfile
from scipy.signal import get_window

from .errors import (ClipTooShort, InvalidConfig, MalformedHeader,
                     UnsupportedEncoding, UnsupportedSampleRate)

SAMPLE_RATE = 44100
AUGMENT_FPS = (95, 100, 105)


@dataclass
class AudioClip:
    """Mono audio with amplitudes in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError('AudioClip samples must be one-dimensional')
        if self.sample_rate <= 0:
            raise ValueError('sample_rate must be positive')
        if not np.all(np.isfinite(self.samples)):
            raise ValueError('AudioClip samples must be finite')

    @property
    def duration(self):
        return len(self.samples) / self.sample_rate


@dataclass
class FrontendConfig:
    fps: float = 100.0
    window_size: int = 2048
    num_bands: int = 81
    fmin: float = 30.0
    fmax: float = 17000.0
    log_offset: float = 1.0

    def validate(self, sample_rate):
        if self.fps <= 0:
            raise InvalidConfig(f'fps must be positive, got {self.fps}')
        ws = self.window_size
        if ws < 2 or ws & (ws - 1):
            raise InvalidConfig(f'window_size must be a power of two, got {ws}')
        if ws < sample_rate / self.fps:
            raise InvalidConfig('window_size is shorter than the hop')
        if self.num_bands < 1:
            raise InvalidConfig('num_bands must be at least 1')
        if not 0 < self.fmin < self.fmax <= sample_rate / 2:
            raise InvalidConfig(
                f'need 0 < fmin < fmax <= {sample_rate / 2}, '
                f'got fmin={self.fmin}, fmax={self.fmax}')
        if self.log_offset <= 0:
            raise InvalidConfig('log_offset must be positive')


@dataclass
class Spectrogram:
    values: np.ndarray
    fps: float
    band_centers: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def num_frames(self):
        return self.values.shape[0]

    @property
    def num_bands(self):
        return self.values.shape[1]


def load_audio(path, expected_rate=SAMPLE_RATE):
    """
    Load a PCM WAV file as a mono clip.

    Parameters
    ----------
    path : str or path-like
        WAV file with 8/16/24/32-bit integer or 32-bit float samples.
    expected_rate : int or None, optional
        Reject files at any other sample rate. No resampling is performed.
        Pass None to accept any rate.

    Returns
    -------
    AudioClip
        Integer samples scaled by ``1 / 2**(bits - 1)``; channels averaged.

    """
    if not os.path.exists(path):
        raise FileNotFoundError(f'no such audio file: {path}')
    try:
        rate, data = wavfile.read(path)
    except ValueError as exc:
        msg = str(exc)
        if 'Unknown wave file format' in msg or 'Unsupported bit depth' in msg:
            raise UnsupportedEncoding(f'{path}: {msg}') from exc
        raise MalformedHeader(f'{path}: {msg}') from exc
    if expected_rate is not None and rate != expected_rate:
        raise UnsupportedSampleRate(
            f'{path}: sample rate {rate} Hz, expected {expected_rate} Hz')
    if data.dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 128.0
    elif np.issubdtype(data.dtype, np.integer):
        # scipy left-justifies 24-bit data in int32 containers
        samples = data.astype(np.float64) / 2.0 ** (8 * data.dtype.itemsize - 1)
    else:
        samples = data.astype(np.float64)
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    return AudioClip(samples, int(rate))


def write_audio(path, clip):
    """Write `clip` as 16-bit PCM WAV."""
    pcm = np.clip(np.round(clip.samples * 32768.0), -32768, 32767)
    wavfile.write(path, clip.sample_rate, pcm.astype('<i2'))


def num_frames(num_samples, sample_rate, fps):
    """Frame count ``ceil(num_samples * fps / sample_rate)``."""
    if float(fps).is_integer():
        return -(-num_samples * int(fps) // sample_rate)
    return math.ceil(num_samples * fps / sample_rate)


def frame_centers(n_frames, sample_rate, fps):
    """Sample index at the center of each frame (half-up rounding)."""
    return np.floor(np.arange(n_frames) * (sample_rate / fps) + 0.5).astype(np.int64)


def band_center_frequencies(num_bands, fmin, fmax):
    """Logarithmically spaced band centers from `fmin` to `fmax`."""
    if num_bands == 1:
        return np.array([math.sqrt(fmin * fmax)])
    return np.geomspace(fmin, fmax, num_bands)


def triangular_filterbank(window_size, sample_rate, num_bands, fmin, fmax):
    """
    Triangular filters with log-spaced centers.

    Each triangle rises from the previous band center to its own center and
    falls to the next one; the outermost edges mirror the log spacing.

    Returns
    -------
    filterbank : numpy array, shape (window_size // 2 + 1, num_bands)
    centers : numpy array, shape (num_bands,)

    """
    centers = band_center_frequencies(num_bands, fmin, fmax)
    ratio = (fmax / fmin) ** (1.0 / max(num_bands - 1, 1)) if num_bands > 1 else 2.0
    edges = np.concatenate([[centers[0] / ratio], centers, [centers[-1] * ratio]])
    freqs = np.arange(window_size // 2 + 1) * sample_rate / window_size
    fb = np.zeros((len(freqs), num_bands))
    for b in range(num_bands):
        lo, mid, hi = edges[b], edges[b + 1], edges[b + 2]
        rising = (freqs - lo) / (mid - lo)
        falling = (hi - freqs) / (hi - mid)
        fb[:, b] = np.clip(np.minimum(rising, falling), 0.0, None)
    return fb, centers


def compute_spectrogram(clip, cfg=None):
    """
    Hann-windowed STFT magnitudes through a log-spaced triangular filterbank.

    Parameters
    ----------
    clip : AudioClip
    cfg : FrontendConfig, optional

    Returns
    -------
    Spectrogram
        ``log(filterbank(|STFT|) + cfg.log_offset)`` with one row per frame.

    """
    cfg = cfg or FrontendConfig()
    sr = clip.sample_rate
    cfg.validate(sr)
    n = len(clip.samples)
    if n < sr / cfg.fps:
        raise ClipTooShort(f'clip has {n} samples, shorter than one hop')
    n_frames = num_frames(n, sr, cfg.fps)
    centers = frame_centers(n_frames, sr, cfg.fps)
    half = cfg.window_size // 2
    padded = np.concatenate([np.zeros(half), clip.samples, np.zeros(half + cfg.window_size)])
    window = get_window('hann', cfg.window_size)
    fb, band_centers = triangular_filterbank(cfg.window_size, sr, cfg.num_bands,
                                             cfg.fmin, cfg.fmax)
    offsets = np.arange(cfg.window_size)
    values = np.empty((n_frames, cfg.num_bands))
    # chunked to bound the memory of the framed signal
    chunk = 512
    for start in range(0, n_frames, chunk):
        idx = centers[start:start + chunk, None] + offsets[None, :]
        frames = padded[idx] * window
        mag = np.abs(np.fft.rfft(frames, axis=1))
        values[start:start + chunk] = mag @ fb
    np.log(values + cfg.log_offset, out=values)
    return Spectrogram(values, float(cfg.fps), band_centers)


def augment_fps(clip, cfg=None, fps_set=AUGMENT_FPS):
    """One spectrogram of the same audio per frame rate in `fps_set`."""
    cfg = cfg or FrontendConfig()
    fps_set = list(fps_set)
    if not fps_set:
        raise InvalidConfig('fps_set must not be empty')
    out = []
    for fps in fps_set:
        variant = FrontendConfig(**{**cfg.__dict__, 'fps': float(fps)})
        out.append(compute_spectrogram(clip, variant))
    return out
