from __future__ import annotations

import math

import numpy as np

from ..errors import RangeUncovered
from .types import DecoderConfig, TempoEstimate


def smooth_histogram(mass, width):
    """Same-length Hamming smoothing, renormalized where the kernel is truncated."""
    kernel = np.hamming(width) if width > 1 else np.ones(1)
    num = np.convolve(mass, kernel, mode='same')
    den = np.convolve(np.ones_like(mass), kernel, mode='same')
    return num / den


def parabolic_offset(left, center, right):
    """Vertex offset of the parabola through three equally spaced points."""
    curvature = 2.0 * center - left - right
    if curvature <= 0:
        return 0.0
    return (right - left) / (2.0 * curvature)


def detect_tempo(activation, cfg=None):
    """
    Tempo from a tempo activation histogram.

    The histogram is smoothed with a Hamming window of ``cfg.smoothing_width``
    bins, its peak inside ``[bpm_min, bpm_max]`` is located (lowest bin on
    ties) and refined by parabolic interpolation over the neighbouring bins.

    Parameters
    ----------
    activation : TempoActivation
    cfg : DecoderConfig, optional

    Returns
    -------
    TempoEstimate
        Confidence is the smoothed peak mass over the smoothed in-range mass.

    """
    cfg = cfg or DecoderConfig()
    mass = activation.mass
    lo, hi = math.ceil(cfg.bpm_min), math.floor(cfg.bpm_max)
    if len(mass) <= hi:
        raise RangeUncovered(
            f'{len(mass)} tempo bins cannot cover {cfg.bpm_max} BPM')
    smoothed = smooth_histogram(mass, cfg.smoothing_width)
    in_range = smoothed[lo:hi + 1]
    peak = lo + int(np.argmax(in_range))
    offset = 0.0
    if 0 < peak < len(smoothed) - 1:
        offset = parabolic_offset(smoothed[peak - 1], smoothed[peak], smoothed[peak + 1])
    bpm = float(np.clip(peak + offset, cfg.bpm_min, cfg.bpm_max))
    total = in_range.sum()
    conf = float(smoothed[peak] / total) if total > 0 else 0.0
    return TempoEstimate(bpm, conf, 'direct')
