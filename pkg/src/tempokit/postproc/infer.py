from __future__ import annotations

import numpy as np

from ..errors import TooFewBeats
from .types import DecoderConfig, TempoEstimate


def median_ibi_tempo(times):
    """``60 / median(inter-beat interval)`` without any range clamping."""
    times = np.asarray(times, dtype=np.float64)
    if len(times) < 2:
        raise TooFewBeats(f'need at least 2 beats, got {len(times)}')
    return 60.0 / float(np.median(np.diff(times)))


def infer_tempo_from_beats(beats, cfg=None):
    """
    Tempo from the median inter-beat interval of a beat sequence.

    The result is clamped to ``[bpm_min, bpm_max]`` (``clamped`` is set when
    that happens). Confidence is the fraction of intervals within 10% of the
    median.
    """
    cfg = cfg or DecoderConfig()
    times = getattr(beats, 'times', beats)
    bpm = median_ibi_tempo(times)
    ibis = np.diff(np.asarray(times, dtype=np.float64))
    median = float(np.median(ibis))
    conf = float(np.mean(np.abs(ibis - median) <= 0.1 * median + 1e-12))
    clamped = not cfg.bpm_min <= bpm <= cfg.bpm_max
    return TempoEstimate(float(np.clip(bpm, cfg.bpm_min, cfg.bpm_max)), conf,
                         'infer', clamped)
