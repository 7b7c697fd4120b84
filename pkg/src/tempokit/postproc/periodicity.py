"""
Tempo from periodicity of the beat activation: autocorrelation and a bank of
resonating feedback comb filters, plus comb-filter beat placement.
"""

from __future__ import annotations

import numpy as np

from ..errors import FlatActivation
from .types import (BeatSequence, DecoderConfig, TempoEstimate, check_length,
                    smooth_activation)


def acf_scores(act, cfg=None):
    """
    Autocorrelation of the activation at every lag in the BPM range.

    ``r[lag] = sum_n x[n] * x[n + lag] / N`` where ``x`` is the activation
    smoothed over ``cfg.act_smooth`` seconds. Dividing by the full length
    rather than the overlap keeps the estimator biased towards shorter lags, so
    a clean pulse train scores its own period above its multiples.

    Returns
    -------
    lags : numpy array of int
    scores : numpy array

    """
    cfg = cfg or DecoderConfig()
    lo, hi = check_length(act, cfg)
    x = smooth_activation(act, cfg)
    n = len(x)
    lags = np.arange(lo, hi + 1)
    scores = np.array([x[:n - lag] @ x[lag:] if lag < n else 0.0 for lag in lags]) / n
    return lags, scores


def comb_scores(act, cfg=None):
    """
    Resonance of feedback comb filters ``y[n] = act[n] + alpha * y[n - lag]``.

    The score of a lag is ``mean(act * y)``; like :func:`acf_scores` it runs
    on the smoothed activation, which lets integer lags resonate with
    fractional beat periods.
    """
    cfg = cfg or DecoderConfig()
    lo, hi = check_length(act, cfg)
    x = smooth_activation(act, cfg)
    n = len(x)
    lags = np.arange(lo, hi + 1)
    scores = np.empty(len(lags))
    alpha = cfg.comb_alpha
    for i, lag in enumerate(lags):
        y = x.copy()
        for start in range(lag, n, lag):
            stop = min(start + lag, n)
            y[start:stop] += alpha * y[start - lag:stop - lag]
        scores[i] = x @ y / n
    return lags, scores


def acf_tempo(act, cfg=None):
    """
    Tempo of the strongest autocorrelation lag.

    Parameters
    ----------
    act : BeatActivation
    cfg : DecoderConfig, optional

    Returns
    -------
    TempoEstimate
        ``bpm = 60 * fps / lag``; confidence is the winning score's share of
        the summed scores.

    """
    cfg = cfg or DecoderConfig()
    lags, scores = acf_scores(act, cfg)
    idx = int(np.argmax(scores))
    total = scores.sum()
    conf = float(scores[idx] / total) if total > 0 else 0.0
    return TempoEstimate(60.0 * act.fps / lags[idx], conf, 'acf-estimate')


def _comb_best_lag(act, cfg):
    if np.ptp(act.values) == 0:
        raise FlatActivation('activation is constant; no periodicity to resonate with')
    lags, scores = comb_scores(act, cfg)
    idx = int(np.argmax(scores))
    return lags, scores, idx


def comb_tempo(act, cfg=None):
    """Tempo of the most resonant comb filter lag."""
    cfg = cfg or DecoderConfig()
    lags, scores, idx = _comb_best_lag(act, cfg)
    conf = float(scores[idx] / scores.sum())
    return TempoEstimate(60.0 * act.fps / lags[idx], conf, 'comb-estimate')


def comb_beats(act, cfg=None):
    """
    Place a beat grid at the comb filter period and snap it to the activation.

    The phase maximizing the summed activation on the grid is chosen (earliest
    on ties); each grid point then moves to the local maximum within
    ``round(lag / 10)`` frames. Grid points with nothing but zeros around them
    (e.g. leading silence) are dropped.
    """
    cfg = cfg or DecoderConfig()
    lags, _, idx = _comb_best_lag(act, cfg)
    lag = int(lags[idx])
    x = act.values
    n = len(x)
    phase_scores = np.array([x[p::lag].sum() for p in range(min(lag, n))])
    phase = int(np.argmax(phase_scores))
    grid = np.arange(phase, n, lag)
    reach = int(np.floor(lag / 10.0 + 0.5))
    frames = []
    for g in grid:
        lo, hi = max(0, g - reach), min(n, g + reach + 1)
        k = int(np.argmax(x[lo:hi]))
        if x[lo + k] > 0:
            frames.append(lo + k)
    frames = np.unique(np.array(frames, dtype=np.int64))
    return BeatSequence(frames / act.fps)
