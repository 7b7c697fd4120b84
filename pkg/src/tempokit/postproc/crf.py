"""Linear-chain MAP beat sequence around a dominant beat interval."""

from __future__ import annotations

import math

import numpy as np

from .dbn import OBS_FLOOR
from .periodicity import acf_tempo
from .types import BeatSequence, DecoderConfig, check_length


def crf_beats(act, cfg=None, interval=None):
    """
    Best beat sequence under a Gaussian inter-beat interval model.

    Parameters
    ----------
    act : BeatActivation
    cfg : DecoderConfig, optional
    interval : int, optional
        Dominant interval in frames. Defaults to the ACF tempo period.

    Returns
    -------
    BeatSequence

    Notes
    -----
    Every frame contributes its observation log-likelihood, ``log(act[n])``
    for a beat and ``log(1 - act[n])`` otherwise (floored at 1e-12), so only
    the log-odds of beat frames matter to the argmax. Consecutive beats ``g``
    frames apart add ``-(g - interval)**2 / (2 sigma**2)`` with
    ``sigma = interval / 8``; gaps are limited to ``[interval / 2,
    2 * interval]`` within the BPM range. The first and last beats carry no
    edge term.

    """
    cfg = cfg or DecoderConfig()
    lo, hi = check_length(act, cfg)
    if interval is None:
        interval = int(round(60.0 * act.fps / acf_tempo(act, cfg).bpm))
    sigma = interval / 8.0
    g_lo = max(lo, math.ceil(interval / 2))
    g_hi = max(g_lo, min(hi, 2 * interval))
    x = act.values
    n = len(x)
    unary = np.log(np.maximum(x, OBS_FLOOR)) - np.log(np.maximum(1.0 - x, OBS_FLOOR))
    gaps = np.arange(g_lo, g_hi + 1)
    pair = -(gaps - interval) ** 2 / (2.0 * sigma ** 2)

    score = np.full(n, -np.inf)
    back = np.full(n, -1, dtype=np.int64)
    for t in range(n):
        best, arg = 0.0, -1
        prev = t - gaps
        ok = prev >= 0
        if np.any(ok):
            cand = score[prev[ok]] + pair[ok]
            # smallest gap wins ties
            i = int(np.argmax(cand))
            if cand[i] > best:
                best, arg = cand[i], int(prev[ok][i])
        score[t] = unary[t] + best
        back[t] = arg

    t = int(np.argmax(score))
    frames = []
    while t >= 0:
        frames.append(t)
        t = int(back[t])
    return BeatSequence(np.array(frames[::-1]) / act.fps)
