"""
Viterbi decoding of a (beat period, phase) state space.

Each state is a pair ``(tau, phi)`` with ``tau`` the beat period in frames and
``phi`` the frames remaining until the next beat. The phase counts down by one
per frame; ``phi == 0`` is a beat, after which the period may change.
"""

from __future__ import annotations

import numpy as np

from .types import BeatSequence, DecoderConfig, TempoEstimate, check_length

OBS_FLOOR = 1e-12


class BeatStateSpace:
    """Flat layout of all ``(tau, phi)`` states, one block per period."""

    def __init__(self, min_period, max_period):
        self.periods = np.arange(min_period, max_period + 1)
        self.first = np.concatenate([[0], np.cumsum(self.periods)[:-1]])
        self.num_states = int(self.periods.sum())
        # beat states (phi = 0) open each block, entry states (phi = tau - 1) close it
        self.beat_states = self.first
        self.entry_states = self.first + self.periods - 1

    def decompose(self, state):
        block = int(np.searchsorted(self.first, state, side='right') - 1)
        return block, int(state - self.first[block])


def tempo_transitions(periods, change_prob, penalty):
    """Log-probability of moving from period ``periods[i]`` to ``periods[j]`` at a beat."""
    ratio = np.abs(np.log(periods[None, :] / periods[:, None]))
    trans = np.log(change_prob) - penalty * ratio
    np.fill_diagonal(trans, np.log1p(-change_prob))
    return trans


def viterbi(act, cfg=None):
    """
    Most likely state path through the beat state space.

    Returns
    -------
    periods : numpy array of int
        Beat period (frames) of the path at every frame.
    beats : numpy array of int
        Frames at which the path is in a beat state.
    log_prob : float

    """
    cfg = cfg or DecoderConfig()
    lo, hi = check_length(act, cfg)
    space = BeatStateSpace(lo, hi)
    x = act.values
    n = len(x)
    obs_beat = np.log(np.maximum(x, OBS_FLOOR))
    obs_none = np.log(np.maximum(1.0 - x, OBS_FLOOR))
    trans = tempo_transitions(space.periods.astype(float),
                              cfg.dbn_tempo_change_prob, cfg.dbn_tempo_penalty)
    beat_idx, entry_idx = space.beat_states, space.entry_states
    # only entry states have more than one possible predecessor
    pointers = np.zeros((n, len(space.periods)), dtype=np.int32)

    delta = np.full(space.num_states, -np.log(space.num_states) + obs_none[0])
    delta[beat_idx] += obs_beat[0] - obs_none[0]
    new = np.empty_like(delta)
    for t in range(1, n):
        cand = delta[beat_idx][:, None] + trans
        best = np.argmax(cand, axis=0)
        new[:-1] = delta[1:]
        new[entry_idx] = cand[best, np.arange(len(best))]
        pointers[t] = best
        new += obs_none[t]
        new[beat_idx] += obs_beat[t] - obs_none[t]
        delta, new = new, delta

    state = int(np.argmax(delta))
    log_prob = float(delta[state])
    block, phase = space.decompose(state)
    path_blocks = np.empty(n, dtype=np.int64)
    path_phase = np.empty(n, dtype=np.int64)
    for t in range(n - 1, -1, -1):
        path_blocks[t] = block
        path_phase[t] = phase
        if t == 0:
            break
        if phase < space.periods[block] - 1:
            phase += 1
        else:
            block = int(pointers[t, block])
            phase = 0
    return space.periods[path_blocks], np.flatnonzero(path_phase == 0), log_prob


def _beat_contrast(x, beats):
    if len(beats) == 0 or len(beats) == len(x):
        return 0.0
    mask = np.zeros(len(x), dtype=bool)
    mask[beats] = True
    return float(x[mask].mean() - x[~mask].mean())


def dbn_tempo(act, cfg=None):
    """
    Global tempo from the Viterbi path.

    The period occupied by the path for the most frames (shortest period on
    ties) gives ``bpm = 60 * fps / period``. Confidence is that period's share
    of frames times the activation contrast between beat and non-beat frames,
    clipped to [0, 1]; a featureless activation scores near zero.
    """
    cfg = cfg or DecoderConfig()
    periods, beats, _ = viterbi(act, cfg)
    values, counts = np.unique(periods, return_counts=True)
    k = int(np.argmax(counts))
    share = counts[k] / len(periods)
    conf = float(np.clip(share * _beat_contrast(act.values, beats), 0.0, 1.0))
    return TempoEstimate(60.0 * act.fps / values[k], conf, 'dbn-estimate')


def dbn_beats(act, cfg=None):
    """Beat times at the beat states of the Viterbi path."""
    _, beats, _ = viterbi(act, cfg)
    return BeatSequence(beats / act.fps)
