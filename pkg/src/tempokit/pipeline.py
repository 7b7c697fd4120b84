"""
The seven tempo estimation paths, from activations to a single BPM value.

``direct``
    detect the tempo from the tempo activation;
``{acf,dbn,comb}-estimate``
    estimate the tempo from the beat activation;
``{crf,dbn,comb}-infer``
    decode beats from the beat activation, then infer the tempo from them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .audio import FrontendConfig, compute_spectrogram
from .errors import DataError, UnknownMethod
from .postproc import (BeatActivation, DecoderConfig, TempoActivation, TempoEstimate,
                       acf_tempo, comb_beats, comb_tempo, crf_beats, dbn_beats, dbn_tempo,
                       detect_tempo, infer_tempo_from_beats)
from .tcn import forward
from .tcn.targets import NOMINAL_FPS

METHODS = ('direct', 'acf-estimate', 'dbn-estimate', 'comb-estimate',
           'crf-infer', 'dbn-infer', 'comb-infer')

_ESTIMATORS = {'acf-estimate': acf_tempo, 'dbn-estimate': dbn_tempo,
               'comb-estimate': comb_tempo}
_BEAT_TRACKERS = {'crf-infer': crf_beats, 'dbn-infer': dbn_beats, 'comb-infer': comb_beats}


@dataclass
class Activations:
    beat: BeatActivation
    tempo: Optional[TempoActivation] = None


def check_method(method):
    if method not in METHODS:
        raise UnknownMethod(f'unknown method {method!r}; choose from {", ".join(METHODS)}')
    return method


def model_activations(weights, clip, frontend=None):
    """Run the front-end and network on an audio clip."""
    frontend = frontend or FrontendConfig()
    spec = compute_spectrogram(clip, frontend)
    out = forward(weights, spec)
    beat = np.clip(out.beat_activation.astype(np.float64), 0.0, 1.0)
    tempo = out.tempo_activation.astype(np.float64)
    return Activations(BeatActivation(beat, spec.fps), TempoActivation(tempo / tempo.sum()))


def estimate_tempo(method, acts, cfg=None):
    """
    Estimate one tempo from `acts` along the path named by `method`.

    For ``direct`` the tempo bins are read at the nominal 100 fps and scaled
    to the frame rate of the beat activation.
    """
    cfg = cfg or DecoderConfig()
    check_method(method)
    if method == 'direct':
        if acts.tempo is None:
            raise DataError("method 'direct' needs a tempo activation (a trained model)")
        est = detect_tempo(acts.tempo, cfg)
        scale = acts.beat.fps / NOMINAL_FPS if acts.beat is not None else 1.0
        return TempoEstimate(est.bpm * scale, est.confidence, method, est.clamped)
    if method in _ESTIMATORS:
        est = _ESTIMATORS[method](acts.beat, cfg)
        return TempoEstimate(est.bpm, est.confidence, method, est.clamped)
    beats = _BEAT_TRACKERS[method](acts.beat, cfg)
    est = infer_tempo_from_beats(beats, cfg)
    return TempoEstimate(est.bpm, est.confidence, method, est.clamped)
