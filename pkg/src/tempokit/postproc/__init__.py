"""Decoders turning beat/tempo activations into beats and tempi."""

from .crf import crf_beats
from .dbn import dbn_beats, dbn_tempo, viterbi
from .detect import detect_tempo
from .infer import infer_tempo_from_beats, median_ibi_tempo
from .periodicity import acf_scores, acf_tempo, comb_beats, comb_scores, comb_tempo
from .types import (BeatActivation, BeatSequence, DecoderConfig, TempoActivation,
                    TempoEstimate)

__all__ = [
    'BeatActivation', 'BeatSequence', 'DecoderConfig', 'TempoActivation',
    'TempoEstimate', 'acf_scores', 'acf_tempo', 'comb_beats', 'comb_scores',
    'comb_tempo', 'crf_beats', 'dbn_beats', 'dbn_tempo', 'detect_tempo',
    'infer_tempo_from_beats', 'median_ibi_tempo', 'viterbi',
]
