"""
Tempo from a beat activation, six ways
======================================

A beat activation is a per-frame beat probability. Here we fake one with
triangular pulses, add noise and a little timing jitter, and hand it to every
decoder in ``tempokit.postproc``.
"""

import numpy as np

from tempokit.postproc import (DecoderConfig, acf_tempo, comb_beats, comb_tempo, crf_beats,
                               dbn_beats, dbn_tempo, infer_tempo_from_beats)
from tempokit.synth import SyntheticActivationSpec, brute_force_tempo, gen_activation

# 72 BPM at 100 frames per second is a beat every 83.3 frames, so the period
# falls between integer lags
spec = SyntheticActivationSpec(bpm=72, fps=100, duration=30, noise_std=0.05,
                               jitter_std=0.005, seed=1)
act, annotation = gen_activation(spec)
print(f'{len(act)} frames, {len(annotation.beat_times)} true beats')

# the brute-force oracle is a plain double loop over lags on the raw activation
print(f'oracle (raw autocorrelation): {brute_force_tempo(act):.1f} BPM')

cfg = DecoderConfig()

# estimating the tempo straight from the activation
for name, decoder in [('ACF', acf_tempo), ('comb filter', comb_tempo), ('DBN', dbn_tempo)]:
    est = decoder(act, cfg)
    print(f'{name:>12} estimate: {est.bpm:6.1f} BPM   confidence {est.confidence:.3f}')

# decoding beats first, then inferring the tempo from the inter-beat intervals
for name, tracker in [('CRF', crf_beats), ('DBN', dbn_beats), ('comb filter', comb_beats)]:
    beats = tracker(act, cfg)
    est = infer_tempo_from_beats(beats, cfg)
    print(f'{name:>12} beats: {len(beats):3d} beats -> {est.bpm:6.1f} BPM')

# the decoders also report where the beats are; compare with the truth
beats = dbn_beats(act, cfg)
error = [np.min(np.abs(beats.times - t)) for t in annotation.beat_times]
print(f'DBN beat timing error: median {1000 * np.median(error):.1f} ms')
