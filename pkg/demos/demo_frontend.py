"""
From audio to log-filterbank spectrogram
========================================

The network never sees raw audio. It reads a log-compressed, log-frequency
magnitude spectrogram, computed here from a synthetic click track.
"""

import numpy as np

from tempokit.audio import FrontendConfig, augment_fps, compute_spectrogram
from tempokit.synth import ClickTrackSpec, gen_click_track

clip, annotation = gen_click_track(ClickTrackSpec(bpm=100, duration=10))
print(f'{clip.duration:.1f} s at {clip.sample_rate} Hz, beats every '
      f'{np.diff(annotation.beat_times)[0]:.2f} s')

# 100 frames per second means a hop of 441 samples
spec = compute_spectrogram(clip, FrontendConfig(fps=100))
print('spectrogram shape (frames, bands):', spec.values.shape)

# the 1 kHz clicks light up the band whose center is closest to 1 kHz
band = int(np.argmax(spec.values.max(axis=0)))
print(f'loudest band: #{band}, centered at {spec.band_centers[band]:.0f} Hz')

# the click energy recurs every 60 frames (0.6 s)
energy = spec.values.sum(axis=1)
peaks = np.flatnonzero(energy > energy.mean() + 2 * energy.std())
print('first energetic frames:', peaks[:8])

# frame-rate augmentation renders the same audio at 95, 100 and 105 fps; the
# beat period in frames changes, which the network sees as a tempo change
for s in augment_fps(clip):
    print(f'{s.fps:5.0f} fps: {s.num_frames} frames, beat period {60 / 100 * s.fps:.1f} frames')
