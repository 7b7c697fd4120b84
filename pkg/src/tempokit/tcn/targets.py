"""Training targets and the two-headed cross-entropy loss."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_expit, logsumexp, xlogy

from ..errors import BeatOutOfRange, ShapeMismatch, TempoOutOfRange
from ..postproc.infer import median_ibi_tempo

NOMINAL_FPS = 100.0


@dataclass
class FrameTargets:
    beat_target: np.ndarray
    tempo_target: np.ndarray


def round_half_up(x):
    """``floor(x + 0.5)``; 52.5 -> 53 (not banker's rounding)."""
    return int(math.floor(x + 0.5))


def encode_targets(annotation, fps, tempo_bins, num_frames, nominal_fps=NOMINAL_FPS):
    """
    Frame-level beat targets and a smoothed tempo distribution.

    Parameters
    ----------
    annotation : ClipAnnotation
    fps : float
        Frame rate of the spectrogram the targets belong to.
    tempo_bins : int
    num_frames : int
        Length of the beat target (the spectrogram's frame count).
    nominal_fps : float or None, optional
        The network reads tempo in frames, so a spectrogram at `fps` shows a
        beat period that a `nominal_fps` spectrogram would show for
        ``bpm * nominal_fps / fps``. The tempo label is scaled accordingly,
        which turns frame-rate augmentation into tempo augmentation. None keeps
        the annotated BPM.

    Returns
    -------
    FrameTargets
        Beat target 1.0 at ``round(t * fps)`` (half-up) and 0.5 on both
        neighbours; tempo target 0.5 at ``round(bpm)`` and 0.25 on each
        neighbour, renormalized if a neighbour falls outside the bins.

    """
    beat = np.zeros(num_frames)
    for t in annotation.beat_times:
        idx = round_half_up(t * fps)
        if t < 0 or idx >= num_frames:
            raise BeatOutOfRange(f'beat at {t:.3f}s lies outside {num_frames} frames')
        for j in (idx - 1, idx + 1):
            if 0 <= j < num_frames:
                beat[j] = max(beat[j], 0.5)
        beat[idx] = 1.0

    bpm = annotation.reference_bpm
    if bpm is None:
        bpm = median_ibi_tempo(annotation.beat_times)
    if nominal_fps is not None:
        bpm = bpm * nominal_fps / fps
    center = round_half_up(bpm)
    if not 0 <= center < tempo_bins:
        raise TempoOutOfRange(f'{bpm:.2f} BPM does not fit {tempo_bins} tempo bins')
    tempo = np.zeros(tempo_bins)
    for j, value in ((center - 1, 0.25), (center, 0.5), (center + 1, 0.25)):
        if 0 <= j < tempo_bins:
            tempo[j] = value
    tempo /= tempo.sum()
    return FrameTargets(beat, tempo)


def multitask_loss(output, targets):
    """
    Binary cross-entropy of the beat head plus categorical cross-entropy of
    the tempo head, with unit weights.

    Returns
    -------
    loss : float
    grad_beat_logits : numpy array
        Gradient w.r.t. the beat head's pre-sigmoid logits.
    grad_tempo_logits : numpy array
        Gradient w.r.t. the tempo head's pre-softmax logits.

    Notes
    -----
    With logits available the loss is evaluated in log space; otherwise it is
    computed from the probabilities with ``0 * log(0) = 0``.

    """
    y = np.asarray(targets.beat_target, dtype=np.float64)
    q = np.asarray(targets.tempo_target, dtype=np.float64)
    p = np.asarray(output.beat_activation, dtype=np.float64)
    r = np.asarray(output.tempo_activation, dtype=np.float64)
    if p.shape != y.shape or r.shape != q.shape:
        raise ShapeMismatch(
            f'output shapes {p.shape}/{r.shape} vs targets {y.shape}/{q.shape}')
    if output.beat_logits is not None:
        z = np.asarray(output.beat_logits, dtype=np.float64)
        beat_loss = -np.mean(y * log_expit(z) + (1.0 - y) * log_expit(-z))
    else:
        beat_loss = -np.mean(xlogy(y, p) + xlogy(1.0 - y, 1.0 - p))
    if output.tempo_logits is not None:
        s = np.asarray(output.tempo_logits, dtype=np.float64)
        tempo_loss = float(logsumexp(s) - q @ s)
    else:
        tempo_loss = float(-np.sum(xlogy(q, r)))
    grad_beat = (p - y) / len(y)
    grad_tempo = r - q
    return float(beat_loss + tempo_loss), grad_beat, grad_tempo
