"""
Tempo accuracy metrics, dataset manifests, clip segmentation, train/test
splitting and report generation.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .annotations import ClipAnnotation, read_beats
from .errors import ManifestTooSmall, MissingFile, NonPositiveTempo, TempoKitError
from .pipeline import METHODS, check_method, estimate_tempo
from .postproc.infer import median_ibi_tempo

TOLERANCE = 0.04
OCTAVE_FACTORS = (1.0 / 3.0, 0.5, 1.0, 2.0, 3.0)


def _check_tempi(estimated, annotated):
    if not (estimated > 0 and annotated > 0):
        raise NonPositiveTempo(f'tempi must be positive, got {estimated} and {annotated}')


def acc1(estimated, annotated, tolerance=TOLERANCE):
    """True if `estimated` lies within +-4% of `annotated` (boundary inclusive)."""
    _check_tempi(estimated, annotated)
    return abs(estimated - annotated) <= tolerance * annotated


def acc2(estimated, annotated, tolerance=TOLERANCE):
    """Acc1 against 1/3, 1/2, 1, 2 or 3 times the annotated tempo."""
    _check_tempi(estimated, annotated)
    return any(abs(estimated - f * annotated) <= tolerance * f * annotated
               for f in OCTAVE_FACTORS)


def infer_reference_tempo(annotation):
    """Ground-truth tempo of an annotation: ``60 / median(inter-beat interval)``."""
    return median_ibi_tempo(annotation.beat_times)


# -- segmentation ---------------------------------------------------------------

def segment_clips(duration, annotation, target=30.0, min_len=5.0):
    """
    Cut a recording into roughly `target`-second windows.

    Each cut sits on the annotated beat nearest a multiple of `target` (on the
    multiple itself if there are no beats), so no cut falls inside an
    inter-beat interval. Windows shorter than `min_len` are dropped.

    Returns
    -------
    list of (start, end) tuples in seconds

    """
    if duration <= 0:
        return []
    beats = np.asarray(annotation.beat_times if annotation is not None else [], float)
    beats = beats[(beats > 0) & (beats < duration)]
    cuts = [0.0]
    m = 1
    while m * target < duration:
        point = m * target
        if len(beats):
            # nearest beat, earlier one on ties
            point = float(beats[np.argmin(np.abs(beats - point))])
        if point > cuts[-1]:
            cuts.append(point)
        m += 1
    cuts.append(float(duration))
    return [(s, e) for s, e in zip(cuts[:-1], cuts[1:]) if e - s >= min_len]


def rebase_annotation(annotation, start, end):
    """Beats inside ``[start, end)`` shifted so the window starts at 0."""
    t = annotation.beat_times
    inside = t[(t >= start) & (t < end)] - start
    return ClipAnnotation(inside, annotation.reference_bpm,
                          f'{annotation.clip_id}@{start:.3f}' if annotation.clip_id else '')


# -- manifests and splits ------------------------------------------------------

@dataclass
class ManifestEntry:
    clip_id: str
    audio: str
    beats: Optional[str]
    bpm: Optional[float] = None


@dataclass
class DatasetManifest:
    name: str
    entries: List[ManifestEntry]
    root: str = '.'

    def __post_init__(self):
        ids = [e.clip_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError('manifest clip ids must be unique')

    @property
    def ids(self):
        return [e.clip_id for e in self.entries]

    def entry(self, clip_id):
        for e in self.entries:
            if e.clip_id == clip_id:
                return e
        raise KeyError(clip_id)

    def resolve(self, path):
        return path if os.path.isabs(path) else os.path.join(self.root, path)

    def annotation(self, entry):
        if entry.beats is None:
            return ClipAnnotation([], entry.bpm, entry.clip_id)
        path = self.resolve(entry.beats)
        if not os.path.exists(path):
            raise MissingFile(f'beats file not found: {path}')
        return ClipAnnotation(read_beats(path), entry.bpm, entry.clip_id)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            data = json.load(fh)
        entries = [ManifestEntry(str(e['id']), e['audio'], e.get('beats'), e.get('bpm'))
                   for e in data['entries']]
        return cls(data.get('dataset', ''), entries, os.path.dirname(os.path.abspath(path)))

    def to_json(self):
        return {'dataset': self.name,
                'entries': [{'id': e.clip_id, 'audio': e.audio, 'beats': e.beats,
                             'bpm': e.bpm} for e in self.entries]}


@dataclass
class SplitSpec:
    train_ids: List[str]
    test_ids: List[str]
    seed: int
    ratio: float


_MASK64 = (1 << 64) - 1


def splitmix64(seed):
    """Infinite stream of 64-bit integers from the SplitMix64 generator."""
    state = seed & _MASK64
    while True:
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        yield z ^ (z >> 31)


def split_train_test(manifest, ratio=0.8, seed=1234):
    """
    Deterministic train/test partition of the manifest's clip ids.

    Ids are sorted, shuffled by Fisher-Yates driven by SplitMix64(`seed`)
    (``j = draw % (i + 1)``), and the first ``round(ratio * N)`` (half-up)
    become the training set.
    """
    ids = sorted(manifest.ids if hasattr(manifest, 'ids') else manifest)
    if len(ids) < 2:
        raise ManifestTooSmall(f'need at least 2 clips to split, got {len(ids)}')
    rng = splitmix64(seed)
    for i in range(len(ids) - 1, 0, -1):
        j = next(rng) % (i + 1)
        ids[i], ids[j] = ids[j], ids[i]
    n_train = int(np.floor(ratio * len(ids) + 0.5))
    return SplitSpec(ids[:n_train], ids[n_train:], seed, ratio)


# -- evaluation ----------------------------------------------------------------

@dataclass
class EvalRecord:
    clip_id: str
    method: str
    estimated_bpm: Optional[float]
    reference_bpm: float
    acc1: bool
    acc2: bool
    error: Optional[str] = None

    def to_json(self):
        return {'clip_id': self.clip_id, 'method': self.method,
                'estimated_bpm': self.estimated_bpm, 'reference_bpm': self.reference_bpm,
                'acc1': self.acc1, 'acc2': self.acc2, 'error': self.error}


@dataclass
class EvalReport:
    dataset: str
    records: List[EvalRecord] = field(default_factory=list)

    @property
    def methods(self):
        seen = [r.method for r in self.records]
        return [m for m in METHODS if m in seen] + sorted(set(seen) - set(METHODS))

    def aggregates(self):
        out = {}
        for m in self.methods:
            recs = [r for r in self.records if r.method == m]
            out[m] = {'acc1_rate': float(np.mean([r.acc1 for r in recs])),
                      'acc2_rate': float(np.mean([r.acc2 for r in recs])),
                      'clips': len(recs),
                      'failed': sum(r.error is not None for r in recs)}
        return out

    def to_json(self):
        return json.dumps({'dataset': self.dataset,
                           'records': [r.to_json() for r in self.records],
                           'aggregates': self.aggregates()},
                          indent=2, sort_keys=True, allow_nan=False)

    def summary_table(self):
        """Plain-text table with one Acc1/Acc2 row per method."""
        name = self.dataset or 'dataset'
        lines = [f'{"method":<16}{name + " Acc1":>16}{name + " Acc2":>16}']
        for m, agg in self.aggregates().items():
            lines.append(f'{m:<16}{agg["acc1_rate"]:>16.3f}{agg["acc2_rate"]:>16.3f}')
        return '\n'.join(lines)


def _score(clip_id, method, estimated, reference, error=None):
    if estimated is None:
        return EvalRecord(clip_id, method, None, reference, False, False, error)
    return EvalRecord(clip_id, method, float(estimated), float(reference),
                      bool(acc1(estimated, reference)), bool(acc2(estimated, reference)))


def default_threads():
    """Worker count from ``TEMPOKIT_THREADS``, else the number of CPU cores."""
    value = os.environ.get('TEMPOKIT_THREADS')
    if value:
        return max(1, int(value))
    return os.cpu_count() or 1


def evaluate(manifest, methods, test_ids, activation_source, cfg=None, threads=None):
    """
    Score tempo estimation paths on the test clips of a manifest.

    Parameters
    ----------
    manifest : DatasetManifest
    methods : str or sequence of str
        Pipeline names from :data:`tempokit.pipeline.METHODS`, or ``'all'``.
    test_ids : sequence of str
        Clip ids to evaluate (the test side of a :class:`SplitSpec`).
    activation_source : callable
        ``activation_source(manifest, entry) -> Activations``.
    cfg : DecoderConfig, optional
    threads : int, optional
        Clips are processed concurrently with this many threads (default
        :func:`default_threads`); records are always ordered by clip id, then
        method.

    Returns
    -------
    EvalReport

    Notes
    -----
    The reference tempo is the manifest's ``bpm`` when present, otherwise the
    median inter-beat interval of the annotation. A clip whose activation or
    decoder raises a tempokit error counts as a miss on both metrics and keeps
    the error message in its record.

    """
    if isinstance(methods, str):
        methods = list(METHODS) if methods == 'all' else [methods]
    for m in methods:
        check_method(m)
    test_ids = sorted(test_ids)
    if not test_ids:
        raise ManifestTooSmall('test split is empty')
    for cid in test_ids:
        entry = manifest.entry(cid)
        audio = manifest.resolve(entry.audio)
        if not os.path.exists(audio):
            raise MissingFile(f'audio file not found: {audio}')

    def run(cid):
        entry = manifest.entry(cid)
        ann = manifest.annotation(entry)
        reference = entry.bpm if entry.bpm is not None else infer_reference_tempo(ann)
        try:
            acts = activation_source(manifest, entry)
        except TempoKitError as exc:
            return [_score(cid, m, None, reference, str(exc)) for m in methods]
        recs = []
        for m in methods:
            try:
                est = estimate_tempo(m, acts, cfg)
                recs.append(_score(cid, m, est.bpm, reference))
            except TempoKitError as exc:
                recs.append(_score(cid, m, None, reference, str(exc)))
        return recs

    threads = default_threads() if threads is None else threads
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_clip = list(pool.map(run, test_ids))
    else:
        per_clip = [run(cid) for cid in test_ids]
    order = {m: i for i, m in enumerate(methods)}
    records = sorted((r for recs in per_clip for r in recs),
                     key=lambda r: (r.clip_id, order[r.method]))
    return EvalReport(manifest.name, records)
