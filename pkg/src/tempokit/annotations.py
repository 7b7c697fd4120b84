"""Beat annotations and the plain-text beats file format."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass
class ClipAnnotation:
    """Strictly ascending beat times in seconds, plus an optional tempo."""

    beat_times: np.ndarray
    reference_bpm: Optional[float] = None
    clip_id: str = ''

    def __post_init__(self):
        self.beat_times = np.asarray(self.beat_times, dtype=np.float64).reshape(-1)
        if np.any(np.diff(self.beat_times) <= 0):
            raise ValueError('beat_times must be strictly ascending')
        if self.reference_bpm is not None and not self.reference_bpm > 0:
            raise ValueError('reference_bpm must be positive')


def read_beats(path):
    """Read one decimal-seconds timestamp per line; blank lines and '#' comments skipped."""
    times = []
    with open(path) as fh:
        for line in fh:
            line = line.split('#', 1)[0].strip()
            if line:
                # tolerate multi-column annotation files, first column is time
                times.append(float(line.split()[0]))
    return np.array(times, dtype=np.float64)


def write_beats(path, times):
    with open(path, 'w') as fh:
        for t in times:
            fh.write(f'{float(t):.6f}\n')
