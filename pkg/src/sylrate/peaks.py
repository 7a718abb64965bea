"""Local maxima, prominence and thresholded nucleus detection.

The helpers work on several envelopes laid end to end (``starts``/``ends``
delimit each one) so that training can score a whole corpus per call.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Peak:
    frame_index: int
    time_s: float
    value: float
    prominence: float


@dataclass(frozen=True)
class DetectionResult:
    nuclei: tuple
    speech_rate_sps: float
    duration_s: float
    id: str = ""

    @property
    def count(self) -> int:
        return len(self.nuclei)

    @property
    def times(self) -> np.ndarray:
        return np.array([p.time_s for p in self.nuclei], dtype=float)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "count": self.count,
            "speech_rate_sps": self.speech_rate_sps,
            "nuclei": [
                {"t": p.time_s, "value": p.value, "prominence": p.prominence}
                for p in self.nuclei
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["id", "frame_index", "t", "value", "prominence"])
        for p in self.nuclei:
            w.writerow([self.id, p.frame_index, repr(p.time_s), repr(p.value), repr(p.prominence)])
        return buf.getvalue()


def _bounds(n, starts, ends):
    if starts is None:
        return np.array([0]), np.array([n])
    return np.asarray(starts, dtype=np.intp), np.asarray(ends, dtype=np.intp)


def find_local_maxima(envelope, starts=None, ends=None) -> np.ndarray:
    """Indices strictly above both neighbours; plateaus give their centre.

    A plateau of even length yields the index left of centre. The first and
    last sample of each envelope are never candidates.
    """
    x = np.asarray(envelope, dtype=float)
    n = x.size
    if n < 3:
        return np.zeros(0, dtype=np.intp)
    starts, ends = _bounds(n, starts, ends)

    new_run = np.ones(n, dtype=bool)
    new_run[1:] = x[1:] != x[:-1]
    new_run[starts[starts < n]] = True
    run_start = np.flatnonzero(new_run)
    run_len = np.diff(np.append(run_start, n))
    vals = x[run_start]

    seg = np.searchsorted(starts, run_start, side="right") - 1
    boundary = seg[1:] != seg[:-1]
    ok = np.ones(run_start.size, dtype=bool)
    ok[0] = ok[-1] = False
    ok[1:] &= ~boundary
    ok[:-1] &= ~boundary
    ok[1:] &= vals[1:] > vals[:-1]
    ok[:-1] &= vals[:-1] > vals[1:]
    ok[0] = ok[-1] = False
    return run_start[ok] + (run_len[ok] - 1) // 2


def prominences(envelope, candidates, starts=None, ends=None) -> np.ndarray:
    """Prominence of each candidate: the smaller of its two drops.

    The left valley is the minimum between the candidate and the previous
    candidate (or the envelope start); the right valley likewise towards the
    next candidate (or the end).
    """
    x = np.asarray(envelope, dtype=float)
    cands = np.asarray(candidates, dtype=np.intp)
    if cands.size == 0:
        return np.zeros(0)
    starts, ends = _bounds(x.size, starts, ends)

    seg = np.searchsorted(starts, cands, side="right") - 1
    change = seg[1:] != seg[:-1]
    first = np.r_[True, change]
    last = np.r_[change, True]
    pts = np.sort(np.concatenate([cands, starts[seg[first]], ends[seg[last]] - 1]))
    # min over [pts[j], pts[j+1]] inclusive
    run_min = np.minimum(np.minimum.reduceat(x, pts)[:-1], x[pts[1:]])
    pos = np.searchsorted(pts, cands)
    valley = np.maximum(run_min[pos - 1], run_min[pos])
    return x[cands] - valley


def find_peaks(envelope, starts=None, ends=None):
    cands = find_local_maxima(envelope, starts, ends)
    return cands, prominences(envelope, cands, starts, ends)


def detect_syllables(
    envelope,
    mask,
    threshold: float,
    hop_s: float = 0.010,
    duration_s: float | None = None,
    id: str = "",
) -> DetectionResult:
    """Nuclei: local maxima on speech frames with prominence >= ``threshold``.

    Prominence is measured on the full envelope; the speech mask only
    filters the final candidates.
    """
    x = np.asarray(envelope, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if threshold <= 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    if mask.shape != x.shape:
        raise ValueError("envelope and mask lengths differ")
    if duration_s is None:
        duration_s = x.size * hop_s

    cands, prom = find_peaks(x)
    keep = mask[cands] & (prom >= threshold)
    nuclei = tuple(
        Peak(int(i), int(i) * hop_s, float(x[i]), float(p))
        for i, p in zip(cands[keep], prom[keep])
    )
    rate = len(nuclei) / duration_s if duration_s > 0 else 0.0
    return DetectionResult(nuclei, rate, duration_s, id)
