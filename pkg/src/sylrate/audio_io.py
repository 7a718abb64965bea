"""Audio, annotation and corpus loading.

Annotations follow the TIMIT ``.PHN`` convention (``start_sample end_sample
label`` per line).  A JSON manifest binds wav files to annotations, or to
explicit nucleus intervals, together with the set of labels that count as
vowels.
"""

from __future__ import annotations

import json
import os
import wave
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MIN_VOWEL_S = 0.050

# Convenience inventory for TIMIT-style transcriptions; manifests may override.
TIMIT_VOWELS = frozenset(
    "iy ih eh ey ae aa aw ay ah ao oy ow uh uw ux er ax ix axr ax-h".split()
)


class WavFormatError(ValueError):
    """Unsupported or corrupt WAV file."""


class AnnotationError(ValueError):
    """Malformed or inconsistent phonetic annotation."""


class CorpusError(ValueError):
    """Invalid corpus manifest."""


@dataclass(frozen=True)
class AudioClip:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional (mono)")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if samples.size and np.max(np.abs(samples)) > 1.0:
            raise ValueError("samples must lie in [-1, 1]")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class PhoneSegment:
    start_s: float
    end_s: float
    label: str

    def __post_init__(self):
        if not 0 <= self.start_s < self.end_s:
            raise AnnotationError(
                f"segment needs 0 <= start < end, got [{self.start_s}, {self.end_s}]"
            )


@dataclass(frozen=True)
class VowelSegment:
    start_s: float
    end_s: float

    @property
    def midpoint_s(self) -> float:
        return 0.5 * (self.start_s + self.end_s)


@dataclass(frozen=True)
class UtteranceRecord:
    id: str
    audio: AudioClip
    vowel_segments: tuple[VowelSegment, ...]
    syllable_count: int

    @property
    def duration_s(self) -> float:
        return self.audio.duration_s


@dataclass(frozen=True)
class Corpus:
    utterances: tuple[UtteranceRecord, ...] = field(default_factory=tuple)

    def __len__(self):
        return len(self.utterances)

    def __iter__(self):
        return iter(self.utterances)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return Corpus(self.utterances[item])
        return self.utterances[item]

    def subset(self, indices: Iterable[int]) -> "Corpus":
        return Corpus(tuple(self.utterances[i] for i in indices))


def read_wav(path) -> AudioClip:
    """Read a 16-bit PCM mono RIFF/WAVE file, scaling samples by 1/32768."""
    try:
        with wave.open(os.fspath(path), "rb") as wf:
            n_channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            raw = wf.readframes(wf.getnframes())
    except wave.Error as exc:
        # wave only understands PCM; e.g. "unknown format: 3" for float data
        raise WavFormatError(f"{path}: audio_format: {exc}") from exc
    except EOFError as exc:
        raise WavFormatError(f"{path}: header: truncated file") from exc
    if n_channels != 1:
        raise WavFormatError(f"{path}: channels: expected 1, got {n_channels}")
    if width != 2:
        raise WavFormatError(
            f"{path}: bits_per_sample: expected 16, got {8 * width}"
        )
    if rate <= 0:
        raise WavFormatError(f"{path}: sample_rate: invalid value {rate}")
    if len(raw) % 2:
        raise WavFormatError(f"{path}: data: odd byte count {len(raw)}")
    ints = np.frombuffer(raw, dtype="<i2")
    return AudioClip(ints.astype(np.float64) / 32768.0, rate)


def write_wav(path, clip: AudioClip) -> None:
    """Write ``clip`` as 16-bit PCM mono, rounding to the nearest step."""
    ints = np.clip(np.round(clip.samples * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(os.fspath(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(clip.sample_rate)
        wf.writeframes(ints.tobytes())


def parse_phonetic_annotation(path, sample_rate: int) -> list[PhoneSegment]:
    segments = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) < 3:
                raise AnnotationError(f"{path}:{lineno}: expected 'start end label'")
            try:
                start, end = int(parts[0]), int(parts[1])
            except ValueError:
                raise AnnotationError(
                    f"{path}:{lineno}: sample positions must be integers"
                ) from None
            if start < 0 or end < 0:
                raise AnnotationError(f"{path}:{lineno}: negative sample position")
            if start >= end:
                raise AnnotationError(
                    f"{path}:{lineno}: start {start} is not before end {end}"
                )
            label = " ".join(parts[2:])
            segments.append(PhoneSegment(start / sample_rate, end / sample_rate, label))
    return segments


def pad_segment(start_s: float, end_s: float, duration_s: float) -> VowelSegment:
    """Widen a segment about its midpoint to MIN_VOWEL_S, clamped to the clip."""
    if end_s - start_s < MIN_VOWEL_S:
        mid = 0.5 * (start_s + end_s)
        start_s = mid - 0.5 * MIN_VOWEL_S
        end_s = mid + 0.5 * MIN_VOWEL_S
    return VowelSegment(max(start_s, 0.0), min(end_s, duration_s))


def derive_vowel_nuclei(
    segments: Sequence[PhoneSegment],
    vowel_labels: Iterable[str],
    utterance_duration_s: float,
) -> list[VowelSegment]:
    """Keep vowel phones, padded to at least 50 ms; overlaps are not merged."""
    vowels = set(vowel_labels)
    return [
        pad_segment(s.start_s, s.end_s, utterance_duration_s)
        for s in segments
        if s.label in vowels
    ]


def make_record(uid: str, clip: AudioClip, nuclei) -> UtteranceRecord:
    """Build a record from explicit ``(start_s, end_s)`` nucleus intervals."""
    segs = tuple(pad_segment(float(a), float(b), clip.duration_s) for a, b in nuclei)
    return UtteranceRecord(uid, clip, segs, len(segs))


def load_corpus(manifest_path) -> Corpus:
    """Load a corpus from a JSON manifest.

    The manifest is an object ``{"vowel_labels": [...], "utterances": [...]}``
    where each utterance has ``id`` and ``wav`` plus either ``phn`` (a
    TIMIT-style annotation) or ``nuclei`` (a list of ``[start_s, end_s]``).
    Relative paths resolve against the manifest's directory.
    """
    manifest_path = Path(manifest_path)
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    if isinstance(manifest, list):
        entries, vowel_labels = manifest, TIMIT_VOWELS
    else:
        entries = manifest.get("utterances", [])
        vowel_labels = manifest.get("vowel_labels", TIMIT_VOWELS)
    if not entries:
        raise CorpusError(f"{manifest_path}: manifest lists no utterances")

    base = manifest_path.parent
    records = []
    for entry in entries:
        uid = str(entry.get("id", ""))
        if not uid or "wav" not in entry:
            raise CorpusError(f"{manifest_path}: entry {entry!r} needs 'id' and 'wav'")
        wav_path = base / entry["wav"]
        if not wav_path.is_file():
            raise FileNotFoundError(f"utterance {uid}: missing wav file {wav_path}")
        clip = read_wav(wav_path)
        if entry.get("phn") is not None:
            phn_path = base / entry["phn"]
            if not phn_path.is_file():
                raise FileNotFoundError(
                    f"utterance {uid}: missing annotation file {phn_path}"
                )
            phones = parse_phonetic_annotation(phn_path, clip.sample_rate)
            segs = tuple(derive_vowel_nuclei(phones, vowel_labels, clip.duration_s))
            records.append(UtteranceRecord(uid, clip, segs, len(segs)))
        elif entry.get("nuclei") is not None:
            records.append(make_record(uid, clip, entry["nuclei"]))
        else:
            raise CorpusError(f"utterance {uid}: needs 'phn' or 'nuclei'")
    return Corpus(tuple(records))


def write_manifest(path, entries, vowel_labels=("v",)) -> None:
    with open(path, "w") as fh:
        json.dump(
            {"vowel_labels": list(vowel_labels), "utterances": list(entries)},
            fh,
            indent=1,
        )
        fh.write("\n")
