"""Synthetic utterances with known syllable nuclei.

Each syllable is a raised-cosine burst of a harmonic tone whose partials sit
in chosen low "formant" bands.  Gaps are silent or, at random, carry a burst
of noise confined to the top two bands, mimicking fricatives.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from sylrate.audio_io import AudioClip, Corpus, make_record, write_manifest, write_wav
from sylrate.envelope import DEFAULT_BAND_EDGES

PEAK_LEVEL = 0.9
FRICATIVE_DB = -10.0
FRICATIVE_BANDS = (6, 7)
# keep partials and noise clear of the 50 Hz band transitions
EDGE_MARGIN_HZ = 30.0


@dataclass(frozen=True)
class SynthSpec:
    n_syllables: int = 5
    syllable_dur_s: float = 0.18
    gap_dur_s: float = 0.08
    f0_hz: float = 120.0
    formant_bands: tuple = (1, 2, 3)  # 1-based band numbers
    fricative_prob: float = 0.3
    stress_range_db: float = 20.0  # syllable levels drawn from [-range, 0] dB
    noise_db: float | None = -40.0  # None: no floor noise
    sample_rate: int = 16000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "formant_bands", tuple(int(b) for b in self.formant_bands))
        if self.n_syllables < 0:
            raise ValueError("n_syllables must be >= 0")
        if self.syllable_dur_s <= 0 or self.gap_dur_s <= 0:
            raise ValueError("durations must be positive")
        if self.stress_range_db < 0:
            raise ValueError("stress_range_db must be >= 0")
        if not 0 <= self.fricative_prob <= 1:
            raise ValueError("fricative_prob must lie in [0, 1]")
        if not self.formant_bands or not all(1 <= b <= 7 for b in self.formant_bands):
            raise ValueError("formant_bands must be band numbers in 1..7")

    @property
    def duration_s(self) -> float:
        return self.n_syllables * self.syllable_dur_s + (self.n_syllables + 1) * self.gap_dur_s

    def to_dict(self) -> dict:
        d = asdict(self)
        d["formant_bands"] = list(self.formant_bands)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})


def _band_range(band: int, sample_rate: int):
    lo = DEFAULT_BAND_EDGES[band - 1] + EDGE_MARGIN_HZ
    hi = min(DEFAULT_BAND_EDGES[band] - EDGE_MARGIN_HZ, 0.5 * sample_rate - EDGE_MARGIN_HZ)
    return lo, hi


def _harmonics(f0: float, bands, sample_rate: int) -> np.ndarray:
    ranges = [_band_range(b, sample_rate) for b in bands]
    top = max(hi for _, hi in ranges)
    freqs = f0 * np.arange(1, int(top // f0) + 1)
    keep = np.zeros(freqs.size, dtype=bool)
    for lo, hi in ranges:
        keep |= (freqs >= lo) & (freqs <= hi)
    return freqs[keep]


def _bandlimited_noise(rng, n: int, sample_rate: int, bands) -> np.ndarray:
    spec = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, 1.0 / sample_rate)
    keep = np.zeros(freqs.size, dtype=bool)
    for b in bands:
        lo, hi = _band_range(b, sample_rate)
        keep |= (freqs >= lo) & (freqs <= hi)
    return np.fft.irfft(spec * keep, n)


def _raised_cosine(n: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2 * np.pi * (np.arange(n) + 0.5) / n)


def gen_utterance(spec: SynthSpec = SynthSpec(), id: str = "synth"):
    """Return ``(AudioClip, UtteranceRecord)``; deterministic in ``spec.seed``.

    The ground-truth vowel segment of each syllable is its central 60%,
    centred on the burst maximum.
    """
    rng = np.random.default_rng(spec.seed)
    sr = spec.sample_rate
    syl_n = int(round(spec.syllable_dur_s * sr))
    gap_n = int(round(spec.gap_dur_s * sr))
    n_total = spec.n_syllables * syl_n + (spec.n_syllables + 1) * gap_n
    x = np.zeros(n_total)
    t = np.arange(syl_n) / sr
    env = _raised_cosine(syl_n)

    nuclei = []
    for k in range(spec.n_syllables):
        start = gap_n + k * (syl_n + gap_n)
        f0 = spec.f0_hz * rng.uniform(0.95, 1.05)
        freqs = _harmonics(f0, spec.formant_bands, sr)
        amps = rng.uniform(0.3, 1.0, freqs.size)
        phases = rng.uniform(0, 2 * np.pi, freqs.size)
        tone = (amps[:, None] * np.sin(2 * np.pi * freqs[:, None] * t + phases[:, None])).sum(0)
        level = 10 ** (-rng.uniform(0.0, spec.stress_range_db) / 20)
        x[start:start + syl_n] = level * env * tone
        s0 = start / sr
        nuclei.append((s0 + 0.2 * spec.syllable_dur_s, s0 + 0.8 * spec.syllable_dur_s))

    peak = np.max(np.abs(x)) if spec.n_syllables else 0.0
    if peak > 0:
        x *= PEAK_LEVEL / peak
        vowel_rms = max(
            np.sqrt(np.mean(x[gap_n + k * (syl_n + gap_n):][:syl_n] ** 2))
            for k in range(spec.n_syllables)
        )
        gap_env = _raised_cosine(gap_n)
        for k in range(spec.n_syllables + 1):
            if rng.random() >= spec.fricative_prob:
                continue
            noise = _bandlimited_noise(rng, gap_n, sr, FRICATIVE_BANDS)
            noise *= vowel_rms * 10 ** (FRICATIVE_DB / 20) / np.sqrt(np.mean(noise ** 2))
            start = k * (syl_n + gap_n)
            x[start:start + gap_n] += gap_env * noise
    if spec.noise_db is not None:
        x += PEAK_LEVEL * 10 ** (spec.noise_db / 20) * rng.standard_normal(n_total)
    np.clip(x, -1.0, 1.0, out=x)

    clip = AudioClip(x, sr)
    return clip, make_record(id, clip, nuclei)


def gen_corpus(
    n_utterances: int,
    seed: int = 0,
    base_spec: SynthSpec = SynthSpec(),
    syllable_range=(4, 20),
    f0_range=None,
    tempo_range=None,
) -> Corpus:
    """``n_utterances`` utterances with syllable counts uniform in ``syllable_range``.

    Per-utterance seeds are spawned from ``seed``.  ``f0_range`` optionally
    draws each utterance's f0 uniformly from a (low, high) interval, and
    ``tempo_range`` a speed-up factor dividing both syllable and gap length.
    """
    if n_utterances < 1:
        raise ValueError("n_utterances must be >= 1")
    lo, hi = syllable_range
    if not 0 <= lo <= hi:
        raise ValueError(f"bad syllable range {syllable_range}")
    rng = np.random.default_rng(seed)
    children = np.random.SeedSequence(seed).spawn(n_utterances)
    records = []
    for i, child in enumerate(children):
        spec_kw = base_spec.to_dict()
        spec_kw["n_syllables"] = int(rng.integers(lo, hi + 1))
        spec_kw["seed"] = int(child.generate_state(1)[0])
        if f0_range is not None:
            spec_kw["f0_hz"] = float(rng.uniform(*f0_range))
        if tempo_range is not None:
            tempo = float(rng.uniform(*tempo_range))
            spec_kw["syllable_dur_s"] = base_spec.syllable_dur_s / tempo
            spec_kw["gap_dur_s"] = base_spec.gap_dur_s / tempo
        _, rec = gen_utterance(SynthSpec(**spec_kw), id=f"synth_{i:04d}")
        records.append(rec)
    return Corpus(tuple(records))


def write_corpus(corpus: Corpus, out_dir) -> Path:
    """Write ``<id>.wav`` files plus ``manifest.json``; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for rec in corpus:
        write_wav(out_dir / f"{rec.id}.wav", rec.audio)
        entries.append({
            "id": rec.id,
            "wav": f"{rec.id}.wav",
            "nuclei": [[s.start_s, s.end_s] for s in rec.vowel_segments],
        })
    manifest = out_dir / "manifest.json"
    write_manifest(manifest, entries)
    return manifest


def load_spec_file(path):
    """Read a JSON synth spec.

    Returns ``(SynthSpec, ranges)`` where ``ranges`` holds any of
    ``syllable_range``, ``f0_range`` and ``tempo_range`` for gen_corpus.
    """
    with open(path) as fh:
        d = json.load(fh)
    ranges = {k: tuple(d[k]) for k in RANGE_KEYS if d.get(k) is not None}
    return SynthSpec.from_dict(d), ranges


RANGE_KEYS = ("syllable_range", "f0_range", "tempo_range")

# Harder corpus: louder floor, weak unstressed syllables, frequent fricatives
# and faster speakers, so band weighting actually matters.
PRESETS = {
    "default": (SynthSpec(), {"syllable_range": (4, 20)}),
    "acceptance": (
        SynthSpec(noise_db=-30.0, stress_range_db=25.0, fricative_prob=0.8),
        {"syllable_range": (4, 20), "f0_range": (100.0, 240.0), "tempo_range": (1.0, 1.5)},
    ),
}
