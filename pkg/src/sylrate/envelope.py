"""Sonority envelope: framing, trapezoidal sub-band energies, log, weighting
and zero-phase smoothing, plus the short-time-energy speech mask."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy import signal

from sylrate.audio_io import AudioClip

N_BANDS = 7
# second-order section run forward and backward: net fourth order
SMOOTHING_ORDER = 2
DEFAULT_BAND_EDGES = (60.0, 370.0, 800.0, 1400.0, 2250.0, 3450.0, 5130.0, 7500.0)


@dataclass(frozen=True)
class PipelineConfig:
    window_s: float = 0.020
    hop_s: float = 0.010
    energy_threshold_db: float = -30.0
    smoothing_cutoff_hz: float = 7.0
    band_edges_hz: tuple = DEFAULT_BAND_EDGES
    transition_width_hz: float = 50.0
    log_floor: float = 1e-6

    def __post_init__(self):
        edges = tuple(float(e) for e in self.band_edges_hz)
        object.__setattr__(self, "band_edges_hz", edges)
        if len(edges) != N_BANDS + 1:
            raise ValueError(f"need {N_BANDS + 1} band edges, got {len(edges)}")
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise ValueError("band edges must be strictly ascending")
        if not 0 < self.hop_s <= self.window_s:
            raise ValueError("need 0 < hop_s <= window_s")
        if not 0 < self.smoothing_cutoff_hz < 0.5 / self.hop_s:
            raise ValueError("smoothing cutoff must lie below the frame-rate Nyquist")
        if self.log_floor <= 0:
            raise ValueError("log_floor must be positive")

    @property
    def frame_rate_hz(self) -> float:
        return 1.0 / self.hop_s

    def to_dict(self) -> dict:
        d = asdict(self)
        d["band_edges_hz"] = list(self.band_edges_hz)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown PipelineConfig fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def frame_signal(clip: AudioClip, config: PipelineConfig) -> np.ndarray:
    """Hamming-windowed frames, shape (n_frames, window_length)."""
    win = int(round(config.window_s * clip.sample_rate))
    hop = int(round(config.hop_s * clip.sample_rate))
    n = len(clip.samples)
    if n < win:
        raise ValueError(
            f"clip of {n} samples is shorter than one {win}-sample window"
        )
    n_frames = (n - win) // hop + 1
    frames = np.lib.stride_tricks.sliding_window_view(clip.samples, win)[::hop]
    return frames[:n_frames] * np.hamming(win)


def band_weights(freqs, config: PipelineConfig) -> np.ndarray:
    """Trapezoidal band responses evaluated at ``freqs``, shape (7, len(freqs)).

    Band i ramps from 0 at edge_i - tw/2 to 1 at edge_i + tw/2 and back down
    across edge_{i+1}; neighbouring bands sum to one inside a shared ramp.
    """
    freqs = np.asarray(freqs, dtype=float)
    half = 0.5 * config.transition_width_hz
    edges = config.band_edges_hz
    out = np.empty((N_BANDS, freqs.size))
    for i in range(N_BANDS):
        rise = np.clip((freqs - (edges[i] - half)) / (2 * half), 0.0, 1.0)
        fall = np.clip(((edges[i + 1] + half) - freqs) / (2 * half), 0.0, 1.0)
        out[i] = np.minimum(rise, fall)
    return out


def _nfft(frame_length: int) -> int:
    return 1 << max(0, int(frame_length - 1).bit_length())


def band_energies(frames: np.ndarray, sample_rate: int, config: PipelineConfig) -> np.ndarray:
    """Raw trapezoid-weighted power per band, shape (n_frames, 7)."""
    nfft = _nfft(frames.shape[1])
    power = np.abs(np.fft.rfft(frames, n=nfft, axis=1)) ** 2
    freqs = np.fft.rfftfreq(nfft, d=1.0 / sample_rate)
    return power @ band_weights(freqs, config).T


def normalize_and_log(raw: np.ndarray, config: PipelineConfig) -> np.ndarray:
    """Scale each band to unit maximum, floor at ``log_floor``, natural log."""
    raw = np.asarray(raw, dtype=float)
    peak = raw.max(axis=0)
    scale = np.where(peak > 0, peak, 1.0)
    return np.log(np.maximum(raw / scale, config.log_floor))


def speech_mask(frames: np.ndarray, config: PipelineConfig) -> np.ndarray:
    """Frames within ``energy_threshold_db`` of the loudest frame (inclusive)."""
    energy = np.sum(np.asarray(frames, dtype=float) ** 2, axis=1)
    top = energy.max() if energy.size else 0.0
    if top <= 0:
        return np.zeros(energy.shape, dtype=bool)
    return energy >= top * 10.0 ** (config.energy_threshold_db / 10.0)


def weighted_envelope(matrix: np.ndarray, weights) -> np.ndarray:
    """E[n] = sum_i w_i e_i[n]."""
    matrix = np.asarray(matrix, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if matrix.shape[-1] != weights.size:
        raise ValueError(f"{matrix.shape[-1]} bands but {weights.size} weights")
    # explicit accumulation keeps results independent of BLAS threading
    out = np.zeros(matrix.shape[:-1])
    for i, w in enumerate(weights):
        out += w * matrix[..., i]
    return out


def smoothing_filter(config: PipelineConfig):
    return signal.butter(
        SMOOTHING_ORDER,
        config.smoothing_cutoff_hz,
        btype="low",
        fs=config.frame_rate_hz,
    )


def smooth(envelope, config: PipelineConfig = PipelineConfig(), axis: int = 0) -> np.ndarray:
    """Zero-phase Butterworth low-pass (forward-backward), length preserving.

    The forward-backward pass is averaged with its time-reversed twin so
    that the operator commutes exactly with time reversal.
    """
    x = np.asarray(envelope, dtype=float)
    n = x.shape[axis]
    if n <= 1:
        return x.copy()
    b, a = smoothing_filter(config)
    padlen = min(3 * SMOOTHING_ORDER, n - 1)
    fwd = signal.filtfilt(b, a, x, axis=axis, padtype="even", padlen=padlen)
    rev = np.flip(
        signal.filtfilt(b, a, np.flip(x, axis), axis=axis, padtype="even", padlen=padlen),
        axis,
    )
    return 0.5 * (fwd + rev)


@dataclass(frozen=True)
class BandAnalysis:
    """Weight-independent part of the pipeline for one clip."""

    log_bands: np.ndarray  # (n_frames, 7)
    mask: np.ndarray  # (n_frames,)
    duration_s: float
    config: PipelineConfig = field(repr=False)

    @property
    def n_frames(self) -> int:
        return self.log_bands.shape[0]


def analyze(clip: AudioClip, config: PipelineConfig = PipelineConfig()) -> BandAnalysis:
    frames = frame_signal(clip, config)
    raw = band_energies(frames, clip.sample_rate, config)
    return BandAnalysis(
        normalize_and_log(raw, config), speech_mask(frames, config), clip.duration_s, config
    )


def compute_envelope(clip: AudioClip, weights, config: PipelineConfig = PipelineConfig()):
    """Smoothed sonority envelope and speech mask for ``clip``."""
    ana = analyze(clip, config)
    return smooth(weighted_envelope(ana.log_bands, weights), config), ana.mask
