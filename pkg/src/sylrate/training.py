"""Fitting band weights and prominence threshold to a labelled corpus.

Smoothing is linear, so each utterance's seven log-band tracks are smoothed
once up front; any weight vector then only costs a weighted sum, peak
picking and matching over the concatenated corpus.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from sylrate.audio_io import Corpus
from sylrate.envelope import N_BANDS, PipelineConfig, analyze, compute_envelope, smooth, weighted_envelope
from sylrate.metrics import (
    MatchResult,
    cost_inv_f,
    cost_mae,
    evaluate,
    match_detections,
)
from sylrate.peaks import detect_syllables, find_peaks
from sylrate.pso import PsoConfig, SearchSpace, SwarmResult, optimize

COST_KINDS = ("inv_f", "mae")
WEIGHT_RANGE = (-2.0, 5.0)
THRESHOLD_RANGE = (0.01, 10.0)


@dataclass(frozen=True)
class PipelineParams:
    weights: tuple
    threshold: float

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        if len(w) != N_BANDS or not all(map(math.isfinite, w)):
            raise ValueError(f"need {N_BANDS} finite weights")
        if not self.threshold > 0:
            raise ValueError("prominence threshold must be positive")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "threshold", float(self.threshold))

    @classmethod
    def from_vector(cls, x) -> "PipelineParams":
        x = np.asarray(x, dtype=float)
        return cls(tuple(x[:N_BANDS]), float(x[N_BANDS]))

    def to_vector(self) -> np.ndarray:
        return np.array(self.weights + (self.threshold,))

    def scaled(self, c: float) -> "PipelineParams":
        return PipelineParams(tuple(c * w for w in self.weights), c * self.threshold)


def default_search_space() -> SearchSpace:
    lo = [WEIGHT_RANGE[0]] * N_BANDS + [THRESHOLD_RANGE[0]]
    hi = [WEIGHT_RANGE[1]] * N_BANDS + [THRESHOLD_RANGE[1]]
    return SearchSpace(np.array(lo), np.array(hi))


def save_params(path, params: PipelineParams, config: PipelineConfig, **metadata) -> None:
    doc = {
        "weights": list(params.weights),
        "prominence_threshold": params.threshold,
        "pipeline_config": config.to_dict(),
    }
    if metadata:
        doc["metadata"] = metadata
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_params(path):
    """Return ``(PipelineParams, PipelineConfig, metadata)`` from a params file."""
    with open(path) as fh:
        doc = json.load(fh)
    try:
        params = PipelineParams(tuple(doc["weights"]), doc["prominence_threshold"])
    except KeyError as exc:
        raise ValueError(f"{path}: missing field {exc.args[0]}") from None
    config = PipelineConfig.from_dict(doc.get("pipeline_config", {}))
    return params, config, doc.get("metadata", {})


def _frame_span(start_s, end_s, hop_s, n_frames):
    """Frame indices n with start_s <= n*hop_s <= end_s, as [lo, hi]."""
    lo = max(int(math.ceil(start_s / hop_s)) - 1, 0)
    while lo * hop_s < start_s:
        lo += 1
    hi = min(int(math.floor(end_s / hop_s)) + 1, n_frames - 1)
    while hi >= 0 and hi * hop_s > end_s:
        hi -= 1
    return lo, hi


class CorpusCache:
    """Pre-smoothed band tracks and ground truth for a whole corpus."""

    def __init__(self, corpus: Corpus, config: PipelineConfig = PipelineConfig()):
        if not len(corpus):
            raise ValueError("corpus is empty")
        self.config = config
        self.records = corpus.utterances
        tracks, masks, lengths = [], [], []
        for rec in corpus:
            ana = analyze(rec.audio, config)
            tracks.append(smooth(ana.log_bands, config, axis=0))
            masks.append(ana.mask)
            lengths.append(ana.n_frames)
        self.bands = np.concatenate(tracks)
        self.mask = np.concatenate(masks)
        self.ends = np.cumsum(lengths)
        self.starts = self.ends - np.asarray(lengths)
        self.actual = np.array([rec.syllable_count for rec in corpus])
        self.durations = np.array([rec.duration_s for rec in corpus])

        hop = config.hop_s
        seg_lo, seg_hi, disjoint = [], [], True
        for rec, off, n in zip(self.records, self.starts, lengths):
            spans = sorted(_frame_span(s.start_s, s.end_s, hop, n) for s in rec.vowel_segments)
            spans = [(a, b) for a, b in spans if a <= b]
            for (a0, b0), (a1, b1) in zip(spans, spans[1:]):
                if a1 <= b0:
                    disjoint = False
            seg_lo += [off + a for a, _ in spans]
            seg_hi += [off + b for _, b in spans]
        self.seg_lo = np.array(seg_lo, dtype=np.intp)
        self.seg_hi = np.array(seg_hi, dtype=np.intp)
        self.n_segments = sum(len(rec.vowel_segments) for rec in self.records)
        # with overlapping segments the greedy matcher is needed
        self.disjoint = disjoint

    def __len__(self):
        return len(self.records)

    def detect(self, params: PipelineParams) -> np.ndarray:
        """Global frame indices of detected nuclei, ascending."""
        env = weighted_envelope(self.bands, params.weights)
        cands, prom = find_peaks(env, self.starts, self.ends)
        keep = self.mask[cands] & (prom >= params.threshold)
        return cands[keep]

    def counts(self, detected) -> np.ndarray:
        utt = np.searchsorted(self.starts, detected, side="right") - 1
        return np.bincount(utt, minlength=len(self.records))

    def match(self, detected) -> MatchResult:
        if self.disjoint:
            hits = (
                np.searchsorted(detected, self.seg_hi, side="right")
                - np.searchsorted(detected, self.seg_lo, side="left")
            )
            tp = int(np.count_nonzero(hits > 0))
            return MatchResult(tp, detected.size - tp, self.n_segments - tp)
        total = MatchResult()
        utt = np.searchsorted(self.starts, detected, side="right") - 1
        for u, rec in enumerate(self.records):
            local = detected[utt == u] - self.starts[u]
            total = total + match_detections(local * self.config.hop_s, rec.vowel_segments)
        return total

    def cost(self, params: PipelineParams, cost_kind: str) -> float:
        detected = self.detect(params)
        if cost_kind == "inv_f":
            return cost_inv_f(self.match(detected))
        if cost_kind == "mae":
            return cost_mae(self.counts(detected), self.actual)
        raise ValueError(f"unknown cost kind {cost_kind!r}; expected one of {COST_KINDS}")

    def cost_fn(self, cost_kind: str):
        if cost_kind not in COST_KINDS:
            raise ValueError(f"unknown cost kind {cost_kind!r}; expected one of {COST_KINDS}")
        return lambda x: self.cost(PipelineParams.from_vector(x), cost_kind)


def train_pipeline(
    corpus: Corpus,
    cost_kind: str = "inv_f",
    pipeline_config: PipelineConfig = PipelineConfig(),
    pso_config: PsoConfig = PsoConfig(),
    space: SearchSpace | None = None,
    workers: int = 1,
    cache: CorpusCache | None = None,
):
    """Jointly optimize the 7 band weights and the prominence threshold.

    Returns ``(PipelineParams, SwarmResult)``.
    """
    if cache is None:
        cache = CorpusCache(corpus, pipeline_config)
    space = space or default_search_space()
    if space.dim != N_BANDS + 1:
        raise ValueError(f"search space must have {N_BANDS + 1} dimensions")
    result = optimize(cache.cost_fn(cost_kind), space, pso_config, workers=workers)
    return PipelineParams.from_vector(result.best_position), result


def detect_clip(clip, params: PipelineParams, config: PipelineConfig = PipelineConfig(), id=""):
    env, mask = compute_envelope(clip, params.weights, config)
    return detect_syllables(env, mask, params.threshold, config.hop_s, clip.duration_s, id)


def detect_corpus(corpus: Corpus, params: PipelineParams, config: PipelineConfig = PipelineConfig()):
    return [detect_clip(rec.audio, params, config, rec.id) for rec in corpus]


def evaluate_params(corpus: Corpus, params: PipelineParams, config: PipelineConfig = PipelineConfig()):
    """Run the uncached pipeline on every utterance and score it."""
    return evaluate(corpus.utterances, detect_corpus(corpus, params, config))


def corpus_cost(corpus: Corpus, params: PipelineParams, cost_kind: str,
                config: PipelineConfig = PipelineConfig()) -> float:
    """Training cost computed end to end, without the band-track cache."""
    dets = detect_corpus(corpus, params, config)
    if cost_kind == "inv_f":
        total = MatchResult()
        for rec, det in zip(corpus, dets):
            total = total + match_detections(det.times, rec.vowel_segments)
        return cost_inv_f(total)
    if cost_kind == "mae":
        return cost_mae([d.count for d in dets], [r.syllable_count for r in corpus])
    raise ValueError(f"unknown cost kind {cost_kind!r}")
