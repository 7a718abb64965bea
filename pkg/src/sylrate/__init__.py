"""Syllable nucleus detection and speech-rate estimation.

A weighted sub-band log-energy envelope is smoothed and peak-picked by
prominence; the band weights and the prominence threshold are tuned with
particle swarm optimization against a detection or counting cost.
"""

from sylrate.audio_io import (
    AudioClip,
    Corpus,
    PhoneSegment,
    UtteranceRecord,
    VowelSegment,
    derive_vowel_nuclei,
    load_corpus,
    parse_phonetic_annotation,
    read_wav,
    write_wav,
)
from sylrate.envelope import PipelineConfig, compute_envelope
from sylrate.peaks import DetectionResult, Peak, detect_syllables
from sylrate.metrics import EvalReport
from sylrate.pso import PsoConfig, SearchSpace, SwarmResult, optimize
from sylrate.training import PipelineParams, evaluate_params, train_pipeline
from sylrate.synth import SynthSpec, gen_corpus, gen_utterance

__version__ = "0.1.0"

__all__ = [
    "AudioClip",
    "Corpus",
    "DetectionResult",
    "EvalReport",
    "Peak",
    "PhoneSegment",
    "PipelineConfig",
    "PipelineParams",
    "PsoConfig",
    "SearchSpace",
    "SwarmResult",
    "SynthSpec",
    "UtteranceRecord",
    "VowelSegment",
    "compute_envelope",
    "derive_vowel_nuclei",
    "detect_syllables",
    "evaluate_params",
    "gen_corpus",
    "gen_utterance",
    "load_corpus",
    "optimize",
    "parse_phonetic_annotation",
    "read_wav",
    "train_pipeline",
    "write_wav",
]
