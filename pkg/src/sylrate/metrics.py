"""Detection matching, corpus metrics and the two optimization costs."""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

# Returned by cost_inv_f when precision or recall is zero.
DEGENERATE_COST = 1e6


class UndefinedCorrelationError(ValueError):
    pass


@dataclass(frozen=True)
class MatchResult:
    true_positives: int = 0
    false_positives: int = 0
    false_negatives: int = 0

    def __add__(self, other: "MatchResult") -> "MatchResult":
        return MatchResult(
            self.true_positives + other.true_positives,
            self.false_positives + other.false_positives,
            self.false_negatives + other.false_negatives,
        )


def match_detections(detections, segments) -> MatchResult:
    """Greedy one-to-one matching of detection times to vowel segments.

    Segments are visited in time order; each claims the unclaimed detection
    inside it (bounds inclusive) closest to its midpoint, ties going to the
    earlier detection.  Everything left over is a false alarm or a miss.
    """
    times = np.sort(np.asarray(detections, dtype=float))
    segs = sorted((s.start_s, s.end_s) for s in segments)
    claimed = np.zeros(times.size, dtype=bool)
    tp = 0
    for start, end in segs:
        lo = np.searchsorted(times, start, side="left")
        hi = np.searchsorted(times, end, side="right")
        free = [j for j in range(lo, hi) if not claimed[j]]
        if not free:
            continue
        mid = 0.5 * (start + end)
        best = min(free, key=lambda j: (abs(times[j] - mid), j))
        claimed[best] = True
        tp += 1
    return MatchResult(tp, times.size - tp, len(segs) - tp)


def precision_recall_f(match: MatchResult):
    tp, fp, fn = match.true_positives, match.false_positives, match.false_negatives
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def cost_inv_f(match: MatchResult) -> float:
    """(P + R) / (2 P R), i.e. 1/F; DEGENERATE_COST if P or R is zero."""
    p, r, _ = precision_recall_f(match)
    if p * r <= 0:
        return DEGENERATE_COST
    return (p + r) / (2 * p * r)


def cost_mae(predicted, actual) -> float:
    pred = np.asarray(predicted, dtype=float)
    act = np.asarray(actual, dtype=float)
    if pred.size == 0:
        raise ValueError("MAE needs at least one utterance")
    if pred.shape != act.shape:
        raise ValueError("predicted and actual counts differ in length")
    return float(np.mean(np.abs(pred - act)))


def sr_error_rate(predicted, actual, ids=None) -> float:
    """Mean relative count error per utterance, in percent."""
    pred = np.asarray(predicted, dtype=float)
    act = np.asarray(actual, dtype=float)
    if pred.size == 0:
        raise ValueError("SR error rate needs at least one utterance")
    zero = np.flatnonzero(act == 0)
    if zero.size:
        name = ids[zero[0]] if ids is not None else f"#{zero[0]}"
        raise ValueError(f"utterance {name} has zero actual syllables")
    return float(100.0 * np.mean(np.abs(pred - act) / act))


def pearson_count_corr(predicted, actual) -> float:
    x = np.asarray(predicted, dtype=float)
    y = np.asarray(actual, dtype=float)
    if x.size < 2 or x.size != y.size:
        raise UndefinedCorrelationError("need two equal-length vectors of length >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = np.dot(dx, dx), np.dot(dy, dy)
    if sxx == 0 or syy == 0:
        raise UndefinedCorrelationError("correlation undefined for a constant vector")
    return float(np.clip(np.dot(dx, dy) / np.sqrt(sxx * syy), -1.0, 1.0))


ROW_FIELDS = [
    "id", "duration_s", "actual", "predicted", "true_positives",
    "false_positives", "false_negatives", "speech_rate_sps",
]
SUMMARY_FIELDS = [
    "precision", "recall", "f_score", "mae_count", "sr_error_rate_pct",
    "pearson_count_corr",
]


@dataclass
class EvalReport:
    precision: float
    recall: float
    f_score: float
    mae_count: float
    sr_error_rate_pct: float | None
    pearson_count_corr: float | None
    rows: list = field(default_factory=list)

    def summary(self) -> dict:
        return {k: getattr(self, k) for k in SUMMARY_FIELDS}

    def to_dict(self) -> dict:
        return {**self.summary(), "utterances": self.rows}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        """One row per utterance, then a summary row with id ``__all__``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(ROW_FIELDS + SUMMARY_FIELDS)
        for row in self.rows:
            w.writerow([row[k] for k in ROW_FIELDS] + [""] * len(SUMMARY_FIELDS))
        totals = [
            "__all__",
            sum(r["duration_s"] for r in self.rows),
            sum(r["actual"] for r in self.rows),
            sum(r["predicted"] for r in self.rows),
            sum(r["true_positives"] for r in self.rows),
            sum(r["false_positives"] for r in self.rows),
            sum(r["false_negatives"] for r in self.rows),
            "",
        ]
        summary = ["" if v is None else v for v in self.summary().values()]
        w.writerow(totals + summary)
        return buf.getvalue()


def evaluate(records, detections) -> EvalReport:
    """Score per-utterance detections against the records' vowel segments.

    ``detections`` holds one DetectionResult per record, in the same order.
    P/R/F pool TP/FP/FN over the corpus.  Correlation and SR error that are
    undefined on this corpus are reported as None with a warning.
    """
    if len(records) != len(detections):
        raise ValueError("one detection result per utterance is required")
    if not len(records):
        raise ValueError("cannot evaluate an empty corpus")
    total = MatchResult()
    rows = []
    for rec, det in zip(records, detections):
        m = match_detections(det.times, rec.vowel_segments)
        total = total + m
        rows.append({
            "id": rec.id,
            "duration_s": rec.duration_s,
            "actual": rec.syllable_count,
            "predicted": det.count,
            "true_positives": m.true_positives,
            "false_positives": m.false_positives,
            "false_negatives": m.false_negatives,
            "speech_rate_sps": det.speech_rate_sps,
        })
    pred = [r["predicted"] for r in rows]
    act = [r["actual"] for r in rows]
    p, r, f = precision_recall_f(total)
    try:
        sre = sr_error_rate(pred, act, ids=[row["id"] for row in rows])
    except ValueError as exc:
        warnings.warn(f"SR error rate undefined: {exc}")
        sre = None
    try:
        corr = pearson_count_corr(pred, act)
    except UndefinedCorrelationError as exc:
        warnings.warn(f"count correlation undefined: {exc}")
        corr = None
    return EvalReport(p, r, f, cost_mae(pred, act), sre, corr, rows)
