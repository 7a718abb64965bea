"""Command-line interface: ``sylrate {detect,optimize,evaluate,synth,trace}``.

Exit codes: 0 success, 1 input or validation error, 2 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from sylrate.audio_io import load_corpus, read_wav
from sylrate.envelope import (
    N_BANDS,
    PipelineConfig,
    analyze,
    smooth,
    weighted_envelope,
)
from sylrate.peaks import detect_syllables
from sylrate.pso import PsoConfig
from sylrate.synth import PRESETS, gen_corpus, load_spec_file, write_corpus
from sylrate.training import (
    COST_KINDS,
    detect_clip,
    evaluate_params,
    load_params,
    save_params,
    train_pipeline,
)

log = logging.getLogger("sylrate")


class UsageError(Exception):
    """Bad input; maps to exit code 1."""


def _load_params(args):
    path = Path(args.params)
    if not path.is_file():
        raise UsageError(f"params file not found: {path}")
    params, config, _ = load_params(path)
    if args.config:
        config = PipelineConfig.from_file(args.config)
    return params, config


def _pipeline_config(args) -> PipelineConfig:
    return PipelineConfig.from_file(args.config) if args.config else PipelineConfig()


def _write(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def cmd_detect(args) -> int:
    params, config = _load_params(args)
    clip = read_wav(args.wav)
    result = detect_clip(clip, params, config, id=Path(args.wav).stem)
    _write(result.to_json() if args.format == "json" else result.to_csv(), args.out)
    return 0


def _summary(report) -> dict:
    return {k: (None if v is None else round(v, 6)) for k, v in report.summary().items()}


def cmd_optimize(args) -> int:
    config = _pipeline_config(args)
    pso = PsoConfig.from_file(args.pso_config) if args.pso_config else PsoConfig()
    pso = PsoConfig(**{**pso.to_dict(), "seed": args.seed})
    corpus = load_corpus(args.manifest)
    eval_corpus = load_corpus(args.eval_manifest) if args.eval_manifest else None

    order = np.random.default_rng(args.seed).permutation(len(corpus))
    sizes = args.train_size or [len(corpus)]
    for n in sizes:
        if not 1 <= n <= len(corpus):
            raise UsageError(f"train size {n} outside 1..{len(corpus)}")

    out = Path(args.out)
    sweep_rows = []
    for n in sizes:
        if len(sizes) > 1:
            params_path = out.with_name(f"{out.stem}_n{n}{out.suffix or '.json'}")
        else:
            params_path = out
        trace_path = (
            Path(args.trace_out)
            if args.trace_out and len(sizes) == 1
            else params_path.with_suffix(".trace.csv")
        )
        train = corpus.subset(sorted(order[:n]))
        log.info("training on %d utterances (cost %s)", n, args.cost)
        params, result = train_pipeline(train, args.cost, config, pso, workers=args.workers)
        save_params(
            params_path,
            params,
            config,
            cost_kind=args.cost,
            seed=args.seed,
            train_size=n,
            best_cost=result.best_cost,
            iterations_run=result.iterations_run,
            evaluations=result.evaluations,
        )
        trace_path.write_text(result.trace_csv())

        row = {"train_size": n, "best_cost": result.best_cost}
        row.update({f"train_{k}": v for k, v in _summary(evaluate_params(train, params, config)).items()})
        if eval_corpus is not None:
            rep = evaluate_params(eval_corpus, params, config)
            row.update({f"eval_{k}": v for k, v in _summary(rep).items()})
        sweep_rows.append(row)
        print(json.dumps({"params": str(params_path), **row}))

    if len(sizes) > 1:
        with open(out.with_name(f"{out.stem}_sweep.csv"), "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(sweep_rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(sweep_rows)
    return 0


def cmd_evaluate(args) -> int:
    params, config = _load_params(args)
    corpus = load_corpus(args.manifest)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report = evaluate_params(corpus, params, config)
    for wmsg in caught:
        print(f"warning: {wmsg.message}", file=sys.stderr)
    base = Path(args.report)
    if base.suffix in (".json", ".csv"):
        base = base.with_suffix("")
    base.with_suffix(".json").write_text(report.to_json() + "\n")
    base.with_suffix(".csv").write_text(report.to_csv())
    print(json.dumps(_summary(report)))
    return 0


def cmd_synth(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    if args.spec:
        spec, ranges = load_spec_file(args.spec)
    else:
        spec, ranges = PRESETS[args.preset]
    corpus = gen_corpus(args.n, args.seed, spec, **ranges)
    manifest = write_corpus(corpus, args.out)
    print(json.dumps({"manifest": str(manifest), "utterances": len(corpus)}))
    return 0


def cmd_trace(args) -> int:
    params, config = _load_params(args)
    clip = read_wav(args.wav)
    ana = analyze(clip, config)
    raw = weighted_envelope(ana.log_bands, params.weights)
    env = smooth(raw, config)
    det = detect_syllables(env, ana.mask, params.threshold, config.hop_s, clip.duration_s)
    nuclei = {p.frame_index for p in det.nuclei}
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(
            ["frame_time_s"]
            + [f"band_{i + 1}" for i in range(N_BANDS)]
            + ["raw_envelope", "smoothed_envelope", "speech_flag", "is_detected_nucleus"]
        )
        for n in range(ana.n_frames):
            w.writerow(
                [repr(n * config.hop_s)]
                + [repr(float(v)) for v in ana.log_bands[n]]
                + [repr(float(raw[n])), repr(float(env[n])), int(ana.mask[n]), int(n in nuclei)]
            )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sylrate", description=__doc__.splitlines()[0])
    parser.add_argument("--config", metavar="PATH", help="PipelineConfig JSON overrides")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="detect syllable nuclei in one wav file")
    p.add_argument("wav")
    p.add_argument("--params", required=True, metavar="PATH")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", metavar="PATH", help="write here instead of stdout")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("optimize", help="fit weights and threshold with PSO")
    p.add_argument("manifest")
    p.add_argument("--cost", choices=COST_KINDS, default="inv_f")
    p.add_argument("--pso-config", metavar="PATH")
    p.add_argument("--train-size", type=int, nargs="+", metavar="N",
                   help="one or more training-set sizes (several give a sweep)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, metavar="PATH", help="params JSON")
    p.add_argument("--trace-out", metavar="PATH", help="convergence CSV")
    p.add_argument("--eval-manifest", metavar="PATH", help="held-out corpus to score")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("evaluate", help="score params on a labelled corpus")
    p.add_argument("manifest")
    p.add_argument("--params", required=True, metavar="PATH")
    p.add_argument("--report", required=True, metavar="PATH",
                   help="report path; .json and .csv are both written")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="write a synthetic corpus")
    p.add_argument("--spec", metavar="PATH", help="JSON SynthSpec plus ranges")
    p.add_argument("--preset", choices=sorted(PRESETS), default="default")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, metavar="DIR")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("trace", help="per-frame band/envelope CSV for one wav")
    p.add_argument("wav")
    p.add_argument("--params", required=True, metavar="PATH")
    p.add_argument("--out", required=True, metavar="PATH")
    p.set_defaults(func=cmd_trace)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
