import csv
import hashlib
import json

import numpy as np
import pytest

from sylrate.audio_io import write_wav
from sylrate.cli import main
from sylrate.envelope import PipelineConfig
from sylrate.training import PipelineParams, save_params
from conftest import ORACLE_WEIGHTS

TINY_PSO = {"n_particles": 8, "max_iterations": 6, "stagnation_window": 0}


@pytest.fixture
def oracle_params(tmp_path):
    path = tmp_path / "oracle.json"
    save_params(path, PipelineParams(ORACLE_WEIGHTS, 0.05), PipelineConfig())
    return path


@pytest.fixture
def synth_dir(tmp_path):
    out = tmp_path / "corpus"
    assert main(["synth", "--n", "6", "--seed", "4", "--out", str(out)]) == 0
    return out


@pytest.fixture
def pso_file(tmp_path):
    path = tmp_path / "pso.json"
    path.write_text(json.dumps(TINY_PSO))
    return path


def digest(directory):
    h = hashlib.sha256()
    for p in sorted(directory.iterdir()):
        h.update(p.name.encode() + p.read_bytes())
    return h.hexdigest()


def test_detect_silence(wav_file, oracle_params, capsys):
    wav = wav_file(np.zeros(16000))
    assert main(["detect", str(wav), "--params", str(oracle_params)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["count"] == 0 and out["speech_rate_sps"] == 0.0


def test_detect_five_syllables(tmp_path, five_syllables, oracle_params, capsys):
    clip, _ = five_syllables
    wav = tmp_path / "five.wav"
    write_wav(wav, clip)
    assert main(["detect", str(wav), "--params", str(oracle_params)]) == 0
    assert json.loads(capsys.readouterr().out)["count"] == 5

    out = tmp_path / "five.csv"
    assert main(["detect", str(wav), "--params", str(oracle_params), "--format", "csv", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 5 and rows[0]["id"] == "five"


def test_detect_missing_params(wav_file, tmp_path, capsys):
    wav = wav_file(np.zeros(1600))
    missing = tmp_path / "nope.json"
    assert main(["detect", str(wav), "--params", str(missing)]) == 1
    assert str(missing) in capsys.readouterr().err


def test_detect_bad_wav(tmp_path, oracle_params):
    bad = tmp_path / "bad.wav"
    bad.write_bytes(b"not a wav")
    assert main(["detect", str(bad), "--params", str(oracle_params)]) == 1


def test_global_config_override(tmp_path, five_syllables, oracle_params, capsys):
    clip, _ = five_syllables
    wav = tmp_path / "five.wav"
    write_wav(wav, clip)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"energy_threshold_db": -1.0}))
    assert main(["--config", str(cfg), "detect", str(wav), "--params", str(oracle_params)]) == 0
    assert json.loads(capsys.readouterr().out)["count"] < 5
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["--config", str(cfg), "detect", str(wav), "--params", str(oracle_params)]) == 1


def test_synth_rejects_zero(tmp_path):
    assert main(["synth", "--n", "0", "--out", str(tmp_path / "x")]) == 1


def test_synth_rerun_identical(tmp_path, synth_dir):
    again = tmp_path / "again"
    assert main(["synth", "--n", "6", "--seed", "4", "--out", str(again)]) == 0
    assert digest(synth_dir) == digest(again)
    assert len(list(synth_dir.glob("*.wav"))) == 6


def test_synth_spec_file(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"n_syllables": 0, "f0_hz": 220, "syllable_range": [2, 3]}))
    out = tmp_path / "kids"
    assert main(["synth", "--spec", str(spec), "--n", "3", "--out", str(out)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert all(2 <= len(u["nuclei"]) <= 3 for u in man["utterances"])


def test_optimize_writes_params_and_trace(tmp_path, synth_dir, pso_file, capsys):
    out = tmp_path / "p.json"
    trace = tmp_path / "trace.csv"
    rc = main(["optimize", str(synth_dir / "manifest.json"), "--pso-config", str(pso_file),
               "--cost", "mae", "--out", str(out), "--trace-out", str(trace)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["metadata"]["cost_kind"] == "mae"
    assert doc["metadata"]["evaluations"] == 8 * 6
    assert len(doc["weights"]) == 7 and doc["prominence_threshold"] > 0
    lines = trace.read_text().splitlines()
    assert lines[0] == "iteration,best_cost" and len(lines) == 7
    assert "train_f_score" in json.loads(capsys.readouterr().out.splitlines()[-1])


def test_optimize_sweep(tmp_path, synth_dir, pso_file):
    out = tmp_path / "p.json"
    rc = main(["optimize", str(synth_dir / "manifest.json"), "--pso-config", str(pso_file),
               "--train-size", "2", "4", "6", "--eval-manifest", str(synth_dir / "manifest.json"),
               "--out", str(out)])
    assert rc == 0
    for n in (2, 4, 6):
        assert json.loads((tmp_path / f"p_n{n}.json").read_text())["metadata"]["train_size"] == n
        assert (tmp_path / f"p_n{n}.trace.csv").is_file()
    rows = list(csv.DictReader((tmp_path / "p_sweep.csv").open()))
    assert [int(r["train_size"]) for r in rows] == [2, 4, 6]
    assert "eval_f_score" in rows[0]


def test_optimize_train_size_too_large(tmp_path, synth_dir, pso_file):
    rc = main(["optimize", str(synth_dir / "manifest.json"), "--pso-config", str(pso_file),
               "--train-size", "7", "--out", str(tmp_path / "p.json")])
    assert rc == 1


def test_optimize_missing_manifest(tmp_path):
    assert main(["optimize", str(tmp_path / "none.json"), "--out", str(tmp_path / "p.json")]) == 1


def test_evaluate_consistent_with_detect(tmp_path, synth_dir, oracle_params, capsys):
    report = tmp_path / "rep"
    assert main(["evaluate", str(synth_dir / "manifest.json"), "--params", str(oracle_params),
                 "--report", str(report)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["f_score"] > 0.9
    rows = list(csv.DictReader((tmp_path / "rep.csv").open()))
    assert rows[-1]["id"] == "__all__"
    for row in rows[:-1]:
        assert main(["detect", str(synth_dir / f"{row['id']}.wav"), "--params", str(oracle_params)]) == 0
        assert json.loads(capsys.readouterr().out)["count"] == int(row["predicted"])
    doc = json.loads((tmp_path / "rep.json").read_text())
    assert len(doc["utterances"]) == 6


def test_evaluate_single_utterance_null_correlation(tmp_path, synth_dir, oracle_params, capsys):
    man = json.loads((synth_dir / "manifest.json").read_text())
    man["utterances"] = man["utterances"][:1]
    one = synth_dir / "one.json"
    one.write_text(json.dumps(man))
    assert main(["evaluate", str(one), "--params", str(oracle_params), "--report", str(tmp_path / "r.json")]) == 0
    cap = capsys.readouterr()
    assert json.loads(cap.out)["pearson_count_corr"] is None
    assert "warning" in cap.err
    assert json.loads((tmp_path / "r.json").read_text())["pearson_count_corr"] is None


def test_evaluate_huge_threshold(tmp_path, synth_dir, capsys):
    params = tmp_path / "high.json"
    # weak weights keep every prominence well under 10
    weak = tuple(0.1 * w for w in ORACLE_WEIGHTS)
    save_params(params, PipelineParams(weak, 10.0), PipelineConfig())
    assert main(["evaluate", str(synth_dir / "manifest.json"), "--params", str(params),
                 "--report", str(tmp_path / "r")]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["recall"] < 0.1 and summary["f_score"] < 0.2
    assert (tmp_path / "r.csv").is_file()


def test_trace_one_second(tmp_path, five_syllables, wav_file, oracle_params, capsys):
    sil = wav_file(np.zeros(16000), name="sil.wav")
    out = tmp_path / "sil.csv"
    assert main(["trace", str(sil), "--params", str(oracle_params), "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 99
    assert len(rows[0]) == 1 + 7 + 4
    assert all(r["speech_flag"] == "0" for r in rows)

    clip, _ = five_syllables
    wav = tmp_path / "five.wav"
    write_wav(wav, clip)
    out = tmp_path / "five.csv"
    assert main(["trace", str(wav), "--params", str(oracle_params), "--out", str(out)]) == 0
    flagged = [float(r["frame_time_s"]) for r in csv.DictReader(out.open()) if r["is_detected_nucleus"] == "1"]
    assert main(["detect", str(wav), "--params", str(oracle_params)]) == 0
    times = [n["t"] for n in json.loads(capsys.readouterr().out)["nuclei"]]
    assert flagged == times


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["detect"])
    assert exc.value.code == 2
