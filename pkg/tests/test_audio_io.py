import json
import struct
import wave

import numpy as np
import pytest

from sylrate.audio_io import (
    MIN_VOWEL_S,
    AnnotationError,
    AudioClip,
    CorpusError,
    PhoneSegment,
    VowelSegment,
    WavFormatError,
    derive_vowel_nuclei,
    load_corpus,
    parse_phonetic_annotation,
    read_wav,
    write_wav,
)


def _raw_wav(path, ints, rate=16000, channels=1, width=2):
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(channels)
        wf.setsampwidth(width)
        wf.setframerate(rate)
        wf.writeframes(np.asarray(ints, dtype=f"<i{width}").tobytes())
    return path


def test_read_silence(tmp_path):
    clip = read_wav(_raw_wav(tmp_path / "z.wav", np.zeros(16000)))
    assert clip.sample_rate == 16000
    assert len(clip.samples) == 16000
    assert clip.duration_s == 1.0
    assert not clip.samples.any()


def test_read_extreme_values(tmp_path):
    clip = read_wav(_raw_wav(tmp_path / "x.wav", [32767, -32768, 0]))
    assert clip.samples[0] == 32767 / 32768
    assert clip.samples[1] == -1.0


def test_read_rejects_stereo(tmp_path):
    path = _raw_wav(tmp_path / "s.wav", np.zeros(20), channels=2)
    with pytest.raises(WavFormatError, match="channels"):
        read_wav(path)


def test_read_rejects_8bit(tmp_path):
    path = tmp_path / "b.wav"
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(1)
        wf.setframerate(8000)
        wf.writeframes(bytes(10))
    with pytest.raises(WavFormatError, match="bits_per_sample"):
        read_wav(path)


def test_read_rejects_float_format(tmp_path):
    data = np.zeros(4, dtype="<f4").tobytes()
    fmt = struct.pack("<HHIIHH", 3, 1, 16000, 64000, 4, 32)
    body = b"WAVE" + b"fmt " + struct.pack("<I", 16) + fmt + b"data" + struct.pack("<I", len(data)) + data
    path = tmp_path / "f.wav"
    path.write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)
    with pytest.raises(WavFormatError, match="audio_format"):
        read_wav(path)


def test_read_rejects_garbage(tmp_path):
    path = tmp_path / "g.wav"
    path.write_bytes(b"not a wav file at all")
    with pytest.raises(WavFormatError):
        read_wav(path)


def test_roundtrip_within_one_step(tmp_path):
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 1, 5000)
    write_wav(tmp_path / "r.wav", AudioClip(x, 22050))
    back = read_wav(tmp_path / "r.wav")
    assert back.sample_rate == 22050
    assert np.max(np.abs(back.samples - x)) <= 1 / 32768


def test_clip_rejects_out_of_range():
    with pytest.raises(ValueError):
        AudioClip(np.array([0.0, 1.5]), 16000)


def test_parse_phn(tmp_path):
    path = tmp_path / "a.phn"
    path.write_text("0 1600 sil\n\n1600 3200 aa\n")
    segs = parse_phonetic_annotation(path, 16000)
    assert segs == [PhoneSegment(0.0, 0.1, "sil"), PhoneSegment(0.1, 0.2, "aa")]


def test_parse_empty(tmp_path):
    path = tmp_path / "e.phn"
    path.write_text("")
    assert parse_phonetic_annotation(path, 16000) == []


def test_parse_reversed_segment(tmp_path):
    path = tmp_path / "r.phn"
    path.write_text("0 10 h#\n1600 800 aa\n")
    with pytest.raises(AnnotationError, match=":2:"):
        parse_phonetic_annotation(path, 16000)


@pytest.mark.parametrize("line", ["12 aa", "x 20 aa", "-1 20 aa"])
def test_parse_malformed(tmp_path, line):
    path = tmp_path / "m.phn"
    path.write_text(f"0 10 h#\n{line}\n")
    with pytest.raises(AnnotationError, match=":2:"):
        parse_phonetic_annotation(path, 16000)


def _derive(start, end, duration=2.0):
    (seg,) = derive_vowel_nuclei([PhoneSegment(start, end, "aa")], {"aa"}, duration)
    return seg


def test_pad_short_vowel():
    seg = _derive(1.000, 1.020)
    assert seg.start_s == pytest.approx(0.985, abs=1e-12)
    assert seg.end_s == pytest.approx(1.035, abs=1e-12)


def test_long_vowel_unchanged():
    assert _derive(1.0, 1.1) == VowelSegment(1.0, 1.1)


def test_pad_clamped_at_start():
    # midpoint 0.010 +- 0.025 -> [-0.015, 0.035]; clamping keeps [0, 0.035]
    seg = _derive(0.0, 0.020)
    assert seg.start_s == 0.0
    assert seg.end_s == pytest.approx(0.035, abs=1e-12)


def test_non_vowels_dropped_and_order_kept():
    phones = [
        PhoneSegment(0.0, 0.1, "h#"),
        PhoneSegment(0.3, 0.4, "iy"),
        PhoneSegment(0.1, 0.2, "aa"),
        PhoneSegment(0.2, 0.3, "s"),
    ]
    segs = derive_vowel_nuclei(phones, {"aa", "iy"}, 1.0)
    assert segs == [VowelSegment(0.3, 0.4), VowelSegment(0.1, 0.2)]


def test_padding_properties():
    rng = np.random.default_rng(1)
    duration = 3.0
    for _ in range(500):
        start = rng.uniform(0, duration - 0.001)
        end = min(start + rng.uniform(0.001, 0.2), duration)
        seg = _derive(start, end, duration)
        clamped = seg.start_s == 0.0 or seg.end_s == duration
        if not clamped:
            assert seg.end_s - seg.start_s >= MIN_VOWEL_S - 1e-9
        assert seg.end_s - seg.start_s >= (end - start) - 1e-12
        # re-deriving a padded segment never shrinks it
        again = _derive(seg.start_s, seg.end_s, duration)
        assert again.end_s - again.start_s >= seg.end_s - seg.start_s - 1e-12


def _manifest(tmp_path, entries, vowels=("aa",)):
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps({"vowel_labels": list(vowels), "utterances": entries}))
    return path


def test_load_corpus(tmp_path, wav_file):
    wav_file(np.zeros(16000), name="a.wav")
    wav_file(np.zeros(8000), name="b.wav")
    (tmp_path / "a.phn").write_text("0 1600 h#\n1600 3200 aa\n3200 3400 aa\n")
    path = _manifest(tmp_path, [
        {"id": "a", "wav": "a.wav", "phn": "a.phn"},
        {"id": "b", "wav": "b.wav", "nuclei": [[0.1, 0.2], [0.3, 0.31]]},
    ])
    corpus = load_corpus(path)
    assert len(corpus) == 2
    a, b = corpus
    assert a.syllable_count == 2 == len(a.vowel_segments)
    assert a.vowel_segments[1].end_s - a.vowel_segments[1].start_s == pytest.approx(0.05)
    assert b.syllable_count == 2
    assert b.vowel_segments[1].end_s - b.vowel_segments[1].start_s == pytest.approx(0.05)


def test_load_corpus_missing_wav(tmp_path, wav_file):
    wav_file(np.zeros(1600), name="a.wav")
    path = _manifest(tmp_path, [
        {"id": "a", "wav": "a.wav", "nuclei": []},
        {"id": "ghost", "wav": "ghost.wav", "nuclei": []},
    ])
    with pytest.raises(FileNotFoundError, match="ghost"):
        load_corpus(path)


def test_load_corpus_empty(tmp_path):
    with pytest.raises(CorpusError):
        load_corpus(_manifest(tmp_path, []))
