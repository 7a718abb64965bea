import numpy as np
import pytest

from sylrate.audio_io import AudioClip, write_wav
from sylrate.synth import SynthSpec, gen_corpus, gen_utterance

ORACLE_WEIGHTS = (1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0)

# filled by test_acceptance, echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def wav_file(tmp_path):
    """Factory writing a mono 16-bit wav from float samples."""

    def make(samples, sample_rate=16000, name="clip.wav"):
        path = tmp_path / name
        write_wav(path, AudioClip(np.asarray(samples, dtype=float), sample_rate))
        return path

    return make


@pytest.fixture(scope="session")
def five_syllables():
    return gen_utterance(SynthSpec(n_syllables=5, seed=3))


@pytest.fixture(scope="session")
def small_corpus():
    return gen_corpus(12, seed=5)
