import numpy as np
import pytest

from wearauth.ingest import AudioClip
from wearauth.segment import BreathingEvent, Original

SR = 22050

# (criterion, passed, detail) lines from the acceptance module, printed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def burst_clip(subject="S01", bursts=6, burst_s=1.4, gap_s=0.5, pad_s=0.4, seed=0, level=0.2):
    """Noise bursts separated by silence."""
    rng = np.random.default_rng(seed)
    pieces = [np.zeros(int(pad_s * SR))]
    for k in range(bursts):
        pieces.append(level * rng.uniform(-1, 1, int(burst_s * SR)))
        pieces.append(np.zeros(int((gap_s if k < bursts - 1 else pad_s) * SR)))
    return AudioClip(subject, np.concatenate(pieces), SR)


def make_event(seconds=1.4, seed=0, subject="S01", ordinal=0):
    rng = np.random.default_rng(seed)
    t = np.arange(int(seconds * SR)) / SR
    pcm = 0.3 * np.sin(2 * np.pi * 440 * t) + 0.05 * rng.normal(size=t.size)
    return BreathingEvent(subject, pcm, SR, Original(subject, ordinal))


@pytest.fixture
def event():
    return make_event()
