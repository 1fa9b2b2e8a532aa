from __future__ import annotations

import numpy as np
import pytest

from rmelsteg.audio_io import AudioClip
from rmelsteg.synth import synth_cover

# filled by tests/test_acceptance.py, printed at the end of the run
ACCEPTANCE_LINES: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: int(k.split()[0])):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def short_covers():
    """Twenty half-second synthetic covers (fast unit-test corpus)."""
    return [synth_cover(1000 + i, duration=0.5) for i in range(20)]


@pytest.fixture
def noise_clip(rng):
    return AudioClip(rng.integers(-20000, 20000, size=50_000), 44100)
