"""Seeded band-limited cover generator for the desk corpus.

Covers mix harmonic tones under slow random envelopes with low-pass filtered
noise, then quantise to int16. The spectrum falls off with frequency, which is
what real music and speech look like and what the detector relies on.
"""

from __future__ import annotations

import numpy as np
from scipy import signal

from .audio_io import AudioClip
from .embedders import saturate


def _envelope(rng: np.random.Generator, n: int, fs: float) -> np.ndarray:
    # smooth positive envelope from a few random knots
    n_knots = int(rng.integers(3, 9))
    knots = rng.uniform(0.2, 1.0, size=n_knots)
    t = np.linspace(0, 1, n)
    return np.interp(t, np.linspace(0, 1, n_knots), knots)


def synth_cover(seed: int, duration: float = 5.0, fs: int = 44100) -> AudioClip:
    rng = np.random.default_rng(seed)
    n = int(round(duration * fs))
    t = np.arange(n) / fs
    x = np.zeros(n)

    for _ in range(int(rng.integers(2, 6))):
        f0 = rng.uniform(60.0, 900.0)
        n_harm = int(rng.integers(3, 15))
        decay = rng.uniform(0.8, 2.0)
        env = _envelope(rng, n, fs)
        for h in range(1, n_harm + 1):
            f = h * f0 * (1 + rng.uniform(-0.002, 0.002))
            if f >= 0.45 * fs:
                break
            amp = h ** -decay
            x += env * amp * np.sin(2 * np.pi * f * t + rng.uniform(0, 2 * np.pi))

    cutoff = rng.uniform(1500.0, 8000.0)
    order = int(rng.integers(2, 7))
    sos = signal.butter(order, cutoff, fs=fs, output="sos")
    noise = signal.sosfilt(sos, rng.standard_normal(n))
    noise *= rng.uniform(0.05, 0.6) * np.std(x) / max(np.std(noise), 1e-12)
    x += _envelope(rng, n, fs) * noise

    gain = rng.uniform(4000.0, 8000.0) / max(np.sqrt(np.mean(x ** 2)), 1e-12)
    x *= min(gain, 30000.0 / max(np.abs(x).max(), 1e-12))
    # analogue noise floor of the "recording chain"
    x += rng.uniform(0.0, 0.3) * rng.standard_normal(n)
    return AudioClip(saturate(np.rint(x)), fs)


def synth_corpus(n_clips: int, seed: int = 0, duration: float = 5.0, fs: int = 44100) -> list[AudioClip]:
    seeds = np.random.SeedSequence(seed).generate_state(n_clips, dtype=np.uint32)
    return [synth_cover(int(s), duration, fs) for s in seeds]
