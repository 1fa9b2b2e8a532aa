"""Steganography noise, bit-plane sensitivity and pooled corpus reports."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .audio_io import AudioClip
from .embedders import EmbedderSpec, embed
from .errors import BadPlane, Empty, EmptyCorpus, LengthMismatch

logger = logging.getLogger(__name__)

N_PLANES = 16


@dataclass(frozen=True)
class NoisePmf:
    support: np.ndarray
    probs: np.ndarray

    def as_dict(self) -> dict[int, float]:
        return {int(k): float(p) for k, p in zip(self.support, self.probs)}

    def prob(self, value: int) -> float:
        hit = np.flatnonzero(self.support == value)
        return float(self.probs[hit[0]]) if hit.size else 0.0


def _samples(x) -> np.ndarray:
    return np.asarray(getattr(x, "samples", x)).astype(np.int64)


def steg_noise(cover, stego) -> np.ndarray:
    if isinstance(cover, AudioClip) and isinstance(stego, AudioClip):
        if cover.sample_rate != stego.sample_rate:
            raise LengthMismatch("cover and stego sample rates differ")
    c, s = _samples(cover), _samples(stego)
    if c.shape != s.shape:
        raise LengthMismatch(f"cover has {c.size} samples, stego {s.size}")
    return s - c


def noise_pmf(noise) -> NoisePmf:
    noise = np.asarray(noise, dtype=np.int64)
    if noise.size == 0:
        raise Empty("noise sequence is empty")
    support, counts = np.unique(noise, return_counts=True)
    return NoisePmf(support, counts / noise.size)


def bitplane(clip, i: int) -> np.ndarray:
    """Bit ``i`` (1 = LSB, 16 = sign) of each sample's two's-complement word."""
    if not 1 <= i <= N_PLANES:
        raise BadPlane(f"bit-plane {i} outside 1..{N_PLANES}")
    words = _samples(clip).astype(np.int16).view(np.uint16)
    return ((words >> (i - 1)) & 1).astype(np.uint8)


def ber(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise LengthMismatch(f"bit sequences of length {a.size} and {b.size}")
    if a.size == 0:
        raise Empty("bit sequences are empty")
    return float(np.count_nonzero(a != b)) / a.size


def plane_flips(cover, stego, planes: Sequence[int]) -> np.ndarray:
    """Number of flipped bits per plane (used for pooling across clips)."""
    c = _samples(cover).astype(np.int16).view(np.uint16)
    s = _samples(stego).astype(np.int16).view(np.uint16)
    if c.shape != s.shape:
        raise LengthMismatch(f"cover has {c.size} samples, stego {s.size}")
    diff = c ^ s
    for i in planes:
        if not 1 <= i <= N_PLANES:
            raise BadPlane(f"bit-plane {i} outside 1..{N_PLANES}")
    return np.array([np.count_nonzero((diff >> (i - 1)) & 1) for i in planes], dtype=np.int64)


def sensitivity(cover, stego, i: int) -> float:
    """Twice the bit error rate of plane ``i``. Not clamped: values above 1
    mean the plane was anti-correlated with the cover."""
    steg_noise(cover, stego)
    return 2.0 * ber(bitplane(cover, i), bitplane(stego, i))


@dataclass
class SensitivityReport:
    embedder: EmbedderSpec
    planes: list[int]
    s: np.ndarray
    n_clips: int
    n_samples: int
    pooling: str = "sample-weighted"
    anomalous: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "embedder": self.embedder.to_dict(),
            "planes": list(self.planes),
            "sensitivity": [float(v) for v in self.s],
            "n_clips": self.n_clips,
            "n_samples": self.n_samples,
            "pooling": self.pooling,
            "anomalous_planes": list(self.anomalous),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self, label: str | None = None) -> str:
        """One row: method, parameter, S_i in percent (one decimal)."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "param"] + [f"S{i}" for i in self.planes])
        w.writerow([label or self.embedder.kind.value, _param_label(self.embedder)]
                   + [f"{100 * v:.1f}" for v in self.s])
        return buf.getvalue()


def _param_label(spec: EmbedderSpec) -> str:
    if spec.capacity_bps is not None:
        return f"C={spec.capacity_bps:g}"
    return f"alpha={spec.alpha:g}"


def sensitivity_report(covers: Iterable[AudioClip], spec: EmbedderSpec,
                       planes: Sequence[int] = range(1, 7), seeds: Sequence[int] | None = None) -> SensitivityReport:
    """Pool bit-plane sensitivities over a corpus.

    Each clip gets its own message: ``seeds[j]`` if given, otherwise
    ``spec.seed + j``.
    """
    planes = list(planes)
    flips = np.zeros(len(planes), dtype=np.int64)
    n_clips = n_samples = 0
    for j, cover in enumerate(covers):
        seed = seeds[j] if seeds is not None else spec.seed + j
        stego = embed(cover, spec.with_seed(seed))
        flips += plane_flips(cover, stego, planes)
        n_clips += 1
        n_samples += len(cover)
    if n_clips == 0:
        raise EmptyCorpus("no clips to analyse")
    s = 2.0 * flips / n_samples
    # a fully randomised plane has S = 1 with binomial std 1/sqrt(n); only
    # excursions beyond 3 std count as anti-correlation
    limit = 1.0 + 3.0 / np.sqrt(n_samples)
    anomalous = [p for p, v in zip(planes, s) if v > limit]
    if anomalous:
        logger.warning("sensitivity above 1 on planes %s", anomalous)
    return SensitivityReport(spec, planes, s, n_clips, n_samples, anomalous=anomalous)
