from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import Empty


@dataclass(frozen=True)
class NormStats:
    """Train-set population mean and std of every feature column."""

    m: np.ndarray
    sd: np.ndarray

    def to_dict(self) -> dict:
        return {"mean": self.m.tolist(), "sd": self.sd.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "NormStats":
        return cls(np.asarray(d["mean"], dtype=float), np.asarray(d["sd"], dtype=float))


def fit_norm(X) -> NormStats:
    X = np.asarray(getattr(X, "X", X), dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise Empty("cannot fit normalisation on an empty matrix")
    return NormStats(X.mean(axis=0), X.std(axis=0))


def apply_norm(X, stats: NormStats) -> np.ndarray:
    """Standardise columns; zero-variance columns map to 0."""
    X = np.asarray(X, dtype=float)
    ok = stats.sd > 0
    out = np.zeros_like(X)
    out[..., ok] = (X[..., ok] - stats.m[ok]) / stats.sd[ok]
    return out
