"""Data-hiding algorithms used to build stego corpora and to re-embed for
calibration.

All embedders work on mono int16 clips, never decode, and are deterministic
given ``(cover, spec)``: the embedder spec's ``seed`` drives every random draw
(positions, message bits, dither coins, spreading chips).
"""

from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy.fft import dct, idct

from .audio_io import INT16_MAX, INT16_MIN, AudioClip
from .errors import BadSpec, CapacityExceeded, TooShort, ValidationError


class EmbedKind(str, enum.Enum):
    LSB_REPLACE = "lsb_replace"
    LSB_MATCH = "lsb_match"
    INT_WAVELET = "int_wavelet"
    COX_DCT = "cox_dct"
    SS_DCT_ADD = "ss_dct_add"
    SS_TIME_ADD = "ss_time_add"


LSB_FAMILY = (EmbedKind.LSB_REPLACE, EmbedKind.LSB_MATCH, EmbedKind.INT_WAVELET)
COX_MAX_COEFFS = 1000


@dataclass(frozen=True)
class EmbedderSpec:
    kind: EmbedKind
    capacity_bps: float | None = None
    planes: int = 1
    alpha: float = 0.0
    n_coeffs: int | None = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", EmbedKind(self.kind))
        self.validate()

    def validate(self) -> None:
        c, b = self.capacity_bps, self.planes
        if self.kind in LSB_FAMILY and c is None:
            raise BadSpec(f"{self.kind.value} needs capacity_bps")
        if c is not None and c < 0:
            raise BadSpec("capacity_bps must be >= 0")
        if b < 1:
            raise BadSpec("planes must be >= 1")
        if self.kind is EmbedKind.LSB_REPLACE:
            if c >= 1 and not (c == b and b in (1, 2, 4)):
                raise BadSpec("full-rate lsb_replace needs capacity_bps == planes in {1, 2, 4}")
            if c < 1 and b != 1:
                raise BadSpec("fractional-rate lsb_replace is single-plane")
        if self.kind is EmbedKind.LSB_MATCH and (c > 1 or b != 1):
            raise BadSpec("lsb_match is single-plane with capacity_bps <= 1")
        if self.kind in LSB_FAMILY and c > b:
            raise BadSpec("capacity_bps exceeds planes")
        if self.n_coeffs is not None and self.n_coeffs < 1:
            raise BadSpec("n_coeffs must be >= 1")

    @property
    def is_identity(self) -> bool:
        return self.capacity_bps == 0

    def with_seed(self, seed: int) -> "EmbedderSpec":
        return replace(self, seed=int(seed))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        return {k: v for k, v in d.items() if v is not None}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "EmbedderSpec":
        unknown = set(d) - {"kind", "capacity_bps", "planes", "alpha", "n_coeffs", "seed"}
        if unknown:
            raise BadSpec(f"unknown embedder fields: {sorted(unknown)}")
        if "kind" not in d:
            raise BadSpec("embedder spec needs a 'kind'")
        try:
            kind = EmbedKind(str(d["kind"]).lower())
        except ValueError:
            raise BadSpec(f"unknown embedder kind {d['kind']!r}") from None
        kw = dict(d, kind=kind)
        return cls(**kw)

    @classmethod
    def from_json(cls, text: str) -> "EmbedderSpec":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise BadSpec(f"embedder JSON does not parse: {exc}") from None
        if not isinstance(d, dict):
            raise BadSpec("embedder JSON must be an object")
        return cls.from_dict(d)


def message_bits(rng: np.random.Generator, n: int) -> np.ndarray:
    """i.i.d. uniform message bits."""
    return rng.integers(0, 2, size=n, dtype=np.int64)


def pack_bits(bits: np.ndarray, b: int) -> np.ndarray:
    """Group consecutive runs of ``b`` bits into integers, first bit = LSB."""
    bits = bits.reshape(-1, b)
    return (bits << np.arange(b)).sum(axis=1)


def choose_positions(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    """``k`` distinct indices out of ``n`` from a seeded shuffle, ascending."""
    if k > n:
        raise CapacityExceeded(f"{k} positions requested out of {n}")
    if k == n:
        return np.arange(n)
    return np.sort(rng.permutation(n)[:k])


def saturate(x: np.ndarray) -> np.ndarray:
    return np.clip(x, INT16_MIN, INT16_MAX).astype(np.int16)


def _mono(cover: AudioClip) -> np.ndarray:
    if cover.channel_count != 1:
        raise ValidationError("embedders operate on mono clips; downmix first")
    if len(cover) == 0:
        raise TooShort("empty cover")
    return cover.samples.astype(np.int64)


def _n_message_bits(capacity: float, n: int) -> int:
    # small epsilon so that e.g. 0.12 * 25 does not floor to 2
    return int(np.floor(capacity * n + 1e-9))


def lsb_replace(x: np.ndarray, planes: int, rate: float, rng: np.random.Generator) -> np.ndarray:
    n = x.size
    mask = (1 << planes) - 1
    if rate >= 1:
        vals = pack_bits(message_bits(rng, n * planes), planes)
        return (x & ~mask) | vals
    pos = choose_positions(rng, n, _n_message_bits(rate, n))
    out = x.copy()
    out[pos] = (x[pos] & ~1) | message_bits(rng, pos.size)
    return out


def lsb_match(x: np.ndarray, rate: float, rng: np.random.Generator) -> np.ndarray:
    """±1 matching: a selected sample whose LSB disagrees with its bit moves up
    or down by one, at random, except at the rails where only one way is legal."""
    n = x.size
    pos = choose_positions(rng, n, _n_message_bits(rate, n))
    bits = message_bits(rng, pos.size)
    step = np.where(rng.integers(0, 2, size=pos.size) == 1, 1, -1)
    v = x[pos]
    step = np.where(v == INT16_MAX, -1, np.where(v == INT16_MIN, 1, step))
    change = (v & 1) != bits
    out = x.copy()
    out[pos] = v + np.where(change, step, 0)
    return out


def haar_forward(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Integer Haar lifting of an even-length signal -> (approx, detail)."""
    x = np.asarray(x, dtype=np.int64)
    even, odd = x[0::2], x[1::2]
    d = odd - even
    a = even + (d >> 1)
    return a, d


def haar_inverse(a: np.ndarray, d: np.ndarray) -> np.ndarray:
    even = a - (d >> 1)
    odd = d + even
    out = np.empty(2 * a.size, dtype=np.int64)
    out[0::2] = even
    out[1::2] = odd
    return out


def int_wavelet_embed(x: np.ndarray, planes: int, rate: float, rng: np.random.Generator) -> np.ndarray:
    n = x.size
    n_even = n - (n & 1)
    a, d = haar_forward(x[:n_even])
    n_bits = _n_message_bits(rate, n)
    n_coef = n_bits // planes
    if n_coef > d.size:
        raise CapacityExceeded(
            f"{n_bits} bits need {n_coef} detail coefficients, only {d.size} available"
        )
    pos = choose_positions(rng, d.size, n_coef)
    mask = (1 << planes) - 1
    d = d.copy()
    d[pos] = (d[pos] & ~mask) | pack_bits(message_bits(rng, n_coef * planes), planes)
    out = x.copy()
    out[:n_even] = haar_inverse(a, d)
    return out


def dct_ortho(x: np.ndarray) -> np.ndarray:
    return dct(np.asarray(x, dtype=float), type=2, norm="ortho")


def idct_ortho(v: np.ndarray) -> np.ndarray:
    return idct(np.asarray(v, dtype=float), type=2, norm="ortho")


def default_cox_coeffs(n: int) -> int:
    return min(COX_MAX_COEFFS, n // 10)


def cox_dct_embed(x: np.ndarray, alpha: float, n_coeffs: int | None, rng: np.random.Generator) -> np.ndarray:
    """Multiplicative watermark on the largest-magnitude AC DCT coefficients."""
    n = x.size
    k = default_cox_coeffs(n) if n_coeffs is None else n_coeffs
    if k < 1 or n <= k:
        raise TooShort(f"cover of {n} samples cannot carry {k} DCT coefficients")
    v = dct_ortho(x)
    ac = np.abs(v[1:])
    top = 1 + np.argsort(-ac, kind="stable")[:k]
    g = rng.standard_normal(k)
    v[top] *= 1.0 + alpha * g
    return np.rint(idct_ortho(v))


def chips(rng: np.random.Generator, n: int) -> np.ndarray:
    return np.where(rng.integers(0, 2, size=n) == 1, 1.0, -1.0)


def ss_dct_add(x: np.ndarray, strength: float, rng: np.random.Generator) -> np.ndarray:
    v = dct_ortho(x)
    v[1:] += strength * chips(rng, x.size - 1)
    return np.rint(idct_ortho(v))


def ss_time_add(x: np.ndarray, alpha: float, rng: np.random.Generator) -> np.ndarray:
    return x + np.rint(alpha * chips(rng, x.size)).astype(np.int64)


def embed(cover: AudioClip, spec: EmbedderSpec) -> AudioClip:
    """Hide a random message in ``cover`` according to ``spec``."""
    x = _mono(cover)
    if spec.is_identity:
        return cover
    rng = np.random.default_rng(spec.seed)
    kind = spec.kind
    if kind is EmbedKind.LSB_REPLACE:
        y = lsb_replace(x, spec.planes, spec.capacity_bps, rng)
    elif kind is EmbedKind.LSB_MATCH:
        y = lsb_match(x, spec.capacity_bps, rng)
    elif kind is EmbedKind.INT_WAVELET:
        y = int_wavelet_embed(x, spec.planes, spec.capacity_bps, rng)
    elif kind is EmbedKind.COX_DCT:
        y = cox_dct_embed(x, spec.alpha, spec.n_coeffs, rng)
    elif kind is EmbedKind.SS_DCT_ADD:
        if x.size < 2:
            raise TooShort("DCT spread spectrum needs at least 2 samples")
        y = ss_dct_add(x, spec.alpha, rng)
    elif kind is EmbedKind.SS_TIME_ADD:
        y = ss_time_add(x, spec.alpha, rng)
    else:  # pragma: no cover
        raise BadSpec(f"unhandled kind {kind}")
    return cover.with_samples(saturate(y))
