"""Spectral helpers: derivative, power spectra, Mel / reversed-Mel filter banks,
band energies and Welch PSD."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadLength,
    DegenerateFilter,
    LengthMismatch,
    MismatchedBank,
    OutOfRange,
    TooShort,
    ValidationError,
)

LOG_FLOOR = 1e-12
MEL_K = 1127.0
MEL_F0 = 700.0


class ScaleKind(str, enum.Enum):
    MEL = "mel"
    RMEL = "rmel"


class SpectrumMode(str, enum.Enum):
    POWER = "power"
    MAGNITUDE = "magnitude"


@dataclass(frozen=True)
class PowerSpectrum:
    """One-sided ``|X(k)|^2`` for ``k = 0..nfft/2``.

    ``bins`` may also be 2-D (frames x bins) when produced by
    :func:`frames_power`.
    """

    bins: np.ndarray
    nfft: int
    sample_rate: float = 1.0

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(self.nfft // 2 + 1) * self.sample_rate / self.nfft

    def two_sided_sum(self) -> np.ndarray:
        """Sum of |X(k)|^2 over all nfft bins, rebuilt from the one-sided half."""
        b = self.bins
        return b[..., 0] + b[..., -1] + 2.0 * b[..., 1:-1].sum(axis=-1)


def second_derivative(x) -> np.ndarray:
    """Second central difference ``x[m+1] - 2x[m] + x[m-1]`` (length n-2)."""
    x = np.asarray(x, dtype=float)
    if x.size < 3:
        raise TooShort("second derivative needs at least 3 samples")
    return x[2:] - 2.0 * x[1:-1] + x[:-2]


def _check_nfft(nfft: int, n: int) -> None:
    if nfft < 2 or nfft & (nfft - 1):
        raise BadLength(f"nfft={nfft} is not a power of two >= 2")
    if n > nfft:
        raise BadLength(f"frame of {n} samples does not fit nfft={nfft}")


def dft_power(frame, nfft: int, sample_rate: float = 1.0) -> PowerSpectrum:
    frame = np.asarray(frame, dtype=float)
    _check_nfft(nfft, frame.shape[-1])
    spec = np.fft.rfft(frame, n=nfft)
    return PowerSpectrum(spec.real ** 2 + spec.imag ** 2, nfft, sample_rate)


def frames_power(frames: np.ndarray, nfft: int, sample_rate: float = 1.0,
                 mode: SpectrumMode = SpectrumMode.POWER) -> PowerSpectrum:
    """Vectorised ``dft_power`` over the rows of ``frames``.

    ``mode=MAGNITUDE`` returns ``|X(k)|`` instead; used only by the
    magnitude-spectrum variant of the energy features.
    """
    ps = dft_power(frames, nfft, sample_rate)
    if SpectrumMode(mode) is SpectrumMode.MAGNITUDE:
        return PowerSpectrum(np.sqrt(ps.bins), nfft, sample_rate)
    return ps


# -- scales -----------------------------------------------------------------

def _check_range(f, fs_half: float) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if np.any(f < 0) or np.any(f > fs_half * (1 + 1e-12)):
        raise OutOfRange(f"frequency outside [0, {fs_half}] Hz")
    return f


def mel(f, fs: float | None = None):
    """Mel value of ``f`` Hz. ``fs`` is only used for range checking."""
    f = np.asarray(f, dtype=float)
    if np.any(f < 0) or (fs is not None and np.any(f > fs / 2 * (1 + 1e-12))):
        raise OutOfRange("frequency out of range")
    return MEL_K * np.log1p(f / MEL_F0)


def mel_to_hz(m):
    return MEL_F0 * np.expm1(np.asarray(m, dtype=float) / MEL_K)


def rmel(f, fs: float):
    """Reversed-Mel value: the Mel map mirrored about Nyquist."""
    f = _check_range(f, fs / 2)
    return MEL_K * np.log1p((0.5 * fs - f) / MEL_F0)


def rmel_to_hz(r, fs: float):
    return 0.5 * fs - MEL_F0 * np.expm1(np.asarray(r, dtype=float) / MEL_K)


# -- filter banks -------------------------------------------------------------

@dataclass(frozen=True)
class FilterBank:
    M: int
    scale: ScaleKind
    sample_rate: float
    nfft: int
    edges_hz: np.ndarray  # M + 2 ascending
    weights: np.ndarray  # (M, nfft/2 + 1)

    def support(self, k: int) -> tuple[float, float]:
        """Zero-outside interval of filter ``k`` (1-based) in Hz."""
        return float(self.edges_hz[k - 1]), float(self.edges_hz[k + 1])

    def widths(self) -> np.ndarray:
        return self.edges_hz[2:] - self.edges_hz[:-2]


def scale_points_hz(M: int, fs: float, scale: ScaleKind) -> np.ndarray:
    """The M+2 section boundaries, mapped to Hz and sorted ascending."""
    scale = ScaleKind(scale)
    nyq = fs / 2.0
    if scale is ScaleKind.MEL:
        top = float(mel(nyq))
        hz = mel_to_hz(np.arange(M + 2) * (top / (M + 1)))
    else:
        top = float(rmel(0.0, fs))
        hz = rmel_to_hz(np.arange(M + 2) * (top / (M + 1)), fs)
    hz = np.sort(hz)
    # pin the ends against round-off
    hz[0], hz[-1] = 0.0, nyq
    return hz


def triangle_weights(edges_hz: np.ndarray, freqs: np.ndarray) -> np.ndarray:
    M = edges_hz.size - 2
    w = np.zeros((M, freqs.size))
    for k in range(1, M + 1):
        lo, c, hi = edges_hz[k - 1], edges_hz[k], edges_hz[k + 1]
        rise = (freqs > lo) & (freqs <= c)
        fall = (freqs > c) & (freqs < hi)
        w[k - 1, rise] = (freqs[rise] - lo) / (c - lo)
        w[k - 1, fall] = (hi - freqs[fall]) / (hi - c)
    return w


def build_filterbank(M: int, fs: float, nfft: int, scale: ScaleKind = ScaleKind.RMEL) -> FilterBank:
    """M triangular windows over equal sections of the Mel or R-Mel axis.

    Filters are numbered by ascending centre frequency for both scales, so
    filter M is always the highest-frequency one.
    """
    if M < 1:
        raise ValidationError("M must be >= 1")
    _check_nfft(nfft, 0)
    scale = ScaleKind(scale)
    edges = scale_points_hz(M, fs, scale)
    freqs = np.arange(nfft // 2 + 1) * fs / nfft
    weights = triangle_weights(edges, freqs)
    empty = np.flatnonzero(~(weights > 0).any(axis=1))
    if empty.size:
        raise DegenerateFilter(
            f"filter {int(empty[0]) + 1} of {M} ({scale.value}) covers no FFT bin at nfft={nfft}"
        )
    weights.flags.writeable = False
    edges.flags.writeable = False
    return FilterBank(M, scale, float(fs), nfft, edges, weights)


def filterbank_energies(ps: PowerSpectrum, fb: FilterBank) -> np.ndarray:
    """Natural-log filter energies, floored at ``LOG_FLOOR``.

    Works on a single spectrum or on a frames x bins stack.
    """
    if ps.nfft != fb.nfft:
        raise MismatchedBank(f"spectrum nfft={ps.nfft} vs bank nfft={fb.nfft}")
    raw = ps.bins @ fb.weights.T
    return np.log(np.maximum(raw, LOG_FLOOR))


def cepstrum(E, double_log: bool = False) -> np.ndarray:
    """Magnitude of the inverse DFT of the (already log) filter energies.

    ``double_log=True`` applies a further log first, the literal reading of the
    textbook formula; non-positive energies are floored.
    """
    E = np.asarray(E, dtype=float)
    if double_log:
        E = np.log(np.maximum(E, LOG_FLOOR))
    return np.abs(np.fft.ifft(E, axis=-1))


# -- band energies / PSD ------------------------------------------------------

def _next_pow2(n: int) -> int:
    return 1 << max(1, int(n - 1).bit_length())


def band_index(nfft: int, L: int) -> np.ndarray:
    """0-based band of each one-sided bin; a bin on a boundary goes to the lower band."""
    k = np.arange(nfft // 2 + 1)
    # bin k sits at normalized frequency 2*pi*k/nfft; band i covers [(i-1)pi/L, i*pi/L]
    idx = -((-2 * L * k) // nfft)  # ceil(2Lk / nfft)
    return np.clip(idx, 1, L) - 1


def band_energies(x, L: int, nfft: int | None = None) -> np.ndarray:
    """Energy in L equal sub-bands of [0, pi].

    ``x`` may be one frame or a frames x samples stack; ``nfft`` defaults to
    the next power of two covering the frame.
    """
    if L < 1:
        raise ValidationError("L must be >= 1")
    x = np.asarray(x, dtype=float)
    nfft = nfft or _next_pow2(x.shape[-1])
    ps = dft_power(x, nfft)
    out = np.zeros(ps.bins.shape[:-1] + (L,))
    idx = band_index(nfft, L)
    for i in range(L):
        out[..., i] = ps.bins[..., idx == i].sum(axis=-1)
    return out


def psd_welch(x, seg_len: int, hop: int, sample_rate: float = 1.0) -> PowerSpectrum:
    """Average of Hann-windowed periodograms, each divided by the window energy.

    With this normalisation unit-variance white noise has an expected value of
    1 in every bin.
    """
    from .audio_io import segment

    x = np.asarray(x, dtype=float)
    if x.size < seg_len:
        raise TooShort(f"{x.size} samples < segment length {seg_len}")
    frames = segment(x, seg_len, hop).frames
    n = np.arange(seg_len)
    win = 0.5 - 0.5 * np.cos(2 * np.pi * n / seg_len)  # periodic Hann
    nfft = _next_pow2(seg_len)
    ps = dft_power(frames * win, nfft, sample_rate)
    return PowerSpectrum(ps.bins.mean(axis=0) / np.sum(win ** 2), nfft, sample_rate)


def band_discriminability(cover, stego, L: int) -> np.ndarray:
    """Per-band energy ratio stego/cover; ``inf`` where the cover band is empty."""
    c = np.asarray(getattr(cover, "samples", cover), dtype=float)
    s = np.asarray(getattr(stego, "samples", stego), dtype=float)
    if c.shape != s.shape:
        raise LengthMismatch(f"cover has {c.size} samples, stego {s.size}")
    ec = band_energies(c, L)
    es = band_energies(s, L)
    out = np.full(L, np.inf)
    ok = ec >= LOG_FLOOR
    out[ok] = es[ok] / ec[ok]
    return out
