"""PCM-16 WAV reading/writing and frame segmentation."""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .errors import NotWav, Truncated, TooShort, UnsupportedFormat, ValidationError

PathLike = Union[str, Path]

INT16_MIN = -32768
INT16_MAX = 32767
WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_EXTENSIBLE = 0xFFFE


@dataclass(frozen=True, eq=False)
class AudioClip:
    """Integer PCM samples plus sample rate.

    Multi-channel audio is stored interleaved (frame-major), exactly as it
    sits in the data chunk.
    """

    samples: np.ndarray
    sample_rate: int
    channel_count: int = 1

    def __post_init__(self):
        raw = np.asarray(self.samples)
        if raw.ndim != 1:
            raise ValidationError("samples must be one-dimensional")
        if raw.size and not np.issubdtype(raw.dtype, np.integer):
            raise ValidationError(f"samples must be integers, got {raw.dtype}")
        if raw.size and (raw.min() < INT16_MIN or raw.max() > INT16_MAX):
            raise ValidationError("samples outside the signed 16-bit range")
        if int(self.sample_rate) <= 0:
            raise ValidationError("sample_rate must be positive")
        if int(self.channel_count) <= 0:
            raise ValidationError("channel_count must be positive")
        if raw.size % int(self.channel_count):
            raise ValidationError("sample count is not a multiple of channel_count")
        samples = raw.astype(np.int16, copy=True)
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))
        object.__setattr__(self, "channel_count", int(self.channel_count))

    def __len__(self) -> int:
        return self.samples.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, AudioClip):
            return NotImplemented
        return (
            self.sample_rate == other.sample_rate
            and self.channel_count == other.channel_count
            and np.array_equal(self.samples, other.samples)
        )

    __hash__ = None

    @property
    def n_frames(self) -> int:
        return self.samples.size // self.channel_count

    def with_samples(self, samples: np.ndarray) -> "AudioClip":
        return AudioClip(samples, self.sample_rate, self.channel_count)


@dataclass(frozen=True)
class FrameSet:
    frames: np.ndarray  # (n_frames, frame_len)
    frame_len: int
    hop: int

    def __len__(self) -> int:
        return self.frames.shape[0]


def _parse_fmt(body: bytes):
    if len(body) < 16:
        raise Truncated("fmt chunk shorter than 16 bytes")
    fmt_code, channels, rate, _byte_rate, block_align, bits = struct.unpack("<HHIIHH", body[:16])
    if fmt_code == WAVE_FORMAT_EXTENSIBLE and len(body) >= 26:
        # sub-format GUID starts at offset 24; its first two bytes carry the real code
        fmt_code = struct.unpack("<H", body[24:26])[0]
    if fmt_code != WAVE_FORMAT_PCM:
        raise UnsupportedFormat(f"audio format code {fmt_code} is not PCM")
    if bits != 16:
        raise UnsupportedFormat(f"{bits} bits per sample; only 16 is supported")
    if channels < 1 or rate < 1:
        raise UnsupportedFormat("fmt chunk declares zero channels or zero rate")
    if block_align != 2 * channels:
        raise UnsupportedFormat(f"block align {block_align} inconsistent with {channels} channels")
    return channels, rate


def decode_wav(data: bytes) -> AudioClip:
    """Decode an in-memory RIFF/WAVE byte string."""
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise NotWav("missing RIFF/WAVE header")
    pos = 12
    fmt = None
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        (size,) = struct.unpack("<I", data[pos + 4:pos + 8])
        body_start = pos + 8
        if chunk_id == b"fmt ":
            fmt = _parse_fmt(data[body_start:body_start + size])
        elif chunk_id == b"data":
            if fmt is None:
                raise UnsupportedFormat("data chunk precedes fmt chunk")
            if body_start + size > len(data):
                raise Truncated(
                    f"data chunk declares {size} bytes, only {len(data) - body_start} present"
                )
            channels, rate = fmt
            body = data[body_start:body_start + size]
            if size % (2 * channels):
                raise Truncated("data chunk does not hold a whole number of frames")
            samples = np.frombuffer(body, dtype="<i2").astype(np.int16)
            return AudioClip(samples, rate, channels)
        # chunks are word aligned
        pos = body_start + size + (size & 1)
    if fmt is None:
        raise NotWav("no fmt chunk found")
    raise Truncated("no data chunk found")


def read_wav(path: PathLike) -> AudioClip:
    """Read a 16-bit PCM WAV file. Unknown chunks before ``data`` are skipped."""
    return decode_wav(Path(path).read_bytes())


def encode_wav(clip: AudioClip) -> bytes:
    payload = clip.samples.astype("<i2").tobytes()
    ch = clip.channel_count
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(payload), b"WAVE",
        b"fmt ", 16, WAVE_FORMAT_PCM, ch, clip.sample_rate,
        clip.sample_rate * 2 * ch, 2 * ch, 16,
        b"data", len(payload),
    )
    return header + payload


def atomic_write_bytes(path: PathLike, payload: bytes) -> None:
    """Write through a temp file in the same directory, then rename."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=p.parent, prefix=f".{p.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, p)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_wav(clip: AudioClip, path: PathLike) -> None:
    atomic_write_bytes(path, encode_wav(clip))


def downmix_mono(clip: AudioClip) -> AudioClip:
    """Average channels per frame, rounding halves away from zero."""
    if clip.channel_count == 1:
        return clip
    frames = clip.samples.astype(np.int64).reshape(-1, clip.channel_count)
    total = frames.sum(axis=1)
    ch = clip.channel_count
    # exact integer rounding of total/ch, halves away from zero
    mag = (2 * np.abs(total) + ch) // (2 * ch)
    mono = np.sign(total) * mag
    return AudioClip(mono, clip.sample_rate, 1)


def segment(x, frame_len: int, hop: int) -> FrameSet:
    """Split ``x`` into frames of ``frame_len`` starting every ``hop`` samples.

    A trailing partial frame is dropped. The returned frames are a copy.
    """
    x = np.asarray(x, dtype=float)
    if frame_len <= 0 or hop <= 0 or hop > frame_len:
        raise ValidationError(f"need 0 < hop <= frame_len, got frame_len={frame_len}, hop={hop}")
    if x.size < frame_len:
        raise TooShort(f"{x.size} samples cannot fill a {frame_len}-sample frame")
    n = (x.size - frame_len) // hop + 1
    view = np.lib.stride_tricks.sliding_window_view(x, frame_len)[::hop]
    assert view.shape[0] == n
    return FrameSet(np.array(view), frame_len, hop)
