"""Decode, condition and segment audio into fixed-length snippets.

All functions are pure: they take an :class:`AudioBuffer` and return a new one.
"""

from __future__ import annotations

import logging
import struct
import warnings
from dataclasses import dataclass
from math import gcd
from pathlib import Path

import numpy as np
from scipy.signal import resample_poly

from .errors import AudioFormatError, UnsupportedAudioError

log = logging.getLogger(__name__)

PIPELINE_RATE = 22050

_FORMAT_PCM = 0x0001
_FORMAT_FLOAT = 0x0003
_FORMAT_EXTENSIBLE = 0xFFFE


class SilentAudioWarning(UserWarning):
    """Raised (as a warning) when trimming leaves nothing behind."""


@dataclass(frozen=True)
class AudioBuffer:
    """Mono float signal with its sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("AudioBuffer samples must be one-dimensional")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("AudioBuffer samples must be finite")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate


@dataclass(frozen=True)
class Snippet:
    buffer: AudioBuffer
    song_id: str
    index: int


# --------------------------------------------------------------------------
# WAVE decoding / encoding


def _read_chunks(data: bytes):
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise AudioFormatError("missing RIFF/WAVE header")
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        (size,) = struct.unpack("<I", data[pos + 4:pos + 8])
        body = data[pos + 8:pos + 8 + size]
        yield chunk_id, body
        pos += 8 + size + (size & 1)


def decode_wav(path) -> AudioBuffer:
    """Read a PCM16 or float32 WAVE file, averaging channels to mono."""
    data = Path(path).read_bytes()
    fmt = None
    payload = None
    for chunk_id, body in _read_chunks(data):
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise AudioFormatError("fmt chunk too short")
            fmt = struct.unpack("<HHIIHH", body[:16])
            if fmt[0] == _FORMAT_EXTENSIBLE:
                if len(body) < 26:
                    raise AudioFormatError("extensible fmt chunk too short")
                (sub,) = struct.unpack("<H", body[24:26])
                fmt = (sub,) + fmt[1:]
        elif chunk_id == b"data" and payload is None:
            payload = body
    if fmt is None:
        raise AudioFormatError("no fmt chunk")
    if payload is None:
        raise AudioFormatError("no data chunk")

    encoding, channels, rate, _, block_align, bits = fmt
    if rate <= 0:
        raise AudioFormatError(f"invalid sample rate {rate}")
    if channels not in (1, 2):
        raise UnsupportedAudioError(f"{channels} channels not supported")
    if encoding == _FORMAT_PCM and bits == 16:
        dtype, scale = np.dtype("<i2"), 1.0 / 32768.0
    elif encoding == _FORMAT_FLOAT and bits == 32:
        dtype, scale = np.dtype("<f4"), 1.0
    else:
        raise UnsupportedAudioError(f"encoding {encoding:#06x} with {bits} bits not supported")
    if block_align != channels * dtype.itemsize:
        raise AudioFormatError(f"block_align {block_align} inconsistent with format")

    n_frames = len(payload) // block_align
    raw = np.frombuffer(payload[:n_frames * block_align], dtype=dtype)
    samples = raw.astype(np.float64).reshape(n_frames, channels) * scale
    if not np.all(np.isfinite(samples)):
        raise AudioFormatError("non-finite float samples")
    mono = samples.mean(axis=1)
    return AudioBuffer(np.clip(mono, -1.0, 1.0), rate)


def write_wav(path, buf: AudioBuffer, encoding: str = "pcm16") -> None:
    """Write a mono WAVE file (``pcm16`` or ``float32``)."""
    x = np.clip(buf.samples, -1.0, 1.0)
    if encoding == "pcm16":
        body = np.clip(np.round(x * 32768.0), -32768, 32767).astype("<i2").tobytes()
        code, bits = _FORMAT_PCM, 16
    elif encoding == "float32":
        body = x.astype("<f4").tobytes()
        code, bits = _FORMAT_FLOAT, 32
    else:
        raise ValueError(f"unknown encoding {encoding!r}")
    align = bits // 8
    fmt = struct.pack("<HHIIHH", code, 1, buf.sample_rate, buf.sample_rate * align, align, bits)
    chunks = b"fmt " + struct.pack("<I", len(fmt)) + fmt
    chunks += b"data" + struct.pack("<I", len(body)) + body
    if len(body) & 1:
        chunks += b"\x00"
    Path(path).write_bytes(b"RIFF" + struct.pack("<I", 4 + len(chunks)) + b"WAVE" + chunks)


# --------------------------------------------------------------------------
# conditioning


def resample(buf: AudioBuffer, target_rate: int) -> AudioBuffer:
    """Polyphase windowed-sinc resampling to ``target_rate``."""
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if target_rate == buf.sample_rate:
        return buf
    g = gcd(int(target_rate), buf.sample_rate)
    up, down = int(target_rate) // g, buf.sample_rate // g
    y = resample_poly(buf.samples, up, down, window=("kaiser", 5.0))
    return AudioBuffer(y, int(target_rate))


def frame_rms(samples: np.ndarray, frame_length: int = 2048, hop: int = 512) -> np.ndarray:
    """RMS of non-centered frames starting every ``hop`` samples.

    The last frame is zero-padded so every sample belongs to at least one frame.
    """
    n = samples.shape[0]
    if n == 0:
        return np.zeros(0)
    n_frames = 1 + max(0, -(-(n - frame_length) // hop))
    padded = np.zeros((n_frames - 1) * hop + frame_length)
    padded[:n] = samples
    frames = np.lib.stride_tricks.sliding_window_view(padded, frame_length)[::hop]
    return np.sqrt(np.mean(frames ** 2, axis=1))


def trim_silence(buf: AudioBuffer, top_db: float = 60.0,
                 frame_length: int = 2048, hop: int = 512) -> AudioBuffer:
    """Drop leading/trailing frames more than ``top_db`` below the loudest frame.

    An all-silent input yields an empty buffer and a :class:`SilentAudioWarning`.
    """
    if top_db <= 0:
        raise ValueError("top_db must be positive")
    rms = frame_rms(buf.samples, frame_length, hop)
    peak = rms.max() if rms.size else 0.0
    if peak <= 0.0:
        warnings.warn("audio is entirely silent", SilentAudioWarning, stacklevel=2)
        return AudioBuffer(np.zeros(0), buf.sample_rate)
    loud = np.flatnonzero(rms > peak * 10.0 ** (-top_db / 20.0))
    start = loud[0] * hop
    end = min(len(buf), loud[-1] * hop + frame_length)
    return AudioBuffer(buf.samples[start:end], buf.sample_rate)


def normalize(buf: AudioBuffer) -> AudioBuffer:
    peak = np.max(np.abs(buf.samples)) if len(buf) else 0.0
    if peak == 0.0:
        return buf
    return AudioBuffer(buf.samples / peak, buf.sample_rate)


def segment(buf: AudioBuffer, snippet_seconds: float = 5.0, hop_seconds: float = 5.0,
            song_id: str = "") -> list[Snippet]:
    """Cut consecutive fixed-length windows; a trailing partial window is dropped."""
    if snippet_seconds <= 0 or hop_seconds <= 0:
        raise ValueError("snippet_seconds and hop_seconds must be positive")
    width = int(round(snippet_seconds * buf.sample_rate))
    step = int(round(hop_seconds * buf.sample_rate))
    if len(buf) < width:
        return []
    count = (len(buf) - width) // step + 1
    return [
        Snippet(AudioBuffer(buf.samples[i * step:i * step + width], buf.sample_rate), song_id, i)
        for i in range(count)
    ]


def load_for_pipeline(path, sample_rate: int = PIPELINE_RATE, top_db: float = 60.0) -> AudioBuffer:
    """decode -> resample -> trim -> normalize, as used on ingest."""
    buf = resample(decode_wav(path), sample_rate)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SilentAudioWarning)
        buf = trim_silence(buf, top_db)
    if any(issubclass(w.category, SilentAudioWarning) for w in caught):
        log.warning("%s is silent after trimming", path)
    return normalize(buf)
