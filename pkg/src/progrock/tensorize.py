"""Assemble snippet features into 160 x 216 tensors and persist them.

Channel layout (rows):

    0-127    log-mel power (dB)
    128-146  MFCC 0..18
    147-158  chroma C..B
    159      beat impulses
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import dsp_features as dsp
from .audio_io import Snippet
from .errors import CacheCorruptError, CacheFormatError, ConfigurationError

N_CHANNELS = 160
N_FRAMES = 216
MEL_ROWS = slice(0, 128)
MFCC_ROWS = slice(128, 147)
CHROMA_ROWS = slice(147, 159)
BEAT_ROW = 159

CACHE_MAGIC = b"PRFT"
CACHE_VERSION = 1

PROG, NONPROG, UNLABELED = 1, 0, -1
LABEL_NAMES = {PROG: "prog", NONPROG: "nonprog", UNLABELED: "unlabeled"}
LABEL_CODES = {v: k for k, v in LABEL_NAMES.items()}


@dataclass
class FeatureConfig:
    """Every knob of ingest and feature extraction."""

    sample_rate: int = 22050
    snippet_seconds: float = 5.0
    hop_seconds: float = 5.0
    trim_top_db: float = 60.0
    n_fft: int = 2048
    hop: int = 512
    n_mels: int = 128
    fmin: float = 0.0
    fmax: float = 11025.0
    amin: float = 1e-10
    top_db: float = 80.0
    onset_shift: int = 1  # frames; offsets the lead of dB flux under centered windows
    n_mfcc: int = 19
    bpm_min: float = 60.0
    bpm_max: float = 240.0
    tightness: float = 100.0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureConfig":
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        return cls(**known)


@dataclass
class SnippetTensor:
    values: np.ndarray
    song_id: str
    snippet_index: int
    label: int = UNLABELED

    def __post_init__(self):
        if self.values.shape != (N_CHANNELS, N_FRAMES):
            raise ConfigurationError(f"tensor shape {self.values.shape} != {(N_CHANNELS, N_FRAMES)}")


@lru_cache(maxsize=8)
def _filterbank(sr, n_fft, n_mels, fmin, fmax):
    fb = dsp.mel_filterbank(sr, n_fft, n_mels, fmin, fmax)
    fb.setflags(write=False)
    return fb


def feature_matrix(snippet: Snippet, config: FeatureConfig | None = None) -> np.ndarray:
    """The raw (unscaled) channel stack for one snippet."""
    cfg = config or FeatureConfig()
    buf = snippet.buffer
    if buf.sample_rate != cfg.sample_rate:
        raise ConfigurationError(f"snippet rate {buf.sample_rate} != pipeline rate {cfg.sample_rate}")
    spec = dsp.stft(buf, cfg.n_fft, cfg.hop)
    fb = _filterbank(cfg.sample_rate, cfg.n_fft, cfg.n_mels, cfg.fmin, cfg.fmax)
    mel_db = dsp.log_mel(spec, fb, cfg.amin, cfg.top_db)
    coeffs = dsp.mfcc(mel_db, cfg.n_mfcc)
    chroma = dsp.chromagram(spec)
    env = dsp.onset_strength(mel_db, shift=cfg.onset_shift)
    grid = dsp.beat_track(env, cfg.sample_rate, cfg.hop, (cfg.bpm_min, cfg.bpm_max), cfg.tightness)
    beats = dsp.beat_channel(grid, spec.n_frames)
    return np.vstack([mel_db, coeffs, chroma, beats[None, :]])


def assemble(snippet: Snippet, label: int = UNLABELED,
             config: FeatureConfig | None = None) -> SnippetTensor:
    values = feature_matrix(snippet, config)
    if values.shape != (N_CHANNELS, N_FRAMES):
        raise ConfigurationError(
            f"feature matrix is {values.shape}, expected {(N_CHANNELS, N_FRAMES)}; "
            "the feature configuration has drifted from the tensor layout")
    return SnippetTensor(values.astype(np.float32), snippet.song_id, snippet.index, label)


# --------------------------------------------------------------------------
# standardization


@dataclass
class ChannelScaler:
    mean: np.ndarray
    std: np.ndarray

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (values - self.mean[:, None]) / self.std[:, None]

    def invert(self, values: np.ndarray) -> np.ndarray:
        return values * self.std[:, None] + self.mean[:, None]


def fit_scaler(training: list[SnippetTensor], floor: float = 1e-8) -> ChannelScaler:
    """Per-channel mean/std over every training snippet and frame."""
    if not training:
        raise ValueError("cannot fit a scaler on zero tensors")
    stack = np.stack([t.values for t in training]).astype(np.float64)
    mean = stack.mean(axis=(0, 2))
    std = np.maximum(stack.std(axis=(0, 2)), floor)
    return ChannelScaler(mean, std)


def apply_scaler(scaler: ChannelScaler, tensor: SnippetTensor) -> SnippetTensor:
    return SnippetTensor(scaler.apply(tensor.values), tensor.song_id, tensor.snippet_index, tensor.label)


def flatten(tensor: SnippetTensor | np.ndarray) -> np.ndarray:
    values = tensor.values if isinstance(tensor, SnippetTensor) else tensor
    return np.ascontiguousarray(values).reshape(-1)


def unflatten(vector: np.ndarray) -> np.ndarray:
    return np.asarray(vector).reshape(N_CHANNELS, N_FRAMES)


# --------------------------------------------------------------------------
# binary cache

_HEADER = struct.Struct("<4sHI")
_RECORD_FLOATS = N_CHANNELS * N_FRAMES


def write_cache(tensors: list[SnippetTensor], path) -> None:
    """Little-endian record file; values stored as float32 row-major."""
    parts = [_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, len(tensors))]
    for t in tensors:
        sid = t.song_id.encode("utf-8")
        parts.append(struct.pack("<H", len(sid)))
        parts.append(sid)
        parts.append(struct.pack("<Ib", t.snippet_index, t.label))
        parts.append(np.ascontiguousarray(t.values, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_cache(path) -> list[SnippetTensor]:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise CacheCorruptError("cache shorter than its header")
    magic, version, count = _HEADER.unpack_from(data)
    if magic != CACHE_MAGIC:
        raise CacheFormatError(f"bad cache magic {magic!r}")
    if version != CACHE_VERSION:
        raise CacheFormatError(f"unsupported cache version {version}")
    pos = _HEADER.size
    out = []
    nbytes = _RECORD_FLOATS * 4
    try:
        for _ in range(count):
            (n,) = struct.unpack_from("<H", data, pos)
            pos += 2
            if pos + n > len(data):
                raise CacheCorruptError("truncated song id")
            sid = data[pos:pos + n].decode("utf-8")
            pos += n
            index, label = struct.unpack_from("<Ib", data, pos)
            pos += 5
            if pos + nbytes > len(data):
                raise CacheCorruptError("truncated tensor payload")
            values = np.frombuffer(data, dtype="<f4", count=_RECORD_FLOATS, offset=pos)
            pos += nbytes
            out.append(SnippetTensor(values.reshape(N_CHANNELS, N_FRAMES).copy(), sid, index, label))
    except struct.error as exc:
        raise CacheCorruptError(f"truncated record: {exc}") from exc
    if pos != len(data):
        raise CacheCorruptError(f"{len(data) - pos} trailing bytes after {count} records")
    return out


@dataclass
class CacheIndex:
    """Companion JSON: song_id -> snippet count and label, plus the feature config."""

    songs: dict = field(default_factory=dict)
    feature_config: dict = field(default_factory=lambda: FeatureConfig().to_dict())

    @classmethod
    def from_tensors(cls, tensors: list[SnippetTensor], config: FeatureConfig) -> "CacheIndex":
        songs: dict = {}
        for t in tensors:
            entry = songs.setdefault(t.song_id, {"snippets": 0, "label": LABEL_NAMES[t.label]})
            entry["snippets"] += 1
        return cls(songs, config.to_dict())

    def write(self, path) -> None:
        doc = {"songs": self.songs, "feature_config": self.feature_config}
        Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")

    @classmethod
    def read(cls, path) -> "CacheIndex":
        doc = json.loads(Path(path).read_text())
        return cls(doc["songs"], doc["feature_config"])


def index_path(cache_path) -> Path:
    return Path(cache_path).with_suffix(".index.json")
