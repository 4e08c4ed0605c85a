"""Spectrogram, MFCC, chroma and beat features for one snippet."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dct

from .audio_io import AudioBuffer


@dataclass(frozen=True)
class ComplexSpectrogram:
    values: np.ndarray  # (n_fft // 2 + 1, n_frames) complex
    sample_rate: int
    hop: int

    @property
    def n_fft(self) -> int:
        return 2 * (self.values.shape[0] - 1)

    @property
    def n_frames(self) -> int:
        return self.values.shape[1]

    def frequencies(self) -> np.ndarray:
        return np.arange(self.values.shape[0]) * self.sample_rate / self.n_fft


@dataclass(frozen=True)
class BeatGrid:
    tempo_bpm: float
    beat_frames: np.ndarray

    @property
    def valid(self) -> bool:
        return self.tempo_bpm > 0


def hann(n: int) -> np.ndarray:
    """Periodic Hann window."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def stft(buf: AudioBuffer, n_fft: int = 2048, hop: int = 512) -> ComplexSpectrogram:
    """Centered STFT with reflect padding and a periodic Hann window."""
    if n_fft < 256 or n_fft & (n_fft - 1):
        raise ValueError("n_fft must be a power of two >= 256")
    if not 0 < hop <= n_fft:
        raise ValueError("hop must be in (0, n_fft]")
    x = buf.samples
    if x.shape[0] < 1:
        raise ValueError("cannot transform an empty buffer")
    pad = n_fft // 2
    # numpy reflect padding needs at least two samples
    x = np.pad(x, pad, mode="reflect" if x.shape[0] > 1 else "constant")
    n_frames = 1 + buf.samples.shape[0] // hop
    frames = np.lib.stride_tricks.sliding_window_view(x, n_fft)[::hop][:n_frames]
    values = np.fft.rfft(frames * hann(n_fft), axis=1).T
    return ComplexSpectrogram(values, buf.sample_rate, hop)


def hz_to_mel(f):
    """Slaney mel scale: linear below 1 kHz, logarithmic above."""
    f = np.asarray(f, dtype=np.float64)
    f_sp = 200.0 / 3
    min_log_hz = 1000.0
    min_log_mel = min_log_hz / f_sp
    logstep = np.log(6.4) / 27.0
    return np.where(f >= min_log_hz,
                    min_log_mel + np.log(np.maximum(f, min_log_hz) / min_log_hz) / logstep,
                    f / f_sp)


def mel_to_hz(m):
    m = np.asarray(m, dtype=np.float64)
    f_sp = 200.0 / 3
    min_log_hz = 1000.0
    min_log_mel = min_log_hz / f_sp
    logstep = np.log(6.4) / 27.0
    return np.where(m >= min_log_mel,
                    min_log_hz * np.exp(logstep * (m - min_log_mel)),
                    f_sp * m)


def mel_filterbank(sr: int = 22050, n_fft: int = 2048, n_mels: int = 128,
                   fmin: float = 0.0, fmax: float | None = None) -> np.ndarray:
    """Area-normalized triangular filters, shape ``(n_mels, n_fft // 2 + 1)``."""
    if fmax is None:
        fmax = sr / 2
    if not 0 <= fmin < fmax <= sr / 2:
        raise ValueError("need 0 <= fmin < fmax <= sr / 2")
    fft_freqs = np.arange(n_fft // 2 + 1) * sr / n_fft
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))
    widths = np.diff(edges)
    ramps = edges[:, None] - fft_freqs[None, :]
    lower = -ramps[:-2] / widths[:-1, None]
    upper = ramps[2:] / widths[1:, None]
    weights = np.maximum(0.0, np.minimum(lower, upper))
    weights *= (2.0 / (edges[2:] - edges[:-2]))[:, None]
    empty = np.flatnonzero(~np.any(weights > 0, axis=1))
    if empty.size:
        raise ValueError(f"{empty.size} empty mel filters; lower n_mels or raise n_fft")
    return weights


def log_mel(spec: ComplexSpectrogram, fb: np.ndarray, amin: float = 1e-10,
            top_db: float = 80.0) -> np.ndarray:
    """Mel power in dB relative to the matrix peak, floored at ``-top_db``."""
    if amin <= 0:
        raise ValueError("amin must be positive")
    power = fb @ (np.abs(spec.values) ** 2)
    db = 10.0 * np.log10(np.maximum(power, amin))
    db -= 10.0 * np.log10(max(amin, power.max()))
    return np.maximum(db, -top_db)


def mfcc(mel_db: np.ndarray, n_mfcc: int = 19) -> np.ndarray:
    """Orthonormal DCT-II along the mel axis, first ``n_mfcc`` rows."""
    if n_mfcc > mel_db.shape[0]:
        raise ValueError("n_mfcc cannot exceed the number of mel bands")
    return dct(mel_db, type=2, norm="ortho", axis=0)[:n_mfcc]


def chromagram(spec: ComplexSpectrogram, fmin: float = 32.70) -> np.ndarray:
    """Fold bin energies into 12 pitch classes (C=0) by nearest semitone.

    Bins below ``fmin`` (default C1) are ignored; each frame is scaled so its
    largest class is 1, and silent frames stay zero.
    """
    freqs = spec.frequencies()
    use = freqs >= fmin
    midi = 69.0 + 12.0 * np.log2(freqs[use] / 440.0)
    pitch_class = np.mod(np.round(midi).astype(int), 12)
    fold = np.zeros((12, use.sum()))
    fold[pitch_class, np.arange(use.sum())] = 1.0
    chroma = fold @ (np.abs(spec.values[use]) ** 2)
    peak = chroma.max(axis=0)
    out = np.zeros_like(chroma)
    nz = peak > 0
    out[:, nz] = chroma[:, nz] / peak[nz]
    return out


def onset_strength(mel_db: np.ndarray, shift: int = 0) -> np.ndarray:
    """Mean half-wave-rectified spectral flux; frame 0 is zero.

    ``shift`` delays the envelope by that many frames (zero-filled) to offset
    the lead introduced by centered analysis windows.
    """
    flux = np.maximum(0.0, np.diff(mel_db, axis=1)).mean(axis=0)
    env = np.concatenate([[0.0], flux])
    if shift > 0:
        env = np.concatenate([np.zeros(shift), env[:-shift]])
    return env


def _parabolic_peak(y: np.ndarray, i: int) -> float:
    if i <= 0 or i >= y.shape[0] - 1:
        return float(i)
    a, b, c = y[i - 1], y[i], y[i + 1]
    denom = a - 2 * b + c
    if denom >= 0:
        return float(i)
    return i + 0.5 * (a - c) / denom


def estimate_period(env: np.ndarray, sr: int, hop: int,
                    bpm_range: tuple[float, float] = (60.0, 240.0)) -> float:
    """Beat period in frames from the envelope autocorrelation; 0 if none.

    The fundamental is the shortest-lag strong autocorrelation peak inside the
    tempo range; its estimate is then refined by fitting the peaks found at
    integer multiples of it.
    """
    fps = sr / hop
    min_lag = 60.0 * fps / bpm_range[1]
    max_lag = 60.0 * fps / bpm_range[0]
    x = env - env.mean()
    if not np.any(x):
        return 0.0
    # smooth so that beats falling on alternating integer frames form one lobe
    k = np.arange(-4, 5)
    x = np.convolve(x, np.exp(-0.5 * k ** 2), mode="same")
    n = x.shape[0]
    full = np.correlate(x, x, mode="full")[n - 1:]
    ac = full / (n - np.arange(n))  # unbiased
    lo = max(1, int(np.floor(min_lag)) - 1)
    hi = min(n - 2, int(np.ceil(max_lag)) + 1)
    if hi <= lo:
        return 0.0
    peaks = [i for i in range(lo, hi + 1) if ac[i] >= ac[i - 1] and ac[i] >= ac[i + 1] and ac[i] > 0]
    if not peaks:
        return 0.0
    best = max(ac[i] for i in peaks)
    strong = [i for i in peaks if ac[i] >= 0.8 * best]
    period = _parabolic_peak(ac, strong[0])
    period = min(max(period, min_lag), max_lag)

    # refine with multiples of the period that fit in the usable lag range
    usable = n // 2
    lags, mults = [period], [1.0]
    m = 2
    while m * period + period / 4 < usable:
        a = int(np.floor(m * period - period / 4))
        b = int(np.ceil(m * period + period / 4))
        seg = ac[a:b + 1]
        j = a + int(np.argmax(seg))
        lags.append(_parabolic_peak(ac, j))
        mults.append(float(m))
        m += 1
    lags, mults = np.asarray(lags), np.asarray(mults)
    return float(np.dot(lags, mults) / np.dot(mults, mults))


def beat_track(env: np.ndarray, sr: int = 22050, hop: int = 512,
               bpm_range: tuple[float, float] = (60.0, 240.0),
               tightness: float = 100.0) -> BeatGrid:
    """Dynamic-programming beat tracker over an onset envelope."""
    env = np.asarray(env, dtype=np.float64)
    if env.shape[0] < 2:
        raise ValueError("envelope needs at least two frames")
    empty = BeatGrid(0.0, np.zeros(0, dtype=np.int64))
    if not np.any(env > 0):
        return empty
    period = estimate_period(env, sr, hop, bpm_range)
    if period <= 0:
        return empty
    tempo = 60.0 * sr / (hop * period)

    std = env.std()
    score = env / std if std > 0 else env
    n = score.shape[0]
    cum = np.zeros(n)
    back = np.full(n, -1, dtype=np.int64)
    lo_off = max(1, int(round(period / 2)))
    hi_off = int(round(2 * period))
    threshold = 0.01 * score.max()
    started = False
    for i in range(n):
        lo = i - hi_off
        hi = i - lo_off
        best, arg = -np.inf, -1
        if hi >= 0:
            prev = np.arange(max(lo, 0), hi + 1)
            cand = cum[prev] - tightness * np.log((i - prev) / period) ** 2
            j = int(np.argmax(cand))
            best, arg = cand[j], int(prev[j])
        cum[i] = score[i] + (best if arg >= 0 else 0.0)
        if not started and score[i] < threshold:
            back[i] = -1
        else:
            back[i] = arg
            started = True

    # last beat: final local maximum of the cumulative score above half its median
    is_max = np.zeros(n, dtype=bool)
    is_max[1:-1] = (cum[1:-1] > cum[:-2]) & (cum[1:-1] >= cum[2:])
    is_max[-1] = cum[-1] > cum[-2]
    maxima = np.flatnonzero(is_max)
    if maxima.size == 0:
        return BeatGrid(tempo, np.zeros(0, dtype=np.int64))
    cutoff = 0.5 * np.median(cum[maxima])
    last = maxima[cum[maxima] >= cutoff][-1]
    beats = [int(last)]
    while back[beats[-1]] >= 0:
        beats.append(int(back[beats[-1]]))
    beats = np.array(beats[::-1], dtype=np.int64)

    # drop weak beats at either end
    floor = 0.5 * np.sqrt(np.mean(score[beats] ** 2))
    keep = np.flatnonzero(score[beats] > floor)
    if keep.size == 0:
        return BeatGrid(tempo, np.zeros(0, dtype=np.int64))
    beats = beats[keep[0]:keep[-1] + 1]
    return BeatGrid(tempo, beats)


def beat_channel(grid: BeatGrid, n_frames: int) -> np.ndarray:
    out = np.zeros(n_frames)
    frames = np.asarray(grid.beat_frames, dtype=np.int64)
    if frames.size and (frames.min() < 0 or frames.max() >= n_frames):
        raise ValueError("beat frame outside [0, n_frames)")
    out[frames] = 1.0
    return out
