"""Deterministic synthetic signals and a two-genre toy corpus.

The corpus is built to be separable: "pop" songs are 4/4 pure-sine triads over
a kick on every beat at 92-108 BPM; "prog" songs are 7/8 (2+2+3) clusters of
harmonically rich tones in a higher register with noise-burst accents at
138-162 eighth-note BPM.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..audio_io import AudioBuffer, write_wav


def synth_signal(kind: str, duration: float, sr: int = 22050, *, freq: float = 440.0,
                 freqs=(261.63, 329.63, 392.0), bpm: float = 120.0, amplitude: float = 0.5,
                 seed: int = 0) -> AudioBuffer:
    """``sine``, ``chord``, ``click_train`` or ``noise`` of the given duration."""
    if duration <= 0 or sr <= 0:
        raise ValueError("duration and sample rate must be positive")
    n = int(round(duration * sr))
    t = np.arange(n) / sr
    if kind == "sine":
        x = amplitude * np.sin(2 * np.pi * freq * t)
    elif kind == "chord":
        x = amplitude * np.mean([np.sin(2 * np.pi * f * t) for f in freqs], axis=0)
    elif kind == "click_train":
        x = np.zeros(n)
        period = 60.0 / bpm
        clicks = np.round(np.arange(0.0, duration, period) * sr).astype(int)
        x[clicks[clicks < n]] = amplitude
    elif kind == "noise":
        x = amplitude * np.random.default_rng(seed).uniform(-1.0, 1.0, n)
    else:
        raise ValueError(f"unknown signal kind {kind!r}")
    return AudioBuffer(x, sr)


def _midi_hz(m):
    return 440.0 * 2.0 ** ((np.asarray(m, dtype=float) - 69) / 12)


def _tone(t, f, partials, decay):
    out = np.zeros_like(t)
    for k in range(1, partials + 1):
        out += np.sin(2 * np.pi * k * f * t) / k
    return out * np.exp(-decay * t)


def synth_song(genre: str, seed: int, duration: float = 15.0, sr: int = 22050) -> AudioBuffer:
    rng = np.random.default_rng(seed)
    n = int(round(duration * sr))
    x = np.zeros(n)
    if genre == "pop":
        bpm = rng.uniform(92, 108)
        beat = 60.0 / bpm
        root = 48 + int(rng.integers(0, 7))
        progression = [(0, 4, 7), (7, 11, 14), (9, 12, 16), (5, 9, 12)]
        bar = 4 * beat
        for b in range(int(np.ceil(duration / bar))):
            chord = progression[b % 4]
            start = int(b * bar * sr)
            stop = min(n, int((b + 1) * bar * sr))
            if start >= n:
                break
            t = np.arange(stop - start) / sr
            for m in chord:
                x[start:stop] += 0.25 * _tone(t, _midi_hz(root + m), 1, 0.3)
        kick_len = int(0.12 * sr)
        tk = np.arange(kick_len) / sr
        kick = np.sin(2 * np.pi * 60 * tk) * np.exp(-30 * tk)
        for i in range(int(duration / beat) + 1):
            s = int(i * beat * sr)
            e = min(n, s + kick_len)
            if s < n:
                x[s:e] += (0.9 if i % 2 == 0 else 0.6) * kick[:e - s]
    elif genre == "prog":
        bpm = rng.uniform(138, 162)
        eighth = 60.0 / bpm
        groups = (2, 2, 3)
        root = 62 + int(rng.integers(0, 7))
        voicings = [(0, 3, 6, 10, 13), (1, 5, 8, 11, 14), (-2, 2, 6, 9, 15)]
        pos, step = 0.0, 0
        while pos < duration:
            for g in groups:
                s = int(pos * sr)
                if s >= n:
                    break
                e = min(n, int((pos + g * eighth) * sr))
                t = np.arange(e - s) / sr
                chord = voicings[step % len(voicings)]
                for m in chord:
                    x[s:e] += 0.15 * _tone(t, _midi_hz(root + m + 12 * int(rng.integers(0, 2))), 6, 4.0)
                burst = min(e - s, int(0.04 * sr))
                x[s:s + burst] += 0.5 * rng.uniform(-1, 1, burst) * np.exp(-60 * t[:burst])
                pos += g * eighth
                step += 1
    else:
        raise ValueError(f"unknown genre {genre!r}")
    x += 0.01 * rng.standard_normal(n)
    return AudioBuffer(x / np.max(np.abs(x)) * 0.9, sr)


def write_corpus(root, n_per_class: int = 20, duration: float = 15.0, seed: int = 0,
                 sr: int = 22050) -> tuple[Path, Path]:
    """Write ``prog/`` and ``nonprog/`` directories of synthetic songs."""
    root = Path(root)
    prog_dir, pop_dir = root / "prog", root / "nonprog"
    prog_dir.mkdir(parents=True, exist_ok=True)
    pop_dir.mkdir(parents=True, exist_ok=True)
    seeds = np.random.SeedSequence(seed).generate_state(2 * n_per_class)
    for i in range(n_per_class):
        write_wav(prog_dir / f"prog_{i:03d}.wav", synth_song("prog", int(seeds[2 * i]), duration, sr))
        write_wav(pop_dir / f"pop_{i:03d}.wav", synth_song("pop", int(seeds[2 * i + 1]), duration, sr))
    return prog_dir, pop_dir
