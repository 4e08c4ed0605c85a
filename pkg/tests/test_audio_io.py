import struct
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from progrock.audio_io import (AudioBuffer, SilentAudioWarning, decode_wav, frame_rms, load_for_pipeline,
                               normalize, resample, segment, trim_silence, write_wav)
from progrock.errors import AudioFormatError, UnsupportedAudioError


def _wav_bytes(frames: np.ndarray, sr: int, fmt: int = 1, bits: int = 16) -> bytes:
    """Minimal RIFF/WAVE writer used as an independent oracle."""
    if frames.ndim == 1:
        frames = frames[:, None]
    ch = frames.shape[1]
    if fmt == 1:
        payload = frames.astype("<i2").tobytes()
    else:
        payload = frames.astype("<f4").tobytes()
    block = ch * bits // 8
    fmt_chunk = struct.pack("<HHIIHH", fmt, ch, sr, sr * block, block, bits)
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt_chunk)) + fmt_chunk
    body += b"data" + struct.pack("<I", len(payload)) + payload
    return b"RIFF" + struct.pack("<I", len(body)) + body


def _tone(freq, seconds, sr, amp=0.5):
    t = np.arange(int(round(seconds * sr))) / sr
    return amp * np.sin(2 * np.pi * freq * t)


def _peak_hz(x, sr):
    spec = np.abs(np.fft.rfft(x * np.hanning(len(x))))
    return np.fft.rfftfreq(len(x), 1 / sr)[np.argmax(spec)]


# decode


def test_decode_silence(tmp_path):
    p = tmp_path / "z.wav"
    p.write_bytes(_wav_bytes(np.zeros(22050, dtype=np.int16), 22050))
    buf = decode_wav(p)
    assert buf.sample_rate == 22050
    assert len(buf) == 22050
    assert not buf.samples.any()


def test_decode_stereo_cancels(tmp_path):
    x = (np.random.default_rng(0).integers(-20000, 20000, 1000)).astype(np.int16)
    p = tmp_path / "s.wav"
    p.write_bytes(_wav_bytes(np.column_stack([x, -x]), 8000))
    assert np.all(decode_wav(p).samples == 0.0)


def test_decode_full_scale(tmp_path):
    p = tmp_path / "f.wav"
    p.write_bytes(_wav_bytes(np.array([32767, -32768, 0], dtype=np.int16), 22050))
    s = decode_wav(p).samples
    assert s[0] == 32767 / 32768
    assert s[1] == -1.0
    assert abs(s[0] - 0.99997) < 1e-5


def test_decode_float32(tmp_path):
    x = np.array([0.25, -0.5, 0.75], dtype=np.float32)
    p = tmp_path / "f32.wav"
    p.write_bytes(_wav_bytes(x, 16000, fmt=3, bits=32))
    np.testing.assert_array_equal(decode_wav(p).samples, x.astype(np.float64))


def test_decode_rejects_non_riff(tmp_path):
    p = tmp_path / "bad.wav"
    p.write_bytes(b"ID3\x03" + b"\x00" * 60)
    with pytest.raises(AudioFormatError):
        decode_wav(p)


def test_decode_rejects_truncated(tmp_path):
    p = tmp_path / "t.wav"
    p.write_bytes(_wav_bytes(np.zeros(100, dtype=np.int16), 8000)[:30])
    with pytest.raises(AudioFormatError):
        decode_wav(p)


def test_decode_rejects_8bit(tmp_path):
    p = tmp_path / "u8.wav"
    fmt_chunk = struct.pack("<HHIIHH", 1, 1, 8000, 8000, 1, 8)
    body = b"WAVE" + b"fmt " + struct.pack("<I", 16) + fmt_chunk + b"data" + struct.pack("<I", 4) + b"\x80" * 4
    p.write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)
    with pytest.raises(UnsupportedAudioError):
        decode_wav(p)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        decode_wav(tmp_path / "nope.wav")


@pytest.mark.parametrize("encoding", ["pcm16", "float32"])
def test_write_read_roundtrip(tmp_path, encoding):
    x = _tone(330, 0.2, 22050, 0.7)
    write_wav(tmp_path / "r.wav", AudioBuffer(x, 22050), encoding)
    back = decode_wav(tmp_path / "r.wav")
    tol = 0.5 / 32768 if encoding == "pcm16" else 1e-7
    assert back.sample_rate == 22050
    np.testing.assert_allclose(back.samples, x, atol=tol)


def test_buffer_rejects_nonfinite():
    with pytest.raises(ValueError):
        AudioBuffer(np.array([0.0, np.nan]), 22050)


# resample


def test_resample_identity():
    x = np.random.default_rng(1).uniform(-1, 1, 500)
    out = resample(AudioBuffer(x, 22050), 22050)
    np.testing.assert_array_equal(out.samples, x)


def test_resample_keeps_tone_and_duration():
    out = resample(AudioBuffer(_tone(440, 1.0, 44100), 44100), 22050)
    assert out.sample_rate == 22050
    assert abs(len(out) - 22050) <= 1
    assert abs(_peak_hz(out.samples, 22050) - 440) <= 3


# trim


def test_trim_tone_between_silences():
    sr = 22050
    x = np.concatenate([np.zeros(sr // 2), _tone(440, 1.0, sr), np.zeros(sr // 2)])
    out = trim_silence(AudioBuffer(x, sr), 60).samples
    nz = np.flatnonzero(out)
    lead, tail = nz[0], len(out) - 1 - nz[-1]
    # the whole tone survives and each margin is under one analysis frame
    assert nz[-1] - nz[0] + 1 >= sr - 2
    assert lead < 2048 and tail < 2048


def test_trim_no_silence_unchanged():
    x = _tone(220, 1.0, 22050)
    out = trim_silence(AudioBuffer(x, 22050))
    np.testing.assert_array_equal(out.samples, x)


def test_trim_all_silent_is_empty():
    with pytest.warns(SilentAudioWarning):
        out = trim_silence(AudioBuffer(np.zeros(22050), 22050))
    assert len(out) == 0


def test_frame_rms_constant():
    r = frame_rms(np.full(4096, 0.5), 2048, 512)
    assert np.allclose(r[:5], 0.5)


# normalize


@pytest.mark.parametrize("x, expected", [
    ([0.5, -0.25], [1.0, -0.5]),
    ([0.0, 0.0], [0.0, 0.0]),
    ([-0.2, 0.1], [-1.0, 0.5]),
])
def test_normalize_examples(x, expected):
    np.testing.assert_allclose(normalize(AudioBuffer(np.array(x), 10)).samples, expected)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=50))
def test_normalize_peak_is_one(values):
    x = np.array(values)
    out = normalize(AudioBuffer(x, 10)).samples
    if np.max(np.abs(x)) == 0:
        assert not out.any()
    else:
        assert np.isclose(np.max(np.abs(out)), 1.0)


# segment


@pytest.mark.parametrize("seconds, count", [(30, 6), (12, 2), (4, 0)])
def test_segment_counts(seconds, count):
    buf = AudioBuffer(np.zeros(seconds * 100), 100)
    snippets = segment(buf, 5, 5, "s")
    assert len(snippets) == count
    assert all(len(s.buffer) == 500 for s in snippets)
    assert [s.index for s in snippets] == list(range(count))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 4000), st.integers(1, 700), st.integers(1, 700))
def test_segment_count_formula(n, width, step):
    buf = AudioBuffer(np.arange(n, dtype=float), 100)
    snippets = segment(buf, width / 100, step / 100)
    expected = 0 if n < width else (n - width) // step + 1
    assert len(snippets) == expected
    for s in snippets:
        assert s.buffer.samples[0] == s.index * step


def test_load_for_pipeline_resamples_and_normalizes(tmp_path):
    x = _tone(440, 2.0, 44100, 0.3)
    write_wav(tmp_path / "a.wav", AudioBuffer(x, 44100), "float32")
    buf = load_for_pipeline(tmp_path / "a.wav")
    assert buf.sample_rate == 22050
    assert np.isclose(np.max(np.abs(buf.samples)), 1.0)


def test_load_silent_file_is_empty(tmp_path, caplog):
    write_wav(tmp_path / "z.wav", AudioBuffer(np.zeros(22050), 22050))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        buf = load_for_pipeline(tmp_path / "z.wav")
    assert len(buf) == 0
    assert "silent" in caplog.text
