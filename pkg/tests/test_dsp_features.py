import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.fft import idct

from progrock import dsp_features as dsp
from progrock.audio_io import AudioBuffer
from progrock.pipeline.synth import synth_signal

SR, N_FFT, HOP = 22050, 2048, 512


def _spec(x, sr=SR):
    return dsp.stft(AudioBuffer(np.asarray(x, dtype=float), sr), N_FFT, HOP)


def _envelope(buf):
    spec = dsp.stft(buf, N_FFT, HOP)
    mel_db = dsp.log_mel(spec, dsp.mel_filterbank(buf.sample_rate, N_FFT, 128, 0, buf.sample_rate / 2))
    return dsp.onset_strength(mel_db, shift=1)


def _click_frames(bpm, seconds):
    times = np.arange(0.0, seconds, 60.0 / bpm)
    return np.round(times * SR).astype(int) / HOP


# STFT


def test_stft_frame_count_for_five_seconds():
    assert _spec(np.zeros(110250)).n_frames == 216
    assert _spec(np.zeros(110250)).values.shape == (1025, 216)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 20000))
def test_stft_frame_count_formula(n):
    assert _spec(np.ones(n)).n_frames == n // HOP + 1


def test_stft_dc_in_bin_zero():
    mag = np.abs(_spec(np.full(SR, 0.5)).values)
    assert np.all(mag.argmax(axis=0) == 0)


def test_stft_bin_aligned_sine():
    # cosine phase, symmetric about both ends, so reflect padding continues it seamlessly
    f = 32 * SR / N_FFT
    x = np.cos(2 * np.pi * f * np.arange(22017) / SR)
    mag = np.abs(_spec(x).values)
    assert np.all(mag.argmax(axis=0) == 32)


def test_stft_bin_aligned_sine_interior_frames():
    # a zero-phase sine is odd about sample 0; only frames clear of the padding are checked
    f = 32 * SR / N_FFT
    x = np.sin(2 * np.pi * f * np.arange(SR) / SR)
    mag = np.abs(_spec(x).values)
    assert np.all(mag[:, 2:-2].argmax(axis=0) == 32)


def test_stft_parseval_per_frame():
    x = np.random.default_rng(3).normal(size=8192)
    spec = _spec(x)
    padded = np.pad(x, N_FFT // 2, mode="reflect")
    for t in (0, 3, 9, spec.n_frames - 1):
        seg = padded[t * HOP:t * HOP + N_FFT] * dsp.hann(N_FFT)
        full = np.fft.fft(seg)
        energy = (np.abs(full) ** 2).sum() / N_FFT
        assert energy == pytest.approx((seg ** 2).sum(), rel=1e-6)
        half = np.abs(spec.values[:, t]) ** 2
        rebuilt = (half[0] + 2 * half[1:-1].sum() + half[-1]) / N_FFT
        assert rebuilt == pytest.approx((seg ** 2).sum(), rel=1e-6)


def test_hann_periodic():
    w = dsp.hann(8)
    np.testing.assert_allclose(w, [0, 0.146446609, 0.5, 0.853553391, 1, 0.853553391, 0.5, 0.146446609],
                               atol=1e-9)


def test_stft_parameter_errors():
    with pytest.raises(ValueError):
        _spec(np.zeros(0))
    with pytest.raises(ValueError):
        dsp.stft(AudioBuffer(np.zeros(100), SR), 1000, 100)


# mel


def test_mel_scale_roundtrip_and_knee():
    f = np.array([0.0, 200.0, 1000.0, 4000.0, 11025.0])
    np.testing.assert_allclose(dsp.mel_to_hz(dsp.hz_to_mel(f)), f, rtol=1e-12, atol=1e-9)
    assert dsp.hz_to_mel(1000.0) == pytest.approx(15.0)


def test_mel_filterbank_shape_and_rows():
    fb = dsp.mel_filterbank(22050, 2048, 128, 0, 11025)
    assert fb.shape == (128, 1025)
    assert np.all(fb.max(axis=1) > 0)
    # independent center recomputation: linear below 1 kHz at 200/3 Hz per mel
    mels = np.linspace(0, dsp.hz_to_mel(11025.0), 130)[1:-1]
    centers = np.where(mels < 15, mels * 200 / 3, 1000 * np.exp(np.log(6.4) / 27 * (mels - 15)))
    assert np.all(np.diff(centers) > 0)
    peak_bins = fb.argmax(axis=1)
    assert np.all(np.diff(peak_bins) >= 0)
    np.testing.assert_allclose(peak_bins * SR / N_FFT, centers, atol=SR / N_FFT)


def test_mel_filterbank_rejects_empty_filters():
    with pytest.raises(ValueError):
        dsp.mel_filterbank(22050, 256, 256, 0, 11025)


def test_log_mel_peak_and_floor():
    x = synth_signal("chord", 1.0, SR).samples
    spec = _spec(x)
    fb = dsp.mel_filterbank()
    db = dsp.log_mel(spec, fb)
    assert db.max() == pytest.approx(0.0, abs=1e-9)
    assert db.min() >= -80.0


def test_log_mel_silence_is_uniform():
    db = dsp.log_mel(_spec(np.zeros(SR)), dsp.mel_filterbank())
    assert np.all(db == db[0, 0])


def test_log_mel_amplitude_invariant():
    x = synth_signal("chord", 1.0, SR, amplitude=0.2).samples
    fb = dsp.mel_filterbank()
    np.testing.assert_allclose(dsp.log_mel(_spec(x), fb), dsp.log_mel(_spec(2 * x), fb), atol=1e-9)


# MFCC


def test_mfcc_constant_column():
    c = -17.5
    out = dsp.mfcc(np.full((128, 3), c), 19)
    np.testing.assert_allclose(out[0], c * np.sqrt(128))
    np.testing.assert_allclose(out[1:], 0.0, atol=1e-9)


def test_mfcc_db_offset_shifts_only_c0():
    x = np.random.default_rng(2).normal(size=(128, 4))
    d = dsp.mfcc(x + 5.0, 19) - dsp.mfcc(x, 19)
    np.testing.assert_allclose(d[0], 5.0 * np.sqrt(128))
    np.testing.assert_allclose(d[1:], 0.0, atol=1e-9)


def test_mfcc_invertible_when_full():
    x = np.random.default_rng(0).normal(size=(128, 5))
    back = idct(dsp.mfcc(x, 128), type=2, norm="ortho", axis=0)
    np.testing.assert_allclose(back, x, atol=1e-9)


@pytest.mark.parametrize("k", [1, 4, 11, 18])
def test_mfcc_basis_column(k):
    n = np.arange(128)
    col = np.cos(np.pi * k * (2 * n + 1) / 256)
    out = dsp.mfcc(col[:, None], 19)[:, 0]
    assert np.argmax(np.abs(out)) == k
    assert np.sum(np.abs(out) > 1e-9) == 1


# chroma


@pytest.mark.parametrize("freq", [440.0, 880.0, 220.0, 110.0])
def test_chroma_a(freq):
    x = synth_signal("sine", 1.0, SR, freq=freq).samples
    chroma = dsp.chromagram(_spec(x))
    assert np.all(chroma[:, 2:-2].argmax(axis=0) == 9)


def test_chroma_440_every_frame():
    assert np.all(dsp.chromagram(_spec(synth_signal("sine", 1.0, SR, freq=440.0).samples)).argmax(axis=0) == 9)


def test_chroma_amplitude_invariant():
    x = synth_signal("chord", 1.0, SR).samples
    a = dsp.chromagram(_spec(0.1 * x)).argmax(axis=0)
    b = dsp.chromagram(_spec(x)).argmax(axis=0)
    np.testing.assert_array_equal(a, b)


def test_chroma_c_major_triad():
    x = synth_signal("chord", 1.0, SR, freqs=(261.63, 329.63, 392.0)).samples
    mid = dsp.chromagram(_spec(x))[:, 10]
    assert set(np.argsort(mid)[-3:]) == {0, 4, 7}


def test_chroma_silence_zero():
    assert not dsp.chromagram(_spec(np.zeros(SR))).any()


# onset strength


def test_onset_constant_is_zero():
    assert not dsp.onset_strength(np.full((128, 50), -20.0)).any()


def test_onset_single_loud_frame():
    m = np.full((128, 40), -80.0)
    m[:, 17] = 0.0
    env = dsp.onset_strength(m)
    assert env.argmax() == 17
    assert np.count_nonzero(env) == 1


def test_onset_decreasing_energy_is_zero():
    m = np.tile(np.linspace(0, -80, 60), (128, 1))
    assert not dsp.onset_strength(m).any()


def test_onset_shift_delays():
    m = np.full((4, 20), -80.0)
    m[:, 5] = 0.0
    assert dsp.onset_strength(m, shift=2).argmax() == 7


# tempo and beats


def test_beat_track_120_bpm():
    buf = synth_signal("click_train", 10.0, SR, bpm=120)
    grid = dsp.beat_track(_envelope(buf), SR, HOP)
    assert abs(grid.tempo_bpm - 120) <= 2
    clicks = _click_frames(120, 10.0)
    assert len(grid.beat_frames) >= len(clicks) - 2
    for b in grid.beat_frames:
        assert np.min(np.abs(clicks - b)) <= 1


def test_beat_track_240_bpm():
    buf = synth_signal("click_train", 10.0, SR, bpm=240)
    grid = dsp.beat_track(_envelope(buf), SR, HOP)
    assert abs(grid.tempo_bpm - 240) <= 4


@pytest.mark.parametrize("bpm", [65.0, 90.0, 150.0, 200.0])
def test_beat_period_within_one_hop(bpm):
    buf = synth_signal("click_train", 12.0, SR, bpm=bpm)
    grid = dsp.beat_track(_envelope(buf), SR, HOP)
    true_period = 60.0 / bpm * SR
    est_period = 60.0 / grid.tempo_bpm * SR
    assert abs(est_period - true_period) <= HOP


def test_beat_track_silence():
    grid = dsp.beat_track(np.zeros(216), SR, HOP)
    assert grid.tempo_bpm == 0
    assert len(grid.beat_frames) == 0
    assert not grid.valid


def test_beats_strictly_increasing_in_range():
    buf = synth_signal("click_train", 5.0, SR, bpm=137)
    env = _envelope(buf)
    grid = dsp.beat_track(env, SR, HOP)
    f = np.asarray(grid.beat_frames)
    assert np.all(np.diff(f) > 0)
    assert f.min() >= 0 and f.max() < len(env)


def test_beat_channel():
    ch = dsp.beat_channel(dsp.BeatGrid(120.0, np.array([10, 20])), 30)
    assert ch.shape == (30,)
    assert list(np.flatnonzero(ch)) == [10, 20]
    assert ch.sum() == 2
    assert not dsp.beat_channel(dsp.BeatGrid(0.0, np.zeros(0, dtype=int)), 30).any()
    with pytest.raises(ValueError):
        dsp.beat_channel(dsp.BeatGrid(120.0, np.array([30])), 30)


@pytest.mark.parametrize("bpm", [60, 90, 137, 175, 240])
@pytest.mark.parametrize("offset", [0.0, 0.013, 0.05])
def test_beats_align_with_clicks_across_phase(bpm, offset):
    n = 10 * SR
    clicks = np.round(np.arange(offset, 10.0, 60.0 / bpm) * SR).astype(int)
    x = np.zeros(n)
    x[clicks[clicks < n]] = 0.5
    grid = dsp.beat_track(_envelope(AudioBuffer(x, SR)), SR, HOP)
    assert abs(grid.tempo_bpm - bpm) <= 0.02 * bpm
    for b in grid.beat_frames:
        assert np.min(np.abs(clicks / HOP - b)) <= 1
