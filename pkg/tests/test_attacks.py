import shutil

import numpy as np
import pytest

from attacks import (MP3_CMD_ENV, AttackKind, AttackSpec, _align, apply_attack, awgn, default_attack_suite,
                     highpass, lowpass, mp3_external, requantize, resample, scale)
from audio_io import SpeechSignal
from conftest import sine
from errors import BadBits, BadCutoff, BadFactor, BadRate, EncoderFailed, EncoderUnavailable, SilentSignal
from metrics import snr


def _rms(x):
    """去掉两端各 200 个样本，避开边缘延拓的过渡段"""
    x = np.asarray(x)[200:-200]
    return float(np.sqrt(np.mean(x ** 2)))


# ---------- 加噪 ----------

def test_awgn_measured_snr():
    clean = sine(300)
    noisy = awgn(clean, 20.0, seed=3)
    assert snr(clean, noisy) == pytest.approx(20.0, abs=0.5)


def test_awgn_identity_at_high_snr():
    clean = sine(300)
    np.testing.assert_array_equal(awgn(clean, 150.0).samples, clean.samples)


def test_awgn_seeded():
    clean = sine(300)
    np.testing.assert_array_equal(awgn(clean, 20.0, seed=1).samples, awgn(clean, 20.0, seed=1).samples)
    assert not np.array_equal(awgn(clean, 20.0, seed=1).samples, awgn(clean, 20.0, seed=2).samples)


def test_awgn_clips():
    loud = SpeechSignal(np.full(1000, 0.99))
    assert np.all(np.abs(awgn(loud, 0.0).samples) <= 1.0)


def test_awgn_silent():
    with pytest.raises(SilentSignal):
        awgn(SpeechSignal(np.zeros(100)), 20.0)


# ---------- 重采样 ----------

def test_resample_sine_near_exact():
    clean = sine(200)
    out = resample(clean, 16000)
    assert len(out) == len(clean)
    assert out.sample_rate_hz == 8000
    assert np.max(np.abs(out.samples - clean.samples)) <= 0.01


def test_resample_native_rate_identity():
    clean = sine(200)
    np.testing.assert_array_equal(resample(clean, 8000).samples, clean.samples)


@pytest.mark.parametrize("rate", [6000, 11025, 22050])
def test_resample_keeps_length(rate):
    clean = sine(200, n=4001)
    assert len(resample(clean, rate)) == 4001


def test_resample_bad_rate():
    with pytest.raises(BadRate):
        resample(sine(200), 0)


# ---------- 重量化 ----------

def test_requantize_on_grid_identity(rng):
    levels = rng.integers(-32768, 32768, 1000)
    signal = SpeechSignal(levels / 32768)
    np.testing.assert_array_equal(requantize(signal, 16).samples, signal.samples)


def test_requantize_error_bound(rng):
    signal = SpeechSignal(np.concatenate([rng.uniform(-1.0, 127 / 128, 2000), [-1.0, 127 / 128]]))
    out = requantize(signal, 8)
    assert np.max(np.abs(out.samples - signal.samples)) <= 1 / 256 + 1e-12


def test_requantize_clips_near_full_scale(rng):
    signal = SpeechSignal(rng.uniform(127 / 128, 1.0, 200))
    out = requantize(signal, 8)
    np.testing.assert_array_equal(out.samples, 127 / 128)
    assert np.max(np.abs(out.samples - signal.samples)) <= 1 / 128


def test_requantize_values():
    out = requantize(SpeechSignal([0.5, 1.0, -1.0, 0.5 / 128, -0.5 / 128]), 8)
    np.testing.assert_array_equal(out.samples, [0.5, 127 / 128, -1.0, 1 / 128, -1 / 128])


@pytest.mark.parametrize("bits", [3, 17, 8.5])
def test_requantize_bad_bits(bits):
    with pytest.raises(BadBits):
        requantize(sine(200), bits)


# ---------- 滤波 ----------

def test_lowpass_at_nyquist_passthrough():
    clean = sine(300)
    assert np.max(np.abs(lowpass(clean, 4000).samples - clean.samples)) <= 0.01


def test_lowpass_stopband():
    clean = sine(3000)
    assert _rms(lowpass(clean, 500).samples) <= 0.05 * _rms(clean.samples)


def test_lowpass_passband():
    clean = sine(100)
    assert _rms(lowpass(clean, 500).samples) >= 0.95 * _rms(clean.samples)


def test_highpass_passband():
    clean = sine(1000)
    assert _rms(highpass(clean, 50).samples) >= 0.95 * _rms(clean.samples)


def test_highpass_removes_dc():
    out = highpass(SpeechSignal(np.full(16000, 0.3)), 50)
    assert abs(float(np.mean(out.samples))) <= 0.01


def test_highpass_below_one_hz_identity():
    clean = sine(300)
    np.testing.assert_array_equal(highpass(clean, 0.5).samples, clean.samples)


def test_lowpass_plus_highpass_identity(rng):
    signal = SpeechSignal(rng.uniform(-0.5, 0.5, 4000))
    for cutoff in (50.0, 500.0, 2000.0):
        total = lowpass(signal, cutoff).samples + highpass(signal, cutoff).samples
        assert np.max(np.abs(total - signal.samples)) <= 0.02


def test_filters_keep_length_and_rate():
    clean = sine(300, n=1234)
    for out in (lowpass(clean, 1000), highpass(clean, 1000)):
        assert len(out) == 1234
        assert out.sample_rate_hz == 8000


@pytest.mark.parametrize("cutoff", [0, -10, 4001])
def test_lowpass_bad_cutoff(cutoff):
    with pytest.raises(BadCutoff):
        lowpass(sine(300), cutoff)


@pytest.mark.parametrize("cutoff", [0, 4000])
def test_highpass_bad_cutoff(cutoff):
    with pytest.raises(BadCutoff):
        highpass(sine(300), cutoff)


# ---------- 缩放 ----------

def test_scale_values():
    out = scale(SpeechSignal([0.5, -0.5, 0.0]), 0.7)
    np.testing.assert_allclose(out.samples, [0.35, -0.35, 0.0])


def test_scale_identity_and_inverse():
    clean = sine(300)
    np.testing.assert_array_equal(scale(clean, 1.0).samples, clean.samples)
    back = scale(scale(clean, 0.7), 1 / 0.7)
    np.testing.assert_allclose(back.samples, clean.samples, atol=1e-12)


def test_scale_clips():
    np.testing.assert_array_equal(scale(SpeechSignal([0.8, -0.9]), 2.0).samples, [1.0, -1.0])


@pytest.mark.parametrize("factor", [0.0, -1.0, float("inf")])
def test_scale_bad_factor(factor):
    with pytest.raises(BadFactor):
        scale(sine(300), factor)


# ---------- MP3 ----------

def test_mp3_without_command(monkeypatch):
    monkeypatch.delenv(MP3_CMD_ENV, raising=False)
    with pytest.raises(EncoderUnavailable):
        mp3_external(sine(300), 128)


def test_mp3_missing_executable():
    with pytest.raises(EncoderUnavailable):
        mp3_external(sine(300), 128, "no-such-encoder-xyz {input} {mp3}")


@pytest.mark.skipif(shutil.which("cp") is None, reason="需要 cp")
def test_mp3_copy_command_round_trip():
    clean = sine(300)
    out = mp3_external(clean, 128, "cp {input} {mp3} && cp {mp3} {output}")
    assert len(out) == len(clean)
    assert out.sample_rate_hz == clean.sample_rate_hz
    assert np.max(np.abs(out.samples - clean.samples)) <= 1 / 32768


@pytest.mark.skipif(shutil.which("cp") is None, reason="需要 cp")
def test_mp3_command_from_env(monkeypatch):
    monkeypatch.setenv(MP3_CMD_ENV, "cp {input} {output}")
    clean = sine(300)
    out = apply_attack(clean, AttackSpec(AttackKind.MP3, 64))
    assert np.max(np.abs(out.samples - clean.samples)) <= 1 / 32768


@pytest.mark.skipif(shutil.which("false") is None, reason="需要 false")
def test_mp3_failing_command():
    with pytest.raises(EncoderFailed):
        mp3_external(sine(300), 128, "false")


@pytest.mark.skipif(shutil.which("true") is None, reason="需要 true")
def test_mp3_command_without_output():
    with pytest.raises(EncoderFailed):
        mp3_external(sine(300), 128, "true {input}")


def test_align_recovers_delay(rng):
    reference = rng.normal(0, 0.3, 4000)
    delayed = np.concatenate([np.zeros(576), reference, np.zeros(100)])
    np.testing.assert_array_equal(_align(delayed, reference), reference)


def test_align_pads_short_output(rng):
    reference = rng.normal(0, 0.3, 4000)
    out = _align(reference[:3000], reference)
    assert len(out) == 4000
    np.testing.assert_array_equal(out[:3000], reference[:3000])
    assert not out[3000:].any()


# ---------- 分发 ----------

def test_default_suite():
    suite = default_attack_suite()
    assert [s.kind for s in suite] == [AttackKind.NONE, AttackKind.AWGN, AttackKind.RESAMPLE,
                                       AttackKind.REQUANTIZE, AttackKind.LOWPASS, AttackKind.HIGHPASS,
                                       AttackKind.SCALE]
    assert [s.label for s in suite][1:] == ["awgn(20)", "resample(16000)", "requantize(8)",
                                            "lowpass(4000)", "highpass(50)", "scale(0.7)"]
    assert default_attack_suite(include_mp3=True, mp3_bitrate_kbps=64)[-1] == AttackSpec(AttackKind.MP3, 64)


def test_apply_attack_dispatch():
    clean = sine(300)
    np.testing.assert_array_equal(apply_attack(clean, AttackSpec(AttackKind.NONE)).samples, clean.samples)
    np.testing.assert_array_equal(apply_attack(clean, AttackSpec(AttackKind.SCALE, 0.7)).samples,
                                  scale(clean, 0.7).samples)
    np.testing.assert_array_equal(apply_attack(clean, AttackSpec(AttackKind.AWGN, 20.0, seed=4)).samples,
                                  awgn(clean, 20.0, seed=4).samples)
    np.testing.assert_array_equal(apply_attack(clean, AttackSpec("requantize", 8)).samples,
                                  requantize(clean, 8).samples)


def test_every_attack_preserves_length_and_rate():
    clean = sine(300, n=8000)
    for spec in default_attack_suite():
        out = apply_attack(clean, spec)
        assert len(out) == len(clean)
        assert out.sample_rate_hz == clean.sample_rate_hz
