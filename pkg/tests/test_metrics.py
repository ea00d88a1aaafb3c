import math

import numpy as np
import pytest

from audio_io import SpeechSignal
from errors import LengthMismatch, SilentSignal
from metrics import ber, psnr, snr
from pipeline import Message


def test_psnr_identical_is_inf(rng):
    x = SpeechSignal(rng.uniform(-0.5, 0.5, 1000))
    assert psnr(x, x) == math.inf


def test_psnr_constant_offset():
    x = SpeechSignal(np.zeros(1000))
    assert psnr(x, SpeechSignal(np.full(1000, 0.01))) == pytest.approx(40.0)


def test_psnr_decreases_with_noise(rng):
    x = SpeechSignal(rng.uniform(-0.5, 0.5, 4000))
    noise = rng.normal(size=4000)
    values = [psnr(x, x.with_samples(x.samples + level * noise)) for level in (0.001, 0.01, 0.1)]
    assert values[0] > values[1] > values[2]


def test_psnr_length_and_rate_mismatch():
    with pytest.raises(LengthMismatch):
        psnr(SpeechSignal(np.zeros(10)), SpeechSignal(np.zeros(11)))
    with pytest.raises(LengthMismatch):
        psnr(SpeechSignal(np.zeros(10)), SpeechSignal(np.zeros(10), 16000))


def test_snr_half_amplitude(rng):
    x = SpeechSignal(rng.uniform(-0.5, 0.5, 1000))
    assert snr(x, x.with_samples(0.5 * x.samples)) == pytest.approx(10 * math.log10(4))


def test_snr_identical_is_inf(rng):
    x = SpeechSignal(rng.uniform(-0.5, 0.5, 1000))
    assert snr(x, x) == math.inf


def test_snr_silent_reference():
    with pytest.raises(SilentSignal):
        snr(SpeechSignal(np.zeros(10)), SpeechSignal(np.ones(10)))


def test_ber_values():
    m = Message.random(50, 0)
    assert ber(m, m) == 0.0
    flipped = Message(tuple(1 - b for b in m.bits))
    assert ber(m, flipped) == 1.0

    five = list(m.bits)
    for i in (0, 7, 19, 33, 49):
        five[i] = 1 - five[i]
    assert ber(m, five) == pytest.approx(0.1)
    assert ber(five, m) == ber(m, five)


def test_ber_length_mismatch():
    with pytest.raises(LengthMismatch):
        ber([0, 1, 1], [0, 1])
    with pytest.raises(LengthMismatch):
        ber([], [])
