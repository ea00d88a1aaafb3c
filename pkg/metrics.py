"""
评价指标模块
PSNR/SNR 衡量不可感知性，BER 衡量鲁棒性
"""

import math
from typing import Sequence, Union

import numpy as np

from audio_io import SpeechSignal
from errors import LengthMismatch, SilentSignal
from pipeline import Message

# 归一化满幅
PSNR_PEAK = 1.0

Bits = Union[Message, Sequence[int]]


def _check_pair(reference: SpeechSignal, test: SpeechSignal) -> None:
    if len(reference) != len(test):
        raise LengthMismatch(f"信号长度不一致: {len(reference)} vs {len(test)}")
    if reference.sample_rate_hz != test.sample_rate_hz:
        raise LengthMismatch(f"采样率不一致: {reference.sample_rate_hz} vs {test.sample_rate_hz}")


def psnr(reference: SpeechSignal, test: SpeechSignal) -> float:
    """
    峰值信噪比 10·log10(peak² / MSE)，peak = 1.0

    Returns:
        dB 值，两信号完全相同时返回 inf
    """
    _check_pair(reference, test)
    mse = float(np.mean((reference.samples - test.samples) ** 2))
    if mse == 0:
        return math.inf
    return 10 * math.log10(PSNR_PEAK ** 2 / mse)


def snr(reference: SpeechSignal, test: SpeechSignal) -> float:
    """信噪比 10·log10(Σref² / Σ(ref-test)²)，完全相同时返回 inf"""
    _check_pair(reference, test)
    signal_energy = float(np.sum(reference.samples ** 2))
    if signal_energy == 0:
        raise SilentSignal("参考信号为静音，SNR 无定义")
    noise_energy = float(np.sum((reference.samples - test.samples) ** 2))
    if noise_energy == 0:
        return math.inf
    return 10 * math.log10(signal_energy / noise_energy)


def _bits(message: Bits) -> np.ndarray:
    if isinstance(message, Message):
        return np.array(message.bits, dtype=np.int8)
    return np.asarray(message, dtype=np.int8)


def ber(sent: Bits, received: Bits) -> float:
    """误码率：不同位置数 / 长度"""
    a, b = _bits(sent), _bits(received)
    if len(a) != len(b):
        raise LengthMismatch(f"消息长度不一致: {len(a)} vs {len(b)}")
    if len(a) == 0:
        raise LengthMismatch("消息为空")
    return float(np.count_nonzero(a != b)) / len(a)
