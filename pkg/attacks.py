"""
攻击模块
对含密信号施加加噪、重采样、重量化、滤波、幅度缩放和外部 MP3 编解码等失真
"""

import logging
import math
import os
import shlex
import shutil
import subprocess
import tempfile
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import List, Optional

import numpy as np
from scipy import signal as sps

from audio_io import SpeechSignal, read_wav, write_wav
from errors import (BadBits, BadCutoff, BadFactor, BadRate, EncoderFailed, EncoderUnavailable,
                    SilentSignal)

logger = logging.getLogger(__name__)

FIR_TAPS = 101
AWGN_IDENTITY_SNR_DB = 150.0
HIGHPASS_IDENTITY_HZ = 1.0
MP3_MAX_LAG = 1152
MP3_CMD_ENV = "STEGO_MP3_CMD"


class AttackKind(str, Enum):
    NONE = "none"
    AWGN = "awgn"
    RESAMPLE = "resample"
    REQUANTIZE = "requantize"
    LOWPASS = "lowpass"
    HIGHPASS = "highpass"
    SCALE = "scale"
    MP3 = "mp3"


@dataclass(frozen=True)
class AttackSpec:
    """攻击描述，parameter 依类型分别是 SNR(dB)/中间采样率(Hz)/位深/截止频率(Hz)/倍数/码率(kbps)"""
    kind: AttackKind
    parameter: float = 0.0
    seed: int = 0  # 仅加噪使用

    def __post_init__(self):
        object.__setattr__(self, 'kind', AttackKind(self.kind))

    @property
    def label(self) -> str:
        if self.kind is AttackKind.NONE:
            return "none"
        return f"{self.kind.value}({self.parameter:g})"


def default_attack_suite(include_mp3: bool = False, mp3_bitrate_kbps: int = 128) -> List[AttackSpec]:
    """实验中的攻击组合，第一行为无攻击基线"""
    suite = [
        AttackSpec(AttackKind.NONE),
        AttackSpec(AttackKind.AWGN, 20.0),
        AttackSpec(AttackKind.RESAMPLE, 16000),
        AttackSpec(AttackKind.REQUANTIZE, 8),
        AttackSpec(AttackKind.LOWPASS, 4000.0),
        AttackSpec(AttackKind.HIGHPASS, 50.0),
        AttackSpec(AttackKind.SCALE, 0.7),
    ]
    if include_mp3:
        suite.append(AttackSpec(AttackKind.MP3, mp3_bitrate_kbps))
    return suite


def awgn(signal: SpeechSignal, snr_db: float, seed: int = 0) -> SpeechSignal:
    """
    加高斯白噪声，噪声功率 = 信号功率 / 10^(snr_db/10)

    snr_db >= 150 视为无噪声，原样返回
    """
    x = signal.samples
    power = float(np.mean(x ** 2)) if len(x) else 0.0
    if power <= 0:
        raise SilentSignal("静音信号无法按 SNR 加噪")
    if snr_db >= AWGN_IDENTITY_SNR_DB:
        return signal.with_samples(x.copy())

    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, math.sqrt(power / 10 ** (snr_db / 10)), len(x))
    return signal.with_samples(np.clip(x + noise, -1.0, 1.0))


def resample(signal: SpeechSignal, intermediate_rate_hz: int) -> SpeechSignal:
    """
    线性插值重采样：原采样率 → 中间采样率 → 原采样率，长度不变
    """
    if intermediate_rate_hz <= 0:
        raise BadRate(f"中间采样率必须为正: {intermediate_rate_hz}")
    sr = signal.sample_rate_hz
    if intermediate_rate_hz == sr:
        return signal.with_samples(signal.samples.copy())

    x = signal.samples
    n = len(x)
    # 以原采样点序号为坐标，2 倍过采样时中间点恰好落在原采样点上
    native_pos = np.arange(n, dtype=np.float64)
    m = max(1, int(round(n * intermediate_rate_hz / sr)))
    mid_pos = np.arange(m, dtype=np.float64) * (sr / intermediate_rate_hz)
    mid = np.interp(mid_pos, native_pos, x)
    back = np.interp(native_pos, mid_pos, mid)
    return signal.with_samples(back)


def requantize(signal: SpeechSignal, bits: int) -> SpeechSignal:
    """
    量化到有符号 bits 位网格（四舍五入远离 0）再还原为浮点

    电平截断到 [-q, q-1]，q = 2^(bits-1)。|x| <= (q-1)/q 时误差不超过 1/(2q)，
    正满幅附近被截到 (q-1)/q，1.0 的误差为 1/q
    """
    if int(bits) != bits or not 4 <= bits <= 16:
        raise BadBits(f"位深必须是 4-16 的整数: {bits}")
    q = float(2 ** (int(bits) - 1))
    x = signal.samples
    levels = np.sign(x) * np.floor(np.abs(x) * q + 0.5)
    levels = np.clip(levels, -q, q - 1)
    return signal.with_samples(levels / q)


def _fir_filter(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """对称 FIR 零相位滤波：两端按边缘值延拓后做 valid 卷积，抵消群延迟"""
    half = len(taps) // 2
    padded = np.pad(x, half, mode='edge')
    return np.convolve(padded, taps, mode='valid')


def _lowpass_taps(cutoff_hz: float, sample_rate_hz: int) -> np.ndarray:
    return sps.firwin(FIR_TAPS, cutoff_hz, window='hamming', fs=sample_rate_hz)


def lowpass(signal: SpeechSignal, cutoff_hz: float) -> SpeechSignal:
    """
    Hamming 窗 sinc 低通，101 阶线性相位

    截止频率等于 Nyquist 时为直通
    """
    nyquist = signal.sample_rate_hz / 2
    if not 0 < cutoff_hz <= nyquist:
        raise BadCutoff(f"低通截止频率须在 (0, {nyquist}] Hz: {cutoff_hz}")
    if cutoff_hz >= nyquist:
        logger.debug("低通截止频率等于 Nyquist，直通")
        return signal.with_samples(signal.samples.copy())
    taps = _lowpass_taps(cutoff_hz, signal.sample_rate_hz)
    return signal.with_samples(_fir_filter(signal.samples, taps))


def highpass(signal: SpeechSignal, cutoff_hz: float) -> SpeechSignal:
    """低通的谱反转，与同截止频率的 lowpass 相加得到原信号"""
    nyquist = signal.sample_rate_hz / 2
    if not 0 < cutoff_hz < nyquist:
        raise BadCutoff(f"高通截止频率须在 (0, {nyquist}) Hz: {cutoff_hz}")
    if cutoff_hz < HIGHPASS_IDENTITY_HZ:
        return signal.with_samples(signal.samples.copy())
    taps = -_lowpass_taps(cutoff_hz, signal.sample_rate_hz)
    taps[FIR_TAPS // 2] += 1.0
    return signal.with_samples(_fir_filter(signal.samples, taps))


def scale(signal: SpeechSignal, factor: float) -> SpeechSignal:
    """幅度缩放后截断到 [-1, 1]"""
    if not (math.isfinite(factor) and factor > 0):
        raise BadFactor(f"缩放倍数必须为正: {factor}")
    return signal.with_samples(np.clip(signal.samples * factor, -1.0, 1.0))


def _align(decoded: np.ndarray, reference: np.ndarray, max_lag: int = MP3_MAX_LAG) -> np.ndarray:
    """在 ±max_lag 范围内按互相关最大值对齐，并裁剪/补零到参考长度"""
    corr = sps.correlate(decoded, reference, mode='full')
    lags = sps.correlation_lags(len(decoded), len(reference), mode='full')
    window = np.abs(lags) <= max_lag
    lag = int(lags[window][np.argmax(corr[window])]) if np.any(window) else 0

    n = len(reference)
    out = np.zeros(n)
    src_start = max(lag, 0)
    dst_start = max(-lag, 0)
    count = min(len(decoded) - src_start, n - dst_start)
    if count > 0:
        out[dst_start:dst_start + count] = decoded[src_start:src_start + count]
    logger.debug(f"MP3 解码输出对齐偏移 {lag} 个样本")
    return out


def mp3_external(signal: SpeechSignal, bitrate_kbps: int = 128,
                 encoder_command: Optional[str] = None) -> SpeechSignal:
    """
    调用外部编解码器做 MP3 往返

    命令模板来自 encoder_command 或环境变量 STEGO_MP3_CMD，可用占位符
    {input} {output} {mp3} {bitrate}，多条命令用 " && " 连接，例如
    "lame -b {bitrate} {input} {mp3} && lame --decode {mp3} {output}"

    Raises:
        EncoderUnavailable: 未配置命令或找不到可执行文件
        EncoderFailed: 命令返回非 0 或没有产出可读的 WAV
    """
    template = encoder_command or os.getenv(MP3_CMD_ENV)
    if not template:
        raise EncoderUnavailable(f"未配置 MP3 编解码命令（{MP3_CMD_ENV}）")

    with tempfile.TemporaryDirectory(prefix="stego_mp3_") as tmp:
        tmp_dir = Path(tmp)
        paths = {
            'input': str(tmp_dir / "input.wav"),
            'output': str(tmp_dir / "output.wav"),
            'mp3': str(tmp_dir / "coded.mp3"),
            'bitrate': str(int(bitrate_kbps)),
        }
        write_wav(signal, paths['input'])

        for step in template.split(" && "):
            try:
                argv = [part.format(**paths) for part in shlex.split(step)]
            except (KeyError, IndexError, ValueError) as e:
                raise EncoderUnavailable(f"MP3 命令模板无法解析: {e}") from e
            if not argv or shutil.which(argv[0]) is None:
                raise EncoderUnavailable(f"找不到外部编解码器: {argv[0] if argv else step!r}")

            logger.debug(f"执行: {' '.join(argv)}")
            result = subprocess.run(argv, capture_output=True)
            if result.returncode != 0:
                stderr = result.stderr.decode('utf-8', errors='replace').strip()
                raise EncoderFailed(f"{argv[0]} 返回 {result.returncode}: {stderr[-200:]}")

        if not Path(paths['output']).exists():
            raise EncoderFailed("外部编解码器没有生成输出 WAV")
        decoded = read_wav(paths['output'])

    if decoded.sample_rate_hz != signal.sample_rate_hz:
        raise EncoderFailed(f"解码采样率 {decoded.sample_rate_hz} 与原信号 {signal.sample_rate_hz} 不一致")
    return signal.with_samples(np.clip(_align(decoded.samples, signal.samples), -1.0, 1.0))


def apply_attack(signal: SpeechSignal, spec: AttackSpec,
                 mp3_command: Optional[str] = None) -> SpeechSignal:
    """按 AttackSpec 分发到具体攻击"""
    kind = AttackKind(spec.kind)
    if kind is AttackKind.NONE:
        return signal.with_samples(signal.samples.copy())
    if kind is AttackKind.AWGN:
        return awgn(signal, spec.parameter, spec.seed)
    if kind is AttackKind.RESAMPLE:
        return resample(signal, int(spec.parameter))
    if kind is AttackKind.REQUANTIZE:
        return requantize(signal, spec.parameter)
    if kind is AttackKind.LOWPASS:
        return lowpass(signal, spec.parameter)
    if kind is AttackKind.HIGHPASS:
        return highpass(signal, spec.parameter)
    if kind is AttackKind.SCALE:
        return scale(signal, spec.parameter)
    return mp3_external(signal, int(spec.parameter), mp3_command)
