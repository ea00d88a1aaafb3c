"""
音频读写模块
负责 PCM WAV 的读写与归一化、分帧/拼帧，以及合成测试语料的生成
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
import soundfile as sf

from errors import InvalidParams, MissingFrame, NotWav, SignalTooShort, UnsupportedFormat

logger = logging.getLogger(__name__)

DEFAULT_SAMPLE_RATE = 8000
PCM16_SCALE = 32768.0
PCM_SUBTYPES = ("PCM_16", "PCM_U8")

PathLike = Union[str, Path]


@dataclass
class SpeechSignal:
    """单声道语音信号，样本归一化到 [-1, 1]"""
    samples: np.ndarray
    sample_rate_hz: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if self.sample_rate_hz <= 0:
            raise InvalidParams(f"采样率必须为正数: {self.sample_rate_hz}")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz

    def with_samples(self, samples: np.ndarray) -> "SpeechSignal":
        """保持采样率，替换样本"""
        return SpeechSignal(samples, self.sample_rate_hz)


@dataclass
class Frame:
    """定长帧及其在信号中的序号"""
    index: int
    samples: np.ndarray


def wav_header(path: PathLike):
    """
    读取并检查 WAV 文件头，不读样本

    Returns:
        soundfile 的文件信息（samplerate/channels/frames/format/subtype）

    Raises:
        FileNotFoundError: 文件不存在
        NotWav: 不是 RIFF/WAVE 容器
        UnsupportedFormat: 扩展格式、浮点或 8/16 位整型以外的编码
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"找不到文件: {path}")
    try:
        info = sf.info(str(path))
    except RuntimeError as e:
        raise NotWav(f"无法识别的音频文件 {path.name}: {e}") from e

    if info.format == 'WAVEX':
        raise UnsupportedFormat("不支持 WAVE_FORMAT_EXTENSIBLE 扩展格式")
    if info.format != 'WAV':
        raise NotWav(f"不是 RIFF/WAVE 文件: {info.format}")
    if info.subtype not in PCM_SUBTYPES:
        raise UnsupportedFormat(f"仅支持 8/16 位整型 PCM，当前 {info.subtype}")
    return info


def read_wav(path: PathLike) -> SpeechSignal:
    """
    读取 PCM WAV 文件并归一化到 [-1, 1]

    Args:
        path: WAV 文件路径（8/16 位整型 PCM）

    Returns:
        SpeechSignal，16 位样本除以 32768，8 位样本先去掉 128 偏置再除以 128

    Raises:
        NotWav: 文件头不是 RIFF/WAVE
        UnsupportedFormat: 压缩、浮点、扩展格式或不支持的位深
    """
    path = Path(path)
    info = wav_header(path)

    # 8 位无符号样本由 libsndfile 去偏置后左移 8 位，除以 32768 与 (x-128)/128 相同
    data, rate = sf.read(str(path), dtype='int16', always_2d=True)
    if data.shape[1] > 1:
        logger.warning(f"{path.name} 有 {info.channels} 个声道，仅使用第 0 声道")
    samples = data[:, 0].astype(np.float64) / PCM16_SCALE

    logger.debug(f"读取 {path}: {len(samples)} 个样本, {rate} Hz")
    return SpeechSignal(samples, int(rate))


def write_wav(signal: SpeechSignal, path: PathLike) -> None:
    """
    写出 16 位 PCM 单声道 WAV，超出 [-1, 1] 的样本先截断再量化

    Raises:
        SignalTooShort: 空信号
        OSError: 写文件失败
    """
    if len(signal) == 0:
        raise SignalTooShort("不能写出空信号")

    scaled = np.rint(np.clip(signal.samples, -1.0, 1.0) * PCM16_SCALE)
    pcm = np.clip(scaled, -32768, 32767).astype(np.int16)

    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    try:
        sf.write(str(path), pcm, signal.sample_rate_hz, subtype='PCM_16', format='WAV')
    except RuntimeError as e:
        raise OSError(f"写出 {path} 失败: {e}") from e
    logger.debug(f"写出 {path}: {len(pcm)} 个样本")


def split_frames(signal: SpeechSignal, frame_len: int) -> Tuple[List[Frame], np.ndarray]:
    """
    把信号切成不重叠的等长帧

    Args:
        signal: 输入信号
        frame_len: 帧长（偶数且 >= 4）

    Returns:
        (帧列表, 尾部余量)，余量原样保留，不参与嵌入
    """
    if frame_len < 4 or frame_len % 2:
        raise InvalidParams(f"帧长必须为不小于 4 的偶数: {frame_len}")

    n_frames = len(signal) // frame_len
    if n_frames < 1:
        raise SignalTooShort(f"信号长度 {len(signal)} 不足一帧 ({frame_len})")

    body = signal.samples[:n_frames * frame_len].reshape(n_frames, frame_len)
    frames = [Frame(i, body[i].copy()) for i in range(n_frames)]
    remainder = signal.samples[n_frames * frame_len:].copy()
    return frames, remainder


def assemble_frames(frames: List[Frame], remainder: np.ndarray,
                    sample_rate_hz: int = DEFAULT_SAMPLE_RATE) -> SpeechSignal:
    """按序号拼接帧并接上余量，是 split_frames 的逆操作"""
    ordered = sorted(frames, key=lambda f: f.index)
    for expected, frame in enumerate(ordered):
        if frame.index != expected:
            raise MissingFrame(f"缺少第 {expected} 帧")

    parts = [f.samples for f in ordered] + [np.asarray(remainder, dtype=np.float64)]
    return SpeechSignal(np.concatenate(parts), sample_rate_hz)


# ========== 合成语料 ==========

# 浊音段只保留 200-450 Hz 内的谐波，最强谐波落在 225-325 Hz
VOICED_BAND_HZ = (200.0, 450.0)
DOMINANT_BAND_HZ = (225.0, 325.0)
FORMANT_CENTER_HZ = 275.0
FORMANT_WIDTH_HZ = 40.0
VOICED_RMS_RANGE = (0.095, 0.105)
UNVOICED_RMS = 0.02
SILENCE_RMS = 0.001
FADE_S = 0.005


def _draw_f0(rng: np.random.Generator) -> float:
    """抽取基频，没有谐波落在 DOMINANT_BAND_HZ 内的基频重新抽取"""
    low, high = DOMINANT_BAND_HZ
    while True:
        f0 = rng.uniform(100.0, 250.0)
        if np.floor(high / f0) * f0 >= low:
            return f0


def _voiced_segment(rng: np.random.Generator, n: int, sr: int) -> np.ndarray:
    """一段浊音：基频 100-250 Hz 的谐波叠加，共振峰包络加权"""
    f0 = _draw_f0(rng)
    t = np.arange(n) / sr
    seg = np.zeros(n)
    harmonic = 1
    while harmonic * f0 <= VOICED_BAND_HZ[1]:
        f = harmonic * f0
        if f >= VOICED_BAND_HZ[0]:
            weight = np.exp(-((f - FORMANT_CENTER_HZ) / FORMANT_WIDTH_HZ) ** 2)
            seg += weight * np.sin(2 * np.pi * f * t + rng.uniform(0, 2 * np.pi))
        harmonic += 1

    rms = np.sqrt(np.mean(seg ** 2)) if n else 0.0
    if rms > 0:
        seg *= rng.uniform(*VOICED_RMS_RANGE) / rms

    fade = min(int(FADE_S * sr), n // 2)
    if fade > 0:
        ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(fade) / fade)
        seg[:fade] *= ramp
        seg[-fade:] *= ramp[::-1]
    return seg


def synth_voiced_corpus(count: int, duration_s: float = 2.0, seed: int = 0,
                        sample_rate_hz: int = DEFAULT_SAMPLE_RATE) -> List[SpeechSignal]:
    """
    生成合成语音语料，替代真实语音库做桌面级实验

    每条信号依次循环 浊音 → 清音 → 静音 三类片段，结果只由 (count, duration_s, seed) 决定

    Args:
        count: 信号条数
        duration_s: 每条时长（秒）
        seed: 随机种子
        sample_rate_hz: 采样率

    Returns:
        SpeechSignal 列表
    """
    if count < 1:
        raise InvalidParams(f"语料条数至少为 1: {count}")
    n_total = int(round(duration_s * sample_rate_hz)) if duration_s > 0 else 0
    if n_total < 1:
        raise InvalidParams(f"语料时长必须为正且不少于一个样本: {duration_s}")

    children = np.random.SeedSequence(seed).spawn(count)
    corpus = []

    for child in children:
        rng = np.random.default_rng(child)
        x = np.zeros(n_total)
        pos = int(rng.uniform(0.02, 0.05) * sample_rate_hz)
        x[:pos] = rng.normal(0.0, SILENCE_RMS, pos)
        while pos < n_total:
            n_v = int(rng.uniform(0.14, 0.20) * sample_rate_hz)
            n_u = int(rng.uniform(0.06, 0.09) * sample_rate_hz)
            n_s = int(rng.uniform(0.04, 0.06) * sample_rate_hz)

            end = min(pos + n_v, n_total)
            x[pos:end] = _voiced_segment(rng, n_v, sample_rate_hz)[:end - pos]
            pos = end

            end = min(pos + n_u, n_total)
            x[pos:end] = rng.normal(0.0, UNVOICED_RMS, end - pos)
            pos = end

            end = min(pos + n_s, n_total)
            x[pos:end] = rng.normal(0.0, SILENCE_RMS, end - pos)
            pos = end

        corpus.append(SpeechSignal(np.clip(x, -1.0, 1.0), sample_rate_hz))

    logger.info(f"生成合成语料 {count} 条，每条 {duration_s:.2f} 秒")
    return corpus
