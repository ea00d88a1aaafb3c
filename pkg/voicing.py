"""
浊音检测模块
按帧计算过零数（ZCC）与短时能量（STE），自适应阈值划分清/浊音，并按 ZE = ZCC/STE 给浊音帧排序
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from audio_io import Frame
from errors import LengthMismatch, LengthTooSmall, NoVoicedFrames, TooFewFrames

logger = logging.getLogger(__name__)


class VoicingLabel(str, Enum):
    """帧标签，静音并入清音"""
    VOICED = "voiced"
    UNVOICED = "unvoiced"


@dataclass
class VoicingFeatures:
    """单帧特征"""
    zcc: int
    ste: float

    @property
    def ze(self) -> Optional[float]:
        """ZE 比值，能量为 0 时无定义"""
        if self.ste > 0:
            return self.zcc / self.ste
        return None


def hamming_window(length: int) -> np.ndarray:
    """
    Hamming 窗 w[n] = 0.54 - 0.46·cos(2πn/(L-1))，n = 0..L-1

    Args:
        length: 窗长，至少为 2

    Returns:
        对称窗，两端为 0.08
    """
    if length < 2:
        raise LengthTooSmall(f"Hamming 窗长至少为 2: {length}")
    return np.hamming(length)


def _samples(frame) -> np.ndarray:
    if isinstance(frame, Frame):
        return frame.samples
    return np.asarray(frame, dtype=np.float64)


def zcc(frame) -> int:
    """
    过零数：相邻样本符号变化次数，符号规则 sign(x) = +1 (x > 0) 否则 -1

    只统计帧内 frame_len - 1 对相邻样本，不回看上一帧
    """
    x = _samples(frame)
    if len(x) == 0:
        raise LengthTooSmall("空帧无法计算过零数")
    signs = np.where(x > 0, 1, -1)
    return int(np.count_nonzero(np.diff(signs)))


def ste(frame, window: Optional[np.ndarray] = None) -> float:
    """
    短时能量 Σ (f[n]·w[n])²

    Args:
        frame: 帧
        window: 与帧等长的窗，缺省时使用同长 Hamming 窗

    Returns:
        非负能量
    """
    x = _samples(frame)
    if window is None:
        window = hamming_window(len(x))
    window = np.asarray(window, dtype=np.float64)
    if len(window) != len(x):
        raise LengthMismatch(f"窗长 {len(window)} 与帧长 {len(x)} 不一致")
    return float(np.sum((x * window) ** 2))


def compute_features(frames: Sequence[Frame]) -> List[VoicingFeatures]:
    """逐帧计算 (zcc, ste)，同一帧长共用一个窗"""
    features = []
    window = None
    for frame in frames:
        x = _samples(frame)
        if window is None or len(window) != len(x):
            window = hamming_window(len(x))
        features.append(VoicingFeatures(zcc(x), ste(x, window)))
    return features


def classify_features(features: Sequence[VoicingFeatures]) -> List[VoicingLabel]:
    """
    按特征向量分类：zcc 低于均值且 ste 高于均值的帧为浊音（严格不等式）
    """
    if len(features) < 2:
        raise TooFewFrames(f"至少需要 2 帧才能计算自适应阈值，当前 {len(features)} 帧")

    zccs = np.array([f.zcc for f in features], dtype=np.float64)
    stes = np.array([f.ste for f in features], dtype=np.float64)
    voiced = (zccs < zccs.mean()) & (stes > stes.mean())
    return [VoicingLabel.VOICED if v else VoicingLabel.UNVOICED for v in voiced]


def classify_frames(frames: Sequence[Frame]) -> List[VoicingLabel]:
    """
    清/浊音分类，阈值取本信号所有帧 zcc 与 ste 的均值

    Args:
        frames: 帧序列（至少 2 帧）

    Returns:
        与 frames 对齐的标签列表
    """
    if len(frames) < 2:
        raise TooFewFrames(f"至少需要 2 帧才能计算自适应阈值，当前 {len(frames)} 帧")
    labels = classify_features(compute_features(frames))
    n_voiced = sum(1 for label in labels if label is VoicingLabel.VOICED)
    logger.debug(f"检测到 {n_voiced}/{len(labels)} 个浊音帧")
    return labels


def rank_features(indices: Sequence[int], features: Sequence[VoicingFeatures],
                  labels: Sequence[VoicingLabel]) -> List[int]:
    """按已算好的特征排序，rank_by_ze 的核心"""
    if not (len(indices) == len(features) == len(labels)):
        raise LengthMismatch(f"帧数 {len(indices)} 与特征数 {len(features)}、标签数 {len(labels)} 不一致")

    candidates = []
    for index, feat, label in zip(indices, features, labels):
        if label is not VoicingLabel.VOICED:
            continue
        ze = feat.ze
        if ze is None:
            # 自适应阈值下浊音帧的能量必然为正
            continue
        candidates.append((ze, index))

    if not candidates:
        raise NoVoicedFrames("没有可用的浊音帧")

    candidates.sort()
    return [index for _, index in candidates]


def rank_by_ze(frames: Sequence[Frame], labels: Sequence[VoicingLabel]) -> List[int]:
    """
    浊音帧按 ZE 升序排列，ZE 相同按帧序号升序

    Returns:
        浊音帧序号列表（Frame.index）
    """
    if len(frames) != len(labels):
        raise LengthMismatch(f"帧数 {len(frames)} 与标签数 {len(labels)} 不一致")
    return rank_features([f.index for f in frames], compute_features(frames), labels)


def frame_features(frames: Sequence[Frame]) -> pd.DataFrame:
    """
    帧特征汇总表

    Returns:
        DataFrame，列为 frame_index, zcc, ste, ze, label
    """
    features = compute_features(frames)
    labels = classify_features(features) if len(frames) >= 2 else [VoicingLabel.UNVOICED] * len(frames)
    return pd.DataFrame({
        'frame_index': [f.index for f in frames],
        'zcc': [f.zcc for f in features],
        'ste': [f.ste for f in features],
        'ze': [f.ze if f.ze is not None else np.nan for f in features],
        'label': [label.value for label in labels],
    })
