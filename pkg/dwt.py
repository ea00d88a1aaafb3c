"""
小波变换模块
正交 Haar 小波的单层/多层分解与重构，作为嵌入链的前端
"""

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
import pywt

from errors import IndivisibleLength, InvalidParams, LengthMismatch, OddLength

logger = logging.getLogger(__name__)

WAVELET = 'haar'
# 偶数长度下 periodization 不做边界延拓，系数长度恰为输入一半
MODE = 'periodization'


@dataclass
class DwtTree:
    """
    多层分解结果

    approx 为最深层近似系数，details 按层从细到粗排列（details[0] 为第 1 层）
    """
    levels: int
    approx: np.ndarray
    details: List[np.ndarray]

    def with_approx(self, approx: np.ndarray) -> "DwtTree":
        """替换近似系数，细节系数原样保留"""
        return DwtTree(self.levels, np.asarray(approx, dtype=np.float64), self.details)


def dwt_level(signal: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    单层 Haar 分析

    Returns:
        (approx, detail)，approx[k] = (x[2k] + x[2k+1])/√2，detail[k] = (x[2k] - x[2k+1])/√2
    """
    x = np.asarray(signal, dtype=np.float64)
    if len(x) < 2 or len(x) % 2:
        raise OddLength(f"单层 DWT 需要不小于 2 的偶数长度: {len(x)}")
    approx, detail = pywt.dwt(x, WAVELET, mode=MODE)
    return approx, detail


def idwt_level(approx: np.ndarray, detail: np.ndarray) -> np.ndarray:
    """单层 Haar 合成"""
    approx = np.asarray(approx, dtype=np.float64)
    detail = np.asarray(detail, dtype=np.float64)
    if len(approx) != len(detail):
        raise LengthMismatch(f"近似系数 {len(approx)} 与细节系数 {len(detail)} 长度不一致")
    return pywt.idwt(approx, detail, WAVELET, mode=MODE)


def dwt_multi(signal: np.ndarray, levels: int) -> DwtTree:
    """
    多层分解，每层只对近似分支继续分解

    Args:
        signal: 输入序列，长度须能被 2^levels 整除
        levels: 层数（>= 1）

    Returns:
        DwtTree，80 点两层时 approx 为 20 点，details 长度为 [40, 20]
    """
    x = np.asarray(signal, dtype=np.float64)
    if levels < 1:
        raise InvalidParams(f"分解层数至少为 1: {levels}")
    if len(x) == 0 or len(x) % (2 ** levels):
        raise IndivisibleLength(f"长度 {len(x)} 不能被 2^{levels} 整除")

    details = []
    approx = x
    for _ in range(levels):
        approx, detail = dwt_level(approx)
        details.append(detail)
    return DwtTree(levels, approx, details)


def idwt_multi(tree: DwtTree) -> np.ndarray:
    """从最深层向外逐层 Haar 合成"""
    if len(tree.details) != tree.levels:
        raise LengthMismatch(f"细节系数层数 {len(tree.details)} 与 levels={tree.levels} 不一致")

    x = np.asarray(tree.approx, dtype=np.float64)
    for detail in reversed(tree.details):
        x = idwt_level(x, detail)
    return x
