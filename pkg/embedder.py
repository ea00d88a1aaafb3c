"""
单帧嵌入/提取模块
DWT → GBT → 4×4 SVD → 修改最大奇异值，以及对应的逆变换链
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from audio_io import Frame
from dwt import DwtTree, dwt_multi, idwt_multi
from errors import IneligibleFrame, InvalidParams, LengthMismatch
from gbt import GbtBasis, GraphSpec, gbt_basis, gbt_forward, gbt_inverse
from linalg import SvdResult, svd_small

logger = logging.getLogger(__name__)


@dataclass
class EmbedParams:
    """嵌入参数"""
    alpha: float = 0.05  # 嵌入强度
    frame_len: int = 80  # 帧长，8 kHz 下 10 ms
    dwt_levels: int = 2  # 小波层数，0 表示跳过小波直接做 GBT
    graph: GraphSpec = field(default_factory=GraphSpec)  # 路径图参数
    matrix_dim: int = 4  # SVD 方阵边长

    def validate(self) -> "EmbedParams":
        """
        检查结构约束，不满足时抛出 InvalidParams

        Returns:
            自身，便于链式调用
        """
        if not (isinstance(self.alpha, (int, float)) and math.isfinite(self.alpha) and self.alpha > 0):
            raise InvalidParams(f"α 必须为有限正数: {self.alpha}")
        if self.frame_len < 4 or self.frame_len % 2:
            raise InvalidParams(f"帧长必须为不小于 4 的偶数: {self.frame_len}")
        if self.dwt_levels < 0:
            raise InvalidParams(f"小波层数不能为负: {self.dwt_levels}")
        self.graph.validate()

        if self.frame_len % (2 ** self.dwt_levels):
            raise InvalidParams(f"帧长 {self.frame_len} 不能被 2^{self.dwt_levels} 整除")
        approx_len = self.frame_len // (2 ** self.dwt_levels)
        if approx_len != self.graph.n:
            raise InvalidParams(f"近似系数长度 {approx_len} 与图节点数 {self.graph.n} 不一致")

        if self.matrix_dim < 1 or self.matrix_dim ** 2 > self.graph.n:
            raise InvalidParams(f"{self.matrix_dim}×{self.matrix_dim} 矩阵超出 {self.graph.n} 个 GBT 系数")
        return self

    def basis(self) -> GbtBasis:
        return gbt_basis(self.graph)


@dataclass
class FrameStegoRecord:
    """单帧提取所需的边信息：帧序号与嵌入前的最大奇异值"""
    frame_index: int
    s_max: float


@dataclass
class _FrameChain:
    """正向链的中间结果，逆变换时原样复用"""
    tree: Optional[DwtTree]
    coeffs: np.ndarray
    svd: SvdResult


def _forward_chain(samples: np.ndarray, params: EmbedParams, basis: GbtBasis) -> _FrameChain:
    x = np.asarray(samples, dtype=np.float64)
    if len(x) != params.frame_len:
        raise LengthMismatch(f"帧长 {len(x)} 与参数 frame_len={params.frame_len} 不一致")

    if params.dwt_levels > 0:
        tree = dwt_multi(x, params.dwt_levels)
        approx = tree.approx
    else:
        tree = None
        approx = x

    coeffs = gbt_forward(basis, approx)
    d = params.matrix_dim
    block = coeffs[:d * d].reshape(d, d)
    return _FrameChain(tree, coeffs, svd_small(block))


def _inverse_chain(chain: _FrameChain, block: np.ndarray, basis: GbtBasis) -> np.ndarray:
    coeffs = chain.coeffs.copy()
    coeffs[:block.size] = block.reshape(-1)
    approx = gbt_inverse(basis, coeffs)
    if chain.tree is None:
        return approx
    return idwt_multi(chain.tree.with_approx(approx))


def frame_s_max(frame: Frame, params: EmbedParams, basis: GbtBasis) -> float:
    """正向链得到的最大奇异值"""
    return float(_forward_chain(frame.samples, params, basis).svd.s[0])


def is_eligible(frame: Frame, params: EmbedParams, basis: GbtBasis) -> bool:
    """最大奇异值大于 α 的帧才能承载比特"""
    return frame_s_max(frame, params, basis) > params.alpha


def embed_bit(frame: Frame, bit: int, params: EmbedParams,
              basis: GbtBasis) -> Tuple[Frame, FrameStegoRecord]:
    """
    在一帧中嵌入一个比特

    Args:
        frame: 载体帧
        bit: 0 或 1
        params: 嵌入参数
        basis: 与 params.graph 对应的 GBT 基

    Returns:
        (含密帧, 帧记录)，记录中保存修改前的最大奇异值

    Raises:
        IneligibleFrame: 最大奇异值不大于 α
        LengthMismatch: 帧长与参数不符
    """
    if bit not in (0, 1):
        raise ValueError(f"比特只能为 0 或 1: {bit}")

    chain = _forward_chain(frame.samples, params, basis)
    svd = chain.svd
    s_max = float(svd.s[0])
    if s_max <= params.alpha:
        raise IneligibleFrame(f"第 {frame.index} 帧最大奇异值 {s_max:.6g} 不大于 α={params.alpha}")

    s = svd.s.copy()
    s[0] = s_max + params.alpha if bit == 1 else s_max - params.alpha
    # 复用正向分解的 U、V，避免重新分解带来的符号歧义
    block = svd.u @ np.diag(s) @ svd.v.T

    stego = _inverse_chain(chain, block, basis)
    return Frame(frame.index, stego), FrameStegoRecord(frame.index, s_max)


def extract_bit(frame: Frame, record: FrameStegoRecord, params: EmbedParams,
                basis: GbtBasis) -> int:
    """重算正向链，S′max 严格大于保存的 s_max 判为 1，否则为 0"""
    s_prime = frame_s_max(frame, params, basis)
    return 1 if s_prime > record.s_max else 0
