"""
图变换模块
构造一阶/二阶近邻路径图，求 Laplacian 的正交特征基（GBT 基），做正/逆变换
"""

import logging
import math
import threading
from dataclasses import dataclass
from typing import Dict

import numpy as np

from errors import InvalidParams, LengthMismatch, NotSymmetric
from linalg import symmetric_evd

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GraphSpec:
    """路径图参数"""
    n: int = 20  # 节点数，等于两层 DWT 后的近似系数长度
    w1: float = 1.0  # 一阶近邻边权
    w2: float = 0.3  # 二阶近邻边权

    def validate(self) -> None:
        if self.n < 3:
            raise InvalidParams(f"图节点数至少为 3: {self.n}")
        if not self.w1 > 0:
            raise InvalidParams(f"一阶边权必须为正: {self.w1}")
        if not self.w2 >= 0:
            raise InvalidParams(f"二阶边权不能为负: {self.w2}")


@dataclass(frozen=True, eq=False)
class GbtBasis:
    """GBT 基：列为 Laplacian 特征向量，按特征值升序"""
    v: np.ndarray
    eigenvalues: np.ndarray

    @property
    def n(self) -> int:
        return self.v.shape[0]


def build_adjacency(spec: GraphSpec) -> np.ndarray:
    """邻接矩阵：|i-j| = 1 取 w1，|i-j| = 2 取 w2，其余（含对角）为 0"""
    spec.validate()
    a = np.zeros((spec.n, spec.n))
    idx = np.arange(spec.n - 1)
    a[idx, idx + 1] = spec.w1
    a[idx + 1, idx] = spec.w1
    idx = np.arange(spec.n - 2)
    a[idx, idx + 2] = spec.w2
    a[idx + 2, idx] = spec.w2
    return a


def laplacian(adjacency: np.ndarray) -> np.ndarray:
    """
    组合 Laplacian L = D - A

    对角元是本行非对角元精确求和后只舍入一次的结果，与求和顺序无关。
    权重为二进有理数（如 1, 0.5）时每行之和严格为 0；否则行和的精确值不超过对角元的半个 ulp
    """
    a = np.asarray(adjacency, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or not np.array_equal(a, a.T):
        raise NotSymmetric("邻接矩阵必须是对称方阵")
    if np.any(a < 0):
        raise InvalidParams("邻接矩阵不能有负权")

    lap = -a.copy()
    np.fill_diagonal(lap, 0.0)
    np.fill_diagonal(lap, [-math.fsum(row) for row in lap])
    return lap


_basis_cache: Dict[GraphSpec, GbtBasis] = {}
_basis_lock = threading.Lock()


def gbt_basis(spec: GraphSpec) -> GbtBasis:
    """
    计算并缓存 GBT 基，同一参数只计算一次

    并发调用时先拿到锁的线程负责计算，其余线程读取其结果
    """
    cached = _basis_cache.get(spec)
    if cached is not None:
        return cached

    with _basis_lock:
        cached = _basis_cache.get(spec)
        if cached is None:
            evd = symmetric_evd(laplacian(build_adjacency(spec)))
            v = evd.eigenvectors
            v.setflags(write=False)
            eigenvalues = evd.eigenvalues
            eigenvalues.setflags(write=False)
            cached = GbtBasis(v, eigenvalues)
            _basis_cache[spec] = cached
            logger.debug(f"已计算 GBT 基: n={spec.n}, w1={spec.w1}, w2={spec.w2}")
    return cached


def gbt_forward(basis: GbtBasis, s: np.ndarray) -> np.ndarray:
    """c = Vᵀs"""
    s = np.asarray(s, dtype=np.float64)
    if s.shape != (basis.n,):
        raise LengthMismatch(f"输入长度 {len(s)} 与图节点数 {basis.n} 不一致")
    return basis.v.T @ s


def gbt_inverse(basis: GbtBasis, c: np.ndarray) -> np.ndarray:
    """s = Vc"""
    c = np.asarray(c, dtype=np.float64)
    if c.shape != (basis.n,):
        raise LengthMismatch(f"系数长度 {len(c)} 与图节点数 {basis.n} 不一致")
    return basis.v @ c
