"""
线性代数模块
对称矩阵特征分解与小矩阵奇异值分解，固定排序与符号约定，保证嵌入与提取得到同一组基
"""

import logging
from dataclasses import dataclass

import numpy as np

from errors import InvalidParams, NoConvergence, NotSquare, NotSymmetric

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-10
SIGN_TOL = 1e-12


@dataclass
class EvdResult:
    """特征分解结果，特征值升序，eigenvectors 的列与特征值对应"""
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass
class SvdResult:
    """奇异值分解结果 m = u · diag(s) · vᵀ，s 降序"""
    u: np.ndarray
    s: np.ndarray
    v: np.ndarray

    def reconstruct(self) -> np.ndarray:
        m, n = self.u.shape[0], self.v.shape[0]
        sigma = np.zeros((m, n))
        k = len(self.s)
        sigma[:k, :k] = np.diag(self.s)
        return self.u @ sigma @ self.v.T


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """每列第一个 |entry| > 1e-12 的分量取正"""
    vectors = vectors.copy()
    for j in range(vectors.shape[1]):
        col = vectors[:, j]
        significant = np.flatnonzero(np.abs(col) > SIGN_TOL)
        if len(significant) and col[significant[0]] < 0:
            vectors[:, j] = -col
    return vectors


def symmetric_evd(m: np.ndarray) -> EvdResult:
    """
    实对称矩阵特征分解

    Args:
        m: 方阵，逐元素对称误差不超过 1e-10

    Returns:
        EvdResult，特征值升序，特征向量单位正交并按符号约定归一

    Raises:
        NotSquare: 非方阵
        NotSymmetric: 不对称
        NoConvergence: LAPACK 迭代未收敛
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotSquare(f"需要方阵，当前形状 {m.shape}")
    if not np.all(np.abs(m - m.T) <= SYMMETRY_TOL):
        raise NotSymmetric("矩阵不对称")

    try:
        eigenvalues, eigenvectors = np.linalg.eigh(m)
    except np.linalg.LinAlgError as e:
        raise NoConvergence(f"特征分解未收敛: {e}") from e

    order = np.argsort(eigenvalues, kind='stable')
    return EvdResult(eigenvalues[order], _fix_signs(eigenvectors[:, order]))


def svd_small(m: np.ndarray) -> SvdResult:
    """
    小矩阵（4×4，最大 8×8）奇异值分解

    Returns:
        SvdResult，u 为 m×m，v 为 n×n，s 降序非负

    Raises:
        InvalidParams: 不是二维矩阵或含非有限值
        NoConvergence: LAPACK 迭代未收敛
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise InvalidParams(f"需要二维矩阵，当前形状 {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidParams("矩阵含有非有限值")

    try:
        u, s, vh = np.linalg.svd(m, full_matrices=True)
    except np.linalg.LinAlgError as e:
        raise NoConvergence(f"奇异值分解未收敛: {e}") from e

    return SvdResult(u, s, vh.T)
