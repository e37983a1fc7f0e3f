"""
熵泛函

所有对数以 2 为底，单位为比特。条件熵采用标准符号 H(A|B) = H(AB) − H(B)。
"""

import math
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np
from scipy.special import entr

from localpurity.common import PSD_TOL, ValidationError
from localpurity.qmat import (
    BipartiteState,
    ClassicalQuantumState,
    DensityMatrix,
    clamped_eigh,
    partial_trace,
    partial_trace_subsystems,
    trace_norm,
)

LN2 = math.log(2.0)


def _spectrum_entropy(eigenvalues: np.ndarray) -> float:
    w = np.where((eigenvalues < 0) & (eigenvalues >= -PSD_TOL), 0.0, eigenvalues)
    w = np.clip(w, 0.0, None)
    return math.fsum(entr(w)) / LN2


def von_neumann(rho: Union[DensityMatrix, np.ndarray]) -> float:
    """
    冯·诺依曼熵 H(ρ) = −Tr ρ log₂ ρ
    :param rho: 密度矩阵（或半正定矩阵）
    :return: 比特
    """
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    return _spectrum_entropy(clamped_eigh(m)[0])


def shannon(probs: Sequence[float]) -> float:
    p = np.clip(np.asarray(probs, dtype=float).ravel(), 0.0, None)
    return math.fsum(entr(p)) / LN2


def binary_entropy(p: float) -> float:
    return shannon([p, 1.0 - p])


@dataclass(frozen=True)
class EntropyReport:
    """H(A)、H(B)、H(AB) 与 I(A;B)"""

    h_a: float
    h_b: float
    h_ab: float
    i_ab: float

    def to_dict(self) -> dict:
        return {"hA": self.h_a, "hB": self.h_b, "hAB": self.h_ab, "iAB": self.i_ab}


def entropy_report(s: BipartiteState) -> EntropyReport:
    h_a = von_neumann(partial_trace(s, "A"))
    h_b = von_neumann(partial_trace(s, "B"))
    h_ab = von_neumann(s.rho)
    return EntropyReport(h_a, h_b, h_ab, h_a + h_b - h_ab)


def mutual_info(s: BipartiteState) -> float:
    """I(A;B) = H(A) + H(B) − H(AB)"""
    return entropy_report(s).i_ab


def conditional_entropy(s: BipartiteState) -> float:
    """H(A|B) = H(AB) − H(B)"""
    return von_neumann(s.rho) - von_neumann(partial_trace(s, "B"))


def conditional_mutual_info(
    rho: Union[DensityMatrix, np.ndarray], dims: Tuple[int, int, int]
) -> float:
    """
    条件互信息 I(A;B|X) = H(AX) + H(BX) − H(X) − H(ABX)
    :param rho: 三体态，子系统顺序 A, B, X
    :param dims: (dA, dB, dX)
    """
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    if len(dims) != 3 or int(np.prod(dims)) != m.shape[0]:
        raise ValidationError(f"三体维数 {tuple(dims)} 与矩阵维数 {m.shape[0]} 不一致")
    h_ax = von_neumann(partial_trace_subsystems(m, dims, [0, 2]))
    h_bx = von_neumann(partial_trace_subsystems(m, dims, [1, 2]))
    h_x = von_neumann(partial_trace_subsystems(m, dims, [2]))
    return h_ax + h_bx - h_x - von_neumann(m)


def holevo_information(cq: ClassicalQuantumState) -> float:
    """I(X;B) = H(Σ p ρ_x) − Σ p H(ρ_x)"""
    inner = math.fsum(p * von_neumann(s) for p, s in zip(cq.probs, cq.states))
    return von_neumann(cq.average_state()) - inner


def cq_joint_entropy(cq: ClassicalQuantumState) -> float:
    """H(XB) = H(p) + Σ p H(ρ_x)"""
    return shannon(cq.probs) + math.fsum(p * von_neumann(s) for p, s in zip(cq.probs, cq.states))


def fannes_check(rho: DensityMatrix, omega: DensityMatrix) -> Tuple[float, float]:
    """
    Fannes 不等式 |H(ρ) − H(ω)| ≤ 1/e + log₂ d · ‖ρ − ω‖₁
    :return: (lhs, rhs)
    """
    if rho.dim != omega.dim:
        raise ValidationError(f"维数不一致: {rho.dim} vs {omega.dim}")
    lhs = abs(von_neumann(rho) - von_neumann(omega))
    rhs = 1.0 / math.e + math.log2(rho.dim) * trace_norm(rho.matrix - omega.matrix)
    return lhs, rhs


def subadditivity_check(s: BipartiteState) -> float:
    """次可加性余量 H(A) + H(B) − H(AB)"""
    return mutual_info(s)
