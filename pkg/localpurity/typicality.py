"""
典型投影与纯度浓缩码

ρ^{⊗n} 在 ρ 的本征基下是对角的，所有对象都用序列上的概率向量表示
（经典表示），从不构造 dⁿ×dⁿ 的稠密矩阵。序列下标按 A-major 编码：
x₁x₂…xₙ ↦ Σ x_i d^{n−i}。
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from localpurity.common import BOUND_SLACK, ValidationError, check_guard
from localpurity.entropy import shannon, von_neumann
from localpurity.qmat import DensityMatrix, clamped_eigh, common_eigenbasis, trace_norm

# 典型性判定的对数容差（比特）
LOG_TOL = 1e-9


def smallest_divisor_at_least(total: int, target: int) -> int:
    """total 的不小于 target 的最小因子"""
    if target <= 1:
        return 1
    if target >= total:
        return total
    small, large = [], []
    k = 1
    while k * k <= total:
        if total % k == 0:
            small.append(k)
            large.append(total // k)
        k += 1
    for divisor in sorted(small + large):
        if divisor >= target:
            return divisor
    return total


def sequence_tables(spectrum: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    所有长度 n 序列的概率与 log₂ 概率
    :param spectrum: 单拷贝概率分布
    :return: (probs, log2probs)，长度 dⁿ
    """
    spectrum = np.clip(np.asarray(spectrum, dtype=float), 0.0, None)
    with np.errstate(divide="ignore"):
        logs = np.log2(spectrum)
    probs, logp = spectrum, logs
    for _ in range(n - 1):
        probs = np.multiply.outer(probs, spectrum).ravel()
        logp = np.add.outer(logp, logs).ravel()
    return probs, logp


def typical_mask(logp: np.ndarray, entropy: float, n: int, delta: float) -> np.ndarray:
    """2^{−n(H+δ)} ≤ p(xⁿ) ≤ 2^{−n(H−δ)}"""
    return (logp >= -n * (entropy + delta) - LOG_TOL) & (logp <= -n * (entropy - delta) + LOG_TOL)


def typical_type_mass(spectrum, n: int, delta: float) -> float:
    """
    按类型（各符号出现次数）枚举求典型集质量，不展开序列
    """
    p = np.clip(np.asarray(spectrum, dtype=float), 0.0, None)
    d = len(p)
    check_guard(math.comb(n + d - 1, d - 1), 1 << 20, "类型数")
    entropy = shannon(p)
    terms = []
    for bars in itertools.combinations(range(n + d - 1), d - 1):
        edges = (-1,) + bars + (n + d - 1,)
        counts = [edges[j + 1] - edges[j] - 1 for j in range(d)]
        if any(c > 0 and p[j] == 0 for j, c in enumerate(counts)):
            continue
        log2p = math.fsum(c * math.log2(p[j]) for j, c in enumerate(counts) if c > 0)
        if not (-n * (entropy + delta) - LOG_TOL <= log2p <= -n * (entropy - delta) + LOG_TOL):
            continue
        multiplicity = math.factorial(n)
        for c in counts:
            multiplicity //= math.factorial(c)
        terms.append(multiplicity * math.prod(p[j] ** c for j, c in enumerate(counts)))
    return math.fsum(terms)


@dataclass(frozen=True)
class TypicalProjector:
    """
    δ-典型投影，以 ρ 本征基下的序列下标集合表示
    """

    n: int
    delta: float
    spectrum: np.ndarray
    basis: np.ndarray
    entropy: float
    indices: np.ndarray
    mass: float

    @property
    def size(self) -> int:
        return len(self.indices)

    @property
    def size_bound(self) -> float:
        return 2.0 ** (self.n * (self.entropy + self.delta))

    @property
    def dim(self) -> int:
        return len(self.spectrum) ** self.n

    def mask(self) -> np.ndarray:
        m = np.zeros(self.dim, dtype=bool)
        m[self.indices] = True
        return m

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "delta": self.delta,
            "entropy": self.entropy,
            "size": self.size,
            "sizeBound": self.size_bound,
            "mass": self.mass,
        }


def _spectral_data(rho: DensityMatrix) -> Tuple[np.ndarray, np.ndarray]:
    w, v = clamped_eigh(rho.matrix)
    return np.clip(w, 0.0, None), v


def typical_projector(
    rho: DensityMatrix, n: int, delta: float, guard: int = 1 << 20
) -> TypicalProjector:
    """
    典型投影
    :param rho: 单拷贝态
    :param n: 拷贝数
    :param delta: 典型性参数 δ
    :param guard: dⁿ 上限
    """
    if n < 1:
        raise ValidationError(f"拷贝数 n 必须 ≥ 1，实际 {n}")
    if delta < 0:
        raise ValidationError(f"δ 必须非负，实际 {delta}")
    check_guard(rho.dim ** n, guard, f"dⁿ (d={rho.dim}, n={n})")
    spectrum, basis = _spectral_data(rho)
    entropy = shannon(spectrum)
    probs, logp = sequence_tables(spectrum, n)
    mask = typical_mask(logp, entropy, n, delta)
    indices = np.flatnonzero(mask)
    mass = math.fsum(probs[indices])
    logging.info(f"典型集: n={n}, δ={delta}, |T|={len(indices)}, 质量 {mass:.12f}")
    return TypicalProjector(n, delta, spectrum, basis, entropy, indices, mass)


def relabel_permutation(
    mask: np.ndarray, d2: int, chosen: Optional[np.ndarray] = None
) -> np.ndarray:
    """
    投影压缩的重标号：被选中的第 i 个下标映到 i·d2 + 0，
    其余下标按升序填入剩下的位置
    :param mask: 被选中的下标
    :param d2: 纯态部分维数
    :param chosen: 被选中下标的排列顺序，缺省为升序
    :return: perm，perm[old] = new
    """
    mask = np.asarray(mask, dtype=bool)
    total = len(mask)
    if total % d2 != 0:
        raise ValidationError(f"维数 {total} 不能被 d2={d2} 整除")
    chosen = np.flatnonzero(mask) if chosen is None else np.asarray(chosen, dtype=np.int64)
    if len(chosen) > total // d2:
        raise ValidationError(f"投影秩 {len(chosen)} 超过 d1={total // d2}")
    perm = np.empty(total, dtype=np.int64)
    targets = np.arange(len(chosen)) * d2
    perm[chosen] = targets
    free = np.ones(total, dtype=bool)
    free[targets] = False
    perm[np.flatnonzero(~mask)] = np.flatnonzero(free)
    return perm


def lemma1_relabel(
    pi: np.ndarray, rho: np.ndarray, d1: int, d2: int
) -> Tuple[np.ndarray, float]:
    """
    把与 ρ 对易的投影 Π 的像空间转到 {|i⟩^B|0⟩^C} 的酉变换
    :param pi: 投影，Tr Π = d1
    :param rho: 密度矩阵（d1·d2 维）
    :return: (U, ‖UρU† − (ΠρΠ)^B ⊗ |0⟩⟨0|^C‖₁)
    """
    pi = np.asarray(pi, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    dim = pi.shape[0]
    if dim != d1 * d2 or rho.shape != pi.shape:
        raise ValidationError(f"维数 {dim} 与 d1·d2 = {d1 * d2} 不一致")
    if np.max(np.abs(pi @ pi - pi)) > 1e-9:
        raise ValidationError("Π 不是投影")
    rank = np.trace(pi).real
    if abs(rank - d1) > 1e-9:
        raise ValidationError(f"Tr Π = {rank:.6f}，应为 d1 = {d1}")
    if np.max(np.abs(pi @ rho - rho @ pi)) > 1e-9:
        raise ValidationError("Π 与 ρ 不对易")
    v = common_eigenbasis([pi, rho])
    if v is None:
        raise ValidationError("Π 与 ρ 没有公共本征基")
    in_range = np.real(np.einsum("ik,ij,jk->k", v.conj(), pi, v)) > 0.5
    perm = relabel_permutation(in_range, d2)
    u = np.zeros((dim, dim), dtype=complex)
    u[perm, np.arange(dim)] = 1.0
    u = u @ v.conj().T
    projected = pi @ rho @ pi
    distance = trace_norm(u @ (rho - projected) @ u.conj().T)
    return u, distance


@dataclass(frozen=True)
class ConcentrationCode:
    """
    (n, ε) 纯度浓缩码
    dⁿ = d1·d2，d1 为垃圾维数，d2 为输出纯态 |0⟩ 的维数
    """

    n: int
    d1: int
    d2: int
    achieved_epsilon: float
    delta: float = 0.0
    typical_size: int = 0
    typical_mass: float = 1.0
    padded_mass: float = 1.0
    permutation: Optional[np.ndarray] = None

    @property
    def rate(self) -> float:
        """R = (1/n)·log₂ d2"""
        return math.log2(self.d2) / self.n

    @property
    def lemma1_distance(self) -> float:
        return 1.0 - self.padded_mass

    @property
    def failure(self) -> float:
        """输出偏离 |0⟩ 的概率"""
        return max(0.0, 1.0 - self.padded_mass)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "delta": self.delta,
            "d1": self.d1,
            "d2": self.d2,
            "rate": self.rate,
            "typicalSize": self.typical_size,
            "typicalMass": self.typical_mass,
            "paddedMass": self.padded_mass,
            "achievedEpsilon": self.achieved_epsilon,
            "lemma1Distance": self.lemma1_distance,
        }


def concentrate_distribution(
    probs: np.ndarray, logp: np.ndarray, mask: np.ndarray, n: int, delta: float = 0.0
) -> ConcentrationCode:
    """
    在经典表示下构造浓缩码：把 mask 选中的序列补齐到 dⁿ 的最小合适因子 d1，
    补入的是概率最大的非典型序列（同概率取下标小者）
    """
    total = len(probs)
    size = int(mask.sum())
    d1 = smallest_divisor_at_least(total, max(size, 1))
    padded = mask.copy()
    extra = d1 - size
    if extra > 0:
        candidates = np.flatnonzero(~mask)
        order = np.lexsort((candidates, -logp[candidates]))
        padded[candidates[order[:extra]]] = True
    d2 = total // d1
    padded_mass = min(1.0, math.fsum(probs[padded]))
    return ConcentrationCode(
        n=n,
        d1=d1,
        d2=d2,
        achieved_epsilon=2.0 * max(0.0, 1.0 - padded_mass),
        delta=delta,
        typical_size=size,
        typical_mass=math.fsum(probs[mask]),
        padded_mass=padded_mass,
        permutation=relabel_permutation(padded, d2),
    )


def build_concentration_code(
    rho: DensityMatrix, n: int, delta: float = 0.1, guard: int = 1 << 20
) -> ConcentrationCode:
    """
    由典型投影和重标号构造浓缩码
    achieved_epsilon 为输出 |0⟩⟨0| 上的迹距离 2(1 − Tr ρ^{⊗n}Π′)，Π′ 为补齐后的投影
    """
    projector = typical_projector(rho, n, delta, guard)
    probs, logp = sequence_tables(projector.spectrum, n)
    code = concentrate_distribution(probs, logp, projector.mask(), n, delta)
    logging.info(
        f"浓缩码: d1={code.d1}, d2={code.d2}, 速率 {code.rate:.6f}, ε={code.achieved_epsilon:.6f}"
    )
    return code


def converse_check(code: ConcentrationCode, rho: DensityMatrix) -> float:
    """
    逆定理检验 R ≤ log₂ d − H(ρ) + 1/(e·n) + ε·log₂ d
    :return: 余量（合法码应 ≥ −1e-9）
    """
    log_d = math.log2(rho.dim)
    bound = log_d - von_neumann(rho) + 1.0 / (math.e * code.n) + code.achieved_epsilon * log_d
    slack = bound - code.rate
    if slack < -BOUND_SLACK:
        logging.warning(f"浓缩码违反逆定理: 速率 {code.rate:.6f} > 上界 {bound:.6f}")
    return slack
