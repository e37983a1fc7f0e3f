"""
稠密复矩阵基础层

密度矩阵、二分态、经典-量子态、POVM，以及偏迹、迹范数、退相干信道、
受控酉和附录中的几条距离不等式。

约定：二分系统中 A 为高位（慢变）下标，即 |a⟩|b⟩ 对应下标 a·dB + b。
"""

import json
import logging
import math
import os
import tempfile
from dataclasses import InitVar, dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from scipy.stats import unitary_group

from localpurity.common import (
    HERMITIAN_TOL,
    POVM_TOL,
    PROB_CUTOFF,
    PSD_TOL,
    SYMMETRIZE_TOL,
    TRACE_TOL,
    ValidationError,
)


class Subsystem(Enum):
    """二分系统中的子系统"""

    A = "A"
    B = "B"


def _as_square(matrix, what: str = "matrix") -> np.ndarray:
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ValidationError(f"{what} 必须是非空方阵，实际形状 {m.shape}")
    return m


def hermitian_part(matrix: np.ndarray) -> np.ndarray:
    return (matrix + matrix.conj().T) / 2


def is_hermitian(matrix: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.max(np.abs(matrix - matrix.conj().T), initial=0.0) <= tol)


def is_unitary(matrix: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return bool(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) <= tol)


def clamped_eigh(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    厄米矩阵特征分解，[-1e-10, 0) 区间内的特征值截断为 0
    :return: (eigenvalues, eigenvectors)
    """
    w, v = scipy.linalg.eigh(hermitian_part(matrix))
    w = np.where((w < 0) & (w >= -PSD_TOL), 0.0, w)
    return w, v


def sqrtm_psd(matrix: np.ndarray) -> np.ndarray:
    """半正定矩阵的平方根（特征分解 + 截断）"""
    w, v = clamped_eigh(matrix)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


@dataclass(frozen=True)
class DensityMatrix:
    """
    密度矩阵：厄米、单位迹、半正定

    构造时若厄米偏差 < 1e-8 则对称化 (M+M†)/2，否则拒绝。
    内部运算得到的矩阵可用 check=False 跳过特征值校验。
    """

    matrix: np.ndarray
    check: InitVar[bool] = True

    def __post_init__(self, check: bool):
        m = _as_square(self.matrix, "密度矩阵")
        deviation = np.max(np.abs(m - m.conj().T))
        if deviation > SYMMETRIZE_TOL:
            raise ValidationError(f"密度矩阵不是厄米矩阵，偏差 {deviation:.3e}")
        m = hermitian_part(m)
        if check:
            trace = np.trace(m).real
            if abs(trace - 1.0) > TRACE_TOL:
                raise ValidationError(f"密度矩阵迹为 {trace!r}，应为 1")
            w_min = scipy.linalg.eigvalsh(m)[0]
            if w_min < -PSD_TOL:
                raise ValidationError(f"密度矩阵非半正定，最小特征值 {w_min:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigenvalues(self) -> np.ndarray:
        """截断后的特征值（升序）"""
        return clamped_eigh(self.matrix)[0]


@dataclass(frozen=True)
class BipartiteState:
    """二分态 ρ^{AB}，A 为高位下标"""

    dim_a: int
    dim_b: int
    rho: DensityMatrix

    def __post_init__(self):
        if self.dim_a < 1 or self.dim_b < 1:
            raise ValidationError(f"子系统维数必须为正整数: ({self.dim_a}, {self.dim_b})")
        if self.rho.dim != self.dim_a * self.dim_b:
            raise ValidationError(
                f"维数不匹配: dims=({self.dim_a}, {self.dim_b})，矩阵维数 {self.rho.dim}"
            )

    @property
    def matrix(self) -> np.ndarray:
        return self.rho.matrix

    @property
    def dim(self) -> int:
        return self.rho.dim

    def tensor_view(self) -> np.ndarray:
        """形状 (dA, dB, dA, dB) 的视图"""
        return self.matrix.reshape(self.dim_a, self.dim_b, self.dim_a, self.dim_b)


@dataclass(frozen=True)
class ClassicalQuantumState:
    """
    经典-量子态 ρ^{XB} = Σ p(x)|x⟩⟨x| ⊗ ρ_x

    labels 记录每个分量在原始字母表中的下标（POVM 丢弃零概率结果后仍可追溯）
    """

    probs: np.ndarray
    states: Tuple[DensityMatrix, ...]
    labels: Tuple[int, ...] = field(default=())

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or len(p) == 0:
            raise ValidationError("概率向量必须是非空一维数组")
        if len(p) != len(self.states):
            raise ValidationError(f"概率个数 {len(p)} 与态个数 {len(self.states)} 不一致")
        if np.any(p < 0):
            raise ValidationError("概率必须非负")
        if abs(p.sum() - 1.0) > TRACE_TOL:
            raise ValidationError(f"概率之和为 {p.sum()!r}，应为 1")
        dims = {s.dim for s in self.states}
        if len(dims) != 1:
            raise ValidationError(f"各分量态维数不一致: {sorted(dims)}")
        labels = tuple(self.labels) or tuple(range(len(p)))
        if len(labels) != len(p):
            raise ValidationError("labels 长度与概率向量不一致")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "labels", labels)

    @property
    def size(self) -> int:
        return len(self.probs)

    @property
    def dim_b(self) -> int:
        return self.states[0].dim

    def average_state(self) -> DensityMatrix:
        """ρ^B = Σ p(x) ρ_x"""
        avg = np.einsum("x,xij->ij", self.probs, np.stack([s.matrix for s in self.states]))
        return DensityMatrix(avg, check=False)

    def joint_matrix(self) -> np.ndarray:
        """块对角的 ρ^{XB}（X 为高位）"""
        return scipy.linalg.block_diag(*[p * s.matrix for p, s in zip(self.probs, self.states)])


@dataclass(frozen=True)
class Povm:
    """POVM：半正定元素之和为单位阵"""

    elements: Tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.elements) == 0:
            raise ValidationError("POVM 至少需要一个元素")
        elements = tuple(_as_square(e, "POVM 元素") for e in self.elements)
        d = elements[0].shape[0]
        total = np.zeros((d, d), dtype=complex)
        for i, e in enumerate(elements):
            if e.shape != (d, d):
                raise ValidationError(f"POVM 元素 {i} 维数 {e.shape} 与 {d} 不一致")
            if not is_hermitian(e, SYMMETRIZE_TOL):
                raise ValidationError(f"POVM 元素 {i} 不是厄米矩阵")
            if scipy.linalg.eigvalsh(hermitian_part(e))[0] < -PSD_TOL:
                raise ValidationError(f"POVM 元素 {i} 非半正定")
            total += e
        deviation = np.max(np.abs(total - np.eye(d)))
        if deviation > POVM_TOL:
            raise ValidationError(f"POVM 元素之和偏离单位阵 {deviation:.3e}")
        object.__setattr__(self, "elements", tuple(hermitian_part(e) for e in elements))

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    def __len__(self) -> int:
        return len(self.elements)

    @classmethod
    def computational(cls, d: int) -> "Povm":
        return cls.from_basis(np.eye(d, dtype=complex))

    @classmethod
    def from_basis(cls, basis: np.ndarray) -> "Povm":
        """以正交基（列向量）构造投影测量"""
        basis = _check_basis(basis)
        return cls(tuple(np.outer(basis[:, k], basis[:, k].conj()) for k in range(basis.shape[1])))


# ========== 构造 ==========


def ket(index: int, d: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[index] = 1.0
    return v


def pure(vector: Sequence[complex]) -> DensityMatrix:
    """归一化后的纯态 |ψ⟩⟨ψ|"""
    v = np.asarray(vector, dtype=complex).ravel()
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValidationError("零向量不能构成纯态")
    v = v / norm
    return DensityMatrix(np.outer(v, v.conj()))


def diag(probs: Sequence[float]) -> DensityMatrix:
    return DensityMatrix(np.diag(np.asarray(probs, dtype=complex)))


def maximally_mixed(d: int) -> DensityMatrix:
    return DensityMatrix(np.eye(d, dtype=complex) / d)


def bipartite(matrix, dim_a: int, dim_b: int) -> BipartiteState:
    rho = matrix if isinstance(matrix, DensityMatrix) else DensityMatrix(matrix)
    return BipartiteState(dim_a, dim_b, rho)


def product(a: DensityMatrix, b: DensityMatrix) -> BipartiteState:
    return BipartiteState(a.dim, b.dim, tensor(a, b))


def bell_state() -> BipartiteState:
    """Φ⁺ = (|00⟩ + |11⟩)/√2"""
    return BipartiteState(2, 2, pure([1, 0, 0, 1]))


def common_randomness_state() -> BipartiteState:
    """Φ̄ = ½(|00⟩⟨00| + |11⟩⟨11|)，一比特共享随机性"""
    return BipartiteState(2, 2, diag([0.5, 0.0, 0.0, 0.5]))


def cc_state(joint: np.ndarray) -> BipartiteState:
    """由联合分布 p(x, y) 构造经典-经典态 Σ p(x,y)|xy⟩⟨xy|"""
    joint = np.asarray(joint, dtype=float)
    if joint.ndim != 2:
        raise ValidationError("联合分布必须是二维数组")
    return BipartiteState(joint.shape[0], joint.shape[1], diag(joint.ravel()))


# ========== 张量积与偏迹 ==========


def tensor(a: DensityMatrix, b: DensityMatrix) -> DensityMatrix:
    """Kronecker 积，a 为高位"""
    return DensityMatrix(np.kron(a.matrix, b.matrix), check=False)


def tensor_bipartite(s: BipartiteState, t: BipartiteState) -> BipartiteState:
    """
    (A₁B₁) ⊗ (A₂B₂) 重排为 (A₁A₂)(B₁B₂)
    """
    a1, b1, a2, b2 = s.dim_a, s.dim_b, t.dim_a, t.dim_b
    m = np.kron(s.matrix, t.matrix).reshape(a1, b1, a2, b2, a1, b1, a2, b2)
    m = m.transpose(0, 2, 1, 3, 4, 6, 5, 7).reshape(a1 * a2 * b1 * b2, a1 * a2 * b1 * b2)
    return BipartiteState(a1 * a2, b1 * b2, DensityMatrix(m, check=False))


def tensor_power(s: BipartiteState, n: int) -> BipartiteState:
    """ρ^{⊗n}，按 AⁿBⁿ 排列"""
    if n < 1:
        raise ValidationError(f"拷贝数 n 必须 ≥ 1，实际 {n}")
    result = s
    for _ in range(n - 1):
        result = tensor_bipartite(result, s)
    return result


def partial_trace(s: BipartiteState, keep: Union[Subsystem, str]) -> DensityMatrix:
    """
    偏迹
    :param s: 二分态
    :param keep: 保留的子系统（Subsystem 或 "A"/"B"）
    :return: 约化密度矩阵
    """
    keep = Subsystem(keep)
    r = s.tensor_view()
    if keep is Subsystem.A:
        reduced = np.einsum("ibjb->ij", r)
    else:
        reduced = np.einsum("aiaj->ij", r)
    return DensityMatrix(reduced, check=False)


def partial_trace_subsystems(matrix: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """
    多体系统偏迹，保留的子系统按升序排列
    :param matrix: prod(dims) 维方阵
    :param dims: 各子系统维数
    :param keep: 保留的子系统下标
    """
    dims = list(dims)
    keep = sorted(set(keep))
    k = len(dims)
    if int(np.prod(dims)) != matrix.shape[0]:
        raise ValidationError(f"维数 {dims} 与矩阵维数 {matrix.shape[0]} 不一致")
    t = matrix.reshape(dims + dims)
    for idx in sorted(set(range(k)) - set(keep), reverse=True):
        half = t.ndim // 2
        t = np.trace(t, axis1=idx, axis2=idx + half)
    d = int(np.prod([dims[i] for i in keep])) if keep else 1
    return t.reshape(d, d)


def apply_operator(
    matrix: np.ndarray, dims: Sequence[int], op: np.ndarray, targets: Sequence[int]
) -> np.ndarray:
    """
    在指定子系统上作用 O ρ O†，其余子系统不变
    :param targets: 目标子系统下标，op 的张量顺序与之一致
    """
    dims = list(dims)
    targets = list(targets)
    k, t_len = len(dims), len(targets)
    tdims = [dims[i] for i in targets]
    o = np.asarray(op, dtype=complex).reshape(tdims + tdims)
    t = matrix.reshape(dims + dims)
    t = np.tensordot(o, t, axes=(list(range(t_len, 2 * t_len)), targets))
    t = np.moveaxis(t, list(range(t_len)), targets)
    t = np.tensordot(t, o.conj(), axes=([k + i for i in targets], list(range(t_len, 2 * t_len))))
    t = np.moveaxis(t, list(range(2 * k - t_len, 2 * k)), [k + i for i in targets])
    d = matrix.shape[0]
    return t.reshape(d, d)


# ========== 距离 ==========


def trace_norm(matrix) -> float:
    """
    迹范数 ‖M‖₁
    厄米矩阵取特征值绝对值之和，否则取奇异值之和
    """
    m = _as_square(matrix)
    if is_hermitian(m):
        return float(np.sum(np.abs(scipy.linalg.eigvalsh(hermitian_part(m)))))
    return float(np.sum(scipy.linalg.svdvals(m)))


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    return trace_norm(a.matrix - b.matrix)


def fidelity_pure_bound(rho: DensityMatrix, phi: Sequence[complex]) -> Tuple[float, float]:
    """
    纯态目标的迹距离与保真度界
    :return: (‖ρ − |φ⟩⟨φ|‖₁, 2√(1 − ⟨φ|ρ|φ⟩))
    """
    v = np.asarray(phi, dtype=complex).ravel()
    if v.shape[0] != rho.dim:
        raise ValidationError(f"向量维数 {v.shape[0]} 与态维数 {rho.dim} 不一致")
    if abs(np.linalg.norm(v) - 1.0) > HERMITIAN_TOL:
        raise ValidationError("目标向量必须归一化")
    distance = trace_norm(rho.matrix - np.outer(v, v.conj()))
    overlap = float(np.real(v.conj() @ rho.matrix @ v))
    return distance, 2.0 * np.sqrt(max(0.0, 1.0 - overlap))


def gentle_operator(rho: Union[DensityMatrix, np.ndarray], lam: np.ndarray) -> Tuple[float, float]:
    """
    温和测量引理
    :param rho: 密度矩阵（允许次归一化的半正定矩阵）
    :param lam: 算子 0 ≤ Λ ≤ 1
    :return: (‖ρ − √Λ ρ √Λ‖₁, √(8λ))，其中 Tr ρΛ = 1 − λ
    """
    m = rho.matrix if isinstance(rho, DensityMatrix) else _as_square(rho, "ρ")
    op = _as_square(lam, "Λ")
    if op.shape != m.shape:
        raise ValidationError(f"Λ 维数 {op.shape} 与 ρ 维数 {m.shape} 不一致")
    if not is_hermitian(op, SYMMETRIZE_TOL):
        raise ValidationError("Λ 不是厄米矩阵")
    w = scipy.linalg.eigvalsh(hermitian_part(op))
    if w[0] < -PSD_TOL or w[-1] > 1.0 + PSD_TOL:
        raise ValidationError(f"Λ 的谱 [{w[0]:.3e}, {w[-1]:.3e}] 超出 [0, 1]")
    root = sqrtm_psd(op)
    disturbance = trace_norm(m - root @ m @ root)
    failure = max(0.0, 1.0 - float(np.real(np.trace(m @ op))))
    return disturbance, float(np.sqrt(8.0 * failure))


# ========== 信道 ==========


def _check_basis(basis) -> np.ndarray:
    b = _as_square(basis, "基")
    if not is_unitary(b):
        raise ValidationError("基向量（列）必须两两正交且归一")
    return b


def dephase(d: DensityMatrix, basis: Optional[np.ndarray] = None) -> DensityMatrix:
    """
    退相干信道：在给定基（列向量）下清零非对角元
    :param basis: 正交基，缺省为计算基
    """
    if basis is None:
        return DensityMatrix(np.diag(np.diag(d.matrix)), check=False)
    b = _check_basis(basis)
    if b.shape[0] != d.dim:
        raise ValidationError(f"基维数 {b.shape[0]} 与态维数 {d.dim} 不一致")
    populations = np.real(np.einsum("ik,ij,jk->k", b.conj(), d.matrix, b))
    return DensityMatrix((b * populations) @ b.conj().T, check=False)


def dephase_subsystems(matrix: np.ndarray, dims: Sequence[int], targets: Iterable[int]) -> np.ndarray:
    """在计算基下对指定子系统退相干"""
    dims = list(dims)
    k = len(dims)
    t = matrix.reshape(dims + dims)
    for i in targets:
        shape = [1] * (2 * k)
        shape[i] = shape[k + i] = dims[i]
        t = t * np.eye(dims[i]).reshape(shape)
    return t.reshape(matrix.shape)


def dephase_local(
    s: BipartiteState, subsystem: Union[Subsystem, str], basis: Optional[np.ndarray] = None
) -> BipartiteState:
    """对二分态的一侧作退相干，另一侧不变"""
    target = 0 if Subsystem(subsystem) is Subsystem.A else 1
    dims = [s.dim_a, s.dim_b]
    m = s.matrix
    if basis is not None:
        b = _check_basis(basis)
        m = apply_operator(m, dims, b.conj().T, [target])
        m = dephase_subsystems(m, dims, [target])
        m = apply_operator(m, dims, b, [target])
    else:
        m = dephase_subsystems(m, dims, [target])
    return BipartiteState(s.dim_a, s.dim_b, DensityMatrix(m, check=False))


def controlled_unitary(blocks: Sequence[np.ndarray]) -> np.ndarray:
    """
    受控酉 Σ_x |x⟩⟨x| ⊗ U_x（控制位 X 为高位）
    :param blocks: 各分支的酉矩阵，维数必须一致
    """
    if len(blocks) == 0:
        raise ValidationError("受控酉至少需要一个分支")
    mats = [_as_square(u, "受控酉分支") for u in blocks]
    d = mats[0].shape[0]
    for i, u in enumerate(mats):
        if u.shape != (d, d):
            raise ValidationError(f"分支 {i} 维数 {u.shape} 与 {d} 不一致")
        if not is_unitary(u):
            raise ValidationError(f"分支 {i} 不是酉矩阵")
    return scipy.linalg.block_diag(*mats)


def apply_unitary(s: BipartiteState, u: np.ndarray) -> BipartiteState:
    m = u @ s.matrix @ u.conj().T
    return BipartiteState(s.dim_a, s.dim_b, DensityMatrix(m, check=False))


def apply_povm(povm: Povm, s: BipartiteState, drop_below: float = PROB_CUTOFF) -> ClassicalQuantumState:
    """
    在 A 上执行 POVM，得到 X-B 经典-量子态
    p(x) = Tr(Λ_x ρ^A)，ρ_x^B = Tr_A((Λ_x ⊗ 1)ρ^{AB}) / p(x)
    概率低于 drop_below 的结果被丢弃并重新归一化
    """
    if povm.dim != s.dim_a:
        raise ValidationError(f"POVM 维数 {povm.dim} 与子系统 A 维数 {s.dim_a} 不一致")
    r = s.tensor_view()
    blocks = np.einsum("xae,ebac->xbc", np.stack(povm.elements), r)
    probs = np.real(np.einsum("xbb->x", blocks))
    kept = [x for x in range(len(povm)) if probs[x] >= drop_below]
    if not kept:
        raise ValidationError("POVM 所有结果的概率都低于截断阈值")
    total = math.fsum(probs[kept])
    states = tuple(DensityMatrix(blocks[x] / probs[x], check=False) for x in kept)
    return ClassicalQuantumState(probs[kept] / total, states, tuple(kept))


def common_eigenbasis(matrices: Sequence[np.ndarray], tol: float = 1e-9) -> Optional[np.ndarray]:
    """
    求一组厄米矩阵的公共特征基
    :return: 酉矩阵（列为基向量），若矩阵不对易则返回 None
    """
    mats = [hermitian_part(_as_square(m)) for m in matrices]
    if all(np.max(np.abs(m - np.diag(np.diag(m))), initial=0.0) <= tol for m in mats):
        return np.eye(mats[0].shape[0], dtype=complex)
    # 无理权重的线性组合，避免偶然简并
    combo = sum(m / (i + np.sqrt(2.0)) for i, m in enumerate(mats))
    _, v = scipy.linalg.eigh(combo)
    for m in mats:
        rotated = v.conj().T @ m @ v
        if np.max(np.abs(rotated - np.diag(np.diag(rotated)))) > tol:
            return None
    return v


# ========== 随机实例 ==========


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar 随机酉矩阵"""
    if d == 1:
        return np.exp(2j * np.pi * rng.random()) * np.ones((1, 1), dtype=complex)
    return unitary_group.rvs(d, random_state=rng)


def random_pure(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar 随机纯态向量"""
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_density(d: int, rng: np.random.Generator, rank: Optional[int] = None) -> DensityMatrix:
    """Ginibre 随机密度矩阵（Hilbert-Schmidt 测度）"""
    rank = rank or d
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real)


def random_effect(d: int, rng: np.random.Generator) -> np.ndarray:
    """随机效应算子 0 ≤ Λ ≤ 1"""
    u = random_unitary(d, rng)
    return (u * rng.random(d)) @ u.conj().T


def random_bipartite(
    dim_a: int, dim_b: int, rng: np.random.Generator, rank: Optional[int] = None
) -> BipartiteState:
    return BipartiteState(dim_a, dim_b, random_density(dim_a * dim_b, rng, rank))


def random_separable(
    dim_a: int, dim_b: int, rng: np.random.Generator, terms: int = 3
) -> BipartiteState:
    """随机可分态 Σ w_i σ_i ⊗ τ_i"""
    weights = rng.dirichlet(np.ones(terms))
    m = sum(
        w * np.kron(random_density(dim_a, rng).matrix, random_density(dim_b, rng).matrix)
        for w in weights
    )
    return BipartiteState(dim_a, dim_b, DensityMatrix(m / np.trace(m).real))


# ========== 态文件读写 ==========


def parse_state(obj, source: str = "<input>") -> Union[DensityMatrix, BipartiteState]:
    """
    解析态 JSON 对象 {"dims": [dA, dB] 或 [d], "matrix": [[[re, im], ...], ...]}
    :param source: 出错时报告的位置前缀
    """
    if not isinstance(obj, dict):
        raise ValidationError(f"{source}: 顶层必须是对象")
    dims = obj.get("dims")
    if (
        not isinstance(dims, list)
        or len(dims) not in (1, 2)
        or not all(isinstance(d, int) and not isinstance(d, bool) and d > 0 for d in dims)
    ):
        raise ValidationError(f"{source}: dims 必须是 1 或 2 个正整数，实际 {dims!r}")
    rows = obj.get("matrix")
    total = int(np.prod(dims))
    if not isinstance(rows, list) or len(rows) != total:
        raise ValidationError(f"{source}: matrix 必须有 {total} 行")
    m = np.zeros((total, total), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != total:
            raise ValidationError(f"{source}: matrix[{i}] 必须有 {total} 个元素")
        for j, entry in enumerate(row):
            if (
                not isinstance(entry, list)
                or len(entry) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry)
            ):
                raise ValidationError(f"{source}: matrix[{i}][{j}] 必须是 [re, im]，实际 {entry!r}")
            m[i, j] = complex(entry[0], entry[1])
    try:
        rho = DensityMatrix(m)
    except ValidationError as e:
        raise ValidationError(f"{source}: {e}") from e
    if len(dims) == 1:
        return rho
    return BipartiteState(dims[0], dims[1], rho)


def load_state(path: str) -> Union[DensityMatrix, BipartiteState]:
    """读取态文件，格式错误时抛出带位置的 ValidationError"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            obj = json.load(f)
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path}:{e.lineno}:{e.colno}: JSON 格式错误: {e.msg}") from e
    except OSError as e:
        raise ValidationError(f"{path}: 无法读取: {e}") from e
    return parse_state(obj, path)


def state_to_dict(state: Union[DensityMatrix, BipartiteState]) -> dict:
    if isinstance(state, BipartiteState):
        dims, m = [state.dim_a, state.dim_b], state.matrix
    else:
        dims, m = [state.dim], state.matrix
    return {
        "dims": dims,
        "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in m],
    }


def save_state(state: Union[DensityMatrix, BipartiteState], path: str) -> None:
    """原子写入态文件（先写临时文件再 rename）"""
    dir_path = os.path.dirname(os.path.abspath(path))
    os.makedirs(dir_path, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=dir_path, suffix=".tmp", prefix=".state_")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            json.dump(state_to_dict(state), f, indent=2)
        os.replace(tmp_path, path)
    except BaseException:
        try:
            os.unlink(tmp_path)
        except OSError:
            pass
        raise
    logging.info(f"态已写入 {path}")
