"""
覆盖码

把 X 的典型序列集合 S 随机分成 λ 个大小为 μ 的箱，每个箱配一个
B^n 上的解码 POVM Υ⁽ˡ⁾（pretty-good measurement），要求
Tr ρ^B_{f(m,l)} Υ⁽ˡ⁾_m ≥ 1 − ε 对所有 (m, l) 成立。
失败时细分箱（λ 加倍），λ = |S| 时每箱只有一个序列，必然成功。

系综对易时不展开 |X|ⁿ × d_Bⁿ 的整张分布表：每个 xⁿ 的 Bⁿ 分布是
单字母分布的乘积，只在需要的箱内按非零项展开。
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from localpurity.common import BOUND_SLACK, CoveringError, ValidationError, check_guard
from localpurity.entropy import holevo_information, shannon
from localpurity.qmat import (
    ClassicalQuantumState,
    DensityMatrix,
    Povm,
    clamped_eigh,
    common_eigenbasis,
)
from localpurity.typicality import (
    sequence_tables,
    smallest_divisor_at_least,
    typical_mask,
)

# Σ 的特征值低于该值视为核
KERNEL_TOL = 1e-12


def pretty_good_measurement(
    states: Sequence[DensityMatrix], priors: Optional[Sequence[float]] = None
) -> Povm:
    """
    Υ_m = Σ^{−1/2} p_m ρ_m Σ^{−1/2}，Σ = Σ_m p_m ρ_m
    Σ 的核上的投影平均分给各结果，保证 Σ_m Υ_m = I
    :param states: 待区分的态
    :param priors: 先验，缺省为均匀
    """
    if len(states) == 0:
        raise ValidationError("PGM 至少需要一个态")
    k = len(states)
    d = states[0].dim
    if any(s.dim != d for s in states):
        raise ValidationError("PGM 各态维数不一致")
    p = np.full(k, 1.0 / k) if priors is None else np.asarray(priors, dtype=float)
    if p.shape != (k,) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-10:
        raise ValidationError("先验必须是与态个数相同的概率向量")
    weighted = np.stack([pm * s.matrix for pm, s in zip(p, states)])
    w, v = clamped_eigh(weighted.sum(axis=0))
    support = w > KERNEL_TOL
    inv_sqrt = (v[:, support] / np.sqrt(w[support])) @ v[:, support].conj().T
    kernel = v[:, ~support] @ v[:, ~support].conj().T
    elements = tuple(inv_sqrt @ wm @ inv_sqrt + kernel / k for wm in weighted)
    return Povm(elements)


def _tensor_states(states: Sequence[np.ndarray], symbols: Sequence[int]) -> np.ndarray:
    m = states[symbols[0]]
    for x in symbols[1:]:
        m = np.kron(m, states[x])
    return m


def _digits(index: int, base: int, n: int) -> List[int]:
    out = []
    for _ in range(n):
        out.append(index % base)
        index //= base
    return out[::-1]


def letter_table(cq: ClassicalQuantumState, basis: np.ndarray) -> np.ndarray:
    """q[x, b] = ⟨b|ρ_x|b⟩，b 取公共本征基"""
    q = np.stack(
        [np.real(np.einsum("ik,ij,jk->k", basis.conj(), s.matrix, basis)) for s in cq.states]
    )
    return np.clip(q, 0.0, None)


@dataclass(frozen=True)
class ProductChannel:
    """
    对易系综的经典表示：xⁿ 对应的 Bⁿ 分布为 Π q(b_i|x_i)
    Bⁿ 下标以 b₁ 为高位
    """

    q: np.ndarray
    n: int

    @property
    def alphabet(self) -> int:
        return self.q.shape[0]

    @property
    def dim_b(self) -> int:
        return self.q.shape[1]

    @property
    def width(self) -> int:
        """单字母分布的最大支撑大小"""
        return int(max(1, np.count_nonzero(self.q > 0, axis=1).max()))

    @property
    def row_width(self) -> int:
        return self.width ** self.n

    def symbols(self, seqs) -> np.ndarray:
        """序列下标 -> 符号表，形状 (k, n)"""
        seqs = np.asarray(seqs, dtype=np.int64)
        powers = self.alphabet ** np.arange(self.n - 1, -1, -1, dtype=np.int64)
        return (seqs[:, None] // powers) % self.alphabet

    def rows(self, seqs) -> Tuple[np.ndarray, np.ndarray]:
        """
        各序列 Bⁿ 分布的非零列与取值，形状均为 (k, wⁿ)
        支撑小于 w 的字母用取值 0 的项补齐
        """
        w = self.width
        sup_idx = np.zeros((self.alphabet, w), dtype=np.int64)
        sup_val = np.zeros((self.alphabet, w))
        for x, row in enumerate(self.q):
            nz = np.flatnonzero(row > 0)
            sup_idx[x, : len(nz)] = nz
            sup_val[x, : len(nz)] = row[nz]
        sym = self.symbols(seqs)
        k = len(sym)
        idx = np.zeros((k, 1), dtype=np.int64)
        val = np.ones((k, 1))
        for i in range(self.n):
            idx = (idx[:, :, None] * self.dim_b + sup_idx[sym[:, i]][:, None, :]).reshape(k, -1)
            val = (val[:, :, None] * sup_val[sym[:, i]][:, None, :]).reshape(k, -1)
        return idx, val

    def decode(self, seqs) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """
        一个箱的对角 PGM：Υ_m(b) = Q_m(b) / Σ_m' Q_m'(b)，Σ 的核上取 1/μ
        :param seqs: 箱内序列（按 m 排列）
        :return: (idx, val, ratio, kernel)，ratio[m, j] = Υ_m(idx[m, j])
        """
        idx, val = self.rows(seqs)
        mu = len(idx)
        total = np.bincount(idx.ravel(), weights=val.ravel(), minlength=self.dim_b ** self.n)
        kernel = total / mu <= KERNEL_TOL
        ratio = np.where(kernel[idx], 1.0 / mu, val / np.where(kernel, 1.0, total)[idx])
        return idx, val, ratio, kernel

    def success(self, seqs) -> np.ndarray:
        """Tr ρ_{xⁿ} Υ_m，按箱内顺序"""
        _, val, ratio, _ = self.decode(seqs)
        return (val * ratio).sum(axis=1)

    def column_sums(self, seqs) -> np.ndarray:
        """Σ_m Υ_m(b)，合法 POVM 时恒为 1"""
        idx, val, ratio, kernel = self.decode(seqs)
        live = (val > 0) & ~kernel[idx]
        sums = np.bincount(idx[live], weights=ratio[live], minlength=self.dim_b ** self.n)
        sums[kernel] = len(idx) * (1.0 / len(idx))
        return sums

    def upsilon_diagonals(self, seqs) -> np.ndarray:
        """稠密的 Υ_m 对角元，形状 (μ, d_Bⁿ)"""
        idx, val, ratio, kernel = self.decode(seqs)
        mu = len(idx)
        ups = np.zeros((mu, self.dim_b ** self.n))
        live = (val > 0) & ~kernel[idx]
        owner = np.broadcast_to(np.arange(mu)[:, None], idx.shape)
        ups[owner[live], idx[live]] = ratio[live]
        ups[:, kernel] = 1.0 / mu
        return ups


@dataclass(frozen=True)
class CoveringCode:
    """
    覆盖码 (S, f, {Υ⁽ˡ⁾})

    sequences 为 S 中的序列下标（升序）；table[l, m] 指向 sequences，
    即 f(m, l) = sequences[table[l, m]]。对易系综保存乘积信道 channel
    （Υ 在 basis^{⊗n} 下对角，按需展开）；否则保存 upsilon_dense。
    success[l, m] 为构造时算出的成功率。
    """

    n: int
    alphabet: int
    sequences: np.ndarray
    table: np.ndarray
    success: np.ndarray
    epsilon: float
    delta: float
    lambda_target: float
    set_mass: float
    basis: Optional[np.ndarray] = None
    channel: Optional[ProductChannel] = None
    upsilon_dense: Optional[Tuple[Povm, ...]] = None
    attempts: Tuple[Tuple[int, float], ...] = field(default=())

    @property
    def lam(self) -> int:
        return self.table.shape[0]

    @property
    def mu(self) -> int:
        return self.table.shape[1]

    @property
    def min_success(self) -> float:
        return float(self.success.min())

    @property
    def is_diagonal(self) -> bool:
        return self.channel is not None

    def f(self, m: int, l: int) -> int:
        return int(self.sequences[self.table[l, m]])

    def bin_sequences(self, l: int) -> np.ndarray:
        return self.sequences[self.table[l]]

    def symbols(self, m: int, l: int) -> List[int]:
        """f(m, l) 对应的符号序列 x₁…xₙ"""
        return _digits(self.f(m, l), self.alphabet, self.n)

    def upsilon(self, l: int) -> Povm:
        """第 l 个箱的解码 POVM（计算基下的稠密矩阵）"""
        if self.upsilon_dense is not None:
            return self.upsilon_dense[l]
        basis_n = np.ones((1, 1), dtype=complex)
        for _ in range(self.n):
            basis_n = np.kron(basis_n, self.basis)
        rows = self.channel.upsilon_diagonals(self.bin_sequences(l))
        return Povm(tuple((basis_n * row) @ basis_n.conj().T for row in rows))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mu": self.mu,
            "lambda": self.lam,
            "setSize": len(self.sequences),
            "setMass": self.set_mass,
            "minSuccess": self.min_success,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "lambdaTarget": self.lambda_target,
            "decoder": "diagonal" if self.is_diagonal else "dense",
            "attempts": [{"lambda": lam, "minSuccess": s} for lam, s in self.attempts],
            "f": [[self.f(m, l) for m in range(self.mu)] for l in range(self.lam)],
        }


class NCopyEnsemble:
    """系综的 n 拷贝数据：对易时为乘积信道，否则为稠密态"""

    def __init__(self, cq: ClassicalQuantumState, n: int, classical_guard: int, dense_guard: int):
        self.cq = cq
        self.n = n
        self.alphabet = cq.size
        self.dim_b = cq.dim_b
        self.classical_guard = classical_guard
        self.mats = [s.matrix for s in cq.states]
        self.basis = common_eigenbasis(self.mats)
        self.channel = None
        if self.basis is not None:
            check_guard(self.dim_b ** n, classical_guard, "d_Bⁿ（经典表示）")
            self.channel = ProductChannel(letter_table(cq, self.basis), n)
        else:
            check_guard(self.dim_b ** n, dense_guard, "d_Bⁿ（稠密解码）")

    @property
    def diagonal(self) -> bool:
        return self.channel is not None

    def check_bin(self, mu: int) -> None:
        """单箱稀疏表 μ·wⁿ 不超过上限"""
        check_guard(mu * self.channel.row_width, self.classical_guard, "μ·wⁿ（单箱稀疏表）")

    def dense_state(self, index: int) -> DensityMatrix:
        return DensityMatrix(
            _tensor_states(self.mats, _digits(index, self.alphabet, self.n)), check=False
        )


def _map(fn: Callable, items, workers: int) -> list:
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _select_set(probs, logp, entropy, n, delta, epsilon, total) -> np.ndarray:
    """典型集，再按概率从大到小补足到 Pr{Xⁿ∉S} ≤ ε，最后补齐到 |X|ⁿ 的因子"""
    mask = typical_mask(logp, entropy, n, delta)
    mass = math.fsum(probs[mask])
    candidates = np.flatnonzero(~mask)
    order = candidates[np.lexsort((candidates, -logp[candidates]))]
    need = 0
    if mass < 1.0 - epsilon and len(order):
        cumulative = mass + np.cumsum(probs[order])
        reached = np.flatnonzero(cumulative >= 1.0 - epsilon - BOUND_SLACK)
        need = int(reached[0]) + 1 if len(reached) else len(order)
    size = smallest_divisor_at_least(total, int(mask.sum()) + need)
    mask[order[: size - int(mask.sum())]] = True
    return np.flatnonzero(mask)


def _next_lambda(size: int, lam: int) -> int:
    """size 的、是 lam 倍数且 ≥ 2·lam 的最小因子（保证箱的细分）"""
    for candidate in range(2 * lam, size + 1, lam):
        if size % candidate == 0:
            return candidate
    return size


def build_covering(
    cq: ClassicalQuantumState,
    n: int,
    epsilon: float = 0.25,
    delta: float = 0.1,
    seed: int = 7,
    guard: int = 1 << 16,
    dense_guard: int = 256,
    classical_guard: int = 1 << 24,
    workers: int = 1,
) -> CoveringCode:
    """
    构造覆盖码
    :param cq: 系综 (p(x), ρ_x)
    :param n: 拷贝数
    :param epsilon: 集合外概率与解码失败概率的上限
    :param delta: 典型性参数
    :param seed: 随机分箱的种子
    :param guard: |X|ⁿ 上限
    :param dense_guard: 非对易系综的 d_Bⁿ 上限
    :param classical_guard: 对易系综的 d_Bⁿ 与单箱稀疏表 μ·wⁿ 上限
    :param workers: 各箱解码并行线程数
    """
    if n < 1:
        raise ValidationError(f"拷贝数 n 必须 ≥ 1，实际 {n}")
    if not 0.0 <= epsilon < 1.0:
        raise ValidationError(f"ε 必须在 [0, 1) 内，实际 {epsilon}")
    total = cq.size ** n
    check_guard(total, guard, f"|X|ⁿ (|X|={cq.size}, n={n})")
    ensemble = NCopyEnsemble(cq, n, classical_guard, dense_guard)

    h_x = shannon(cq.probs)
    i_xb = holevo_information(cq)
    probs, logp = sequence_tables(cq.probs, n)
    sequences = _select_set(probs, logp, h_x, n, delta, epsilon, total)
    size = len(sequences)
    set_mass = math.fsum(probs[sequences])
    lambda_target = 2.0 ** (n * (h_x - i_xb + delta))
    lam = smallest_divisor_at_least(size, math.ceil(2.0 ** (n * (h_x - i_xb)) - 1e-9))
    logging.info(
        f"覆盖码: n={n}, |S|={size}, 质量 {set_mass:.6f}, H(X)={h_x:.6f}, I(X;B)={i_xb:.6f}, 初始 λ={lam}"
    )

    def _decode_diagonal(row):
        return ensemble.channel.success(sequences[row])

    def _decode_dense(row):
        states = [ensemble.dense_state(int(sequences[i])) for i in row]
        povm = pretty_good_measurement(states)
        return povm, [np.real(np.trace(s.matrix @ e)) for s, e in zip(states, povm.elements)]

    perm = np.random.default_rng(seed).permutation(size)
    attempts = []
    while True:
        table = perm.reshape(lam, size // lam)
        if ensemble.diagonal:
            ensemble.check_bin(size // lam)
            success = np.stack(_map(_decode_diagonal, table, workers))
            dense = None
        else:
            decoded = _map(_decode_dense, table, workers)
            dense = tuple(d[0] for d in decoded)
            success = np.array([d[1] for d in decoded])
        min_success = float(success.min())
        attempts.append((lam, min_success))
        if min_success >= 1.0 - epsilon - BOUND_SLACK:
            break
        if lam == size:
            raise CoveringError(f"λ = |S| = {size} 时最小成功率仍为 {min_success:.6f}")
        logging.info(f"覆盖码 λ={lam} 最小成功率 {min_success:.6f} < {1 - epsilon}，细分箱")
        lam = _next_lambda(size, lam)

    logging.info(f"覆盖码完成: μ={size // lam}, λ={lam}, 最小成功率 {min_success:.6f}")
    return CoveringCode(
        n=n,
        alphabet=cq.size,
        sequences=sequences,
        table=table,
        success=success,
        epsilon=epsilon,
        delta=delta,
        lambda_target=lambda_target,
        set_mass=set_mass,
        basis=ensemble.basis,
        channel=ensemble.channel,
        upsilon_dense=dense,
        attempts=tuple(attempts),
    )


def _recomputed_channel(code: CoveringCode, cq: ClassicalQuantumState) -> ProductChannel:
    return ProductChannel(letter_table(cq, code.basis), code.n)


def success_matrix(code: CoveringCode, cq: ClassicalQuantumState) -> np.ndarray:
    """
    由系综重新计算成功率矩阵 s[l, m] = Tr ρ_{f(m,l)} Υ⁽ˡ⁾_m
    """
    if code.is_diagonal:
        channel = _recomputed_channel(code, cq)
        return np.stack([channel.success(code.bin_sequences(l)) for l in range(code.lam)])
    mats = [s.matrix for s in cq.states]
    out = np.zeros(code.table.shape)
    for l in range(code.lam):
        elements = code.upsilon(l).elements
        for m in range(code.mu):
            rho = _tensor_states(mats, code.symbols(m, l))
            out[l, m] = float(np.real(np.trace(rho @ elements[m])))
    return out


@dataclass(frozen=True)
class CoveringReport:
    """覆盖码的结构检查结果"""

    set_mass: float
    mass_ok: bool
    bijective: bool
    geometry_ok: bool
    povms_valid: bool
    min_success: float
    success_ok: bool
    lambda_target: float
    within_rate_target: bool

    @property
    def passed(self) -> bool:
        return self.mass_ok and self.bijective and self.geometry_ok and self.povms_valid and self.success_ok

    def to_dict(self) -> dict:
        return {
            "setMass": self.set_mass,
            "massOk": self.mass_ok,
            "bijective": self.bijective,
            "geometryOk": self.geometry_ok,
            "povmsValid": self.povms_valid,
            "minSuccess": self.min_success,
            "successOk": self.success_ok,
            "lambdaTarget": self.lambda_target,
            "withinRateTarget": self.within_rate_target,
            "passed": self.passed,
        }


def verify_covering(code: CoveringCode, cq: ClassicalQuantumState, n: int) -> CoveringReport:
    """
    重新计算集合质量、f 的双射性、箱几何、各 Υ⁽ˡ⁾ 的合法性与最小成功率
    λ 是否达到渐近目标只报告，不作为失败条件
    """
    probs, _ = sequence_tables(cq.probs, n)
    size = len(code.sequences)
    seq_unique = len(np.unique(code.sequences)) == size
    in_range = bool(np.all((code.sequences >= 0) & (code.sequences < cq.size ** n)))
    table_flat = np.sort(code.table.ravel())
    bijective = seq_unique and in_range and np.array_equal(table_flat, np.arange(size))
    set_mass = math.fsum(probs[np.unique(code.sequences)]) if in_range else 0.0
    geometry_ok = code.lam * code.mu == size

    povms_valid = True
    try:
        if code.is_diagonal:
            channel = _recomputed_channel(code, cq)
            for l in range(code.lam):
                sums = channel.column_sums(code.bin_sequences(l))
                povms_valid &= bool(np.max(np.abs(sums - 1.0)) <= 1e-9)
        else:
            for l in range(code.lam):
                povms_valid &= len(code.upsilon(l)) == code.mu
    except (ValidationError, IndexError):
        povms_valid = False

    min_success = float(success_matrix(code, cq).min()) if bijective else 0.0
    report = CoveringReport(
        set_mass=set_mass,
        mass_ok=1.0 - set_mass <= code.epsilon + BOUND_SLACK,
        bijective=bool(bijective),
        geometry_ok=geometry_ok,
        povms_valid=povms_valid,
        min_success=min_success,
        success_ok=min_success >= 1.0 - code.epsilon - BOUND_SLACK,
        lambda_target=code.lambda_target,
        within_rate_target=code.lam <= code.lambda_target * (1 + 1e-12),
    )
    if not report.passed:
        logging.warning(f"覆盖码检查未通过: {report.to_dict()}")
    return report
