"""
单向局部纯度蒸馏协议

- 例一：共享随机比特经退相干信道 + 受控酉，Bob 得到一个纯比特
- 六步直接编码：A₁ 浓缩、相干测量、覆盖码 + 投影压缩、退相干 ML、
  Bob 相干解码 W_l、Bob 浓缩 Bⁿ
- 资源账本：借入 catalyst、输出纯态维数、速率与逆定理余量

系综对易时（cc 或可同时对角化）六步都在概率向量上执行（经典路径）；
总维数很小时可以用稠密矩阵逐步模拟（稠密路径），给出精确的终态距离。
"""

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import scipy.linalg

from localpurity.common import (
    BOUND_SLACK,
    DecoderCompletionError,
    ValidationError,
    check_guard,
)
from localpurity.covering import CoveringCode, build_covering
from localpurity.entropy import entropy_report, holevo_information, shannon, von_neumann
from localpurity.qmat import (
    BipartiteState,
    DensityMatrix,
    Povm,
    apply_operator,
    apply_povm,
    apply_unitary,
    clamped_eigh,
    common_randomness_state,
    controlled_unitary,
    dephase_local,
    dephase_subsystems,
    partial_trace,
    partial_trace_subsystems,
    sqrtm_psd,
    tensor_power,
    trace_norm,
)
from localpurity.povm_opt import OptimizerConfig, RankOnePovm, kappa_one_way_level
from localpurity.typicality import (
    ConcentrationCode,
    build_concentration_code,
    relabel_permutation,
    sequence_tables,
)


class ProtocolPath(Enum):
    AUTO = "auto"
    CLASSICAL = "classical"
    DENSE = "dense"


@dataclass(frozen=True)
class Ledger:
    """
    纯比特账本（维数都是整数，速率由整数维数精确给出）
    :param d_c: 借入的 catalyst 维数
    :param d_ap: Alice 输出纯态维数
    :param d_bp: Bob 输出纯态维数
    """

    n: int
    d_c: int
    d_ap: int
    d_bp: int
    classical_bits: float = 0.0

    @property
    def rate(self) -> float:
        """R = (1/n)(log d_{ApBp} − log d_C)"""
        return (math.log2(self.d_ap * self.d_bp) - math.log2(self.d_c)) / self.n

    @property
    def catalyst_rate(self) -> float:
        return math.log2(self.d_c) / self.n

    @property
    def catalyst_returned(self) -> bool:
        """归还的纯比特不少于借入的"""
        return self.d_ap * self.d_bp >= self.d_c

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "dC": self.d_c,
            "dAp": self.d_ap,
            "dBp": self.d_bp,
            "rate": self.rate,
            "catalystRate": self.catalyst_rate,
            "classicalBitsSent": self.classical_bits,
            "catalystReturned": self.catalyst_returned,
        }


@dataclass(frozen=True)
class StepRecord:
    name: str
    distance: float
    bound: Optional[float] = None
    details: Dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"name": self.name, "distance": self.distance}
        if self.bound is not None:
            out["bound"] = self.bound
        out.update(self.details)
        return out


@dataclass(frozen=True)
class ProtocolTrace:
    """
    每一步的距离记录与终态距离
    p_ml 为 (λ, μ) 上的分布 p(m, l)（未归一化到 S 之外的质量）
    """

    path: str
    steps: Tuple[StepRecord, ...]
    final_distance: float
    final_exact: bool
    epsilon: float
    mutual_information: float
    p_ml: Optional[np.ndarray] = None
    d_x_prime: int = 1
    target_rate: Optional[float] = None
    rate_slack: Optional[float] = None

    @property
    def envelope(self) -> float:
        """7ε + (2 + √8)√ε"""
        return 7 * self.epsilon + (2 + math.sqrt(8)) * math.sqrt(self.epsilon)

    @property
    def envelope_informative(self) -> bool:
        """包络不小于 2 时对迹距离没有约束"""
        return self.envelope < 2.0

    @property
    def within_envelope(self) -> bool:
        return self.final_distance <= self.envelope + BOUND_SLACK

    def step(self, name: str) -> StepRecord:
        for s in self.steps:
            if s.name == name:
                return s
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "path": self.path,
            "steps": [s.to_dict() for s in self.steps],
            "finalDistance": self.final_distance,
            "finalExact": self.final_exact,
            "envelope": self.envelope,
            "envelopeInformative": self.envelope_informative,
            "withinEnvelope": self.within_envelope,
            "mutualInformation": self.mutual_information,
            "dXPrime": self.d_x_prime,
            "targetRate": self.target_rate,
            "rateSlack": self.rate_slack,
        }


# ========== 例一 ==========


def run_example1() -> Tuple[Ledger, ProtocolTrace]:
    """
    Φ̄ = ½(|00⟩⟨00| + |11⟩⟨11|)：Alice 把 A 送过退相干信道（不动点），
    Bob 执行 U = |0⟩⟨0| ⊗ 1 + |1⟩⟨1| ⊗ V，V|1⟩ = |0⟩，B 变为 |0⟩
    """
    phi_bar = common_randomness_state()
    dephased = dephase_local(phi_bar, "A")
    dephase_distance = trace_norm(dephased.matrix - phi_bar.matrix)

    flip = np.array([[0, 1], [1, 0]], dtype=complex)
    u = controlled_unitary([np.eye(2, dtype=complex), flip])
    out = apply_unitary(dephased, u)
    sigma_b = partial_trace(out, "B")
    target = np.diag([1.0, 0.0]).astype(complex)
    final = trace_norm(sigma_b.matrix - target)

    report = entropy_report(dephased)
    ledger = Ledger(n=1, d_c=1, d_ap=1, d_bp=2, classical_bits=1.0)
    trace = ProtocolTrace(
        path="example1",
        steps=(
            StepRecord("dephase", dephase_distance),
            StepRecord("controlled-unitary", final),
        ),
        final_distance=final,
        final_exact=True,
        epsilon=0.0,
        mutual_information=report.i_ab,
    )
    logging.info(f"例一: 速率 {ledger.rate}, B 到 |0⟩ 的距离 {final}")
    return ledger, trace


# ========== 相干测量与解码 ==========


def _rank_one_vectors(povm: Union[RankOnePovm, Povm]) -> np.ndarray:
    if isinstance(povm, RankOnePovm):
        return np.asarray(povm.vectors)
    rows = []
    for i, e in enumerate(povm.elements):
        w, v = clamped_eigh(e)
        if np.count_nonzero(w > 1e-10) > 1:
            raise ValidationError(f"POVM 元素 {i} 不是秩一的")
        rows.append(np.sqrt(max(w[-1], 0.0)) * v[:, -1])
    return np.stack(rows)


def _unitary_to_zero(u: np.ndarray) -> np.ndarray:
    """把单位向量 u 映到 |0⟩ 的酉矩阵"""
    rest = scipy.linalg.null_space(u.conj()[None, :])
    return np.column_stack([u, rest]).conj().T


@dataclass(frozen=True)
class CoherentMeasurement:
    """
    相干测量后的态 Σ_x |x⟩ ⊗ V_x √Λ_x |ψ⟩，amplitudes 形状 (N, dA, dR)
    """

    amplitudes: np.ndarray
    probs: np.ndarray
    a2_residual: float
    statistics_error: float


def coherent_measurement(
    povm: Union[RankOnePovm, Povm], psi: np.ndarray, dim_a: int
) -> CoherentMeasurement:
    """
    相干执行秩一 POVM，再用受控 V_x 把 A₂ 转回 |0⟩
    :param povm: A 上的秩一 POVM
    :param psi: A ⊗ R 上的纯化向量（A 为高位）
    :param dim_a: A 的维数
    """
    vectors = _rank_one_vectors(povm)
    if vectors.shape[1] != dim_a:
        raise ValidationError(f"POVM 维数 {vectors.shape[1]} 与 dA={dim_a} 不一致")
    psi = np.asarray(psi, dtype=complex).ravel()
    if psi.shape[0] % dim_a != 0:
        raise ValidationError(f"向量长度 {psi.shape[0]} 不能被 dA={dim_a} 整除")
    dim_r = psi.shape[0] // dim_a
    amp = psi.reshape(dim_a, dim_r)

    out = np.zeros((len(vectors), dim_a, dim_r), dtype=complex)
    for x, m in enumerate(vectors):
        norm = np.linalg.norm(m)
        if norm == 0:
            continue
        unit = m / norm
        # Lüders 分支 √Λ_x|ψ⟩ = |m̂⟩⟨m|ψ⟩，再作用 V_x
        branch = np.outer(unit, m.conj() @ amp)
        out[x] = _unitary_to_zero(unit) @ branch

    probs = np.real(np.einsum("xar,xar->x", out, out.conj()))
    residual = float(np.sum(np.abs(out[:, 1:, :]) ** 2))
    # 与直接测量 ρ^A 的统计 p(x) = m_x† ρ^A m_x 比较
    rho_a = amp @ amp.conj().T
    expected = np.real(np.einsum("xa,ab,xb->x", vectors.conj(), rho_a, vectors))
    return CoherentMeasurement(out, probs, residual, float(np.max(np.abs(probs - expected))))


def purify(rho: DensityMatrix) -> np.ndarray:
    """ρ 的纯化 Σ √λ_i |e_i⟩|i⟩（参考系维数等于 d）"""
    w, v = clamped_eigh(rho.matrix)
    return (v * np.sqrt(np.clip(w, 0.0, None))).ravel()


def bob_decoder(code: CoveringCode, l: int) -> np.ndarray:
    """
    第 l 个箱的相干解码酉 W_l = Σ |m'⟩⟨m| ⊗ Y_{m'm}（M 为高位）
    第一块行 Y_{0m} = √Υ⁽ˡ⁾_m，其余行取其正交补
    """
    elements = code.upsilon(l).elements
    first = np.hstack([sqrtm_psd(e) for e in elements])
    d_b = first.shape[0]
    gram = first @ first.conj().T
    if np.max(np.abs(gram - np.eye(d_b))) > 1e-9:
        raise DecoderCompletionError(f"箱 {l} 的第一块行不是正交行")
    rest = scipy.linalg.null_space(first).conj().T
    if rest.shape[0] != first.shape[1] - d_b:
        raise DecoderCompletionError(f"箱 {l} 的补全秩亏: {rest.shape[0]} 行")
    w = np.vstack([first, rest])
    if np.max(np.abs(w @ w.conj().T - np.eye(w.shape[0]))) > 1e-9:
        raise DecoderCompletionError(f"箱 {l} 的 W_l 不是酉矩阵")
    return w


# ========== 六步协议 ==========


@dataclass
class _Plan:
    """两条路径共享的编码数据"""

    state: BipartiteState
    ensemble_state: BipartiteState
    vectors: np.ndarray
    kept: Tuple[int, ...]
    cq: object
    code: CoveringCode
    b_code: ConcentrationCode
    a1_code: Optional[ConcentrationCode]
    a2_dim: int
    n: int
    perm_x: np.ndarray
    d_x_prime: int
    coherent: CoherentMeasurement
    a1_dim: int = 1
    a1_entropy: float = 0.0

    @property
    def alphabet(self) -> int:
        return len(self.kept)

    def target_rate(self, delta: float) -> float:
        """
        log dA + log dB − H(A₁) − H(X) − H(B) + I(X;B) − 3δ
        H(X) 与 I(X;B) 取测量后的系综，A₁ 不拆分时 H(A₁) = 0
        """
        s = self.ensemble_state
        return (
            math.log2(self.a1_dim * s.dim_a)
            + math.log2(s.dim_b)
            - self.a1_entropy
            - shannon(self.cq.probs)
            - von_neumann(partial_trace(s, "B"))
            + holevo_information(self.cq)
            - 3 * delta
        )

    def ledger(self) -> Ledger:
        n = self.n
        d_x = self.alphabet ** n
        mu, lam = self.code.mu, self.code.lam
        d_a1p = self.a1_code.d2 if self.a1_code is not None else 1
        return Ledger(
            n=n,
            d_c=d_x,
            d_ap=self.a2_dim ** n * self.d_x_prime * d_a1p,
            d_bp=mu * self.b_code.d2,
            classical_bits=math.log2(mu * lam) / n,
        )


def _split_a1(s: BipartiteState, a1_dim: Optional[int]) -> Tuple[Optional[DensityMatrix], BipartiteState]:
    if a1_dim is None or a1_dim == 1:
        return None, s
    if s.dim_a % a1_dim != 0:
        raise ValidationError(f"dA={s.dim_a} 不能被 A₁ 维数 {a1_dim} 整除")
    a2 = s.dim_a // a1_dim
    dims = [a1_dim, a2, s.dim_b]
    rho_a1 = DensityMatrix(partial_trace_subsystems(s.matrix, dims, [0]), check=False)
    rho_a2b = DensityMatrix(partial_trace_subsystems(s.matrix, dims, [1, 2]), check=False)
    return rho_a1, BipartiteState(a2, s.dim_b, rho_a2b)


def _plan(
    s, povm, n, epsilon, delta, seed, a1_dim, guards
) -> _Plan:
    rho_a1, ensemble_state = _split_a1(s, a1_dim)
    # 平行的秩一结果合并为一个，零权重结果丢弃
    vectors = RankOnePovm(_rank_one_vectors(povm)).merged().vectors
    if vectors.shape[1] != ensemble_state.dim_a:
        raise ValidationError(
            f"POVM 维数 {vectors.shape[1]} 与测量子系统维数 {ensemble_state.dim_a} 不一致"
        )
    cq = apply_povm(Povm(tuple(np.outer(m, m.conj()) for m in vectors)), ensemble_state)
    logging.info(f"步骤二: 保留 {cq.size} 个测量结果 {list(cq.labels)}")
    coherent = coherent_measurement(
        RankOnePovm(vectors), purify(partial_trace(ensemble_state, "A")), ensemble_state.dim_a
    )

    code = build_covering(
        cq,
        n,
        epsilon=epsilon,
        delta=delta,
        seed=seed,
        guard=guards["covering_guard"],
        dense_guard=guards["covering_dense_guard"],
        classical_guard=guards["classical_guard"],
    )
    d_x = cq.size ** n
    size = code.mu * code.lam
    d_x_prime = d_x // size
    chosen = code.sequences[code.table].ravel()
    mask = np.zeros(d_x, dtype=bool)
    mask[chosen] = True
    perm_x = relabel_permutation(mask, d_x_prime, chosen)

    b_code = build_concentration_code(
        partial_trace(ensemble_state, "B"), n, delta, guards["typical_guard"]
    )
    a1_code = (
        build_concentration_code(rho_a1, n, delta, guards["typical_guard"])
        if rho_a1 is not None
        else None
    )
    return _Plan(
        state=s,
        ensemble_state=ensemble_state,
        vectors=vectors[list(cq.labels)],
        kept=cq.labels,
        cq=cq,
        code=code,
        b_code=b_code,
        a1_code=a1_code,
        a2_dim=ensemble_state.dim_a,
        n=n,
        perm_x=perm_x,
        d_x_prime=d_x_prime,
        coherent=coherent,
        a1_dim=a1_dim or 1,
        a1_entropy=von_neumann(rho_a1) if rho_a1 is not None else 0.0,
    )


def _coherent_step(plan: _Plan) -> StepRecord:
    return StepRecord(
        "coherent-measurement",
        plan.coherent.a2_residual,
        details={"statisticsError": plan.coherent.statistics_error, "outcomes": list(plan.kept)},
    )


def _ml_mutual_information(plan: _Plan, probs_x: np.ndarray) -> float:
    """
    I(ML;Bⁿ) = H(Bⁿ) − Σ_k p_k H(Bⁿ|ML=k)，ML = perm_x // d_X'
    只含一个序列的箱条件熵是各字母熵之和，其余按稀疏行混合
    """
    channel = plan.code.channel
    q = channel.q
    h_rows = np.array([shannon(row) for row in q])
    h_b = plan.n * shannon(plan.cq.probs @ q)

    buckets = plan.perm_x // plan.d_x_prime
    order = np.argsort(buckets, kind="stable")
    ordered = buckets[order]
    starts = np.flatnonzero(np.r_[True, ordered[1:] != ordered[:-1]])
    counts = np.diff(np.r_[starts, len(order)])

    single = order[starts[counts == 1]]
    conditional = math.fsum(probs_x[single] * h_rows[channel.symbols(single)].sum(axis=1))
    for start, count in zip(starts[counts > 1], counts[counts > 1]):
        members = order[start : start + count]
        weights = probs_x[members]
        p_k = math.fsum(weights)
        if p_k <= 0:
            continue
        idx, val = channel.rows(members)
        _, inverse = np.unique(idx.ravel(), return_inverse=True)
        mix = np.bincount(inverse, weights=(val * (weights / p_k)[:, None]).ravel())
        conditional += p_k * shannon(mix)
    return h_b - conditional


def _run_classical(plan: _Plan) -> ProtocolTrace:
    n, code = plan.n, plan.code
    probs_x, _ = sequence_tables(plan.cq.probs, n)
    steps: List[StepRecord] = [_coherent_step(plan)]

    f_a1 = plan.a1_code.failure if plan.a1_code is not None else 0.0
    if plan.a1_code is not None:
        steps.insert(0, StepRecord("concentrate-A1", 2 * f_a1, details=plan.a1_code.to_dict()))

    # 步骤三：投影压缩，距离 = S 之外的质量
    p_ml = probs_x[code.sequences[code.table]]
    set_mass = math.fsum(p_ml.ravel())
    steps.append(
        StepRecord("lemma1-compaction", max(0.0, 1.0 - set_mass), details={"dXPrime": plan.d_x_prime})
    )
    # 步骤四：经典表示下退相干不改变态
    steps.append(StepRecord("dephase-ML", 0.0))

    # 步骤五：Bob 解码，M 寄存器的分布与 δ_{m,0} 的迹距离为 2·(1 − 平均成功率)
    hit = math.fsum((p_ml * code.success).ravel())
    f_mx = max(0.0, 1.0 - hit)
    in_set_failure = max(0.0, 1.0 - hit / set_mass) if set_mass > 0 else 1.0
    steps.append(
        StepRecord(
            "bob-decode",
            2 * in_set_failure,
            bound=2 * math.sqrt(in_set_failure),
            details={
                "metric": "decodedDistribution",
                "minSuccess": code.min_success,
                "averageSuccess": 1.0 - in_set_failure,
                "gentleBound": math.sqrt(8 * f_mx),
            },
        )
    )

    # 步骤六：Bob 浓缩 Bⁿ
    f_b = plan.b_code.failure
    steps.append(StepRecord("concentrate-B", 2 * f_b, details=plan.b_code.to_dict()))

    final = 2 * math.sqrt(f_a1 + f_mx + f_b) + math.sqrt(8 * f_mx)
    return ProtocolTrace(
        path=ProtocolPath.CLASSICAL.value,
        steps=tuple(steps),
        final_distance=min(2.0, final),
        final_exact=False,
        epsilon=code.epsilon,
        mutual_information=_ml_mutual_information(plan, probs_x),
        p_ml=p_ml,
        d_x_prime=plan.d_x_prime,
    )


def _kron_power(m: np.ndarray, n: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for _ in range(n):
        out = np.kron(out, m)
    return out


def _permutation_matrix(perm: np.ndarray) -> np.ndarray:
    p = np.zeros((len(perm), len(perm)), dtype=complex)
    p[perm, np.arange(len(perm))] = 1.0
    return p


def _run_dense(plan: _Plan, dense_guard: int) -> ProtocolTrace:
    if plan.a1_code is not None:
        raise ValidationError("稠密路径不支持 A₁ 拆分")
    s, n, code = plan.state, plan.n, plan.code
    d_a, d_b = s.dim_a ** n, s.dim_b ** n
    d_x = plan.alphabet ** n
    check_guard(max(d_a, d_x) * d_b, dense_guard, "稠密协议总维数")
    lam, mu, dxp = code.lam, code.mu, plan.d_x_prime
    steps: List[StepRecord] = [_coherent_step(plan)]

    r = tensor_power(s, n).matrix.reshape(d_a, d_b, d_a, d_b)
    vn = _kron_power(plan.vectors.conj(), n)
    rho = np.einsum("xa,abec,ye->xbyc", vn, r, vn.conj()).reshape(d_x * d_b, d_x * d_b)

    # 步骤三
    rho = apply_operator(rho, [d_x, d_b], _permutation_matrix(plan.perm_x), [0])
    dims = [lam * mu, dxp, d_b]
    projector = np.zeros(lam * mu * dxp)
    projector[::dxp] = 1.0
    proj = np.kron(np.diag(projector), np.eye(d_b))
    steps.append(
        StepRecord("lemma1-compaction", trace_norm(rho - proj @ rho @ proj), details={"dXPrime": dxp})
    )

    # 步骤四
    dephased = dephase_subsystems(rho, dims, [0])
    steps.append(StepRecord("dephase-ML", trace_norm(dephased - rho)))
    rho = dephased
    ml_b = partial_trace_subsystems(rho, dims, [0, 2])
    mutual = (
        von_neumann(partial_trace_subsystems(ml_b, [lam * mu, d_b], [0]))
        + von_neumann(partial_trace_subsystems(ml_b, [lam * mu, d_b], [1]))
        - von_neumann(ml_b)
    )

    # 步骤五：重排为 X' L M B，Bob 执行 Σ_l |l⟩⟨l| ⊗ W_l
    t = rho.reshape([lam, mu, dxp, d_b] * 2).transpose(2, 0, 1, 3, 6, 4, 5, 7)
    rho = t.reshape(rho.shape)
    w = controlled_unitary([bob_decoder(code, l) for l in range(lam)])
    rho = apply_operator(rho, [dxp, lam * mu * d_b], w, [1])
    dims = [dxp, lam, mu, d_b]
    sigma_m = partial_trace_subsystems(rho, dims, [2])
    overlap = float(np.real(sigma_m[0, 0]))
    target_m = np.zeros((mu, mu), dtype=complex)
    target_m[0, 0] = 1.0
    steps.append(
        StepRecord(
            "bob-decode",
            trace_norm(sigma_m - target_m),
            bound=2 * math.sqrt(max(0.0, 1.0 - overlap)),
            details={"minSuccess": code.min_success, "averageSuccess": overlap},
        )
    )

    # 步骤六：U_B = P_B·(Q_B†)^{⊗n}
    _, q_b = clamped_eigh(partial_trace(plan.ensemble_state, "B").matrix)
    u_b = _permutation_matrix(plan.b_code.permutation) @ _kron_power(q_b.conj().T, n)
    rho = apply_operator(rho, dims, u_b, [3])
    d1_b, d2_b = plan.b_code.d1, plan.b_code.d2
    dims = [dxp, lam, mu, d1_b, d2_b]
    sigma_bp = partial_trace_subsystems(rho, dims, [4])
    target_bp = np.zeros((d2_b, d2_b), dtype=complex)
    target_bp[0, 0] = 1.0
    steps.append(
        StepRecord("concentrate-B", trace_norm(sigma_bp - target_bp), details=plan.b_code.to_dict())
    )

    sigma = partial_trace_subsystems(rho, dims, [0, 2, 4])
    target = np.zeros(sigma.shape, dtype=complex)
    target[0, 0] = 1.0
    final = trace_norm(sigma - target)
    flat = code.sequences[code.table]
    probs_x, _ = sequence_tables(plan.cq.probs, n)
    return ProtocolTrace(
        path=ProtocolPath.DENSE.value,
        steps=tuple(steps),
        final_distance=final,
        final_exact=True,
        epsilon=code.epsilon,
        mutual_information=mutual,
        p_ml=probs_x[flat],
        d_x_prime=dxp,
    )


DEFAULT_GUARDS = {
    "dense_guard": 4096,
    "typical_guard": 1 << 20,
    "covering_guard": 1 << 16,
    "covering_dense_guard": 256,
    "classical_guard": 1 << 24,
}


def run_distillation(
    s: BipartiteState,
    povm: Union[RankOnePovm, Povm],
    n: int,
    epsilon: float = 0.25,
    delta: float = 0.1,
    seed: int = 7,
    a1_dim: Optional[int] = None,
    path: Union[ProtocolPath, str] = ProtocolPath.AUTO,
    guards: Optional[Dict[str, int]] = None,
) -> Tuple[Ledger, ProtocolTrace]:
    """
    执行六步蒸馏协议
    :param s: 二分态 ρ^{AB}
    :param povm: A（或 A₂）上的秩一 POVM
    :param n: 拷贝数
    :param epsilon: 覆盖码的 ε
    :param delta: 典型性参数
    :param seed: 覆盖码分箱种子
    :param a1_dim: 给定时 A = A₁ ⊗ A₂，POVM 作用在 A₂ 上，A₁ⁿ 单独浓缩
    :param path: auto / classical / dense
    :param guards: 规模上限，缺省见 DEFAULT_GUARDS
    :return: (Ledger, ProtocolTrace)
    """
    if n < 1:
        raise ValidationError(f"拷贝数 n 必须 ≥ 1，实际 {n}")
    guards = {**DEFAULT_GUARDS, **(guards or {})}
    path = ProtocolPath(path)
    plan = _plan(s, povm, n, epsilon, delta, seed, a1_dim, guards)
    logging.info(
        f"蒸馏协议: n={n}, |X|={plan.alphabet}, μ={plan.code.mu}, λ={plan.code.lam}, "
        f"d_B 浓缩 d2={plan.b_code.d2}"
    )

    if path is ProtocolPath.AUTO:
        path = ProtocolPath.CLASSICAL if plan.code.is_diagonal else ProtocolPath.DENSE
    if path is ProtocolPath.CLASSICAL:
        if not plan.code.is_diagonal:
            raise ValidationError("经典路径要求各 ρ_x 两两对易")
        trace = _run_classical(plan)
    else:
        trace = _run_dense(plan, guards["dense_guard"])

    ledger = plan.ledger()
    target = plan.target_rate(delta)
    trace = dataclasses.replace(trace, target_rate=target, rate_slack=ledger.rate - target)
    if trace.rate_slack < -BOUND_SLACK:
        logging.info(f"速率 {ledger.rate:.6f} 低于目标 {target:.6f}")
    if not ledger.catalyst_returned:
        logging.warning(f"catalyst 未完全归还: d_ap·d_bp={ledger.d_ap * ledger.d_bp} < d_c={ledger.d_c}")
    logging.info(
        f"蒸馏完成: 速率 {ledger.rate:.6f}, 经典通信 {ledger.classical_bits:.6f} 比特/拷贝, "
        f"终态距离 {trace.final_distance:.3e}"
    )
    return ledger, trace


def bootstrap(ledger: Ledger, blocks: int) -> Ledger:
    """
    把前一块输出的纯比特作为下一块的 catalyst，重复 blocks 块
    速率不变，catalyst 速率降为 1/blocks
    """
    if blocks < 1:
        raise ValidationError(f"blocks 必须 ≥ 1，实际 {blocks}")
    reused = ledger.d_c ** (blocks - 1)
    alice = ledger.d_ap ** blocks
    if alice % reused != 0:
        raise ValidationError("Alice 的输出维数无法整除复用的 catalyst 维数")
    return Ledger(
        n=ledger.n * blocks,
        d_c=ledger.d_c,
        d_ap=alice // reused,
        d_bp=ledger.d_bp ** blocks,
        classical_bits=ledger.classical_bits,
    )


def rate_formula(s: BipartiteState, cfg: Optional[OptimizerConfig] = None) -> float:
    """单字母速率 log dA + log dB − H(A) − H(B) + D⁽¹⁾(ρ)"""
    return kappa_one_way_level(s, 1, cfg).value


def converse_margin(ledger: Ledger, s: BipartiteState, trace: ProtocolTrace) -> float:
    """
    逆定理上界减去实际速率
    上界 log dA + log dB − H(A) − H(B) + (1/n)I(X;Bⁿ) + δ，δ = 1/(e·n) + ε·log₂(dA·dB)，
    ε 取本次运行的终态距离
    """
    report = entropy_report(s)
    n = ledger.n
    slack = 1.0 / (math.e * n) + trace.final_distance * math.log2(s.dim_a * s.dim_b)
    bound = (
        math.log2(s.dim_a)
        + math.log2(s.dim_b)
        - report.h_a
        - report.h_b
        + trace.mutual_information / n
        + slack
    )
    margin = bound - ledger.rate
    if margin < -BOUND_SLACK:
        logging.warning(f"账本违反逆定理: 速率 {ledger.rate:.6f} > 上界 {bound:.6f}")
    return margin
