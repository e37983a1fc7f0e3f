"""
秩一 POVM 优化

D⁽¹⁾(ρ^{AB}) = max_Λ I(X;B)，Λ 取遍 A 上的秩一 POVM。

参数化：N 个向量 m_x 按行堆成 N×d 矩阵 W，约束 W†W = I 即 Σ m_x m_x† = I，
每个元素 Λ_x = m_x m_x† 天然秩一。在等距流形上做多起点梯度上升，
用极分解回缩，Armijo 回溯线搜索。报告值都是真实最大值的下界。
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg
from scipy.special import entr

from localpurity.common import POVM_TOL, ValidationError, check_guard
from localpurity.entropy import LN2, von_neumann
from localpurity.qmat import (
    BipartiteState,
    DensityMatrix,
    Povm,
    apply_povm,
    maximally_mixed,
    partial_trace,
    tensor_bipartite,
    tensor_power,
)

# 权重低于该值的结果不参与梯度
PRUNE_WEIGHT = 1e-12
# log 前的特征值下限
LOG_FLOOR = 1e-15
# 1 − |⟨m̂_i, m̂_j⟩|² 不超过该值的两个结果视为平行
MERGE_TOL = 1e-8


class OptimizerStatus(Enum):
    CONVERGED = "converged"
    MAX_ITERS = "maxIters"


class GradientMode(Enum):
    ANALYTIC = "analytic"
    FINITE_DIFFERENCE = "finite-difference"


@dataclass(frozen=True)
class RankOnePovm:
    """
    秩一 POVM，vectors 的第 x 行为 m_x，Λ_x = m_x m_x†
    """

    vectors: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.vectors, dtype=complex)
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
            raise ValidationError(f"向量矩阵形状不合法: {w.shape}")
        deviation = np.max(np.abs(w.conj().T @ w - np.eye(w.shape[1])))
        if deviation > POVM_TOL:
            raise ValidationError(f"Σ m_x m_x† 偏离单位阵 {deviation:.3e}")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "vectors", w)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def outcomes(self) -> int:
        return self.vectors.shape[0]

    @property
    def elements(self) -> Tuple[np.ndarray, ...]:
        return tuple(np.outer(m, m.conj()) for m in self.vectors)

    def to_povm(self) -> Povm:
        return Povm(self.elements)

    @classmethod
    def from_basis(cls, basis: np.ndarray) -> "RankOnePovm":
        """正交基（列向量）对应的投影测量"""
        return cls(np.asarray(basis, dtype=complex).T)

    @classmethod
    def computational(cls, d: int) -> "RankOnePovm":
        return cls(np.eye(d, dtype=complex))

    def lifted(self, outcomes: int) -> "RankOnePovm":
        """
        循环复制行向量扩展到 outcomes 个结果，每份按 1/√(复制次数) 缩放
        复制同一结果不改变 I(X;B)
        """
        k = self.outcomes
        if outcomes <= k:
            return self
        src = np.arange(outcomes) % k
        counts = np.bincount(src, minlength=k)
        return RankOnePovm(self.vectors[src] / np.sqrt(counts[src])[:, None])

    def merged(self, tol: float = MERGE_TOL) -> "RankOnePovm":
        """
        平行的 m_x 合并为 √(Σ‖m_x‖²)·m̂，权重不超过 PRUNE_WEIGHT 的结果丢弃
        合并后 I(X;B) 不变，H(X) 不增
        """
        w = self.vectors
        weights = np.real(np.einsum("xa,xa->x", w, w.conj()))
        groups: List[List[int]] = []
        units: List[np.ndarray] = []
        for x in np.flatnonzero(weights > PRUNE_WEIGHT):
            unit = w[x] / math.sqrt(weights[x])
            for group, u in zip(groups, units):
                if 1.0 - abs(np.vdot(u, unit)) ** 2 <= tol:
                    group.append(x)
                    break
            else:
                groups.append([x])
                units.append(unit)
        if len(groups) == self.outcomes:
            return self
        rows = np.stack([math.sqrt(weights[g].sum()) * u for g, u in zip(groups, units)])
        return RankOnePovm(scipy.linalg.polar(rows)[0])

    def to_dict(self) -> dict:
        return {
            "vectors": [[[float(z.real), float(z.imag)] for z in row] for row in self.vectors]
        }


@dataclass(frozen=True)
class OptimizerConfig:
    """
    优化器配置
    outcomes 缺省为 d²；candidates 为调用方提供的热启动 POVM
    """

    outcomes: Optional[int] = None
    restarts: int = 32
    max_iters: int = 500
    grad_tol: float = 1e-7
    seed: int = 7
    gradient: GradientMode = GradientMode.ANALYTIC
    workers: int = 1
    candidates: Tuple[RankOnePovm, ...] = ()

    def __post_init__(self):
        if self.restarts < 1:
            raise ValidationError(f"restarts 必须 ≥ 1，实际 {self.restarts}")
        if self.max_iters < 0:
            raise ValidationError(f"max_iters 必须非负，实际 {self.max_iters}")
        object.__setattr__(self, "gradient", GradientMode(self.gradient))

    def outcomes_for(self, d: int) -> int:
        n = self.outcomes if self.outcomes is not None else d * d
        if n < d:
            raise ValidationError(f"结果数 N={n} 必须 ≥ d={d}")
        return n


@dataclass(frozen=True)
class DeficitResult:
    """D⁽¹⁾ 的下界、取得该值的 POVM 与各起点的最终值"""

    value: float
    argmax: RankOnePovm
    trace: Tuple[float, ...]
    status: OptimizerStatus
    ceiling: float
    best_start: int = 0
    iterations: int = 0

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "ceiling": self.ceiling,
            "status": self.status.value,
            "bestStart": self.best_start,
            "iterations": self.iterations,
            "trace": list(self.trace),
        }


@dataclass
class _StartOutcome:
    vectors: np.ndarray
    value: float
    status: OptimizerStatus
    iterations: int


def deficit_ceiling(s: BipartiteState) -> float:
    """数据处理上界 min(H(A), H(B), I(A;B))"""
    h_a = von_neumann(partial_trace(s, "A"))
    h_b = von_neumann(partial_trace(s, "B"))
    i_ab = h_a + h_b - von_neumann(s.rho)
    return max(0.0, min(h_a, h_b, i_ab))


def objective(p: RankOnePovm, s: BipartiteState) -> float:
    """
    I(X;B)，X 为在 A 上执行 p 的结果
    对结果重排严格不变
    """
    if p.dim != s.dim_a:
        raise ValidationError(f"POVM 维数 {p.dim} 与子系统 A 维数 {s.dim_a} 不一致")
    cq = apply_povm(p.to_povm(), s)
    h_b = von_neumann(partial_trace(s, "B"))
    return h_b - math.fsum(px * von_neumann(rx) for px, rx in zip(cq.probs, cq.states))


class IsometryAscent:
    """
    单个态上的等距流形梯度上升

    内部目标 I = H(ρ_B) + H(p) − Σ_x S̃(B_x)，B_x = Tr_A((Λ_x ⊗ 1)ρ) 为未归一化块，
    S̃(B) = −Tr B log B。欧氏梯度为 2 Q_x m_x，Q_x = Tr_B(ρ (1 ⊗ log ρ_x))。
    """

    ARMIJO = 1e-4
    MAX_STEP = 10.0
    MAX_HALVINGS = 40
    FD_STEP = 1e-6

    def __init__(self, s: BipartiteState, cfg: OptimizerConfig):
        self.state = s
        self.cfg = cfg
        self.r = s.tensor_view()
        self.h_b = von_neumann(partial_trace(s, "B"))

    def blocks(self, w: np.ndarray) -> np.ndarray:
        """B_x，w 可带批维度 (..., N, d)"""
        return np.einsum("...xa,...xe,ebac->...xbc", w, w.conj(), self.r)

    def value(self, w: np.ndarray) -> np.ndarray:
        """内部目标（比特），支持批量"""
        b = self.blocks(w)
        p = np.real(np.einsum("...xbb->...x", b))
        eig = np.linalg.eigvalsh(b)
        gain = entr(np.clip(p, 0.0, None)).sum(axis=-1)
        loss = entr(np.clip(eig, 0.0, None)).sum(axis=(-1, -2))
        return self.h_b + (gain - loss) / LN2

    def euclidean_gradient(self, w: np.ndarray) -> np.ndarray:
        if self.cfg.gradient is GradientMode.FINITE_DIFFERENCE:
            return self.fd_gradient(w)
        return self.analytic_gradient(w)

    def analytic_gradient(self, w: np.ndarray) -> np.ndarray:
        b = self.blocks(w)
        p = np.real(np.einsum("xbb->x", b))
        keep = p >= PRUNE_WEIGHT
        rho_x = b / np.where(keep, p, 1.0)[:, None, None]
        ew, ev = np.linalg.eigh((rho_x + np.conj(np.swapaxes(rho_x, -1, -2))) / 2)
        logs = np.einsum("xik,xk,xjk->xij", ev, np.log(np.maximum(ew, LOG_FLOOR)), ev.conj())
        q = np.einsum("ebac,xcb->xea", self.r, logs)
        q[~keep] = 0.0
        return 2.0 * np.einsum("xea,xa->xe", q, w) / LN2

    def fd_gradient(self, w: np.ndarray) -> np.ndarray:
        """中心差分梯度（实部与虚部分别扰动）"""
        h = self.FD_STEP
        grad = np.zeros_like(w)
        for idx in np.ndindex(*w.shape):
            for unit in (1.0, 1j):
                e = np.zeros_like(w)
                e[idx] = unit * h
                diff = (self.value(w + e) - self.value(w - e)) / (2 * h)
                grad[idx] += unit * diff
        return grad

    @staticmethod
    def retract(w: np.ndarray) -> np.ndarray:
        return scipy.linalg.polar(w)[0]

    @staticmethod
    def project(w: np.ndarray, g: np.ndarray) -> np.ndarray:
        """投影到 Stiefel 流形切空间：ξ = G − W·herm(W†G)"""
        wg = w.conj().T @ g
        return g - w @ ((wg + wg.conj().T) / 2)

    def ascend(self, w0: np.ndarray) -> _StartOutcome:
        w = self.retract(w0)
        f = float(self.value(w))
        step = 1.0
        for it in range(self.cfg.max_iters):
            xi = self.project(w, self.euclidean_gradient(w))
            norm_sq = float(np.sum(np.abs(xi) ** 2))
            if math.sqrt(norm_sq) < self.cfg.grad_tol:
                return _StartOutcome(w, f, OptimizerStatus.CONVERGED, it)
            t = min(2.0 * step, self.MAX_STEP)
            for _ in range(self.MAX_HALVINGS):
                w_try = self.retract(w + t * xi)
                f_try = float(self.value(w_try))
                if f_try >= f + self.ARMIJO * t * norm_sq:
                    break
                t /= 2.0
            else:
                # 线搜索无法再提升，视为数值收敛
                return _StartOutcome(w, f, OptimizerStatus.CONVERGED, it)
            w, f, step = w_try, f_try, t
        return _StartOutcome(w, f, OptimizerStatus.MAX_ITERS, self.cfg.max_iters)


def _warm_starts(s: BipartiteState, cfg: OptimizerConfig, outcomes: int) -> List[np.ndarray]:
    d = s.dim_a
    _, eigvecs = scipy.linalg.eigh(partial_trace(s, "A").matrix)
    starts = [RankOnePovm.computational(d), RankOnePovm.from_basis(eigvecs)]
    for c in cfg.candidates:
        if c.dim != d:
            raise ValidationError(f"候选 POVM 维数 {c.dim} 与子系统 A 维数 {d} 不一致")
        starts.append(c)
    return [p.lifted(outcomes).vectors for p in starts]


def _random_starts(cfg: OptimizerConfig, outcomes: int, d: int) -> List[np.ndarray]:
    starts = []
    for child in np.random.SeedSequence(cfg.seed).spawn(cfg.restarts):
        rng = np.random.default_rng(child)
        g = rng.standard_normal((outcomes, d)) + 1j * rng.standard_normal((outcomes, d))
        starts.append(scipy.linalg.polar(g)[0])
    return starts


def one_shot_deficit(s: BipartiteState, cfg: Optional[OptimizerConfig] = None) -> DeficitResult:
    """
    多起点上升求 D⁽¹⁾ 的下界
    :param s: 二分态
    :param cfg: 优化器配置
    :return: DeficitResult（value 由公共 objective 在 argmax 上重新计算）
    """
    cfg = cfg or OptimizerConfig()
    d = s.dim_a
    outcomes = cfg.outcomes_for(d)
    ascent = IsometryAscent(s, cfg)
    starts = _warm_starts(s, cfg, outcomes) + _random_starts(cfg, outcomes, d)

    logging.info(f"D⁽¹⁾ 优化开始: dA={d}, dB={s.dim_b}, N={outcomes}, 起点 {len(starts)} 个")
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes_list = list(pool.map(ascent.ascend, starts))
    else:
        outcomes_list = [ascent.ascend(w) for w in starts]

    values = []
    for o in outcomes_list:
        values.append(objective(RankOnePovm(o.vectors), s))
    # 取最大值，相同时取下标最小的起点
    best = max(range(len(values)), key=lambda i: (values[i], -i))
    chosen = outcomes_list[best]
    if chosen.status is OptimizerStatus.MAX_ITERS:
        logging.warning(f"最优起点 {best} 达到最大迭代次数 {cfg.max_iters}")
    ceiling = deficit_ceiling(s)
    logging.info(f"D⁽¹⁾ 优化结束: 值 {values[best]:.10f}，上界 {ceiling:.10f}，起点 {best}")
    return DeficitResult(
        value=max(0.0, values[best]),
        argmax=RankOnePovm(chosen.vectors),
        trace=tuple(values),
        status=chosen.status,
        ceiling=ceiling,
        best_start=best,
        iterations=chosen.iterations,
    )


def oracle_grid_qubit(
    s: BipartiteState, resolution: int = 64, seed: int = 7, random_povms: int = 256
) -> float:
    """
    A 为量子比特时的网格下界：Bloch 球 (θ, φ) 网格上的投影测量，
    加上若干随机 3、4 结果秩一 POVM
    """
    if s.dim_a != 2:
        raise ValidationError(f"网格预言机要求 dA = 2，实际 {s.dim_a}")
    if resolution < 2:
        raise ValidationError(f"resolution 必须 ≥ 2，实际 {resolution}")
    ascent = IsometryAscent(s, OptimizerConfig())
    theta, phi = np.meshgrid(
        np.linspace(0.0, np.pi, resolution),
        np.linspace(0.0, 2 * np.pi, resolution, endpoint=False),
        indexing="ij",
    )
    c, sn, ph = np.cos(theta / 2).ravel(), np.sin(theta / 2).ravel(), np.exp(1j * phi).ravel()
    grid = np.stack(
        [np.stack([c, ph * sn], axis=-1), np.stack([sn, -ph * c], axis=-1)], axis=1
    ).astype(complex)
    best = float(np.max(ascent.value(grid)))

    rng = np.random.default_rng(seed)
    for outcomes in (3, 4):
        g = rng.standard_normal((random_povms, outcomes, 2)) + 1j * rng.standard_normal(
            (random_povms, outcomes, 2)
        )
        isometries = np.stack([scipy.linalg.polar(x)[0] for x in g])
        best = max(best, float(np.max(ascent.value(isometries))))
    return max(0.0, best)


def kappa_local(rho: DensityMatrix) -> float:
    """κ(ρ) = log₂ d − H(ρ)"""
    return math.log2(rho.dim) - von_neumann(rho)


@dataclass(frozen=True)
class LevelResult:
    """n 拷贝层级的取值及其底层 D⁽¹⁾ 结果"""

    value: float
    n: int
    deficit: DeficitResult

    def to_dict(self) -> dict:
        return {"value": self.value, "n": self.n, "deficit": self.deficit.to_dict()}


def _n_copy_deficit(
    s: BipartiteState, n: int, cfg: Optional[OptimizerConfig], dense_guard: int
) -> DeficitResult:
    check_guard(s.dim ** n, dense_guard, f"(dA·dB)^n (n={n})")
    return one_shot_deficit(tensor_power(s, n), cfg)


def classical_deficit(
    s: BipartiteState, n: int = 1, cfg: Optional[OptimizerConfig] = None, dense_guard: int = 4096
) -> LevelResult:
    """Δᶜ→ 的 n 拷贝层级 (1/n)·D⁽¹⁾(ρ^{⊗n})"""
    deficit = _n_copy_deficit(s, n, cfg, dense_guard)
    return LevelResult(deficit.value / n, n, deficit)


def kappa_one_way_level(
    s: BipartiteState, n: int = 1, cfg: Optional[OptimizerConfig] = None, dense_guard: int = 4096
) -> LevelResult:
    """
    κ→ 的 n 拷贝层级 log dA + log dB − H(A) − H(B) + (1/n)·D⁽¹⁾(ρ^{⊗n})
    """
    deficit = classical_deficit(s, n, cfg, dense_guard)
    value = (
        kappa_local(partial_trace(s, "A")) + kappa_local(partial_trace(s, "B")) + deficit.value
    )
    return LevelResult(value, n, deficit.deficit)


@dataclass(frozen=True)
class AdditivityResult:
    """D⁽¹⁾(ρ ⊗ σ)、D⁽¹⁾(ρ) 与 D⁽¹⁾(σ)，σ 为最大混合态"""

    lhs: float
    rhs: float
    sigma_alone: float
    status: OptimizerStatus = OptimizerStatus.CONVERGED

    @property
    def gap(self) -> float:
        return abs(self.lhs - self.rhs)

    def to_dict(self) -> dict:
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "sigmaAlone": self.sigma_alone,
            "gap": self.gap,
            "status": self.status.value,
        }


def additivity_check(
    s: BipartiteState, cfg: Optional[OptimizerConfig] = None, dense_guard: int = 4096
) -> AdditivityResult:
    """D⁽¹⁾(ρ ⊗ σ) 与 D⁽¹⁾(ρ) 比较，σ = 1/(dA·dB)"""
    check_guard(s.dim ** 2, dense_guard, "ρ ⊗ σ 维数")
    sigma = BipartiteState(s.dim_a, s.dim_b, maximally_mixed(s.dim))
    runs = [one_shot_deficit(t, cfg) for t in (tensor_bipartite(s, sigma), s, sigma)]
    status = (
        OptimizerStatus.MAX_ITERS
        if any(r.status is OptimizerStatus.MAX_ITERS for r in runs)
        else OptimizerStatus.CONVERGED
    )
    return AdditivityResult(runs[0].value, runs[1].value, runs[2].value, status)
