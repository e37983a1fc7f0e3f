"""
随机实例不等式检验

每类不等式各自用 SeedSequence 派生的独立随机流生成 count 个实例，
统计超出 BOUND_SLACK 的违例数和最大超出量。
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, Tuple

import numpy as np

from localpurity.common import BOUND_SLACK, ValidationError
from localpurity.entropy import fannes_check, mutual_info, subadditivity_check, von_neumann
from localpurity.qmat import (
    DensityMatrix,
    dephase,
    dephase_local,
    fidelity_pure_bound,
    gentle_operator,
    random_bipartite,
    random_density,
    random_effect,
    random_pure,
    trace_norm,
)

# 单体实例的维数取值
DIMS = (2, 3, 4)


def _dim(rng: np.random.Generator) -> int:
    return int(rng.choice(DIMS))


def _triangle(rng: np.random.Generator) -> Tuple[float, float]:
    d = _dim(rng)
    rho, sigma, tau = (random_density(d, rng) for _ in range(3))
    lhs = trace_norm(rho.matrix - sigma.matrix)
    rhs = trace_norm(rho.matrix - tau.matrix) + trace_norm(tau.matrix - sigma.matrix)
    return lhs, rhs


def _fidelity_bound(rng: np.random.Generator) -> Tuple[float, float]:
    d = _dim(rng)
    return fidelity_pure_bound(random_density(d, rng), random_pure(d, rng))


def _gentle(rng: np.random.Generator) -> Tuple[float, float]:
    d = _dim(rng)
    return gentle_operator(random_density(d, rng), random_effect(d, rng))


def _fannes(rng: np.random.Generator) -> Tuple[float, float]:
    d = _dim(rng)
    rho = random_density(d, rng)
    # 一半实例取 ρ 附近的 ω，覆盖距离小的区域
    if rng.random() < 0.5:
        t = rng.random() * 0.1
        omega = DensityMatrix((1 - t) * rho.matrix + t * random_density(d, rng).matrix)
    else:
        omega = random_density(d, rng)
    return fannes_check(rho, omega)


def _subadditivity(rng: np.random.Generator) -> Tuple[float, float]:
    s = random_bipartite(_dim(rng), _dim(rng), rng)
    return 0.0, subadditivity_check(s)


def _dephasing(rng: np.random.Generator) -> Tuple[float, float]:
    rho = random_density(_dim(rng), rng)
    return von_neumann(rho), von_neumann(dephase(rho))


def _data_processing(rng: np.random.Generator) -> Tuple[float, float]:
    s = random_bipartite(_dim(rng), _dim(rng), rng)
    return mutual_info(dephase_local(s, "B")), mutual_info(s)


# 名称 -> 实例生成，返回 (lhs, rhs)，要求 lhs ≤ rhs
CHECKS: Dict[str, Callable[[np.random.Generator], Tuple[float, float]]] = {
    "triangle": _triangle,
    "fidelity-bound": _fidelity_bound,
    "gentle-operator": _gentle,
    "fannes": _fannes,
    "subadditivity": _subadditivity,
    "dephasing-entropy": _dephasing,
    "data-processing": _data_processing,
}


@dataclass(frozen=True)
class CheckResult:
    name: str
    count: int
    violations: int
    max_excess: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "count": self.count,
            "violations": self.violations,
            "maxExcess": self.max_excess,
        }


@dataclass(frozen=True)
class SuiteReport:
    seed: int
    slack: float
    results: Tuple[CheckResult, ...]

    @property
    def violations(self) -> int:
        return sum(r.violations for r in self.results)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "slack": self.slack,
            "violations": self.violations,
            "passed": self.passed,
            "checks": [r.to_dict() for r in self.results],
        }


def _run_check(name: str, count: int, seq: np.random.SeedSequence) -> CheckResult:
    rng = np.random.default_rng(seq)
    check = CHECKS[name]
    violations = 0
    max_excess = float("-inf")
    for _ in range(count):
        lhs, rhs = check(rng)
        excess = lhs - rhs
        max_excess = max(max_excess, excess)
        if excess > BOUND_SLACK:
            violations += 1
    if violations:
        logging.warning(f"不等式 {name}: {violations}/{count} 个实例违例，最大超出 {max_excess:.3e}")
    else:
        logging.info(f"不等式 {name}: {count} 个实例全部通过")
    return CheckResult(name, count, violations, max_excess)


def run_inequality_suite(
    count: int = 1000, seed: int = 7, checks=None, workers: int = 1
) -> SuiteReport:
    """
    运行不等式检验
    :param count: 每类不等式的实例数
    :param seed: 根种子，各类检验的随机流由它派生，与 workers 无关
    :param checks: 要运行的检验名称，缺省为全部
    :param workers: 并行线程数
    """
    if count < 1:
        raise ValidationError(f"实例数必须 ≥ 1，实际 {count}")
    names = list(CHECKS) if checks is None else list(checks)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise ValidationError(f"未知的检验: {unknown}，可选 {list(CHECKS)}")
    # 按 CHECKS 中的固定顺序派生，子集运行与全量运行的随机流一致
    seqs = dict(zip(CHECKS, np.random.SeedSequence(seed).spawn(len(CHECKS))))

    def _one(name):
        return _run_check(name, count, seqs[name])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one, names))
    else:
        results = [_one(name) for name in names]
    return SuiteReport(seed, BOUND_SLACK, tuple(results))
