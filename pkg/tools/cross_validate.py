"""
D⁽¹⁾ 优化器与量子比特网格下界的交叉验证

在若干个带种子的随机可分两比特态上分别运行 one_shot_deficit 与
oracle_grid_qubit，逐行打印两者的值、差值和解析上界。
优化器结果低于网格下界 1e-3 以上的行标记为 ✗。

用法：
    python tools/cross_validate.py [实例数] [种子]
    python tools/cross_validate.py 20 7
"""

import os
import sys
from typing import Optional

import numpy as np

sys.path.append(os.path.join(os.path.dirname(__file__), ".."))

from localpurity.povm_opt import OptimizerConfig, one_shot_deficit, oracle_grid_qubit
from localpurity.qmat import random_separable

# 优化器允许落后网格的量
SLACK = 1e-3


def sweep(count: int, seed: int, resolution: int = 64, cfg: Optional[OptimizerConfig] = None):
    """
    :param cfg: 优化器配置，缺省为 OptimizerConfig(seed=seed)
    :return: [(下标, 优化值, 网格值, 上界)]
    """
    rows = []
    cfg = cfg or OptimizerConfig(seed=seed)
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(count)):
        s = random_separable(2, 2, np.random.default_rng(child))
        result = one_shot_deficit(s, cfg)
        grid = oracle_grid_qubit(s, resolution, seed)
        rows.append((i, result.value, grid, result.ceiling))
    return rows


def main():
    count = int(sys.argv[1]) if len(sys.argv) > 1 else 20
    seed = int(sys.argv[2]) if len(sys.argv) > 2 else 7
    if count < 1:
        print(f"实例数必须 ≥ 1: {count}")
        sys.exit(1)

    print(f"交叉验证: {count} 个随机可分两比特态，种子 {seed}\n")
    rows = sweep(count, seed)

    print(f"{'='*60}")
    print(f"  {'#':>3}  {'优化器':>12}  {'网格':>12}  {'差值':>10}  {'上界':>10}")
    print(f"{'='*60}")
    failed = 0
    for i, value, grid, ceiling in rows:
        ok = value >= grid - SLACK
        failed += not ok
        mark = "✓" if ok else "✗"
        print(f"  {i:>3}  {value:>12.8f}  {grid:>12.8f}  {value - grid:>+10.2e}  {ceiling:>10.6f}  {mark}")

    print(f"\n{'='*60}")
    print(f"  通过 {count - failed}/{count}")
    print(f"{'='*60}")
    if failed:
        sys.exit(1)


if __name__ == "__main__":
    main()
