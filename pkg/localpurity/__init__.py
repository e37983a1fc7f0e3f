#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
局部纯度计算工具

计算局部纯度 κ、单向局部纯度 κ→ 与单拷贝亏量 D⁽¹⁾，构造纯度浓缩码、
覆盖码，并模拟带 catalyst 的单向纯度蒸馏协议。

使用方法:
    python -m localpurity kappa --state s.json      # 局部纯度
    python -m localpurity deficit --state s.json    # D⁽¹⁾ 优化
    python -m localpurity distill --state s.json    # 蒸馏协议
    python -m localpurity example1                  # 共享随机比特的例子
"""

__version__ = "0.1.0"

from localpurity.common import (
    CoveringError,
    DecoderCompletionError,
    GuardExceededError,
    LocalPurityError,
    ValidationError,
)
from localpurity.config import load_config
from localpurity.covering import build_covering, verify_covering
from localpurity.povm_opt import (
    OptimizerConfig,
    RankOnePovm,
    kappa_local,
    kappa_one_way_level,
    one_shot_deficit,
)
from localpurity.protocol import Ledger, run_distillation, run_example1
from localpurity.qmat import BipartiteState, DensityMatrix, Povm, load_state
from localpurity.typicality import build_concentration_code

__all__ = [
    "BipartiteState",
    "CoveringError",
    "DecoderCompletionError",
    "DensityMatrix",
    "GuardExceededError",
    "Ledger",
    "LocalPurityError",
    "OptimizerConfig",
    "Povm",
    "RankOnePovm",
    "ValidationError",
    "build_concentration_code",
    "build_covering",
    "kappa_local",
    "kappa_one_way_level",
    "load_config",
    "load_state",
    "one_shot_deficit",
    "run_distillation",
    "run_example1",
    "verify_covering",
    "__version__",
]
