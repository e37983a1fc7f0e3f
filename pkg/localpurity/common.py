import os
import sys

# 数值容差（全库统一）
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
SYMMETRIZE_TOL = 1e-8
POVM_TOL = 1e-9
BOUND_SLACK = 1e-9
PROB_CUTOFF = 1e-14

TOLERANCE_POLICY = {
    "hermitian": HERMITIAN_TOL,
    "trace": TRACE_TOL,
    "psd": PSD_TOL,
    "symmetrize": SYMMETRIZE_TOL,
    "povm_completeness": POVM_TOL,
    "bound_slack": BOUND_SLACK,
    "prob_cutoff": PROB_CUTOFF,
}


class LocalPurityError(Exception):
    """库内所有错误的基类"""


class ValidationError(LocalPurityError, ValueError):
    """输入不合法：维度不匹配、非厄米、非正定、JSON 格式错误等"""


class GuardExceededError(LocalPurityError, RuntimeError):
    """问题规模超出可计算范围"""


class CoveringError(LocalPurityError, RuntimeError):
    """覆盖码在 λ = |S| 时仍无法满足成功率要求"""


class DecoderCompletionError(LocalPurityError, RuntimeError):
    """W_l 补全为酉矩阵时出现秩亏"""


def check_guard(size: int, limit: int, what: str) -> None:
    """
    规模检查，超出则抛出 GuardExceededError
    :param size: 实际规模
    :param limit: 上限
    :param what: 描述（用于错误信息）
    """
    if size > limit:
        raise GuardExceededError(f"{what} 规模 {size} 超出上限 {limit}")


def get_script_directory():
    """获取脚本所在的目录"""

    if getattr(sys, "frozen", False):
        # 如果是打包后的可执行文件
        return os.path.dirname(sys.executable)
    else:
        # 如果是普通脚本
        return os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def get_config_directory():
    """获取配置文件目录"""
    return os.path.join(get_script_directory(), "config")
