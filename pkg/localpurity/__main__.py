#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
局部纯度计算命令行工具
统一的 CLI 入口，报告写 stdout（或 --out），日志写 stderr
"""

import argparse
import logging
import sys
import time
import traceback
from typing import Dict, Optional, Tuple

from localpurity import log
from localpurity.common import (
    BOUND_SLACK,
    GuardExceededError,
    LocalPurityError,
    ValidationError,
)
from localpurity.config import DEFAULT_CONFIG, load_config
from localpurity.covering import build_covering, verify_covering
from localpurity.entropy import conditional_entropy, entropy_report, von_neumann
from localpurity.povm_opt import (
    OptimizerConfig,
    OptimizerStatus,
    RankOnePovm,
    additivity_check,
    kappa_local,
    kappa_one_way_level,
    one_shot_deficit,
    oracle_grid_qubit,
)
from localpurity.protocol import bootstrap, converse_margin, run_distillation, run_example1
from localpurity.qmat import (
    BipartiteState,
    DensityMatrix,
    apply_povm,
    common_randomness_state,
    load_state,
    partial_trace,
)
from localpurity.report import RunReport, write_report
from localpurity.suite import CHECKS, run_inequality_suite
from localpurity.typicality import build_concentration_code, converse_check

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VALIDATION = 2
EXIT_GUARD = 3
EXIT_MAX_ITERS = 4

# 命令行参数名 -> 配置键
OVERRIDABLE = {
    "delta": "delta",
    "epsilon": "epsilon",
    "seed": "seed",
    "restarts": "restarts",
    "max_iters": "max_iters",
    "tol": "tol",
    "workers": "workers",
}


class LocalPurityCLI:
    """命令实现：每个方法返回 (RunReport, exit_code)"""

    def __init__(self, settings: Dict):
        self.settings = settings

    # ---------- 辅助 ----------

    def optimizer_config(self) -> OptimizerConfig:
        s = self.settings
        return OptimizerConfig(
            restarts=s["restarts"],
            max_iters=s["max_iters"],
            grad_tol=s["grad_tol"],
            seed=s["seed"],
            gradient=s.get("gradient", "analytic"),
            workers=s["workers"],
        )

    def guards(self) -> Dict[str, int]:
        keys = ("dense_guard", "typical_guard", "covering_guard", "covering_dense_guard", "classical_guard")
        return {k: self.settings[k] for k in keys}

    @staticmethod
    def load(path: Optional[str]):
        if not path:
            raise ValidationError("缺少 --state 参数")
        return load_state(path)

    def load_bipartite(self, path: Optional[str]) -> BipartiteState:
        state = self.load(path)
        if not isinstance(state, BipartiteState):
            raise ValidationError(f"{path}: 该命令需要二分态（dims 为 [dA, dB]）")
        return state

    def new_report(self, command: str, state_path: Optional[str] = None, seeded: bool = False):
        report = RunReport(command, seed=self.settings["seed"] if seeded else None)
        if state_path:
            report.add_input("state", state_path)
        return report

    def measurement(self, s: BipartiteState, which: str) -> Tuple[RankOnePovm, Optional[OptimizerStatus]]:
        """
        :return: (合并平行结果后的 POVM, 优化状态)，计算基时状态为 None
        """
        if which == "computational":
            return RankOnePovm.computational(s.dim_a), None
        result = one_shot_deficit(s, self.optimizer_config())
        povm = result.argmax.merged()
        logging.info(f"使用优化得到的 POVM（{result.argmax.outcomes} 个结果，合并后 {povm.outcomes} 个）")
        return povm, result.status

    @staticmethod
    def exit_code(passed: bool, status: Optional[OptimizerStatus]) -> int:
        if not passed:
            return EXIT_ERROR
        return EXIT_MAX_ITERS if status is OptimizerStatus.MAX_ITERS else EXIT_OK

    # ---------- 命令 ----------

    def entropy(self, state_path: str):
        state = self.load(state_path)
        report = self.new_report("entropy", state_path)
        if isinstance(state, DensityMatrix):
            report.add("h", von_neumann(state))
            return report, EXIT_OK
        r = entropy_report(state)
        for name, value in r.to_dict().items():
            report.add(name, value)
        report.add("hAgivenB", conditional_entropy(state))
        return report, EXIT_OK

    def kappa(self, state_path: str):
        state = self.load(state_path)
        report = self.new_report("kappa", state_path)
        rho = state if isinstance(state, DensityMatrix) else state.rho
        report.add("kappa", kappa_local(rho))
        if isinstance(state, BipartiteState):
            report.add("kappaA", kappa_local(partial_trace(state, "A")))
            report.add("kappaB", kappa_local(partial_trace(state, "B")))
        return report, EXIT_OK

    def deficit(self, state_path: str, oracle: bool = False):
        s = self.load_bipartite(state_path)
        report = self.new_report("deficit", state_path, seeded=True)
        result = one_shot_deficit(s, self.optimizer_config())
        report.add("value", result.value, bound=result.ceiling, tolerance=self.settings["tol"])
        report.add("ceiling", result.ceiling)
        report.add("status", result.status.value)
        if oracle:
            grid = oracle_grid_qubit(s, self.settings["oracle_resolution"], self.settings["seed"])
            report.add("oracle", grid)
        report.details["deficit"] = result.to_dict()
        report.details["argmax"] = result.argmax.to_dict()
        code = EXIT_MAX_ITERS if result.status is OptimizerStatus.MAX_ITERS else EXIT_OK
        return report, code

    def kappa_one_way(self, state_path: str, n: int):
        s = self.load_bipartite(state_path)
        report = self.new_report("kappa1way", state_path, seeded=True)
        level = kappa_one_way_level(s, n, self.optimizer_config(), self.settings["dense_guard"])
        report.add("kappaOneWay", level.value, tolerance=self.settings["tol"])
        report.add("deficit", level.deficit.value / n, bound=level.deficit.ceiling / n)
        report.add("n", n)
        report.details["level"] = level.to_dict()
        code = EXIT_MAX_ITERS if level.deficit.status is OptimizerStatus.MAX_ITERS else EXIT_OK
        return report, code

    def concentrate(self, state_path: str, n: int):
        state = self.load(state_path)
        rho = state if isinstance(state, DensityMatrix) else state.rho
        report = self.new_report("concentrate", state_path)
        code = build_concentration_code(rho, n, self.settings["delta"], self.settings["typical_guard"])
        slack = converse_check(code, rho)
        report.add("rate", code.rate, bound=kappa_local(rho))
        report.add("d1", code.d1)
        report.add("d2", code.d2)
        report.add("achievedEpsilon", code.achieved_epsilon)
        report.add("converseSlack", slack, tolerance=self.settings["tol"])
        report.details["code"] = code.to_dict()
        return report, EXIT_OK

    def cover(self, state_path: str, n: int, povm: str):
        s = self.load_bipartite(state_path)
        report = self.new_report("cover", state_path, seeded=True)
        measurement, status = self.measurement(s, povm)
        cq = apply_povm(measurement.to_povm(), s)
        code = build_covering(
            cq,
            n,
            epsilon=self.settings["epsilon"],
            delta=self.settings["delta"],
            seed=self.settings["seed"],
            guard=self.settings["covering_guard"],
            dense_guard=self.settings["covering_dense_guard"],
            classical_guard=self.settings["classical_guard"],
            workers=self.settings["workers"],
        )
        check = verify_covering(code, cq, n)
        report.add("mu", code.mu)
        report.add("lambda", code.lam, bound=code.lambda_target)
        report.add("minSuccess", code.min_success, bound=1.0 - code.epsilon)
        report.add("setMass", code.set_mass, bound=1.0 - code.epsilon)
        report.add("passed", check.passed)
        report.details["code"] = code.to_dict()
        report.details["check"] = check.to_dict()
        return report, self.exit_code(check.passed, status)

    def distill(
        self, state_path: str, n: int, povm: str, path: str, a1_dim: Optional[int], blocks: int = 1
    ):
        s = self.load_bipartite(state_path)
        report = self.new_report("distill", state_path, seeded=True)
        measurement, status = self.measurement(s, povm)
        ledger, trace = run_distillation(
            s,
            measurement,
            n,
            epsilon=self.settings["epsilon"],
            delta=self.settings["delta"],
            seed=self.settings["seed"],
            a1_dim=a1_dim,
            path=path,
            guards=self.guards(),
        )
        margin = converse_margin(ledger, s, trace)
        chained = bootstrap(ledger, blocks)
        report.add("rate", ledger.rate)
        report.add("targetRate", trace.target_rate)
        report.add("rateSlack", trace.rate_slack)
        report.add("catalystRate", ledger.catalyst_rate)
        report.add("amortizedCatalystRate", chained.catalyst_rate)
        report.add("classicalBitsSent", ledger.classical_bits)
        report.add("finalDistance", trace.final_distance, bound=trace.envelope)
        report.add("converseMargin", margin, tolerance=self.settings["tol"])
        report.add("catalystReturned", ledger.catalyst_returned)
        report.details["ledger"] = ledger.to_dict()
        report.details["bootstrap"] = {"blocks": blocks, **chained.to_dict()}
        report.details["trace"] = trace.to_dict()
        passed = ledger.catalyst_returned and ledger.rate >= -BOUND_SLACK
        if not passed:
            logging.error(f"蒸馏失败: 速率 {ledger.rate:.6f}，catalyst 归还 {ledger.catalyst_returned}")
        return report, self.exit_code(passed, status)

    def example1(self):
        report = self.new_report("example1")
        ledger, trace = run_example1()
        report.add("rate", ledger.rate)
        report.add("finalDistance", trace.final_distance)
        report.add(
            "converseMargin",
            converse_margin(ledger, common_randomness_state(), trace),
            tolerance=self.settings["tol"],
        )
        report.details["ledger"] = ledger.to_dict()
        report.details["trace"] = trace.to_dict()
        return report, EXIT_OK

    def additivity(self, state_path: str):
        s = self.load_bipartite(state_path)
        report = self.new_report("additivity", state_path, seeded=True)
        result = additivity_check(s, self.optimizer_config(), self.settings["dense_guard"])
        report.add("lhs", result.lhs)
        report.add("rhs", result.rhs)
        report.add("gap", result.gap, tolerance=self.settings["tol"])
        report.add("sigmaAlone", result.sigma_alone)
        report.details["additivity"] = result.to_dict()
        return report, self.exit_code(True, result.status)

    def ineq_suite(self, count: Optional[int], checks=None):
        count = count or self.settings["suite_count"]
        report = self.new_report("ineq-suite", seeded=True)
        result = run_inequality_suite(count, self.settings["seed"], checks, self.settings["workers"])
        for r in result.results:
            report.add(f"{r.name}.violations", r.violations)
            report.add(f"{r.name}.maxExcess", r.max_excess, bound=result.slack)
        report.add("violations", result.violations)
        report.details["suite"] = result.to_dict()
        return report, EXIT_OK if result.passed else EXIT_ERROR


def resolve_settings(args) -> Dict:
    """命令行参数 > 配置文件 > 内置默认值"""
    config, error = load_config(getattr(args, "config", None))
    if error:
        logging.warning(error)
    settings = dict(DEFAULT_CONFIG)
    settings.update(config)
    for flag, key in OVERRIDABLE.items():
        value = getattr(args, flag, None)
        if value is not None:
            settings[key] = value
    if getattr(args, "gradient", None):
        settings["gradient"] = args.gradient
    return settings


def _finish(args, report: RunReport, code: int, started: float) -> int:
    if not args.no_timing:
        report.timing = time.perf_counter() - started
    write_report(report, args.out, args.format)
    if args.verbose:
        print(f"{report.command} 完成，退出码 {code}", file=sys.stderr)
    return code


def cmd_entropy(args, cli):
    return cli.entropy(args.state)


def cmd_kappa(args, cli):
    return cli.kappa(args.state)


def cmd_deficit(args, cli):
    return cli.deficit(args.state, args.oracle)


def cmd_kappa1way(args, cli):
    return cli.kappa_one_way(args.state, args.n)


def cmd_concentrate(args, cli):
    return cli.concentrate(args.state, args.n)


def cmd_cover(args, cli):
    return cli.cover(args.state, args.n, args.povm)


def cmd_distill(args, cli):
    return cli.distill(args.state, args.n, args.povm, args.path, args.a1_dim, args.blocks)


def cmd_example1(args, cli):
    return cli.example1()


def cmd_additivity(args, cli):
    return cli.additivity(args.state)


def cmd_ineq_suite(args, cli):
    return cli.ineq_suite(args.count, args.check)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="配置文件（默认: config/config.json）")
    common.add_argument("--seed", type=int, default=None, help=f"随机种子（默认: {DEFAULT_CONFIG['seed']}）")
    common.add_argument("--tol", type=float, default=None, help=f"报告容差（默认: {DEFAULT_CONFIG['tol']}）")
    common.add_argument("--workers", type=int, default=None, help="并行线程数（默认: 1）")
    common.add_argument("--out", "-o", default=None, help="报告输出文件（默认: stdout）")
    common.add_argument("--format", choices=["json", "csv"], default="json", help="报告格式（默认: json）")
    common.add_argument("--no-timing", action="store_true", help="报告中不写耗时，便于逐字节比对")
    common.add_argument("--verbose", "-v", action="store_true", help="stderr 输出 INFO 日志")

    state = argparse.ArgumentParser(add_help=False)
    state.add_argument("--state", "-s", default=None, help="态 JSON 文件")

    sizing = argparse.ArgumentParser(add_help=False)
    sizing.add_argument("--n", "-n", type=int, default=1, help="拷贝数（默认: 1）")
    sizing.add_argument("--delta", type=float, default=None, help=f"典型性 δ（默认: {DEFAULT_CONFIG['delta']}）")
    sizing.add_argument("--epsilon", type=float, default=None, help=f"覆盖码 ε（默认: {DEFAULT_CONFIG['epsilon']}）")

    optimizer = argparse.ArgumentParser(add_help=False)
    optimizer.add_argument("--restarts", type=int, default=None, help=f"随机起点数（默认: {DEFAULT_CONFIG['restarts']}）")
    optimizer.add_argument("--max-iters", type=int, default=None, help=f"每个起点的最大迭代（默认: {DEFAULT_CONFIG['max_iters']}）")
    optimizer.add_argument("--gradient", choices=["analytic", "finite-difference"], default=None, help="梯度计算方式（默认: analytic）")

    measurement = argparse.ArgumentParser(add_help=False)
    measurement.add_argument(
        "--povm", choices=["computational", "optimized"], default="computational",
        help="A 上的秩一 POVM：计算基或 D⁽¹⁾ 优化结果（默认: computational）",
    )

    parser = argparse.ArgumentParser(
        prog="localpurity",
        description="局部纯度与单向纯度蒸馏计算工具",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
示例:
  %(prog)s kappa --state test/data/mixed_qubit.json        # κ(ρ) = log d − H(ρ)
  %(prog)s deficit --state test/data/bell.json --restarts 32
  %(prog)s kappa1way --state test/data/phibar.json --n 1
  %(prog)s concentrate --state test/data/skewed_qubit.json --n 20
  %(prog)s distill --state test/data/phibar.json --n 8     # 六步蒸馏协议
  %(prog)s example1                                        # 共享随机比特的例子
  %(prog)s ineq-suite --count 1000 --format csv

退出码: 0 成功，1 其他错误，2 输入不合法，3 规模超限，4 优化未收敛（报告照常输出）
""",
    )
    subparsers = parser.add_subparsers(dest="command", help="可用命令")

    p = subparsers.add_parser("entropy", parents=[common, state], help="熵与互信息")
    p.set_defaults(func=cmd_entropy)

    p = subparsers.add_parser("kappa", parents=[common, state], help="局部纯度 κ")
    p.set_defaults(func=cmd_kappa)

    p = subparsers.add_parser("deficit", parents=[common, state, optimizer], help="单拷贝亏量 D⁽¹⁾")
    p.add_argument("--oracle", action="store_true", help="同时计算量子比特网格下界")
    p.set_defaults(func=cmd_deficit)

    p = subparsers.add_parser("kappa1way", parents=[common, state, sizing, optimizer], help="κ→ 的 n 拷贝层级")
    p.set_defaults(func=cmd_kappa1way)

    p = subparsers.add_parser("concentrate", parents=[common, state, sizing], help="纯度浓缩码")
    p.set_defaults(func=cmd_concentrate)

    p = subparsers.add_parser("cover", parents=[common, state, sizing, optimizer, measurement], help="覆盖码")
    p.set_defaults(func=cmd_cover)

    p = subparsers.add_parser("distill", parents=[common, state, sizing, optimizer, measurement], help="单向纯度蒸馏")
    p.add_argument("--path", choices=["auto", "classical", "dense"], default="auto", help="模拟路径（默认: auto）")
    p.add_argument("--a1-dim", type=int, default=None, help="A = A₁ ⊗ A₂ 时 A₁ 的维数")
    p.add_argument("--blocks", type=int, default=1, help="串联块数，前一块输出作为下一块的 catalyst（默认: 1）")
    p.set_defaults(func=cmd_distill)

    p = subparsers.add_parser("example1", parents=[common], help="共享随机比特的蒸馏例子")
    p.set_defaults(func=cmd_example1)

    p = subparsers.add_parser("additivity", parents=[common, state, optimizer], help="D⁽¹⁾ 对最大混合态的可加性")
    p.set_defaults(func=cmd_additivity)

    p = subparsers.add_parser("ineq-suite", parents=[common], help="随机实例不等式检验")
    p.add_argument("--count", type=int, default=None, help=f"每类实例数（默认: {DEFAULT_CONFIG['suite_count']}）")
    p.add_argument("--check", action="append", choices=list(CHECKS), default=None, help="只运行指定检验（可重复）")
    p.set_defaults(func=cmd_ineq_suite)
    return parser


def main(argv=None):
    """主函数"""
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command is None:
        parser.print_help()
        return EXIT_ERROR

    config, _ = load_config(args.config)
    log.init_logging(to_file=bool(config.get("log_to_file", True)), verbose=args.verbose)

    started = time.perf_counter()
    try:
        cli = LocalPurityCLI(resolve_settings(args))
        report, code = args.func(args, cli)
        return _finish(args, report, code, started)
    except ValidationError as e:
        logging.error(f"输入不合法: {e}")
        print(f"❌ 输入不合法: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except GuardExceededError as e:
        logging.error(f"规模超限: {e}")
        print(f"❌ 规模超限: {e}", file=sys.stderr)
        return EXIT_GUARD
    except LocalPurityError as e:
        logging.error(f"计算失败: {e}")
        print(f"❌ 计算失败: {e}", file=sys.stderr)
        return EXIT_ERROR
    except KeyboardInterrupt:
        print("\n⚠️ 用户取消操作", file=sys.stderr)
        return EXIT_ERROR
    except Exception as e:
        logging.exception(f"未预期的错误: {e}")
        print(f"❌ 发生错误: {e}", file=sys.stderr)
        traceback.print_exc()
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
