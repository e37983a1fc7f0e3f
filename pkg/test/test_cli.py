# -*- coding:utf-8 -*-
"""
命令行入口的单元测试

覆盖：
- 各子命令的报告内容
- 退出码：蒸馏失败 1、输入不合法 2、规模超限 3、优化未收敛 4
- CSV 格式与 --no-timing 下的逐字节可复现
"""

import csv
import json
import math
import os
import shutil
import sys
import tempfile
import unittest
from unittest import mock

import numpy as np

sys.path.append(os.path.join(os.path.dirname(__file__), ".."))

from localpurity.__main__ import (
    EXIT_ERROR,
    EXIT_GUARD,
    EXIT_MAX_ITERS,
    EXIT_OK,
    EXIT_VALIDATION,
    LocalPurityCLI,
    build_parser,
    main,
    resolve_settings,
)
from localpurity.entropy import binary_entropy
from localpurity.povm_opt import RankOnePovm

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


def data(name: str) -> str:
    return os.path.join(DATA_DIR, name)


class CliTestCase(unittest.TestCase):
    """带临时目录与测试配置的基类"""

    def setUp(self):
        self.tmp = tempfile.mkdtemp(prefix="localpurity_test_")
        self.config = os.path.join(self.tmp, "config.json")
        with open(self.config, "w", encoding="utf-8") as f:
            json.dump({"log_to_file": False, "restarts": 4, "max_iters": 200, "suite_count": 10}, f)

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def run_cli(self, *argv, out_name="report.json"):
        out = os.path.join(self.tmp, out_name)
        code = main(list(argv) + ["--config", self.config, "--out", out, "--no-timing"])
        return code, out

    def run_json(self, *argv):
        code, out = self.run_cli(*argv)
        with open(out, encoding="utf-8") as f:
            return code, json.load(f)


# ========== 子命令 测试 ==========


class CommandTest(CliTestCase):
    """
    子命令报告测试
    python -m pytest test/test_cli.py::CommandTest -v
    """

    def test_kappa_mixed_qubit(self):
        # When
        code, report = self.run_json("kappa", "--state", data("mixed_qubit.json"))

        # Then
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(report["command"], "kappa")
        self.assertAlmostEqual(report["results"]["kappa"], 0.0, places=12)
        self.assertIn("stateSha256", report["inputs"])
        self.assertNotIn("timing", report)

    def test_kappa_skewed_qubit(self):
        _, report = self.run_json("kappa", "--state", data("skewed_qubit.json"))
        self.assertAlmostEqual(report["results"]["kappa"], 0.5310, delta=1e-4)

    def test_entropy_bell(self):
        _, report = self.run_json("entropy", "--state", data("bell.json"))
        self.assertAlmostEqual(report["results"]["iAB"], 2.0, places=10)
        self.assertAlmostEqual(report["results"]["hAgivenB"], -1.0, places=10)

    def test_example1(self):
        code, report = self.run_json("example1")
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(report["results"]["rate"], 1.0)
        self.assertAlmostEqual(report["results"]["finalDistance"], 0.0, places=12)
        self.assertGreaterEqual(report["results"]["converseMargin"], 0.0)
        self.assertEqual(report["details"]["ledger"]["dBp"], 2)

    def test_deficit_phibar(self):
        code, report = self.run_json("deficit", "--state", data("phibar.json"), "--oracle")
        self.assertEqual(code, EXIT_OK)
        self.assertAlmostEqual(report["results"]["value"], 1.0, delta=1e-4)
        self.assertGreaterEqual(report["results"]["oracle"], 0.999)
        self.assertEqual(report["seed"], 7)

    def test_kappa1way_phibar(self):
        _, report = self.run_json("kappa1way", "--state", data("phibar.json"), "--n", "1")
        self.assertAlmostEqual(report["results"]["kappaOneWay"], 1.0, delta=1e-4)

    def test_concentrate(self):
        _, report = self.run_json("concentrate", "--state", data("skewed_qubit.json"), "--n", "20")
        self.assertAlmostEqual(report["results"]["rate"], 0.6, places=12)
        self.assertEqual(report["results"]["d1"], 256)
        self.assertGreaterEqual(report["results"]["converseSlack"], -1e-9)

    def test_cover_phibar(self):
        code, report = self.run_json(
            "cover", "--state", data("phibar.json"), "--n", "4", "--epsilon", "0.1", "--delta", "0.25"
        )
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(report["results"]["lambda"], 1)
        self.assertEqual(report["results"]["mu"], 16)
        self.assertTrue(report["results"]["passed"])

    def test_distill_phibar(self):
        code, report = self.run_json("distill", "--state", data("phibar.json"), "--n", "8")
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(report["results"]["rate"], 1.0)
        self.assertEqual(report["results"]["classicalBitsSent"], 1.0)
        self.assertTrue(report["results"]["catalystReturned"])
        self.assertGreaterEqual(report["results"]["converseMargin"], 0.0)

    def test_distill_noisy_cc(self):
        code, report = self.run_json("distill", "--state", data("noisy_cc.json"), "--n", "8")
        self.assertEqual(code, EXIT_OK)
        results = report["results"]
        self.assertAlmostEqual(results["rate"], 0.125, places=12)
        self.assertAlmostEqual(results["targetRate"], 1.0 - binary_entropy(0.1) - 0.3, places=9)
        self.assertAlmostEqual(results["rateSlack"], results["rate"] - results["targetRate"], places=12)
        self.assertGreaterEqual(results["converseMargin"], -1e-9)
        self.assertFalse(report["details"]["trace"]["envelopeInformative"])

    def test_distill_phibar_twelve_copies(self):
        """n=12 超过旧的稠密分布表上限，稀疏经典表示照常运行"""
        code, report = self.run_json("distill", "--state", data("phibar.json"), "--n", "12")
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(report["results"]["rate"], 1.0)
        self.assertAlmostEqual(report["results"]["finalDistance"], 0.0, places=12)

    def test_distill_optimized_povm(self):
        """优化得到的 POVM 合并平行结果后，Φ̄ 的速率为 1 且归还 catalyst"""
        # When
        code, report = self.run_json(
            "distill", "--state", data("phibar.json"), "--n", "4", "--povm", "optimized"
        )

        # Then
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(report["results"]["rate"], 1.0)
        self.assertTrue(report["results"]["catalystReturned"])
        outcomes = report["details"]["trace"]["steps"][0]["outcomes"]
        self.assertEqual(len(outcomes), 2)

    def test_distill_blocks(self):
        """串联 3 块：catalyst 速率摊薄为 1/3"""
        code, report = self.run_json("distill", "--state", data("phibar.json"), "--n", "4", "--blocks", "3")
        self.assertEqual(code, EXIT_OK)
        self.assertAlmostEqual(report["results"]["amortizedCatalystRate"], 1.0 / 3, places=12)
        chained = report["details"]["bootstrap"]
        self.assertEqual(chained["blocks"], 3)
        self.assertEqual(chained["n"], 12)
        self.assertEqual(chained["rate"], 1.0)

    def test_ineq_suite_subset(self):
        code, report = self.run_json("ineq-suite", "--count", "5", "--check", "fannes")
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(report["results"]["fannes.violations"], 0)
        self.assertEqual(report["results"]["violations"], 0)


# ========== 退出码与格式 测试 ==========


class ExitCodeTest(CliTestCase):
    """
    退出码测试
    python -m pytest test/test_cli.py::ExitCodeTest -v
    """

    def test_malformed_state(self):
        code, out = self.run_cli("kappa", "--state", data("malformed.json"))
        self.assertEqual(code, EXIT_VALIDATION)
        self.assertFalse(os.path.exists(out))

    def test_missing_state(self):
        code, _ = self.run_cli("kappa")
        self.assertEqual(code, EXIT_VALIDATION)

    def test_single_system_where_bipartite_needed(self):
        code, _ = self.run_cli("deficit", "--state", data("mixed_qubit.json"))
        self.assertEqual(code, EXIT_VALIDATION)

    def test_guard_exceeded(self):
        """(dA·dB)ⁿ = 4⁷ 超过 4096"""
        code, _ = self.run_cli("kappa1way", "--state", data("bell.json"), "--n", "7")
        self.assertEqual(code, EXIT_GUARD)

    def test_distill_catalyst_not_returned(self):
        """三结果 POVM 在 |X|ⁿ 上借入的 catalyst 无法归还：退出码 1，报告照常写出"""
        # Given
        angles = 2 * math.pi * np.arange(3) / 3
        trine = RankOnePovm(math.sqrt(2 / 3) * np.stack([np.cos(angles), np.sin(angles)], axis=1))

        # When
        with mock.patch.object(LocalPurityCLI, "measurement", return_value=(trine, None)):
            code, out = self.run_cli("distill", "--state", data("noisy_cc.json"), "--n", "4")

        # Then
        self.assertEqual(code, EXIT_ERROR)
        with open(out, encoding="utf-8") as f:
            results = json.load(f)["results"]
        self.assertFalse(results["catalystReturned"])
        self.assertLess(results["rate"], 0.0)

    def test_optimized_max_iters(self):
        """--povm optimized 的 cover、distill 以及 additivity 在迭代预算耗尽时返回 4"""
        phibar = data("phibar.json")
        for argv in (
            ("cover", "--state", phibar, "--n", "4", "--povm", "optimized", "--max-iters", "0"),
            ("distill", "--state", phibar, "--n", "4", "--povm", "optimized", "--max-iters", "0"),
            ("additivity", "--state", phibar, "--max-iters", "0"),
        ):
            with self.subTest(command=argv[0]):
                code, out = self.run_cli(*argv)
                self.assertEqual(code, EXIT_MAX_ITERS)
                self.assertTrue(os.path.exists(out))

    def test_max_iters_still_writes_report(self):
        code, out = self.run_cli("deficit", "--state", data("bell.json"), "--max-iters", "0")
        self.assertEqual(code, EXIT_MAX_ITERS)
        with open(out, encoding="utf-8") as f:
            self.assertEqual(json.load(f)["results"]["status"], "maxIters")


class FormatTest(CliTestCase):
    """
    报告格式与可复现性测试
    python -m pytest test/test_cli.py::FormatTest -v
    """

    def test_csv(self):
        # When
        code, out = self.run_cli("example1", "--format", "csv", out_name="report.csv")

        # Then
        self.assertEqual(code, EXIT_OK)
        with open(out, encoding="utf-8", newline="") as f:
            rows = list(csv.DictReader(f))
        self.assertEqual(list(rows[0].keys()), ["name", "value", "bound", "tolerance"])
        names = [r["name"] for r in rows]
        self.assertIn("rate", names)
        self.assertEqual(float(rows[names.index("rate")]["value"]), 1.0)

    def test_byte_identical_reruns(self):
        # Given
        argv = ("distill", "--state", data("phibar.json"), "--n", "4")

        # When
        _, first = self.run_cli(*argv, out_name="a.json")
        _, second = self.run_cli(*argv, out_name="b.json")

        # Then
        with open(first, "rb") as a, open(second, "rb") as b:
            self.assertEqual(a.read(), b.read())

    def test_byte_identical_reruns_other_commands(self):
        """deficit、kappa、cover 在相同输入与种子下逐字节一致"""
        for argv in (
            ("deficit", "--state", data("bell.json")),
            ("kappa", "--state", data("skewed_qubit.json")),
            ("cover", "--state", data("noisy_cc.json"), "--n", "6"),
        ):
            with self.subTest(command=argv[0]):
                _, first = self.run_cli(*argv, out_name=f"{argv[0]}-a.json")
                _, second = self.run_cli(*argv, out_name=f"{argv[0]}-b.json")
                with open(first, "rb") as a, open(second, "rb") as b:
                    self.assertEqual(a.read(), b.read())

    def test_timing_present_by_default(self):
        out = os.path.join(self.tmp, "timed.json")
        main(["example1", "--config", self.config, "--out", out])
        with open(out, encoding="utf-8") as f:
            self.assertIn("seconds", json.load(f)["timing"])


class SettingsTest(CliTestCase):
    """
    参数优先级：命令行 > 配置文件 > 默认值
    python -m pytest test/test_cli.py::SettingsTest -v
    """

    def test_precedence(self):
        args = build_parser().parse_args(
            ["deficit", "--config", self.config, "--restarts", "9", "--state", "x.json"]
        )
        settings = resolve_settings(args)
        self.assertEqual(settings["restarts"], 9)
        self.assertEqual(settings["max_iters"], 200)
        self.assertEqual(settings["delta"], 0.1)

    def test_config_warning_logged_once(self):
        """配置文件含未知字段时只警告一次"""
        # Given
        with open(self.config, "w", encoding="utf-8") as f:
            json.dump({"log_to_file": False, "bogus": 1}, f)

        # When
        with self.assertLogs(level="WARNING") as logs:
            code, _ = self.run_cli("kappa", "--state", data("mixed_qubit.json"))

        # Then
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(sum("bogus" in line for line in logs.output), 1)


if __name__ == "__main__":
    unittest.main()
