# -*- coding:utf-8 -*-
"""
覆盖码的单元测试

覆盖：
- pretty_good_measurement
- build_covering（对易系综与稠密系综）
- verify_covering / success_matrix
"""

import dataclasses
import math
import os
import sys
import unittest

import numpy as np

sys.path.append(os.path.join(os.path.dirname(__file__), ".."))

from localpurity.common import GuardExceededError, ValidationError
from localpurity.covering import (
    build_covering,
    pretty_good_measurement,
    success_matrix,
    verify_covering,
)
from localpurity.entropy import binary_entropy, holevo_information
from localpurity.qmat import ClassicalQuantumState, diag, maximally_mixed, pure


def phibar_ensemble() -> ClassicalQuantumState:
    return ClassicalQuantumState(np.array([0.5, 0.5]), (diag([1.0, 0.0]), diag([0.0, 1.0])))


def noisy_ensemble() -> ClassicalQuantumState:
    return ClassicalQuantumState(np.array([0.5, 0.5]), (diag([0.9, 0.1]), diag([0.1, 0.9])))


def _success(povm, states):
    return [float(np.real(np.trace(s.matrix @ e))) for s, e in zip(states, povm.elements)]


# ========== PGM 测试 ==========


class PrettyGoodMeasurementTest(unittest.TestCase):
    """
    Pretty-good measurement 测试
    python -m pytest test/test_covering.py::PrettyGoodMeasurementTest -v
    """

    def test_orthogonal_states(self):
        states = [pure([1, 0, 0]), pure([0, 1, 0]), pure([0, 0, 1])]
        povm = pretty_good_measurement(states)
        for value in _success(povm, states):
            self.assertAlmostEqual(value, 1.0, places=12)

    def test_single_state(self):
        povm = pretty_good_measurement([diag([0.7, 0.3])])
        self.assertEqual(len(povm), 1)
        self.assertTrue(np.allclose(povm.elements[0], np.eye(2)))

    def test_zero_and_plus(self):
        """|0⟩、|+⟩ 等概率：平均成功率 (1 + sin(π/4))/2"""
        # Given
        states = [pure([1, 0]), pure([1, 1])]

        # When
        povm = pretty_good_measurement(states)

        # Then
        average = sum(_success(povm, states)) / 2
        self.assertAlmostEqual(average, (1 + math.sin(math.pi / 4)) / 2, places=10)

    def test_kernel_is_completed(self):
        """Σ 奇异时补全后仍是合法 POVM"""
        states = [pure([1, 0, 0]), pure([1, 1, 0])]
        povm = pretty_good_measurement(states)
        self.assertTrue(np.allclose(sum(povm.elements), np.eye(3)))

    def test_priors(self):
        states = [pure([1, 0]), pure([1, 1])]
        povm = pretty_good_measurement(states, [0.9, 0.1])
        values = _success(povm, states)
        self.assertGreater(values[0], values[1])

    def test_empty(self):
        with self.assertRaises(ValidationError):
            pretty_good_measurement([])

    def test_bad_priors(self):
        with self.assertRaises(ValidationError):
            pretty_good_measurement([pure([1, 0]), pure([0, 1])], [0.5, 0.6])


# ========== 覆盖码 测试 ==========


class BuildCoveringTest(unittest.TestCase):
    """
    覆盖码构造测试
    python -m pytest test/test_covering.py::BuildCoveringTest -v
    """

    def test_phibar_single_bin(self):
        """正交系综，n=4：λ=1，μ=16，成功率恰为 1"""
        # When
        code = build_covering(phibar_ensemble(), 4, epsilon=0.1, delta=0.25)

        # Then
        self.assertEqual(code.lam, 1)
        self.assertEqual(code.mu, 16)
        self.assertEqual(code.min_success, 1.0)
        self.assertAlmostEqual(code.set_mass, 1.0, places=12)
        self.assertTrue(code.is_diagonal)

    def test_identical_states(self):
        """I(X;B)=0 时每箱一个序列"""
        cq = ClassicalQuantumState(np.array([0.5, 0.5]), (maximally_mixed(2), maximally_mixed(2)))
        code = build_covering(cq, 3, epsilon=0.1, delta=0.1)
        self.assertEqual(code.lam, 8)
        self.assertEqual(code.mu, 1)
        self.assertAlmostEqual(code.min_success, 1.0, places=12)

    def test_noisy_ensemble(self):
        """ρ₀=diag(.9,.1)，ρ₁=diag(.1,.9)，n=8，ε=0.25"""
        # Given
        cq = noisy_ensemble()
        i_xb = holevo_information(cq)

        # When
        code = build_covering(cq, 8, epsilon=0.25, delta=0.1)

        # Then
        self.assertAlmostEqual(i_xb, 1 - binary_entropy(0.1), places=12)
        self.assertGreaterEqual(code.min_success, 0.75 - 1e-9)
        self.assertEqual(code.lam * code.mu, len(code.sequences))
        self.assertGreaterEqual(code.lam, 16)
        self.assertAlmostEqual(code.lambda_target, 2 ** (8 * (1 - i_xb + 0.1)), places=9)

    def test_refinement_never_hurts(self):
        """细分箱时最小成功率不下降"""
        code = build_covering(noisy_ensemble(), 8, epsilon=0.05, delta=0.1)
        values = [s for _, s in code.attempts]
        for before, after in zip(values, values[1:]):
            self.assertGreaterEqual(after, before - 1e-12)
        lams = [lam for lam, _ in code.attempts]
        for before, after in zip(lams, lams[1:]):
            self.assertEqual(after % before, 0)

    def test_deterministic(self):
        first = build_covering(noisy_ensemble(), 6, seed=3)
        second = build_covering(noisy_ensemble(), 6, seed=3)
        self.assertTrue(np.array_equal(first.table, second.table))
        self.assertEqual(first.to_dict(), second.to_dict())

    def test_dense_ensemble(self):
        """非对易系综走稠密 PGM"""
        # Given
        cq = ClassicalQuantumState(np.array([0.5, 0.5]), (pure([1, 0]), pure([1, 1])))

        # When
        code = build_covering(cq, 2, epsilon=0.25, delta=0.1)

        # Then
        self.assertFalse(code.is_diagonal)
        self.assertGreaterEqual(code.min_success, 0.75 - 1e-9)
        self.assertTrue(verify_covering(code, cq, 2).passed)

    def test_sequence_symbols(self):
        code = build_covering(phibar_ensemble(), 3)
        for l in range(code.lam):
            for m in range(code.mu):
                digits = code.symbols(m, l)
                self.assertEqual(int("".join(map(str, digits)), 2), code.f(m, l))

    def test_phibar_sixteen_copies(self):
        """n=16 走稀疏经典表示：λ=1，μ=65536，成功率恰为 1"""
        # When
        code = build_covering(phibar_ensemble(), 16, epsilon=0.1, delta=0.25)

        # Then
        self.assertEqual(code.lam, 1)
        self.assertEqual(code.mu, 1 << 16)
        self.assertEqual(code.min_success, 1.0)
        self.assertEqual(code.channel.row_width, 1)

    def test_sparse_rows_match_dense_upsilon(self):
        """稀疏解码与稠密 Υ 的对角元一致"""
        # Given
        cq = noisy_ensemble()
        code = build_covering(cq, 3, epsilon=0.25)
        seqs = code.bin_sequences(0)

        # When
        ups = code.channel.upsilon_diagonals(seqs)
        idx, val = code.channel.rows(seqs)

        # Then
        self.assertTrue(np.allclose(ups.sum(axis=0), 1.0))
        dense = np.zeros_like(ups)
        np.put_along_axis(dense, idx, val, axis=1)
        self.assertTrue(np.allclose((dense * ups).sum(axis=1), code.success[0]))
        self.assertTrue(np.allclose(code.channel.column_sums(seqs), 1.0))

    def test_classical_guard(self):
        """单箱稀疏表超过上限时拒绝"""
        with self.assertRaises(GuardExceededError):
            build_covering(noisy_ensemble(), 8, classical_guard=64)

    def test_guard(self):
        with self.assertRaises(GuardExceededError):
            build_covering(phibar_ensemble(), 17)

    def test_invalid_epsilon(self):
        with self.assertRaises(ValidationError):
            build_covering(phibar_ensemble(), 2, epsilon=1.0)


class VerifyCoveringTest(unittest.TestCase):
    """
    覆盖码检查测试
    python -m pytest test/test_covering.py::VerifyCoveringTest -v
    """

    def test_phibar(self):
        cq = phibar_ensemble()
        report = verify_covering(build_covering(cq, 4, epsilon=0.1, delta=0.25), cq, 4)
        self.assertTrue(report.passed)
        self.assertAlmostEqual(report.min_success, 1.0, places=12)
        self.assertAlmostEqual(report.set_mass, 1.0, places=12)
        self.assertTrue(report.within_rate_target)

    def test_noisy_passes_structure(self):
        cq = noisy_ensemble()
        code = build_covering(cq, 8, epsilon=0.25)
        report = verify_covering(code, cq, 8)
        self.assertTrue(report.passed)
        self.assertAlmostEqual(report.min_success, code.min_success, delta=1e-9)
        self.assertIn("withinRateTarget", report.to_dict())

    def test_success_matrix_matches_build(self):
        cq = noisy_ensemble()
        code = build_covering(cq, 4, epsilon=0.25)
        s = success_matrix(code, cq)
        self.assertEqual(s.shape, (code.lam, code.mu))
        self.assertAlmostEqual(float(s.min()), code.min_success, delta=1e-9)

    def test_duplicated_entry(self):
        """f 表中重复的条目导致双射检查失败"""
        # Given
        cq = phibar_ensemble()
        code = build_covering(cq, 4, epsilon=0.1, delta=0.25)
        table = code.table.copy()
        table[0, 1] = table[0, 0]
        forged = dataclasses.replace(code, table=table)

        # When
        report = verify_covering(forged, cq, 4)

        # Then
        self.assertFalse(report.bijective)
        self.assertFalse(report.passed)
        self.assertFalse(report.to_dict()["passed"])


if __name__ == "__main__":
    unittest.main()
