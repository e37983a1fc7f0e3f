# -*- coding:utf-8 -*-
"""
典型投影与纯度浓缩码的单元测试

覆盖：
- smallest_divisor_at_least / sequence_tables
- typical_projector 与按类型求和的质量
- relabel_permutation / lemma1_relabel
- build_concentration_code / converse_check
"""

import math
import os
import sys
import unittest

import numpy as np

sys.path.append(os.path.join(os.path.dirname(__file__), ".."))

from localpurity.common import GuardExceededError, ValidationError
from localpurity.povm_opt import kappa_local
from localpurity.qmat import diag, maximally_mixed, random_unitary
from localpurity.typicality import (
    ConcentrationCode,
    build_concentration_code,
    converse_check,
    lemma1_relabel,
    relabel_permutation,
    sequence_tables,
    smallest_divisor_at_least,
    typical_projector,
    typical_type_mass,
)

SKEWED = diag([0.9, 0.1])


def _binomial_mass(p: float, n: int, ks) -> float:
    return math.fsum(math.comb(n, k) * p ** k * (1 - p) ** (n - k) for k in ks)


# ========== 辅助函数 测试 ==========


class HelperTest(unittest.TestCase):
    """
    因子与序列表测试
    python -m pytest test/test_typicality.py::HelperTest -v
    """

    def test_smallest_divisor(self):
        self.assertEqual(smallest_divisor_at_least(1 << 20, 190), 256)
        self.assertEqual(smallest_divisor_at_least(81, 10), 27)
        self.assertEqual(smallest_divisor_at_least(64, 0), 1)
        self.assertEqual(smallest_divisor_at_least(12, 100), 12)

    def test_sequence_tables_order(self):
        """下标按 A-major 编码：x₁ 为最高位"""
        probs, logp = sequence_tables(np.array([0.75, 0.25]), 2)
        self.assertTrue(np.allclose(probs, [0.5625, 0.1875, 0.1875, 0.0625]))
        self.assertTrue(np.allclose(logp, np.log2(probs)))

    def test_zero_probability_symbol(self):
        probs, logp = sequence_tables(np.array([1.0, 0.0]), 3)
        self.assertEqual(probs[0], 1.0)
        self.assertTrue(np.all(np.isneginf(logp[1:])))


# ========== 典型投影 测试 ==========


class TypicalProjectorTest(unittest.TestCase):
    """
    典型投影测试
    python -m pytest test/test_typicality.py::TypicalProjectorTest -v
    """

    def test_pure_state(self):
        proj = typical_projector(diag([1.0, 0.0]), 6, 0.1)
        self.assertEqual(proj.size, 1)
        self.assertAlmostEqual(proj.mass, 1.0, places=15)

    def test_maximally_mixed(self):
        """均匀谱时所有序列都典型"""
        proj = typical_projector(maximally_mixed(2), 10, 0.05)
        self.assertEqual(proj.size, 1024)
        self.assertAlmostEqual(proj.mass, 1.0, places=12)

    def test_skewed_n20(self):
        """diag(.9,.1)，n=20，δ=0.1：只有恰含两个稀有符号的序列典型"""
        # When
        proj = typical_projector(SKEWED, 20, 0.1)

        # Then
        self.assertEqual(proj.size, 190)
        self.assertLessEqual(proj.size, proj.size_bound)
        self.assertLessEqual(proj.size, 2 ** (20 * (0.4690 + 0.1)))
        self.assertAlmostEqual(proj.mass, _binomial_mass(0.1, 20, [2]), delta=1e-12)
        self.assertAlmostEqual(proj.mass, typical_type_mass([0.9, 0.1], 20, 0.1), delta=1e-12)

    def test_mask_matches_indices(self):
        proj = typical_projector(SKEWED, 8, 0.2)
        self.assertEqual(int(proj.mask().sum()), proj.size)
        self.assertEqual(proj.dim, 256)
        self.assertEqual(set(proj.to_dict()), {"n", "delta", "entropy", "size", "sizeBound", "mass"})

    def test_mass_grows_asymptotically(self):
        """小 n 时质量受格点效应影响不单调，大 n 时趋于 1"""
        small = typical_type_mass([0.9, 0.1], 10, 0.1)
        large = typical_type_mass([0.9, 0.1], 200, 0.1)
        self.assertGreaterEqual(large, small)
        self.assertGreater(large, 0.8)

    def test_guard(self):
        with self.assertRaises(GuardExceededError):
            typical_projector(maximally_mixed(2), 21, 0.1)

    def test_invalid_arguments(self):
        with self.assertRaises(ValidationError):
            typical_projector(SKEWED, 0, 0.1)
        with self.assertRaises(ValidationError):
            typical_projector(SKEWED, 4, -0.1)


# ========== 重标号 测试 ==========


class RelabelTest(unittest.TestCase):
    """
    投影压缩的重标号测试
    python -m pytest test/test_typicality.py::RelabelTest -v
    """

    def test_chosen_indices_land_on_zero(self):
        # Given
        mask = np.array([False, True, False, True, True, False, False, False])

        # When
        perm = relabel_permutation(mask, 2)

        # Then
        self.assertEqual(sorted(perm.tolist()), list(range(8)))
        self.assertEqual(perm[[1, 3, 4]].tolist(), [0, 2, 4])

    def test_explicit_order(self):
        mask = np.array([True, True, False, False])
        perm = relabel_permutation(mask, 2, chosen=np.array([1, 0]))
        self.assertEqual(perm[1], 0)
        self.assertEqual(perm[0], 2)

    def test_rank_too_large(self):
        with self.assertRaises(ValidationError):
            relabel_permutation(np.array([True, True, True, False]), 2)

    def test_identity_projector(self):
        rho = SKEWED.matrix
        _, distance = lemma1_relabel(np.eye(2), rho, 2, 1)
        self.assertAlmostEqual(distance, 0.0, places=12)

    def test_single_level(self):
        """ρ=diag(.95,.05)，Π=|0⟩⟨0|：距离 = Tr((1−Π)ρ) = 0.05"""
        # When
        u, distance = lemma1_relabel(np.diag([1.0, 0.0]), np.diag([0.95, 0.05]), 1, 2)

        # Then
        self.assertAlmostEqual(distance, 0.05, places=12)
        self.assertTrue(np.allclose(u @ u.conj().T, np.eye(2)))

    def test_rotated_commuting_pair(self):
        # Given
        v = random_unitary(4, np.random.default_rng(1))
        rho = v @ np.diag([0.5, 0.3, 0.15, 0.05]) @ v.conj().T
        pi = v @ np.diag([1.0, 1.0, 0.0, 0.0]) @ v.conj().T

        # When
        u, distance = lemma1_relabel(pi, rho, 2, 2)

        # Then
        self.assertAlmostEqual(distance, 0.2, delta=1e-9)
        image = u @ pi @ u.conj().T
        self.assertTrue(np.allclose(np.diag(image).real, [1, 0, 1, 0], atol=1e-9))

    def test_typical_case(self):
        """n=10，δ=0.15：补齐后的投影，距离 = 1 − 补齐质量"""
        # Given
        code = build_concentration_code(SKEWED, 10, 0.15)
        probs, _ = sequence_tables(typical_projector(SKEWED, 10, 0.15).spectrum, 10)
        pi = np.diag((code.permutation % code.d2 == 0).astype(float))

        # When
        _, distance = lemma1_relabel(pi, np.diag(probs), code.d1, code.d2)

        # Then
        self.assertAlmostEqual(distance, code.lemma1_distance, delta=1e-9)

    def test_non_commuting(self):
        rho = np.array([[0.5, 0.5], [0.5, 0.5]])
        with self.assertRaises(ValidationError):
            lemma1_relabel(np.diag([1.0, 0.0]), rho, 1, 2)

    def test_bad_factorization(self):
        with self.assertRaises(ValidationError):
            lemma1_relabel(np.eye(4), np.eye(4) / 4, 3, 1)


# ========== 浓缩码 测试 ==========


class ConcentrationCodeTest(unittest.TestCase):
    """
    纯度浓缩码测试
    python -m pytest test/test_typicality.py::ConcentrationCodeTest -v
    """

    def test_pure_state(self):
        code = build_concentration_code(diag([1.0, 0.0]), 8, 0.1)
        self.assertEqual(code.rate, 1.0)
        self.assertEqual(code.achieved_epsilon, 0.0)

    def test_maximally_mixed(self):
        code = build_concentration_code(maximally_mixed(2), 8, 0.1)
        self.assertEqual(code.rate, 0.0)
        self.assertEqual(code.d2, 1)

    def test_skewed_n20(self):
        # When
        code = build_concentration_code(SKEWED, 20, 0.1)

        # Then
        self.assertEqual(code.typical_size, 190)
        self.assertEqual(code.d1, 256)
        self.assertEqual(code.d2, 4096)
        self.assertAlmostEqual(code.rate, 0.6, places=12)
        self.assertGreaterEqual(code.rate, 1 - 0.4690 - 0.1 - 0.05)
        self.assertGreaterEqual(code.padded_mass, code.typical_mass)
        self.assertAlmostEqual(code.achieved_epsilon, 2 * (1 - code.padded_mass), places=12)

    def test_rate_tracks_kappa(self):
        for n in (10, 16, 20):
            code = build_concentration_code(SKEWED, n, 0.1)
            self.assertGreaterEqual(code.rate, kappa_local(SKEWED) - 0.1 - 1.0 / n)

    def test_permutation_is_bijection(self):
        code = build_concentration_code(SKEWED, 12, 0.1)
        self.assertEqual(sorted(code.permutation.tolist()), list(range(4096)))
        self.assertEqual(int(np.sum(code.permutation % code.d2 == 0)), code.d1)

    def test_to_dict_keys(self):
        d = build_concentration_code(SKEWED, 6, 0.1).to_dict()
        for key in ("d1", "d2", "rate", "achievedEpsilon", "typicalMass"):
            self.assertIn(key, d)


class ConverseTest(unittest.TestCase):
    """
    逆定理检验
    python -m pytest test/test_typicality.py::ConverseTest -v
    """

    def test_pure_state_slack(self):
        code = build_concentration_code(diag([1.0, 0.0]), 8, 0.1)
        slack = converse_check(code, diag([1.0, 0.0]))
        self.assertGreaterEqual(slack, 0.0)
        self.assertAlmostEqual(slack, 1 / (math.e * 8), places=12)

    def test_emitted_codes_respect_converse(self):
        for rho in (SKEWED, diag([0.7, 0.3]), maximally_mixed(2), diag([0.6, 0.3, 0.1])):
            for n in (4, 8):
                code = build_concentration_code(rho, n, 0.1)
                self.assertGreaterEqual(converse_check(code, rho), -1e-9)

    def test_forged_code_rejected(self):
        """混合态上声称速率 log₂ d 的假码"""
        fake = ConcentrationCode(n=10, d1=1, d2=1024, achieved_epsilon=0.0)
        self.assertLess(converse_check(fake, maximally_mixed(2)), 0.0)


if __name__ == "__main__":
    unittest.main()
