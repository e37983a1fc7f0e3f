# -*- coding:utf-8 -*-
"""
熵泛函的单元测试

覆盖：
- von_neumann / shannon / binary_entropy
- mutual_info / conditional_entropy / conditional_mutual_info
- holevo_information / cq_joint_entropy
- fannes_check / subadditivity_check
"""

import math
import os
import sys
import unittest

import numpy as np

sys.path.append(os.path.join(os.path.dirname(__file__), ".."))

from localpurity.entropy import (
    binary_entropy,
    conditional_entropy,
    conditional_mutual_info,
    cq_joint_entropy,
    entropy_report,
    fannes_check,
    holevo_information,
    mutual_info,
    shannon,
    subadditivity_check,
    von_neumann,
)
from localpurity.qmat import (
    Povm,
    apply_povm,
    bell_state,
    common_randomness_state,
    dephase,
    dephase_local,
    diag,
    maximally_mixed,
    product,
    pure,
    random_bipartite,
    random_density,
    random_unitary,
)


# ========== 熵 测试 ==========


class VonNeumannTest(unittest.TestCase):
    """
    冯·诺依曼熵测试
    python -m pytest test/test_entropy.py::VonNeumannTest -v
    """

    def test_pure_state(self):
        self.assertAlmostEqual(von_neumann(pure([1, 2j, -1])), 0.0, places=10)

    def test_maximally_mixed(self):
        """I/d 的熵为 log₂ d"""
        for d in (2, 3, 5):
            self.assertAlmostEqual(von_neumann(maximally_mixed(d)), math.log2(d), places=12)

    def test_skewed_qubit(self):
        """diag(.9,.1) → 0.4690"""
        self.assertAlmostEqual(von_neumann(diag([0.9, 0.1])), 0.4690, places=4)
        self.assertAlmostEqual(von_neumann(diag([0.9, 0.1])), binary_entropy(0.9), places=12)

    def test_unitary_invariance(self):
        """H(UρU†) = H(ρ)"""
        rng = np.random.default_rng(6)
        for _ in range(20):
            rho = random_density(4, rng)
            u = random_unitary(4, rng)
            rotated = u @ rho.matrix @ u.conj().T
            self.assertAlmostEqual(von_neumann(rotated), von_neumann(rho), delta=1e-9)

    def test_dephasing_does_not_decrease_entropy(self):
        """H(dephase(ρ)) ≥ H(ρ)"""
        rng = np.random.default_rng(8)
        for _ in range(50):
            rho = random_density(3, rng)
            self.assertGreaterEqual(von_neumann(dephase(rho)), von_neumann(rho) - 1e-9)

    def test_shannon_ignores_zeros(self):
        self.assertAlmostEqual(shannon([0.5, 0.0, 0.5]), 1.0, places=15)


# ========== 互信息 测试 ==========


class MutualInfoTest(unittest.TestCase):
    """
    互信息与条件熵测试
    python -m pytest test/test_entropy.py::MutualInfoTest -v
    """

    def test_product_state(self):
        rng = np.random.default_rng(1)
        s = product(random_density(2, rng), random_density(3, rng))
        self.assertAlmostEqual(mutual_info(s), 0.0, delta=1e-9)
        self.assertAlmostEqual(subadditivity_check(s), 0.0, delta=1e-9)

    def test_bell_state(self):
        """Φ⁺: I = 2，H(A|B) = −1"""
        self.assertAlmostEqual(mutual_info(bell_state()), 2.0, places=10)
        self.assertAlmostEqual(subadditivity_check(bell_state()), 2.0, places=10)
        self.assertAlmostEqual(conditional_entropy(bell_state()), -1.0, places=10)

    def test_common_randomness(self):
        """Φ̄: I = 1"""
        self.assertAlmostEqual(mutual_info(common_randomness_state()), 1.0, places=12)

    def test_report_identity(self):
        """iAB = hA + hB − hAB"""
        r = entropy_report(random_bipartite(2, 3, np.random.default_rng(2)))
        self.assertAlmostEqual(r.i_ab, r.h_a + r.h_b - r.h_ab, places=12)
        self.assertEqual(set(r.to_dict()), {"hA", "hB", "hAB", "iAB"})

    def test_subadditivity_random(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            self.assertGreaterEqual(subadditivity_check(random_bipartite(2, 2, rng)), -1e-9)

    def test_data_processing(self):
        """测量 A 后的 I(X;B) 不超过 I(A;B)"""
        rng = np.random.default_rng(13)
        for _ in range(20):
            s = random_bipartite(2, 2, rng)
            basis = random_unitary(2, rng)
            cq = apply_povm(Povm.from_basis(basis), s)
            self.assertLessEqual(holevo_information(cq), mutual_info(s) + 1e-9)
            self.assertLessEqual(mutual_info(dephase_local(s, "A", basis)), mutual_info(s) + 1e-9)


class ConditionalMutualInfoTest(unittest.TestCase):
    """
    条件互信息测试
    python -m pytest test/test_entropy.py::ConditionalMutualInfoTest -v
    """

    def test_fully_product(self):
        rng = np.random.default_rng(3)
        m = np.kron(
            np.kron(random_density(2, rng).matrix, random_density(2, rng).matrix),
            random_density(2, rng).matrix,
        )
        self.assertAlmostEqual(conditional_mutual_info(m, (2, 2, 2)), 0.0, delta=1e-9)

    def test_classical_ghz(self):
        """均匀 |xxx⟩ 的 I(A;B|X) = 0"""
        m = np.zeros((8, 8))
        m[0, 0] = m[7, 7] = 0.5
        self.assertAlmostEqual(conditional_mutual_info(m, (2, 2, 2)), 0.0, delta=1e-12)

    def test_conditioned_blocks(self):
        """X=0 时 AB 为 Φ̄，X=1 时为乘积态：I(A;B|X) = ½·1"""
        # Given
        x0 = np.zeros((2, 2))
        x0[0, 0] = 1.0
        x1 = np.zeros((2, 2))
        x1[1, 1] = 1.0
        m = 0.5 * np.kron(common_randomness_state().matrix, x0) + 0.5 * np.kron(np.eye(4) / 4, x1)

        # Then
        self.assertAlmostEqual(conditional_mutual_info(m, (2, 2, 2)), 0.5, places=10)


class HolevoTest(unittest.TestCase):
    """
    经典-量子态熵测试
    python -m pytest test/test_entropy.py::HolevoTest -v
    """

    def test_phibar_measurement(self):
        """Φ̄ 上的计算基测量：I(X;B) = 1"""
        cq = apply_povm(Povm.computational(2), common_randomness_state())
        self.assertAlmostEqual(holevo_information(cq), 1.0, places=12)

    def test_joint_entropy_matches_block_matrix(self):
        """H(XB) = H(p) + Σ p H(ρ_x)"""
        cq = apply_povm(Povm.computational(2), random_bipartite(2, 2, np.random.default_rng(4)))
        self.assertAlmostEqual(cq_joint_entropy(cq), von_neumann(cq.joint_matrix()), delta=1e-9)


class FannesTest(unittest.TestCase):
    """
    Fannes 不等式测试
    python -m pytest test/test_entropy.py::FannesTest -v
    """

    def test_equal_states(self):
        rho = random_density(3, np.random.default_rng(5))
        lhs, rhs = fannes_check(rho, rho)
        self.assertAlmostEqual(lhs, 0.0, places=12)
        self.assertAlmostEqual(rhs, 1 / math.e, places=12)

    def test_pure_against_mixed(self):
        """|0⟩⟨0| 与 I/2：(1, 1/e + 1)"""
        lhs, rhs = fannes_check(diag([1, 0]), maximally_mixed(2))
        self.assertAlmostEqual(lhs, 1.0, places=12)
        self.assertAlmostEqual(rhs, 1 / math.e + 1.0, places=12)

    def test_random_pairs(self):
        rng = np.random.default_rng(14)
        for _ in range(100):
            d = int(rng.integers(2, 5))
            lhs, rhs = fannes_check(random_density(d, rng), random_density(d, rng))
            self.assertLessEqual(lhs, rhs + 1e-9)


if __name__ == "__main__":
    unittest.main()
