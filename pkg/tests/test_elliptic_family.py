import sys
import os
ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.append(ROOT)
sys.path.append(os.path.join(ROOT, "framework"))
import cmath
import logging
import math
import random
import unittest
from fractions import Fraction

from core.chart_connection import KILLING_COMPONENTS, killing_residual, projectivize
from core.elliptic_family import (
    EQUATION_NAMES, FamilyParams, KillingAnsatz, QuasimodularSymbol, assemble_connection, composition_defect,
    deck_action, equivariance_residuals, genericity, killing_ansatz_residuals, killing_dimension,
    moduli_dimension, primed_residuals, verify_projective_flatness,
)
from core.modular_fixtures import random_sl2z, random_upper_half_point
from core.symbolic_core import ZERO, ExactComplex, FuncDeriv, GroupElement, coefficient, const, lin_form, z_classes

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s',
    handlers=[
        logging.StreamHandler(sys.stdout)
    ]
)
logger = logging.getLogger(__name__)

S = GroupElement(0, -1, 1, 0)
T = GroupElement(1, 1, 0, 1)
ELEMENTS = (S, T, GroupElement(2, 1, 1, 1), GroupElement(1, 0, 3, 1), GroupElement(-1, 0, 0, -1))
PARAMS = (
    (1, 3),
    (0, 1),
    (ExactComplex(Fraction(1, 2), 1), ExactComplex(-2)),
)


class TestFamilyParams(unittest.TestCase):
    def setUp(self):
        self.test_name = self._testMethodName
        logger.info(f"\n{'='*60}\nStarting test: {self.test_name}\n{'='*60}")

    def tearDown(self):
        logger.info(f"\nFinished test: {self.test_name}\n{'='*60}\n")

    def test_build_derives_constants(self):
        p = FamilyParams.build(1, 3)
        self.assertEqual(p.f12.constant, ExactComplex(1))
        self.assertEqual(p.g22.constant, ExactComplex(-3))
        self.assertEqual(p.mu, ExactComplex(6))
        self.assertTrue(p.f21.is_zero())

    def test_invalid_names(self):
        with self.assertRaises(ValueError):
            FamilyParams.build(1, 3, f12="w")
        with self.assertRaises(ValueError):
            FamilyParams.build(1, 3, g22="nu")

    def test_inconsistent_constant_rejected(self):
        p = FamilyParams.build(1, 3)
        with self.assertRaises(ValueError):
            FamilyParams(f11=p.f11, f22=p.f22, f12=QuasimodularSymbol("f12", ExactComplex(7)), g22=p.g22, w=p.w)

    def test_assemble_connection(self):
        p = FamilyParams.build(1, 3)
        conn = assemble_connection(p)
        self.assertEqual(conn.z_zz, const(2))
        self.assertEqual(conn.xi_zxi, const(4))
        self.assertTrue(conn.xi_zz.is_zero())
        self.assertEqual(conn.z_zxi, p.f12.at())
        self.assertEqual(conn.z_xixi, p.g12())
        # ξ'' 方程的 ξ' 系数为 −μ
        self.assertEqual(projectivize(conn).K1, const(-p.mu))

    def test_moduli_dimension(self):
        self.assertEqual(moduli_dimension(2).total, 11)
        for g in range(2, 51):
            count = moduli_dimension(g)
            self.assertEqual(count.total, 5 * g + 1)
            self.assertEqual(count.quadratic_differentials, 3 * g - 1)
        for g in (1, 0, -3):
            with self.assertRaises(ValueError):
                moduli_dimension(g)


class TestEquivariance(unittest.TestCase):
    def setUp(self):
        self.test_name = self._testMethodName
        logger.info(f"\n{'='*60}\nStarting test: {self.test_name}\n{'='*60}")

    def tearDown(self):
        logger.info(f"\nFinished test: {self.test_name}\n{'='*60}\n")

    def test_residuals_vanish_identically(self):
        rng = random.Random(2101)
        elements = list(ELEMENTS) + [random_sl2z(rng) for _ in range(3)]
        for f11, f22 in PARAMS:
            p = FamilyParams.build(f11, f22)
            for gamma in elements:
                residuals = equivariance_residuals(p, gamma)
                self.assertEqual(len(residuals), len(EQUATION_NAMES))
                for name, r in zip(EQUATION_NAMES, residuals):
                    self.assertTrue(r.is_zero(), f"{name} at [{gamma.key()}] with ({f11}, {f22}): {r}")
                for r in primed_residuals(p, gamma):
                    self.assertTrue(r.is_zero(), f"primed at [{gamma.key()}]: {r}")

    def test_withholding_w_leaves_its_own_law(self):
        p = FamilyParams.build(1, 3)
        for gamma in ELEMENTS[:4]:
            residuals = primed_residuals(p, gamma, symbols=[p.f12.name, p.g22.name])
            self.assertTrue(residuals[0].is_zero())
            self.assertTrue(residuals[2].is_zero())
            expected = (p.w.at() - p.w.at(gamma) * lin_form(gamma, -4)) / 2
            self.assertEqual(residuals[1], expected)

    def test_wrong_constant_breaks_equivariance(self):
        p = FamilyParams.build(1, 3)
        broken = FamilyParams.build(1, 3)
        object.__setattr__(broken, "f12", QuasimodularSymbol("f12", ExactComplex(2)))
        residual = equivariance_residuals(broken, S)[1]
        self.assertFalse(residual.is_zero())
        self.assertTrue(equivariance_residuals(p, S)[1].is_zero())

    def test_projectively_flat(self):
        for f11, f22 in PARAMS:
            L1, L2 = verify_projective_flatness(FamilyParams.build(f11, f22))
            self.assertTrue(L1.is_zero() and L2.is_zero())


class TestKillingDimension(unittest.TestCase):
    def setUp(self):
        self.test_name = self._testMethodName
        logger.info(f"\n{'='*60}\nStarting test: {self.test_name}\n{'='*60}")

    def tearDown(self):
        logger.info(f"\nFinished test: {self.test_name}\n{'='*60}\n")

    def test_genericity_flags(self):
        self.assertTrue(genericity(FamilyParams.build(1, 3)).generic)
        self.assertEqual(genericity(FamilyParams.build(1, 1)).failed(), ["f11 != f22", "mu != 1+f11"])
        self.assertEqual(genericity(FamilyParams.build(1, 0)).failed(), ["mu != 0"])
        self.assertIn("f22 != -1", genericity(FamilyParams.build(0, -1)).failed())

    def test_ansatz_solves_zz_components(self):
        R = killing_ansatz_residuals(FamilyParams.build(1, 3))
        self.assertEqual(len(R), len(KILLING_COMPONENTS))
        self.assertTrue(R[2].is_zero())
        self.assertTrue(R[3].is_zero())

    def test_ansatz_residuals_reduce_to_nu_conditions(self):
        for f11, f22 in ((1, 3), (ExactComplex(Fraction(1, 2), 1), ExactComplex(-2))):
            p = FamilyParams.build(f11, f22)
            ansatz = KillingAnsatz(p)
            e_key = (-p.mu, 0)
            a_key = (-ansatz.p, 0)

            classes = z_classes(killing_ansatz_residuals(p)[1])
            self.assertEqual(set(classes), {e_key, a_key}, f"({f11}, {f22})")
            self.assertEqual(classes[e_key], p.mu * ansatz.nu_condition_one())
            kappa = coefficient(classes[a_key], FuncDeriv("A"))
            self.assertTrue(kappa.is_constant() and not kappa.is_zero())

            # A = 0
            R = killing_residual(assemble_connection(p), ansatz.vector_field(with_a=False))
            classes = z_classes(R[0])
            self.assertEqual(classes[e_key], p.mu / ansatz.delta * ansatz.nu_condition_two())
            self.assertEqual(set(classes) - {e_key}, {(ZERO, 0)})

    def test_generic_dimension_is_one(self):
        for f11, f22 in ((1, 3), (0, 1)):
            report = killing_dimension(FamilyParams.build(f11, f22))
            failed = [s.name for s in report.stages if not s.passed]
            self.assertEqual(failed, [], f"({f11}, {f22})")
            self.assertEqual(report.dimension, 1)
            self.assertEqual(report.basis, ["d/dz"])
            self.assertEqual(report.branch, "generic")

    def test_non_generic_is_reported(self):
        report = killing_dimension(FamilyParams.build(1, 1))
        self.assertIsNone(report.dimension)
        self.assertTrue(report.branch.startswith("non-generic"))
        self.assertIn("not (f11 != f22)", report.branch)
        self.assertTrue(report.stages[0].passed)
        self.assertEqual(len(report.residual_conditions), 6)


class TestDeckAction(unittest.TestCase):
    def setUp(self):
        self.test_name = self._testMethodName
        logger.info(f"\n{'='*60}\nStarting test: {self.test_name}\n{'='*60}")

    def tearDown(self):
        logger.info(f"\nFinished test: {self.test_name}\n{'='*60}\n")

    def test_simple_elements(self):
        z, xi = 0.3 + 0.1j, 0.2 + 1.5j
        z0, xi0 = deck_action(GroupElement.identity(), z, xi)
        self.assertAlmostEqual(z0, z)
        self.assertAlmostEqual(xi0, xi)
        z1, xi1 = deck_action(T, z, xi)
        self.assertAlmostEqual(z1, z)
        self.assertAlmostEqual(xi1, xi + 1)
        z2, xi2 = deck_action(S, 0, 2j)
        self.assertAlmostEqual(z2, cmath.log(2j))
        self.assertAlmostEqual(xi2, 0.5j)
        z3, _ = deck_action(T, z, xi, branch=1)
        self.assertAlmostEqual(z3, z + 2j * math.pi)

    def test_lower_half_plane_rejected(self):
        with self.assertRaises(ValueError):
            deck_action(S, 0, 1 - 1j)
        with self.assertRaises(ValueError):
            deck_action(S, 0, 2.0)

    def test_composition_defect_is_a_period(self):
        rng = random.Random(2102)
        for _ in range(20):
            g1, g2 = random_sl2z(rng), random_sl2z(rng)
            xi = random_upper_half_point(rng)
            dz, dxi = composition_defect(g1, g2, 0.1 - 0.2j, xi)
            self.assertAlmostEqual(dz.real, round(dz.real), places=9)
            self.assertAlmostEqual(dz.imag, 0.0, places=9)
            self.assertLess(abs(dxi), 1e-9 * max(1.0, abs(xi)))


if __name__ == "__main__":
    unittest.main(verbosity=2)
