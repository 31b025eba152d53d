import sys
import os
ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.append(ROOT)
sys.path.append(os.path.join(ROOT, "framework"))
import cmath
import logging
import pickle
import random
import unittest
from fractions import Fraction

from core.symbolic_core import (
    EvaluationError, ExactComplex, Expr, ExpZ, FuncDeriv, GroupElement, I, LinForm, NumericBindings,
    ONE, ZERO, coefficient, const, differentiate, differentiate_n, eval_numeric, exp_z, func,
    lin_form, scale, substitute, substitute_function, var, z_classes,
)

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s',
    handlers=[
        logging.StreamHandler(sys.stdout)
    ]
)
logger = logging.getLogger(__name__)

PROPERTY_CASES = 200
ELEMENTS = (
    GroupElement(0, -1, 1, 0),
    GroupElement(1, 1, 0, 1),
    GroupElement(2, 1, 1, 1),
    GroupElement(1, 0, 3, 1),
)
# f(ξ) = e^{aξ}, g(ξ) = e^{bξ}
F_RATE = 0.3 + 0.2j
G_RATE = -0.25 + 0.1j


def _exp_oracle(rate):
    return lambda order, point: rate ** order * cmath.exp(rate * point)


def bindings(z=0.3 - 0.2j, xi=0.4 + 1.1j) -> NumericBindings:
    return NumericBindings(z=z, xi=xi, functions={"f": _exp_oracle(F_RATE), "g": _exp_oracle(G_RATE)})


def random_exact(rng: random.Random) -> ExactComplex:
    return ExactComplex(Fraction(rng.randint(-4, 4), rng.randint(1, 3)), Fraction(rng.randint(-2, 2), rng.randint(1, 2)))


def random_atom(rng: random.Random) -> Expr:
    kind = rng.randrange(6)
    if kind == 0:
        return var("z")
    if kind == 1:
        return var("xi")
    if kind == 2:
        return func(rng.choice(("f", "g")), rng.randint(0, 2))
    if kind == 3:
        return func(rng.choice(("f", "g")), rng.randint(0, 1), rng.choice(ELEMENTS))
    if kind == 4:
        return lin_form(rng.choice(ELEMENTS), rng.choice((-3, -2, -1, 1, 2)))
    return exp_z(ExactComplex(Fraction(rng.randint(-3, 3), rng.randint(1, 2))) or ONE)


def random_expr(rng: random.Random) -> Expr:
    total = Expr()
    for _ in range(rng.randint(1, 3)):
        term = const(random_exact(rng))
        for _ in range(rng.randint(0, 3)):
            term = term * random_atom(rng)
        total = total + term
    return total


def close(a: complex, b: complex, rel: float = 1e-9) -> bool:
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


class TestExactComplex(unittest.TestCase):
    def setUp(self):
        self.test_name = self._testMethodName
        logger.info(f"\n{'='*60}\nStarting test: {self.test_name}\n{'='*60}")

    def tearDown(self):
        logger.info(f"\nFinished test: {self.test_name}\n{'='*60}\n")

    def test_parse_and_format(self):
        """精确复数字符串的解析与规范输出"""
        value = ExactComplex.parse("3/2-1/4i")
        self.assertEqual(value, ExactComplex(Fraction(3, 2), Fraction(-1, 4)))
        self.assertEqual(str(value), "3/2-1/4i")
        self.assertEqual(str(ExactComplex.parse("-2i")), "-2i")
        self.assertEqual(ExactComplex.parse("i"), I)
        self.assertEqual(str(ExactComplex.parse(" 5 ")), "5")
        self.assertEqual(str(ExactComplex.parse("6/4+i")), "3/2+i")

    def test_parse_rejects_garbage(self):
        for text in ("", "abc", "1/0", "2+3", "i2", "1.5"):
            with self.assertRaises(ValueError, msg=text):
                ExactComplex.parse(text)

    def test_field_arithmetic(self):
        a, b = ExactComplex.parse("1+2i"), ExactComplex.parse("3-i")
        self.assertEqual(a * b, ExactComplex(5, 5))
        self.assertEqual((a * b) / b, a)
        self.assertEqual(I * I, -ONE)
        self.assertEqual(a ** -1 * a, ONE)
        self.assertEqual(1 - a, ExactComplex(0, -2))
        with self.assertRaises(ZeroDivisionError):
            a / ZERO

    def test_hash_agrees_with_rational_equality(self):
        self.assertEqual(hash(ExactComplex(5)), hash(5))
        self.assertEqual(hash(ExactComplex(Fraction(-3, 4))), hash(Fraction(-3, 4)))
        self.assertIn(ExactComplex(5), {5: "five"})
        self.assertIn(Fraction(1, 2), {ExactComplex(Fraction(1, 2))})
        self.assertEqual(len({ExactComplex(2), 2, Fraction(4, 2)}), 1)

    def test_immutable_and_picklable(self):
        a = ExactComplex.parse("1/3-2i")
        with self.assertRaises(AttributeError):
            a.re = 1
        self.assertEqual(pickle.loads(pickle.dumps(a)), a)


class TestExpr(unittest.TestCase):
    def setUp(self):
        self.test_name = self._testMethodName
        logger.info(f"\n{'='*60}\nStarting test: {self.test_name}\n{'='*60}")

    def tearDown(self):
        logger.info(f"\nFinished test: {self.test_name}\n{'='*60}\n")

    def test_normal_form_cancels(self):
        x = var("z") * func("f") + const(2)
        self.assertTrue((x - x).is_zero())
        self.assertEqual(x + x, scale(x, 2))
        self.assertEqual(str(Expr()), "0")

    def test_exponentials_merge(self):
        self.assertEqual(exp_z(2) * exp_z(-2), const(1))
        self.assertEqual(exp_z(1) * exp_z(1), exp_z(2))

    def test_lin_form_powers(self):
        s = ELEMENTS[0]
        self.assertEqual(lin_form(s, 2) * lin_form(s, -2), const(1))
        self.assertEqual(lin_form(s, 1) ** -3, lin_form(s, -3))
        # c = 0 时并入常数 d^n
        self.assertEqual(lin_form(GroupElement(1, 5, 0, 1), -4), const(1))
        self.assertEqual(lin_form(GroupElement(-1, 0, 0, -1), 3), const(-1))

    def test_opposite_elements_share_atoms(self):
        for g in (GroupElement(2, 1, 1, 1), GroupElement(1, 0, ExactComplex(0, -1), 1), GroupElement(1, 3, 0, 1)):
            n = -g
            self.assertEqual(func("f", 0, n), func("f", 0, g))
            self.assertEqual(func("f", 2, n) - func("f", 2, g), Expr())
            self.assertEqual(differentiate(func("f", 0, n), "xi"), differentiate(func("f", 0, g), "xi"))
            for power in (-3, -2, 1, 2):
                sign = ONE if power % 2 == 0 else -ONE
                self.assertEqual(lin_form(n, power), sign * lin_form(g, power), f"[{g.key()}]^{power}")
            self.assertTrue((lin_form(g, 1) + lin_form(n, 1)).is_zero())

    def test_lin_form_sign_evaluates_unchanged(self):
        g = -GroupElement(1, 0, ExactComplex(0, -1), 1)
        xi = 0.3 + 1.1j
        value = eval_numeric(lin_form(g, -1), NumericBindings(xi=xi))
        self.assertAlmostEqual(value, 1 / (complex(g.c) * xi + complex(g.d)))
        with self.assertRaises(ValueError):
            LinForm(ExactComplex(-1), ExactComplex(2))

    def test_negative_power_only_for_lin_form(self):
        with self.assertRaises(ValueError):
            var("z") ** -1
        with self.assertRaises(ValueError):
            (var("z") + 1) ** -1

    def test_central_argument_is_plain(self):
        self.assertEqual(func("f", 0, GroupElement(-1, 0, 0, -1)), func("f"))

    def test_group_element_requires_det_one(self):
        with self.assertRaises(ValueError):
            GroupElement(1, 1, 1, 1)

    def test_immutable_and_picklable(self):
        x = var("xi") * func("f", 1, ELEMENTS[2]) * lin_form(ELEMENTS[2], -2)
        with self.assertRaises(AttributeError):
            x._terms = {}
        self.assertEqual(pickle.loads(pickle.dumps(x)), x)


class TestCalculus(unittest.TestCase):
    def setUp(self):
        self.test_name = self._testMethodName
        logger.info(f"\n{'='*60}\nStarting test: {self.test_name}\n{'='*60}")

    def tearDown(self):
        logger.info(f"\nFinished test: {self.test_name}\n{'='*60}\n")

    def test_basic_derivatives(self):
        z, xi = var("z"), var("xi")
        self.assertEqual(differentiate(z ** 3, "z"), 3 * z ** 2)
        self.assertEqual(differentiate(exp_z(-2), "z"), -2 * exp_z(-2))
        self.assertTrue(differentiate(exp_z(5), "xi").is_zero())
        self.assertEqual(differentiate(func("f"), "xi"), func("f", 1))
        self.assertTrue(differentiate(func("f"), "z").is_zero())
        self.assertEqual(differentiate_n(xi ** 4, "xi", 4), const(24))

    def test_chain_rule_through_moebius(self):
        """d/dξ f(γξ) = f'(γξ)(cξ+d)^-2"""
        s = ELEMENTS[2]
        self.assertEqual(differentiate(func("f", 0, s), "xi"), func("f", 1, s) * lin_form(s, -2))
        self.assertEqual(differentiate(lin_form(s, -1), "xi"), -lin_form(s, -2))

    def test_chain_rule_matches_finite_difference(self):
        s = ELEMENTS[2]
        x = func("f", 0, s) * lin_form(s, -2) + var("xi") * func("g")
        dx = differentiate(x, "xi")
        h = 1e-6
        xi = 0.4 + 1.1j
        fd = (eval_numeric(x, bindings(xi=xi + h)) - eval_numeric(x, bindings(xi=xi - h))) / (2 * h)
        self.assertTrue(close(eval_numeric(dx, bindings(xi=xi)), fd, 1e-7))

    def test_substitute(self):
        f = FuncDeriv("f")
        x = func("f") ** 2 + func("f") * var("z")
        out = substitute(x, f, var("xi") + 1)
        self.assertEqual(out, (var("xi") + 1) ** 2 + (var("xi") + 1) * var("z"))

    def test_substitute_function_lifts_derivatives(self):
        x = func("f", 2) + func("f")
        out = substitute_function(x, "f", var("xi") ** 3)
        self.assertEqual(out, 6 * var("xi") + var("xi") ** 3)

    def test_coefficient_and_classes(self):
        A = FuncDeriv("A")
        x = 3 * func("A") * exp_z(-2) + func("B") * exp_z(-2) + func("A") ** 2 + var("z") * func("C")
        self.assertEqual(coefficient(x, A), 3 * exp_z(-2))
        self.assertEqual(coefficient(x, A, 2), const(1))
        classes = z_classes(x)
        self.assertEqual(classes[(ExactComplex(-2), 0)], 3 * func("A") + func("B"))
        self.assertEqual(classes[(ZERO, 1)], func("C"))
        self.assertEqual(classes[(ZERO, 0)], func("A") ** 2)

    def test_eval_errors(self):
        with self.assertRaises(EvaluationError):
            eval_numeric(var("z"), NumericBindings(xi=1j))
        with self.assertRaises(EvaluationError):
            eval_numeric(func("h"), bindings())
        with self.assertRaises(EvaluationError):
            eval_numeric(lin_form(GroupElement(1, 0, 1, 1), -1), NumericBindings(xi=-1))


class TestProperties(unittest.TestCase):
    """固定种子的随机性质检查"""

    def setUp(self):
        self.test_name = self._testMethodName
        logger.info(f"\n{'='*60}\nStarting test: {self.test_name}\n{'='*60}")

    def tearDown(self):
        logger.info(f"\nFinished test: {self.test_name}\n{'='*60}\n")

    def test_leibniz_rule(self):
        rng = random.Random(1201)
        for case in range(PROPERTY_CASES):
            x, y = random_expr(rng), random_expr(rng)
            v = rng.choice(("z", "xi"))
            lhs = differentiate(x * y, v)
            rhs = differentiate(x, v) * y + x * differentiate(y, v)
            self.assertEqual(lhs, rhs, f"case {case}: x = {x}, y = {y}, v = {v}")

    def test_mixed_partials_commute(self):
        rng = random.Random(1202)
        for case in range(PROPERTY_CASES):
            x = random_expr(rng) * random_expr(rng)
            self.assertEqual(differentiate(differentiate(x, "z"), "xi"),
                             differentiate(differentiate(x, "xi"), "z"), f"case {case}: x = {x}")

    def test_evaluation_is_a_ring_homomorphism(self):
        rng = random.Random(1203)
        for case in range(PROPERTY_CASES):
            x, y = random_expr(rng), random_expr(rng)
            b = bindings(z=complex(rng.uniform(-1, 1), rng.uniform(-1, 1)),
                         xi=complex(rng.uniform(-1, 1), rng.uniform(0.5, 2.0)))
            ex, ey = eval_numeric(x, b), eval_numeric(y, b)
            self.assertTrue(close(eval_numeric(x + y, b), ex + ey), f"case {case}: sum")
            self.assertTrue(close(eval_numeric(x * y, b), ex * ey), f"case {case}: product")


if __name__ == "__main__":
    unittest.main(verbosity=2)
