"""
椭圆主丛上 Γ-不变亚纯仿射联络族

参数：常数 f11, f22；形式拟模符号 f12, g22（权 2）；形式二次微分 w（权 4）；
导出 g12 = (w − f12' + g22')/2，f21 ≡ 0。联络为 ∇₀ 加上这些系数。
"""
import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from pydantic import BaseModel, model_validator

from core.chart_connection import (
    ChartConnection2D, KILLING_COMPONENTS, VectorFieldExpr,
    killing_residual, liouville_invariants, projectivize,
)
from core.symbolic_core import (
    ExactComplex, Expr, FuncDeriv, GroupElement, ONE, ZERO,
    coefficient, const, differentiate, differentiate_n, exp_z, func, lin_form,
    substitute, substitute_function, var, z_classes,
)
from utils.logging_config import setup_logging

logger = setup_logging(log_level=logging.INFO, log_tag="elliptic_family")

# Killing 约化中未知函数使用的符号名
KILLING_UNKNOWNS = ("nu", "A", "B", "C")

EQUATION_NAMES = ("f11", "f12", "f21", "f22", "g12", "g22")
PRIMED_EQUATION_NAMES = ("f12", "g12", "g22")


@dataclass(frozen=True)
class QuasimodularSymbol:
    """f(ξ) = f(γξ)(cξ+d)^-2 − K·c·(cξ+d)^-1"""
    name: str
    constant: ExactComplex
    pole: str = "xi0"
    weight = 2

    def __post_init__(self):
        object.__setattr__(self, "constant", ExactComplex.coerce(self.constant))

    def at(self, gamma: Optional[GroupElement] = None, order: int = 0) -> Expr:
        return func(self.name, order, gamma)

    def law(self, gamma: GroupElement) -> Expr:
        return self.at(gamma) * lin_form(gamma, -2) - self.constant * gamma.c * lin_form(gamma, -1)


@dataclass(frozen=True)
class QuadraticDifferentialSymbol:
    """w(ξ) = w(γξ)(cξ+d)^-4"""
    name: str
    pole: str = "xi0"
    weight = 4

    def at(self, gamma: Optional[GroupElement] = None, order: int = 0) -> Expr:
        return func(self.name, order, gamma)

    def law(self, gamma: GroupElement) -> Expr:
        return self.at(gamma) * lin_form(gamma, -4)


@dataclass(frozen=True)
class FamilyParams:
    f11: ExactComplex
    f22: ExactComplex
    f12: QuasimodularSymbol
    g22: QuasimodularSymbol
    w: QuadraticDifferentialSymbol

    def __post_init__(self):
        object.__setattr__(self, "f11", ExactComplex.coerce(self.f11))
        object.__setattr__(self, "f22", ExactComplex.coerce(self.f22))
        names = [self.f12.name, self.g22.name, self.w.name]
        if len(set(names)) != 3:
            raise ValueError(f"函数符号名必须互不相同: {names}")
        clash = set(names) & set(KILLING_UNKNOWNS)
        if clash:
            raise ValueError(f"函数符号名与保留名冲突: {sorted(clash)}")
        if self.f12.constant != self.f22 - 2 * self.f11:
            raise ValueError(f"K({self.f12.name}) 必须等于 f22 − 2f11 = {self.f22 - 2 * self.f11}")
        if self.g22.constant != -self.f22:
            raise ValueError(f"K({self.g22.name}) 必须等于 −f22 = {-self.f22}")

    @classmethod
    def build(cls, f11, f22, f12: str = "f12", g22: str = "g22", w: str = "w", pole: str = "xi0") -> "FamilyParams":
        """由 f11, f22 推出两个拟模常数并构造参数"""
        f11, f22 = ExactComplex.coerce(f11), ExactComplex.coerce(f22)
        return cls(
            f11=f11, f22=f22,
            f12=QuasimodularSymbol(f12, f22 - 2 * f11, pole),
            g22=QuasimodularSymbol(g22, -f22, pole),
            w=QuadraticDifferentialSymbol(w, pole),
        )

    @property
    def f21(self) -> Expr:
        return Expr()

    @property
    def mu(self) -> ExactComplex:
        return 1 + 2 * self.f22 - self.f11

    def g12(self, gamma: Optional[GroupElement] = None) -> Expr:
        """(w − f12' + g22')/2 在 ξ（gamma 为 None）或 γξ 处"""
        return (self.w.at(gamma) - self.f12.at(gamma, 1) + self.g22.at(gamma, 1)) / 2

    def laws(self) -> Dict[str, object]:
        return {self.f12.name: self.f12, self.g22.name: self.g22, self.w.name: self.w}


@dataclass(frozen=True)
class GenericityReport:
    mu: ExactComplex
    mu_nonzero: bool
    f11_ne_f22: bool
    f22_ne_minus_one: bool
    mu_ne_one_plus_f11: bool

    @property
    def generic(self) -> bool:
        return all(self.flags().values())

    def flags(self) -> Dict[str, bool]:
        return {
            "mu != 0": self.mu_nonzero,
            "f11 != f22": self.f11_ne_f22,
            "f22 != -1": self.f22_ne_minus_one,
            "mu != 1+f11": self.mu_ne_one_plus_f11,
        }

    def failed(self) -> List[str]:
        return [name for name, ok in self.flags().items() if not ok]


@dataclass
class KillingStage:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class KillingReport:
    dimension: Optional[int]
    basis: List[str]
    branch: str
    genericity: GenericityReport
    stages: List[KillingStage] = field(default_factory=list)
    residual_conditions: List[str] = field(default_factory=list)


class ModuliCount(BaseModel):
    genus: int
    quasimodular_f12: int
    quasimodular_g22: int
    quadratic_differentials: int
    total: int

    @model_validator(mode="after")
    def _check_sum(self):
        if self.quasimodular_f12 + self.quasimodular_g22 + self.quadratic_differentials != self.total:
            raise ValueError("参数空间维数分解之和与总数不符")
        return self


def assemble_connection(p: FamilyParams) -> ChartConnection2D:
    return ChartConnection2D(
        z_zz=const(1 + p.f11),
        z_zxi=p.f12.at(),
        z_xixi=p.g12(),
        xi_zz=p.f21,
        xi_zxi=const(1 + p.f22),
        xi_xixi=p.g22.at(),
    )


def apply_transformation_laws(expr: Expr, p: FamilyParams, gamma: GroupElement,
                              symbols: Optional[Iterable[str]] = None) -> Expr:
    """把 ξ 处的 f12, g22, w（或其中 symbols 指定的部分）用 γξ 处的值改写"""
    laws = p.laws()
    for name in (symbols if symbols is not None else laws.keys()):
        expr = substitute_function(expr, name, laws[name].law(gamma))
    return expr


def equivariance_residuals(p: FamilyParams, gamma: GroupElement,
                           symbols: Optional[Iterable[str]] = None) -> Tuple[Expr, ...]:
    """
    γ-等变方程组的 6 个残差，按 EQUATION_NAMES（被变换的系数）排序
    :param symbols: 代入变换律的符号，None 表示全部
    """
    c = gamma.c

    def L(n):
        return lin_form(gamma, n)

    f11, f22 = const(p.f11), const(p.f22)
    f21, f21_g = p.f21, p.f21
    f12, f12_g = p.f12.at(), p.f12.at(gamma)
    g22, g22_g = p.g22.at(), p.g22.at(gamma)
    g12, g12_g = p.g12(), p.g12(gamma)
    c2, c3 = c * c, c * c * c

    equations = (
        f11 - (f11 - c * f21_g * L(1)),
        f12 - (f12_g * L(-2) - 2 * c2 * f21_g - c * f22 * L(-1) + 2 * c * f11 * L(-1)),
        f21 - f21_g * L(2),
        f22 - (2 * c * f21_g * L(1) + f22),
        g12 - (g12_g * L(-4) + c2 * f11 * L(-2) + c * f12_g * L(-3)
               - c3 * f21_g * L(-1) - c2 * f22 * L(-2) - c * g22_g * L(-3)),
        g22 - (g22_g * L(-2) + c * f22 * L(-1) + c2 * f21_g),
    )
    residuals = tuple(apply_transformation_laws(e, p, gamma, symbols) for e in equations)
    for name, r in zip(EQUATION_NAMES, residuals):
        if not r.is_zero():
            logger.debug(f"等变方程 {name} 在 γ=[{gamma.key()}] 下残差非零: {r}")
    return residuals


def primed_residuals(p: FamilyParams, gamma: GroupElement,
                     symbols: Optional[Iterable[str]] = None) -> Tuple[Expr, ...]:
    """f21 = 0 且 f11, f22 为常数时化简后的 f12, g12, g22 三个方程"""
    c = gamma.c

    def L(n):
        return lin_form(gamma, n)

    f11, f22 = const(p.f11), const(p.f22)
    f12, f12_g = p.f12.at(), p.f12.at(gamma)
    g22, g22_g = p.g22.at(), p.g22.at(gamma)
    equations = (
        f12 - (f12_g * L(-2) - c * f22 * L(-1) + 2 * c * f11 * L(-1)),
        p.g12() - (p.g12(gamma) * L(-4) + c * c * (f11 - f22) * L(-2) + c * (f12_g - g22_g) * L(-3)),
        g22 - (g22_g * L(-2) + c * f22 * L(-1)),
    )
    return tuple(apply_transformation_laws(e, p, gamma, symbols) for e in equations)


def genericity(p: FamilyParams) -> GenericityReport:
    mu = p.mu
    return GenericityReport(
        mu=mu,
        mu_nonzero=not mu.is_zero(),
        f11_ne_f22=p.f11 != p.f22,
        f22_ne_minus_one=p.f22 != -ONE,
        mu_ne_one_plus_f11=mu != 1 + p.f11,
    )


def _split_linear(expr: Expr, atom: FuncDeriv) -> Tuple[Expr, Expr]:
    """expr = coef·atom + rest，atom 只能以一次幂出现"""
    coef = coefficient(expr, atom)
    return coef, expr - coef * Expr({((atom, 1),): ONE})


@dataclass
class KillingAnsatz:
    """b = ν e^{−μz} + C，a = −(f12 ν/δ) e^{−μz} + A·e^{−(1+f11)z}（1+f11 = 0 时为 A·z）+ B"""
    params: FamilyParams

    @property
    def delta(self) -> ExactComplex:
        return self.params.f11 - self.params.f22

    @property
    def p(self) -> ExactComplex:
        return 1 + self.params.f11

    @property
    def r(self) -> ExactComplex:
        return 1 + self.params.f22

    def vector_field(self, with_nu: bool = True, with_a: bool = True) -> VectorFieldExpr:
        mu = self.params.mu
        nu, A, B, C = func("nu"), func("A"), func("B"), func("C")
        E = exp_z(-mu)
        b = C + (nu * E if with_nu else Expr())
        a = B
        if with_nu:
            a = a - self.params.f12.at() * nu * E / self.delta
        if with_a:
            a = a + A * (exp_z(-self.p) if self.p else var("z"))
        return VectorFieldExpr(a, b)

    def nu_condition_one(self) -> Expr:
        """−ν' + ((1+f11)/δ·f12 − g22)ν，来自 (z,ξ) 的 ∂ξ 分量"""
        nu = func("nu")
        return -differentiate(nu, "xi") + self.lambda_one() * nu

    def lambda_one(self) -> Expr:
        return self.p / self.delta * self.params.f12.at() - self.params.g22.at()

    def nu_condition_two(self) -> Expr:
        """f12 ν' − (δ g12 − f12')ν，来自 (z,ξ) 的 ∂z 分量"""
        nu = func("nu")
        f12 = self.params.f12.at()
        return f12 * differentiate(nu, "xi") - (self.delta * self.params.g12() - differentiate(f12, "xi")) * nu


def killing_ansatz_residuals(p: FamilyParams) -> Tuple[Expr, ...]:
    """把一般解的形状代回 Killing 方程组得到的 6 个残差"""
    return killing_residual(assemble_connection(p), KillingAnsatz(p).vector_field())


def _stage(report: KillingReport, name: str, passed: bool, detail: str = "") -> bool:
    report.stages.append(KillingStage(name, passed, detail))
    (logger.debug if passed else logger.warning)(f"Killing 约化阶段 [{name}] {'通过' if passed else '失败'} {detail}")
    return passed


def killing_dimension(p: FamilyParams) -> KillingReport:
    """
    Killing 代数维数的分阶段约化
    通用参数下返回维数 1、基 {∂z}；非通用参数只报告失败的条件，不给出维数
    :return: KillingReport
    """
    flags = genericity(p)
    report = KillingReport(dimension=None, basis=[], branch="generic", genericity=flags)
    conn = assemble_connection(p)
    dz_residual = killing_residual(conn, VectorFieldExpr(const(1), Expr()))
    _stage(report, "fundamental field d/dz is Killing", all(r.is_zero() for r in dz_residual))

    if not flags.generic:
        report.branch = "non-generic: " + ", ".join(f"not ({name})" for name in flags.failed())
        report.residual_conditions = [f"{KILLING_COMPONENTS[i]} = 0" for i in range(6)]
        logger.info(f"Killing 约化停止于非通用分支: {report.branch}")
        return report

    ansatz = KillingAnsatz(p)
    mu, delta, pp, r = p.mu, ansatz.delta, ansatz.p, ansatz.r
    E_key = (-mu, 0)
    R = killing_residual(conn, ansatz.vector_field())
    A = func("A")

    # (z,z) 两个分量被 a, b 的 z-形状恒等满足
    ok = _stage(report, "b-ansatz solves (z,z):xi", R[3].is_zero(), str(R[3]))
    ok &= _stage(report, "a-ansatz solves (z,z):z", R[2].is_zero(), str(R[2]))

    # (z,ξ):ξ 分量 = μ·(第一 ν-条件)·e^{−μz} + κ·A，κ ≠ 0 推出 A = 0
    classes = z_classes(R[1])
    a_key = (-pp, 0) if pp else (ZERO, 0)
    kappa = coefficient(classes.get(a_key, Expr()), FuncDeriv("A"))
    ok &= _stage(report, "(z,xi):xi exponential class equals mu*nu-condition-one",
                 classes.get(E_key, Expr()) == mu * ansatz.nu_condition_one())
    ok &= _stage(report, "(z,xi):xi remaining class is a nonzero multiple of A",
                 kappa.is_constant() and not kappa.is_zero()
                 and classes.get(a_key, Expr()) == kappa * A
                 and set(classes) <= {E_key, a_key},
                 f"kappa = {kappa}")

    # A = 0 后 (z,ξ):z 分量 = (μ/δ)·(第二 ν-条件)·e^{−μz} + 常数类
    R = killing_residual(conn, ansatz.vector_field(with_a=False))
    classes = z_classes(R[0])
    ok &= _stage(report, "(z,xi):z exponential class equals (mu/delta)*nu-condition-two",
                 classes.get(E_key, Expr()) == mu / delta * ansatz.nu_condition_two())
    constant_class = classes.get((ZERO, 0), Expr())
    B, C = func("B"), func("C")
    expected = delta * differentiate(B, "xi") + differentiate(p.f12.at() * C, "xi")
    ok &= _stage(report, "(z,xi):z constant class is delta*B' + (f12*C)'", constant_class == expected,
                 str(constant_class))
    report.residual_conditions.append(f"{constant_class} = 0")

    # 用第一 ν-条件消去 ν'，剩下 Φ·ν
    nu_prime = FuncDeriv("nu", 1)
    eliminated = substitute(ansatz.nu_condition_two(), nu_prime, ansatz.lambda_one() * func("nu"))
    phi, rest = _split_linear(eliminated, FuncDeriv("nu"))
    ok &= _stage(report, "nu-conditions are incompatible unless nu = 0",
                 rest.is_zero() and not phi.is_zero(), f"Phi = {phi}")

    # ν = A = 0：a = B(ξ), b = C(ξ)
    R = killing_residual(conn, VectorFieldExpr(B, C))
    nonzero = [KILLING_COMPONENTS[i] for i, v in enumerate(R) if not v.is_zero()]
    ok &= _stage(report, "with nu = A = 0 only (z,xi):z, (xi,xi):z, (xi,xi):xi remain",
                 nonzero == [KILLING_COMPONENTS[0], KILLING_COMPONENTS[4], KILLING_COMPONENTS[5]],
                 ", ".join(nonzero))
    det = _final_elimination(p, R[0], R[4], R[5])
    ok &= _stage(report, "final 2x2 system in (C, C') has nonzero determinant", not det.is_zero(), f"det = {det}")

    if ok:
        report.dimension = 1
        report.basis = ["d/dz"]
        logger.info(f"Killing 代数维数为 1 (μ = {mu})")
    else:
        report.branch = "generic: reduction check failed"
    return report


def _final_elimination(p: FamilyParams, r_zxi: Expr, r_xixi_z: Expr, r_xixi_xi: Expr) -> Expr:
    """
    用 (z,ξ):z 解出 B'，用 (ξ,ξ):ξ 解出 C''，把 (ξ,ξ):z 化成 αC' + βC，
    再求导得到 γC' + εC，返回 αε − βγ
    """
    B1, B2 = FuncDeriv("B", 1), FuncDeriv("B", 2)
    C0, C1, C2 = FuncDeriv("C", 0), FuncDeriv("C", 1), FuncDeriv("C", 2)

    coef_b1, rest = _split_linear(r_zxi, B1)
    if not coef_b1.is_constant() or coef_b1.is_zero():
        raise ValueError(f"(z,ξ):z 分量中 B' 的系数应为非零常数: {coef_b1}")
    sub_b1 = -rest / coef_b1.constant_value()
    sub_b2 = differentiate(sub_b1, "xi")

    coef_c2, rest = _split_linear(substitute(r_xixi_xi, B1, sub_b1), C2)
    if coef_c2 != const(1):
        raise ValueError(f"(ξ,ξ):ξ 分量中 C'' 的系数应为 1: {coef_c2}")
    sub_c2 = -rest

    def reduce(x: Expr) -> Expr:
        x = substitute(x, B2, sub_b2)
        x = substitute(x, B1, sub_b1)
        return substitute(x, C2, sub_c2)

    first = reduce(r_xixi_z)
    alpha, rest = _split_linear(first, C1)
    beta, rest = _split_linear(rest, C0)
    if not rest.is_zero():
        raise ValueError(f"消元后残留未知项: {rest}")
    second = reduce(differentiate(first, "xi"))
    gamma, rest = _split_linear(second, C1)
    epsilon, rest = _split_linear(rest, C0)
    if not rest.is_zero():
        raise ValueError(f"求导消元后残留未知项: {rest}")
    return alpha * epsilon - beta * gamma


def moduli_dimension(g: int) -> ModuliCount:
    """亏格 g ≥ 2 时参数空间维数 (g+1) + (g+1) + (3g−1) = 5g+1"""
    if g < 2:
        raise ValueError(f"亏格必须 ≥ 2: {g}")
    return ModuliCount(genus=g, quasimodular_f12=g + 1, quasimodular_g22=g + 1,
                       quadratic_differentials=3 * g - 1, total=5 * g + 1)


def verify_projective_flatness(p: FamilyParams) -> Tuple[Expr, Expr]:
    return liouville_invariants(projectivize(assemble_connection(p)))


def deck_action(gamma: GroupElement, z: complex, xi: complex, branch: int = 0) -> Tuple[complex, complex]:
    """
    γ(z, ξ) = (z + log(cξ+d) + 2πi·branch, γξ)
    :param branch: 对数分支
    """
    xi = complex(xi)
    if xi.imag <= 0:
        raise ValueError(f"ξ 必须在上半平面: {xi}")
    lin = gamma.lin(xi)
    if lin == 0:
        raise ValueError(f"cξ+d = 0: γ=[{gamma.key()}], ξ={xi}")
    return complex(z) + cmath.log(lin) + 2j * math.pi * branch, gamma.moebius(xi)


def composition_defect(g1: GroupElement, g2: GroupElement, z: complex, xi: complex) -> Tuple[complex, complex]:
    """
    γ1(γ2(z,ξ)) 与 (γ1γ2)(z,ξ) 的差
    :return: (z 坐标之差 / 2πi, ξ 坐标之差)
    """
    z2, xi2 = deck_action(g2, z, xi)
    z12, xi12 = deck_action(g1, z2, xi2)
    zp, xip = deck_action(g1 @ g2, z, xi)
    return (z12 - zp) / (2j * math.pi), xi12 - xip
