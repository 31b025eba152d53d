"""
精确算术符号表达式引擎

表达式是 (z, ξ) 上的多项式型对象，原子包括：
    Var        坐标 z 或 xi
    FuncDeriv  形式函数符号的 m 阶导数，自变量为 ξ 或 Möbius 变换 γξ
    LinForm    (cξ+d)，允许任意非零整数次幂
    ExpZ       e^{λz}
系数为高斯有理数 ExactComplex，所以"等于零"就是规范形为空。
"""
import cmath
import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Set, Tuple, Union

from utils.logging_config import setup_logging

logger = setup_logging(log_level=logging.INFO, log_tag="symbolic_core")

VARIABLES = ("z", "xi")

_RATIONAL = r"\d+(?:/\d+)?"
_PURE_IMAG = re.compile(rf"^(?P<sign>[+-])?(?P<im>{_RATIONAL})?i$")
_COMPLEX = re.compile(rf"^(?P<re>[+-]?{_RATIONAL})(?:(?P<sign>[+-])(?P<im>{_RATIONAL})?i)?$")


class EvaluationError(ValueError):
    """数值求值失败：缺少绑定或在 cξ+d 的零点求值"""


class ExactComplex:
    """高斯有理数 re + im·i，不可变"""
    __slots__ = ("re", "im")

    def __init__(self, re_part=0, im_part=0):
        object.__setattr__(self, "re", Fraction(re_part))
        object.__setattr__(self, "im", Fraction(im_part))

    def __setattr__(self, name, value):
        raise AttributeError("ExactComplex 是不可变对象")

    def __reduce__(self):
        return (ExactComplex, (self.re, self.im))

    @classmethod
    def parse(cls, text: str) -> "ExactComplex":
        """
        解析 "3/2-1/4i"、"-2i"、"i"、"5" 这类字符串
        :param text: 精确复数字符串
        :return: ExactComplex
        """
        s = "".join(str(text).split())
        try:
            m = _PURE_IMAG.match(s)
            if m:
                im = Fraction(m.group("im")) if m.group("im") else Fraction(1)
                return cls(0, -im if m.group("sign") == "-" else im)
            m = _COMPLEX.match(s)
            if m:
                im = Fraction(0)
                if m.group("sign"):
                    im = Fraction(m.group("im")) if m.group("im") else Fraction(1)
                    if m.group("sign") == "-":
                        im = -im
                return cls(Fraction(m.group("re")), im)
        except ZeroDivisionError:
            pass
        raise ValueError(f"无法解析精确复数: {text!r}")

    @classmethod
    def coerce(cls, value) -> "ExactComplex":
        if isinstance(value, ExactComplex):
            return value
        if isinstance(value, (int, Fraction)):
            return cls(value)
        if isinstance(value, str):
            return cls.parse(value)
        raise TypeError(f"不能精确表示的数值类型: {type(value).__name__}")

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __bool__(self):
        return not self.is_zero()

    def __add__(self, other):
        o = _as_exact(other)
        if o is None:
            return NotImplemented
        return ExactComplex(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = _as_exact(other)
        if o is None:
            return NotImplemented
        return ExactComplex(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = _as_exact(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = _as_exact(other)
        if o is None:
            return NotImplemented
        return ExactComplex(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = _as_exact(other)
        if o is None:
            return NotImplemented
        norm = o.re * o.re + o.im * o.im
        if norm == 0:
            raise ZeroDivisionError("ExactComplex 除以零")
        return ExactComplex((self.re * o.re + self.im * o.im) / norm, (self.im * o.re - self.re * o.im) / norm)

    def __rtruediv__(self, other):
        o = _as_exact(other)
        if o is None:
            return NotImplemented
        return o / self

    def __neg__(self):
        return ExactComplex(-self.re, -self.im)

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        base = self if n >= 0 else ONE / self
        result = ONE
        for _ in range(abs(n)):
            result = result * base
        return result

    def __eq__(self, other):
        o = _as_exact(other)
        if o is None:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        # 与 int/Fraction 的 __eq__ 保持一致
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def leads_negative(self) -> bool:
        """首个非零分量（先实部后虚部）为负"""
        part = self.re or self.im
        return part < 0

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        im_abs = abs(self.im)
        im_txt = "" if im_abs == 1 else str(im_abs)
        sign = "-" if self.im < 0 else "+"
        if self.re == 0:
            return f"{'-' if self.im < 0 else ''}{im_txt}i"
        return f"{self.re}{sign}{im_txt}i"

    def __repr__(self):
        return f"ExactComplex('{self}')"


def _as_exact(value) -> Optional[ExactComplex]:
    if isinstance(value, ExactComplex):
        return value
    if isinstance(value, (int, Fraction)):
        return ExactComplex(value)
    return None


ZERO = ExactComplex(0)
ONE = ExactComplex(1)
I = ExactComplex(0, 1)


@dataclass(frozen=True)
class GroupElement:
    """行列式为 1 的 2x2 矩阵 (a b; c d)"""
    a: ExactComplex
    b: ExactComplex
    c: ExactComplex
    d: ExactComplex

    def __post_init__(self):
        for name in ("a", "b", "c", "d"):
            object.__setattr__(self, name, ExactComplex.coerce(getattr(self, name)))
        if self.a * self.d - self.b * self.c != ONE:
            raise ValueError(f"群元素行列式必须为 1: {self.key()}")

    @classmethod
    def of(cls, a, b, c, d) -> "GroupElement":
        return cls(a, b, c, d)

    @classmethod
    def identity(cls) -> "GroupElement":
        return cls(1, 0, 0, 1)

    def is_central(self) -> bool:
        """±I 在 ξ 上作用平凡"""
        return self.b.is_zero() and self.c.is_zero() and self.a == self.d

    def __neg__(self) -> "GroupElement":
        return GroupElement(-self.a, -self.b, -self.c, -self.d)

    def canonical(self) -> "GroupElement":
        """γ 与 −γ 作用相同，取 (c, d) 首个非零分量为正的代表"""
        lead = self.d if self.c.is_zero() else self.c
        return -self if lead.leads_negative() else self

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(
            self.a * other.a + self.b * other.c, self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c, self.c * other.b + self.d * other.d,
        )

    def lin(self, xi: complex) -> complex:
        return complex(self.c) * xi + complex(self.d)

    def moebius(self, xi: complex) -> complex:
        denominator = self.lin(xi)
        if denominator == 0:
            raise EvaluationError(f"γξ 在 cξ+d 的零点无定义: γ={self.key()}, ξ={xi}")
        return (complex(self.a) * xi + complex(self.b)) / denominator

    def key(self) -> str:
        return f"{self.a},{self.b},{self.c},{self.d}"


@dataclass(frozen=True)
class Var:
    name: str

    def __post_init__(self):
        if self.name not in VARIABLES:
            raise ValueError(f"未知坐标变量: {self.name}")

    @property
    def sort_key(self) -> str:
        return f"0:{self.name}"

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class FuncDeriv:
    """形式函数 symbol 的 order 阶导数，在 ξ（arg 为 None）或 γξ 处取值"""
    symbol: str
    order: int = 0
    arg: Optional[GroupElement] = None

    def __post_init__(self):
        if self.order < 0:
            raise ValueError(f"导数阶数不能为负: {self.order}")
        if self.arg is not None and self.arg.is_central():
            object.__setattr__(self, "arg", None)
        elif self.arg is not None:
            object.__setattr__(self, "arg", self.arg.canonical())

    @property
    def sort_key(self) -> str:
        return f"1:{self.symbol}:{self.order:04d}:{self.arg.key() if self.arg else ''}"

    def __str__(self):
        name = self.symbol if self.order == 0 else f"{self.symbol}^({self.order})"
        return f"{name}(xi)" if self.arg is None else f"{name}([{self.arg.key()}]xi)"


@dataclass(frozen=True)
class LinForm:
    """(cξ+d)，c 为零的情况在构造 Expr 时已并入系数，c 的符号已规范为正"""
    c: ExactComplex
    d: ExactComplex

    def __post_init__(self):
        if self.c.is_zero():
            raise ValueError("LinForm 要求 c ≠ 0")
        if self.c.leads_negative():
            raise ValueError("LinForm 要求 c 的首个非零分量为正，请用 lin_form 构造")

    @property
    def sort_key(self) -> str:
        return f"2:{self.c}:{self.d}"

    def __str__(self):
        d_txt = str(self.d)
        return f"({self.c}*xi{d_txt if d_txt.startswith('-') else '+' + d_txt})"


@dataclass(frozen=True)
class ExpZ:
    lam: ExactComplex

    def __post_init__(self):
        if self.lam.is_zero():
            raise ValueError("ExpZ 要求 λ ≠ 0")

    @property
    def sort_key(self) -> str:
        return f"3:{self.lam}"

    def __str__(self):
        return f"exp({self.lam}*z)"


Atom = Union[Var, FuncDeriv, LinForm, ExpZ]
Factors = Tuple[Tuple[Atom, int], ...]


def _normalize_factors(pairs: Iterable[Tuple[Atom, int]]) -> Factors:
    powers: Dict[Atom, int] = {}
    lam = ZERO
    for atom, exp in pairs:
        if isinstance(atom, ExpZ):
            lam = lam + atom.lam * exp
            continue
        powers[atom] = powers.get(atom, 0) + exp
    if lam:
        powers[ExpZ(lam)] = 1
    items = [(atom, exp) for atom, exp in powers.items() if exp != 0]
    for atom, exp in items:
        if exp < 0 and not isinstance(atom, LinForm):
            raise ValueError(f"只有 (cξ+d) 允许负指数: {atom}^{exp}")
    items.sort(key=lambda item: item[0].sort_key)
    return tuple(items)


def _factors_key(factors: Factors):
    return tuple((atom.sort_key, exp) for atom, exp in factors)


@dataclass(frozen=True)
class Monomial:
    coefficient: ExactComplex
    factors: Factors = field(default_factory=tuple)

    def __str__(self):
        body = "*".join(str(atom) if exp == 1 else f"{atom}^{exp}" for atom, exp in self.factors)
        if not body:
            return str(self.coefficient)
        if self.coefficient == ONE:
            return body
        if self.coefficient == -ONE:
            return f"-{body}"
        coef = str(self.coefficient)
        if self.coefficient.re != 0 and self.coefficient.im != 0:
            coef = f"({coef})"
        return f"{coef}*{body}"


class Expr:
    """规范形：因子元组 -> 非零系数"""
    __slots__ = ("_terms",)

    def __init__(self, terms: Optional[Mapping[Factors, ExactComplex]] = None):
        object.__setattr__(self, "_terms", {f: c for f, c in (terms or {}).items() if c})

    def __setattr__(self, name, value):
        raise AttributeError("Expr 是不可变对象")

    def __reduce__(self):
        return (Expr, (self._terms,))

    @staticmethod
    def sum(items: Iterable["Expr"]) -> "Expr":
        acc: Dict[Factors, ExactComplex] = {}
        for item in items:
            for f, c in item._terms.items():
                acc[f] = acc.get(f, ZERO) + c
        return Expr(acc)

    @property
    def terms(self) -> Dict[Factors, ExactComplex]:
        return dict(self._terms)

    @property
    def monomials(self) -> List[Monomial]:
        ordered = sorted(self._terms.items(), key=lambda item: _factors_key(item[0]))
        return [Monomial(c, f) for f, c in ordered]

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(not f for f in self._terms)

    def constant_value(self) -> ExactComplex:
        """常数表达式的值，非常数时抛出 ValueError"""
        if not self.is_constant():
            raise ValueError(f"不是常数表达式: {self}")
        return self._terms.get((), ZERO)

    def atoms(self) -> Set[Atom]:
        return {atom for f in self._terms for atom, _ in f}

    def depends_on(self, name: str) -> bool:
        for atom in self.atoms():
            if isinstance(atom, Var) and atom.name == name:
                return True
            if name == "z" and isinstance(atom, ExpZ):
                return True
            if name == "xi" and isinstance(atom, (FuncDeriv, LinForm)):
                return True
        return False

    def __add__(self, other):
        o = _as_expr(other)
        if o is None:
            return NotImplemented
        return Expr.sum((self, o))

    __radd__ = __add__

    def __neg__(self):
        return Expr({f: -c for f, c in self._terms.items()})

    def __sub__(self, other):
        o = _as_expr(other)
        if o is None:
            return NotImplemented
        return Expr.sum((self, -o))

    def __rsub__(self, other):
        o = _as_expr(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = _as_expr(other)
        if o is None:
            return NotImplemented
        acc: Dict[Factors, ExactComplex] = {}
        for f1, c1 in self._terms.items():
            for f2, c2 in o._terms.items():
                f = _normalize_factors(f1 + f2)
                acc[f] = acc.get(f, ZERO) + c1 * c2
        return Expr(acc)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = _as_exact(other)
        if o is None:
            return NotImplemented
        return self * (ONE / o)

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self._reciprocal() ** (-n)
        result, base = const(1), self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def _reciprocal(self) -> "Expr":
        if len(self._terms) != 1:
            raise ValueError(f"只能对单项式求逆: {self}")
        (factors, coef), = self._terms.items()
        if any(not isinstance(atom, LinForm) for atom, _ in factors):
            raise ValueError(f"只有 (cξ+d) 的幂可以求逆: {self}")
        return Expr({tuple((atom, -exp) for atom, exp in factors): ONE / coef})

    def __eq__(self, other):
        o = _as_expr(other)
        if o is None:
            return NotImplemented
        return self._terms == o._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __str__(self):
        if not self._terms:
            return "0"
        return " + ".join(str(m) for m in self.monomials)

    def __repr__(self):
        return f"Expr({self})"


def _as_expr(value) -> Optional[Expr]:
    if isinstance(value, Expr):
        return value
    exact = _as_exact(value)
    if exact is None:
        return None
    return Expr({(): exact})


def const(value) -> Expr:
    return Expr({(): ExactComplex.coerce(value)})


def var(name: str) -> Expr:
    return Expr({((Var(name), 1),): ONE})


def func(symbol: str, order: int = 0, arg: Optional[GroupElement] = None) -> Expr:
    return Expr({((FuncDeriv(symbol, order, arg), 1),): ONE})


def lin_form(gamma: GroupElement, power: int = 1) -> Expr:
    """(cξ+d)^power，c = 0 时就是常数 d^power"""
    if gamma.c.is_zero():
        return const(gamma.d ** power)
    if power == 0:
        return const(1)
    if gamma.c.leads_negative():
        # (cξ+d)^n = (−1)^n (−cξ−d)^n
        coef = ONE if power % 2 == 0 else -ONE
        return Expr({((LinForm(-gamma.c, -gamma.d), power),): coef})
    return Expr({((LinForm(gamma.c, gamma.d), power),): ONE})


def exp_z(lam) -> Expr:
    lam = ExactComplex.coerce(lam)
    if lam.is_zero():
        return const(1)
    return Expr({((ExpZ(lam), 1),): ONE})


def atom_expr(atom: Atom, power: int = 1) -> Expr:
    return Expr({_normalize_factors(((atom, power),)): ONE})


def add(x: Expr, y: Expr) -> Expr:
    return x + y


def mul(x: Expr, y: Expr) -> Expr:
    return x * y


def scale(x: Expr, c) -> Expr:
    return x * ExactComplex.coerce(c)


def _atom_derivative(atom: Atom, v: str) -> Expr:
    if isinstance(atom, Var):
        return const(1) if atom.name == v else Expr()
    if isinstance(atom, FuncDeriv):
        if v != "xi":
            return Expr()
        lifted = func(atom.symbol, atom.order + 1, atom.arg)
        if atom.arg is None:
            return lifted
        return lifted * lin_form(atom.arg, -2)
    if isinstance(atom, LinForm):
        return const(atom.c) if v == "xi" else Expr()
    if isinstance(atom, ExpZ):
        return exp_z(atom.lam) * atom.lam if v == "z" else Expr()
    raise TypeError(f"未知原子类型: {atom!r}")


def differentiate(x: Expr, v: str) -> Expr:
    """
    对坐标 v 求偏导，逐项使用 Leibniz 法则
    :param x: 表达式
    :param v: "z" 或 "xi"
    :return: 规范形导数
    """
    if v not in VARIABLES:
        raise ValueError(f"只能对 z 或 xi 求导: {v}")
    acc: Dict[Factors, ExactComplex] = {}
    for factors, coef in x.terms.items():
        for idx, (atom, exp) in enumerate(factors):
            d_atom = _atom_derivative(atom, v)
            if d_atom.is_zero():
                continue
            rest = factors[:idx] + ((atom, exp - 1),) + factors[idx + 1:]
            for f2, c2 in d_atom.terms.items():
                f = _normalize_factors(rest + f2)
                acc[f] = acc.get(f, ZERO) + coef * exp * c2
    return Expr(acc)


def differentiate_n(x: Expr, v: str, n: int) -> Expr:
    for _ in range(n):
        x = differentiate(x, v)
    return x


@dataclass
class NumericBindings:
    """数值求值环境；functions[symbol](order, point) 返回 symbol 的 order 阶导数在 point 处的值"""
    z: Optional[complex] = None
    xi: Optional[complex] = None
    functions: Dict[str, Callable[[int, complex], complex]] = field(default_factory=dict)


def _atom_value(atom: Atom, bindings: NumericBindings) -> complex:
    if isinstance(atom, Var):
        value = bindings.z if atom.name == "z" else bindings.xi
        if value is None:
            raise EvaluationError(f"缺少坐标 {atom.name} 的数值")
        return complex(value)
    if bindings.xi is None and not isinstance(atom, ExpZ):
        raise EvaluationError(f"缺少坐标 xi 的数值，无法求值 {atom}")
    if isinstance(atom, FuncDeriv):
        oracle = bindings.functions.get(atom.symbol)
        if oracle is None:
            raise EvaluationError(f"缺少函数符号 {atom.symbol} 的数值预言机")
        point = complex(bindings.xi) if atom.arg is None else atom.arg.moebius(complex(bindings.xi))
        return complex(oracle(atom.order, point))
    if isinstance(atom, LinForm):
        value = complex(atom.c) * complex(bindings.xi) + complex(atom.d)
        if value == 0:
            raise EvaluationError(f"{atom} 在 ξ={bindings.xi} 处为零")
        return value
    if bindings.z is None:
        raise EvaluationError(f"缺少坐标 z 的数值，无法求值 {atom}")
    return cmath.exp(complex(atom.lam) * complex(bindings.z))


def eval_numeric(x: Expr, bindings: NumericBindings) -> complex:
    total = 0j
    cache: Dict[Atom, complex] = {}
    for factors, coef in x.terms.items():
        value = complex(coef)
        for atom, exp in factors:
            if atom not in cache:
                cache[atom] = _atom_value(atom, bindings)
            value *= cache[atom] ** exp
        total += value
    return total


def substitute(x: Expr, atom: Atom, replacement: Expr) -> Expr:
    """把 atom 的每次出现替换为 replacement，atom 只能以正幂出现"""
    parts = []
    for factors, coef in x.terms.items():
        power = 0
        rest = []
        for a, e in factors:
            if a == atom:
                power = e
            else:
                rest.append((a, e))
        if power == 0:
            parts.append(Expr({factors: coef}))
            continue
        if power < 0:
            raise ValueError(f"不能替换负幂原子: {atom}^{power}")
        parts.append(Expr({_normalize_factors(rest): coef}) * replacement ** power)
    return Expr.sum(parts)


def substitute_function(x: Expr, symbol: str, value: Expr) -> Expr:
    """把 symbol^(m)(ξ) 全部替换为 value 的 m 阶 ξ-导数"""
    targets = sorted(
        (a for a in x.atoms() if isinstance(a, FuncDeriv) and a.symbol == symbol and a.arg is None),
        key=lambda a: a.order,
    )
    derivative, current = value, 0
    for atom in targets:
        derivative = differentiate_n(derivative, "xi", atom.order - current)
        current = atom.order
        x = substitute(x, atom, derivative)
    return x


def coefficient(x: Expr, atom: Atom, power: int = 1) -> Expr:
    """x 中 atom^power 的系数（恰好该次幂的项，去掉 atom 后求和）"""
    acc: Dict[Factors, ExactComplex] = {}
    for factors, coef in x.terms.items():
        if (atom, power) in factors:
            rest = tuple(pair for pair in factors if pair[0] != atom)
            acc[rest] = acc.get(rest, ZERO) + coef
    return Expr(acc)


def z_classes(x: Expr) -> Dict[Tuple[ExactComplex, int], Expr]:
    """按 (e^{λz} 的 λ, z 的次数) 分组，返回去掉 z 依赖后的系数"""
    z_atom = Var("z")
    groups: Dict[Tuple[ExactComplex, int], Dict[Factors, ExactComplex]] = {}
    for factors, coef in x.terms.items():
        lam, z_power, rest = ZERO, 0, []
        for atom, exp in factors:
            if isinstance(atom, ExpZ):
                lam = atom.lam
            elif atom == z_atom:
                z_power = exp
            else:
                rest.append((atom, exp))
        bucket = groups.setdefault((lam, z_power), {})
        key = tuple(rest)
        bucket[key] = bucket.get(key, ZERO) + coef
    return {k: Expr(v) for k, v in groups.items() if Expr(v).terms}
