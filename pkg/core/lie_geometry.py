"""
三维复李代数上的左不变全纯黎曼度量

李代数由结构常数 C^k_ij 给出：[X_i, X_j] = Σ_k C^k_ij X_k。程序内部下标从 0 开始，
结构常数文件和校验报告里的下标从 1 开始。所有计算都是精确的，线性代数交给 sympy。
"""
import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import sympy
from pydantic import BaseModel, Field

from core.symbolic_core import ExactComplex, ONE, ZERO
from utils.logging_config import setup_logging

logger = setup_logging(log_level=logging.INFO, log_tag="lie_geometry")

Vector = Tuple[ExactComplex, ...]
Matrix = Tuple[Tuple[ExactComplex, ...], ...]

BUILTIN_NAMES = ("abelian3", "heisenberg3", "sol3", "sl2")


class SingularMetricError(ValueError):
    pass


class DegeneratePlaneError(ValueError):
    """g 在该 2-平面上退化，截面曲率无定义"""


class NullVectorError(ValueError):
    pass


class StructureConstantsFormatError(ValueError):
    pass


def vector(values: Iterable) -> Vector:
    return tuple(ExactComplex.coerce(v) for v in values)


def _to_sympy(value: ExactComplex):
    return sympy.Rational(value.re.numerator, value.re.denominator) + \
        sympy.I * sympy.Rational(value.im.numerator, value.im.denominator)


def _rational(value) -> Fraction:
    value = sympy.Rational(value)
    return Fraction(int(value.p), int(value.q))


def _from_sympy(value) -> ExactComplex:
    value = sympy.expand_complex(sympy.sympify(value))
    return ExactComplex(_rational(sympy.re(value)), _rational(sympy.im(value)))


def _sympy_matrix(rows: Sequence[Sequence[ExactComplex]]) -> sympy.Matrix:
    return sympy.Matrix([[_to_sympy(v) for v in row] for row in rows])


def _from_sympy_matrix(m: sympy.Matrix) -> Matrix:
    return tuple(tuple(_from_sympy(m[i, j]) for j in range(m.cols)) for i in range(m.rows))


def _total(values: Iterable[ExactComplex]) -> ExactComplex:
    acc = ZERO
    for v in values:
        acc = acc + v
    return acc


class LieAlgebra:
    def __init__(self, dim: int, constants: Dict[Tuple[int, int, int], object],
                 basis: Optional[Sequence[str]] = None, name: str = ""):
        """
        :param dim: 维数 n
        :param constants: {(i, j, k): C^k_ij}，下标从 0 开始；不自动补反对称项
        :param basis: 基向量名称
        :param name: 代数名称
        """
        if dim <= 0:
            raise ValueError(f"维数必须为正: {dim}")
        self.dim = dim
        self.name = name
        self.basis = tuple(basis) if basis else tuple(f"X{i + 1}" for i in range(dim))
        if len(self.basis) != dim:
            raise ValueError("基向量名称个数与维数不符")
        table: Dict[Tuple[int, int, int], ExactComplex] = {}
        for (i, j, k), value in constants.items():
            if not all(0 <= idx < dim for idx in (i, j, k)):
                raise ValueError(f"结构常数下标越界: {(i, j, k)}")
            value = ExactComplex.coerce(value)
            if value:
                table[(i, j, k)] = value
        self._constants = table

    @classmethod
    def from_brackets(cls, dim: int, brackets: Dict[Tuple[int, int], Sequence], **kwargs) -> "LieAlgebra":
        """由 [X_i, X_j] (i<j) 的展开系数构造，自动补全反对称部分"""
        constants: Dict[Tuple[int, int, int], ExactComplex] = {}
        for (i, j), coeffs in brackets.items():
            for k, value in enumerate(vector(coeffs)):
                if value:
                    constants[(i, j, k)] = value
                    constants[(j, i, k)] = -value
        return cls(dim, constants, **kwargs)

    @property
    def constants(self) -> Dict[Tuple[int, int, int], ExactComplex]:
        return dict(self._constants)

    def c(self, i: int, j: int, k: int) -> ExactComplex:
        return self._constants.get((i, j, k), ZERO)

    def is_abelian(self) -> bool:
        return not self._constants

    def bracket(self, x: Sequence, y: Sequence) -> Vector:
        x, y = vector(x), vector(y)
        out = [ZERO] * self.dim
        for (i, j, k), value in self._constants.items():
            if x[i] and y[j]:
                out[k] = out[k] + x[i] * y[j] * value
        return tuple(out)

    def ad_matrix(self, x: Sequence) -> Matrix:
        """ad_x 的矩阵，第 j 列是 [x, X_j] 的坐标"""
        columns = [self.bracket(x, self.unit(j)) for j in range(self.dim)]
        return tuple(tuple(columns[j][k] for j in range(self.dim)) for k in range(self.dim))

    def unit(self, i: int) -> Vector:
        return tuple(ONE if k == i else ZERO for k in range(self.dim))

    def __repr__(self):
        return f"LieAlgebra(name={self.name!r}, dim={self.dim}, constants={len(self._constants)})"


class InvariantMetric:
    def __init__(self, matrix: Sequence[Sequence]):
        rows = tuple(vector(row) for row in matrix)
        n = len(rows)
        if n == 0 or any(len(row) != n for row in rows):
            raise ValueError("度量矩阵必须是非空方阵")
        for i, j in itertools.combinations(range(n), 2):
            if rows[i][j] != rows[j][i]:
                raise ValueError(f"度量矩阵不对称: ({i + 1},{j + 1})")
        self.matrix: Matrix = rows
        self.dim = n

    def entry(self, i: int, j: int) -> ExactComplex:
        return self.matrix[i][j]

    def g(self, x: Sequence, y: Sequence) -> ExactComplex:
        x, y = vector(x), vector(y)
        return _total(x[i] * self.matrix[i][j] * y[j]
                      for i in range(self.dim) if x[i] for j in range(self.dim) if y[j])

    def determinant(self) -> ExactComplex:
        return _from_sympy(_sympy_matrix(self.matrix).det())

    def is_nondegenerate(self) -> bool:
        return not self.determinant().is_zero()

    def inverse(self) -> Matrix:
        if not self.is_nondegenerate():
            raise SingularMetricError(f"度量退化: {self}")
        return _from_sympy_matrix(_sympy_matrix(self.matrix).inv())

    def scaled(self, lam) -> "InvariantMetric":
        lam = ExactComplex.coerce(lam)
        return InvariantMetric([[lam * v for v in row] for row in self.matrix])

    def __eq__(self, other):
        return isinstance(other, InvariantMetric) and self.matrix == other.matrix

    def __hash__(self):
        return hash(self.matrix)

    def __str__(self):
        return "[" + "; ".join(" ".join(str(v) for v in row) for row in self.matrix) + "]"

    def __repr__(self):
        return f"InvariantMetric({self})"


@dataclass(frozen=True)
class ConnectionOnBasis:
    """gamma[i][j][k] = Γ^k_ij，即 ∇_{X_i} X_j = Σ_k Γ^k_ij X_k"""
    gamma: Tuple[Tuple[Vector, ...], ...]

    @property
    def dim(self) -> int:
        return len(self.gamma)

    def nabla(self, x: Sequence, y: Sequence) -> Vector:
        x, y = vector(x), vector(y)
        out = [ZERO] * self.dim
        for i in range(self.dim):
            if not x[i]:
                continue
            for j in range(self.dim):
                if not y[j]:
                    continue
                for k, value in enumerate(self.gamma[i][j]):
                    out[k] = out[k] + x[i] * y[j] * value
        return tuple(out)


@dataclass(frozen=True)
class CurvatureTensor:
    """components[i][j][k][l] = R_ijkl = g(R(X_i, X_j) X_k, X_l)"""
    components: Tuple[Tuple[Tuple[Vector, ...], ...], ...]

    @property
    def dim(self) -> int:
        return len(self.components)

    def component(self, i: int, j: int, k: int, l: int) -> ExactComplex:
        return self.components[i][j][k][l]

    def is_zero(self) -> bool:
        return all(not v for v in self._values())

    def evaluate(self, x: Vector, y: Vector, z: Vector, w: Vector) -> ExactComplex:
        """多线性求值 R(x, y, z, w)"""
        n = self.dim
        acc = ZERO
        for i, j, k, l in itertools.product(range(n), repeat=4):
            value = self.components[i][j][k][l]
            if value and x[i] and y[j] and z[k] and w[l]:
                acc = acc + x[i] * y[j] * z[k] * w[l] * value
        return acc

    def _values(self):
        for plane in self.components:
            for row in plane:
                for vec in row:
                    yield from vec


class AlgebraValidation(BaseModel):
    valid: bool
    antisymmetry_violations: List[Tuple[int, int, int]] = Field(default_factory=list)
    jacobi_violations: List[Tuple[int, int, int, int]] = Field(default_factory=list)


@dataclass(frozen=True)
class OrbitTwoForm:
    x: Vector
    tangent_basis: Tuple[Vector, ...]
    form: Matrix
    determinant: ExactComplex
    nondegenerate: bool


def validate(algebra: LieAlgebra) -> AlgebraValidation:
    """检查反对称性与 Jacobi 恒等式，违例用从 1 开始的下标列出"""
    n = algebra.dim
    anti = []
    for i in range(n):
        for j in range(i, n):
            for k in range(n):
                if algebra.c(i, j, k) + algebra.c(j, i, k):
                    anti.append((i + 1, j + 1, k + 1))
    jacobi = []
    for i, j, k, l in itertools.product(range(n), repeat=4):
        total = _total(
            algebra.c(i, j, m) * algebra.c(m, k, l)
            + algebra.c(j, k, m) * algebra.c(m, i, l)
            + algebra.c(k, i, m) * algebra.c(m, j, l)
            for m in range(n)
        )
        if total:
            jacobi.append((i + 1, j + 1, k + 1, l + 1))
    report = AlgebraValidation(valid=not anti and not jacobi, antisymmetry_violations=anti, jacobi_violations=jacobi)
    if not report.valid:
        logger.warning(f"李代数 {algebra.name or '<anonymous>'} 校验失败: 反对称 {len(anti)} 处, Jacobi {len(jacobi)} 处")
    return report


def killing_form(algebra: LieAlgebra) -> InvariantMetric:
    """B(X_i, X_j) = trace(ad X_i ∘ ad X_j)"""
    n = algebra.dim
    rows = [[_total(algebra.c(i, k, m) * algebra.c(j, m, k) for k in range(n) for m in range(n))
             for j in range(n)] for i in range(n)]
    return InvariantMetric(rows)


# 平坦度量见证，由 flat_search 在 {0, 1} 系数上找到
FLAT_WITNESSES: Dict[str, Tuple[Tuple[int, ...], ...]] = {
    "heisenberg3": ((1, 0, 0), (0, 0, 1), (0, 1, 0)),
    "sol3": ((0, 1, 0), (1, 0, 0), (0, 0, 1)),
}


def builtin(name: str) -> Tuple[LieAlgebra, Optional[InvariantMetric]]:
    """
    四个模型李代数及其模型度量
    abelian3: 单位度量；heisenberg3/sol3: 平坦见证；sl2: Killing 型（基 H, E, F）
    :param name: abelian3 | heisenberg3 | sol3 | sl2
    :return: (LieAlgebra, InvariantMetric)
    """
    if name == "abelian3":
        algebra = LieAlgebra(3, {}, name=name)
        return algebra, InvariantMetric([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    if name == "heisenberg3":
        algebra = LieAlgebra.from_brackets(3, {(0, 1): (0, 0, 1)}, name=name)
        return algebra, InvariantMetric(FLAT_WITNESSES[name])
    if name == "sol3":
        algebra = LieAlgebra.from_brackets(3, {(0, 2): (1, 0, 0), (1, 2): (0, -1, 0)}, name=name)
        return algebra, InvariantMetric(FLAT_WITNESSES[name])
    if name == "sl2":
        algebra = LieAlgebra.from_brackets(
            3, {(0, 1): (0, 2, 0), (0, 2): (0, 0, -2), (1, 2): (1, 0, 0)},
            basis=("H", "E", "F"), name=name,
        )
        return algebra, killing_form(algebra)
    raise ValueError(f"未知的内置李代数: {name}，可选: {', '.join(BUILTIN_NAMES)}")


def levi_civita(algebra: LieAlgebra, metric: InvariantMetric) -> ConnectionOnBasis:
    """
    Koszul 公式：2g(∇_i X_j, X_k) = g([X_i,X_j],X_k) − g([X_j,X_k],X_i) + g([X_k,X_i],X_j)
    :return: ConnectionOnBasis
    """
    if metric.dim != algebra.dim:
        raise ValueError("度量与李代数维数不符")
    inverse = metric.inverse()
    n = algebra.dim
    g = metric.matrix

    def g_bracket(i, j, k):
        return _total(algebra.c(i, j, m) * g[m][k] for m in range(n))

    gamma = []
    for i in range(n):
        row = []
        for j in range(n):
            koszul = [(g_bracket(i, j, k) - g_bracket(j, k, i) + g_bracket(k, i, j)) / 2 for k in range(n)]
            row.append(tuple(_total(inverse[l][k] * koszul[k] for k in range(n)) for l in range(n)))
        gamma.append(tuple(row))
    return ConnectionOnBasis(tuple(gamma))


def torsion_defects(algebra: LieAlgebra, connection: ConnectionOnBasis) -> List[Tuple[int, int, int]]:
    n = algebra.dim
    return [(i + 1, j + 1, k + 1) for i, j, k in itertools.product(range(n), repeat=3)
            if connection.gamma[i][j][k] - connection.gamma[j][i][k] != algebra.c(i, j, k)]


def metric_defects(metric: InvariantMetric, connection: ConnectionOnBasis) -> List[Tuple[int, int, int]]:
    n = metric.dim
    out = []
    for i, j, k in itertools.product(range(n), repeat=3):
        lhs = metric.g(connection.gamma[i][j], metric_unit(n, k)) + metric.g(metric_unit(n, j), connection.gamma[i][k])
        if lhs:
            out.append((i + 1, j + 1, k + 1))
    return out


def metric_unit(n: int, i: int) -> Vector:
    return tuple(ONE if k == i else ZERO for k in range(n))


def curvature(algebra: LieAlgebra, metric: InvariantMetric, connection: ConnectionOnBasis) -> CurvatureTensor:
    """R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z，R_ijkl = g(R(X_i,X_j)X_k, X_l)"""
    n = algebra.dim
    gamma = connection.gamma
    g = metric.matrix
    components = []
    for i in range(n):
        plane = []
        for j in range(n):
            row = []
            for k in range(n):
                endo = [ZERO] * n
                for m in range(n):
                    a, b, c = gamma[j][k][m], gamma[i][k][m], algebra.c(i, j, m)
                    for l in range(n):
                        endo[l] = endo[l] + a * gamma[i][m][l] - b * gamma[j][m][l] - c * gamma[m][k][l]
                row.append(tuple(_total(endo[p] * g[p][l] for p in range(n)) for l in range(n)))
            plane.append(tuple(row))
        components.append(tuple(plane))
    return CurvatureTensor(tuple(components))


def curvature_defects(tensor: CurvatureTensor) -> List[str]:
    """反对称 (ij)、(kl)，对称 (ij)<->(kl) 与第一 Bianchi 恒等式的违例"""
    n = tensor.dim
    R = tensor.component
    out = []
    for i, j, k, l in itertools.product(range(n), repeat=4):
        idx = f"({i + 1},{j + 1},{k + 1},{l + 1})"
        if R(i, j, k, l) + R(j, i, k, l):
            out.append(f"antisymmetry-ij{idx}")
        if R(i, j, k, l) + R(i, j, l, k):
            out.append(f"antisymmetry-kl{idx}")
        if R(i, j, k, l) != R(k, l, i, j):
            out.append(f"pair-symmetry{idx}")
        if R(i, j, k, l) + R(j, k, i, l) + R(k, i, j, l):
            out.append(f"bianchi{idx}")
    return out


def sectional_curvature(metric: InvariantMetric, tensor: CurvatureTensor,
                        plane: Tuple[Sequence, Sequence]) -> ExactComplex:
    """K(X,Y) = R(X,Y,Y,X) / (g(X,X)g(Y,Y) − g(X,Y)^2)"""
    x, y = vector(plane[0]), vector(plane[1])
    denominator = metric.g(x, x) * metric.g(y, y) - metric.g(x, y) ** 2
    if denominator.is_zero():
        raise DegeneratePlaneError(f"g 在平面 span({x}, {y}) 上退化")
    return tensor.evaluate(x, y, y, x) / denominator


def is_constant_curvature(metric: InvariantMetric, tensor: CurvatureTensor) -> Optional[ExactComplex]:
    """R_ijkl = c(g_il g_jk − g_ik g_jl) 对所有下标成立时返回 c"""
    n = metric.dim
    g = metric.matrix
    indices = list(itertools.product(range(n), repeat=4))

    def model(i, j, k, l):
        return g[i][l] * g[j][k] - g[i][k] * g[j][l]

    c = None
    for i, j, k, l in indices:
        q = model(i, j, k, l)
        if q:
            c = tensor.component(i, j, k, l) / q
            break
    if c is None:
        return ZERO if tensor.is_zero() else None
    for i, j, k, l in indices:
        if tensor.component(i, j, k, l) != c * model(i, j, k, l):
            logger.debug(f"常曲率恒等式在 ({i + 1},{j + 1},{k + 1},{l + 1}) 处不成立")
            return None
    return c


def is_unimodular(algebra: LieAlgebra) -> bool:
    return all(not _total(algebra.c(i, k, k) for k in range(algebra.dim)) for i in range(algebra.dim))


def is_ad_invariant(algebra: LieAlgebra, metric: InvariantMetric) -> bool:
    """g([X_m, X_i], X_j) + g(X_i, [X_m, X_j]) = 0"""
    n = algebra.dim
    for m, i, j in itertools.product(range(n), repeat=3):
        lhs = metric.g(algebra.bracket(algebra.unit(m), algebra.unit(i)), algebra.unit(j)) + \
            metric.g(algebra.unit(i), algebra.bracket(algebra.unit(m), algebra.unit(j)))
        if lhs:
            return False
    return True


def _span_rank(vectors: Sequence[Vector]) -> int:
    if not vectors:
        return 0
    return _sympy_matrix(vectors).rank()


def derived_series(algebra: LieAlgebra) -> List[int]:
    """g ⊃ [g,g] ⊃ [[g,g],[g,g]] ⊃ ... 的维数，直到稳定"""
    current = [algebra.unit(i) for i in range(algebra.dim)]
    dims = [algebra.dim]
    while True:
        brackets = [algebra.bracket(x, y) for x, y in itertools.combinations(current, 2)]
        brackets = [b for b in brackets if any(b)]
        rank = _span_rank(brackets)
        if rank == dims[-1]:
            return dims
        dims.append(rank)
        if rank == 0:
            return dims
        columns = _sympy_matrix(brackets).T.columnspace()
        current = [tuple(_from_sympy(v) for v in col) for col in columns]


def is_solvable(algebra: LieAlgebra) -> bool:
    return derived_series(algebra)[-1] == 0


def coframe_differentials(algebra: LieAlgebra) -> List[Matrix]:
    """Lie-Cartan 公式 dω_i(X_j, X_k) = −ω_i([X_j, X_k]) = −C^i_jk"""
    n = algebra.dim
    return [tuple(tuple(-algebra.c(j, k, i) for k in range(n)) for j in range(n)) for i in range(n)]


def invariant_two_form(algebra: LieAlgebra, metric: InvariantMetric, x: Sequence) -> OrbitTwoForm:
    """
    伴随轨道在 x 处的 2-形式 dω(Y,Z) = −g(x,[Y,Z])，切空间取 ad_x 的像
    :param x: 基坐标向量，要求 g(x,x) ≠ 0
    :return: OrbitTwoForm
    """
    x = vector(x)
    if metric.g(x, x).is_zero():
        raise NullVectorError(f"g(x,x) = 0，x = {tuple(str(v) for v in x)} 是迷向向量")
    columns = _sympy_matrix(algebra.ad_matrix(x)).columnspace()
    if len(columns) != 2:
        raise ValueError(f"ad_x 的像应为 2 维，实际为 {len(columns)} 维")
    basis = tuple(tuple(_from_sympy(v) for v in col) for col in columns)
    form = tuple(tuple(-metric.g(x, algebra.bracket(basis[a], basis[b])) for b in range(2)) for a in range(2))
    determinant = form[0][0] * form[1][1] - form[0][1] * form[1][0]
    return OrbitTwoForm(x=x, tangent_basis=basis, form=form, determinant=determinant,
                        nondegenerate=not determinant.is_zero())


def flat_search(algebra: LieAlgebra, values: Sequence = (-1, 0, 1)) -> List[InvariantMetric]:
    """
    在对称整数度量 (系数取自 values) 中穷举曲率为零的非退化度量
    :return: 平坦度量列表，按枚举顺序
    """
    n = algebra.dim
    slots = [(i, j) for i in range(n) for j in range(i, n)]
    found = []
    for entries in itertools.product(values, repeat=len(slots)):
        rows = [[0] * n for _ in range(n)]
        for (i, j), value in zip(slots, entries):
            rows[i][j] = rows[j][i] = value
        metric = InvariantMetric(rows)
        if not metric.is_nondegenerate():
            continue
        tensor = curvature(algebra, metric, levi_civita(algebra, metric))
        if tensor.is_zero():
            found.append(metric)
    logger.info(f"{algebra.name or '<anonymous>'} 平坦度量搜索完成: 找到 {len(found)} 个")
    return found


def parse_structure_constants(text: str, name: str = "") -> LieAlgebra:
    """
    解析结构常数文本：首行 "dim n"，其后每行 "i j k re im"（下标从 1 开始），# 开头为注释
    自动补全 C^k_ji = −C^k_ij，前后矛盾的重复项报错
    """
    lines = [line.split("#", 1)[0].strip() for line in text.splitlines()]
    lines = [line for line in lines if line]
    if not lines or not lines[0].startswith("dim"):
        raise StructureConstantsFormatError("缺少 'dim n' 头部")
    try:
        dim = int(lines[0].split()[1])
    except (IndexError, ValueError):
        raise StructureConstantsFormatError(f"无法解析头部: {lines[0]!r}")
    constants: Dict[Tuple[int, int, int], ExactComplex] = {}

    def put(key, value):
        previous = constants.get(key)
        if previous is not None and previous != value:
            raise StructureConstantsFormatError(f"结构常数 {tuple(k + 1 for k in key)} 前后矛盾: {previous} vs {value}")
        constants[key] = value

    for line in lines[1:]:
        parts = line.split()
        if len(parts) != 5:
            raise StructureConstantsFormatError(f"行格式应为 'i j k re im': {line!r}")
        try:
            i, j, k = (int(p) - 1 for p in parts[:3])
            value = ExactComplex(Fraction(parts[3]), Fraction(parts[4]))
        except (ValueError, ZeroDivisionError):
            raise StructureConstantsFormatError(f"无法解析: {line!r}")
        if not all(0 <= idx < dim for idx in (i, j, k)):
            raise StructureConstantsFormatError(f"下标越界: {line!r}")
        if i == j:
            if value:
                raise StructureConstantsFormatError(f"C^k_ii 必须为零: {line!r}")
            continue
        put((i, j, k), value)
        put((j, i, k), -value)
    return LieAlgebra(dim, constants, name=name)


def load_structure_constants(path: str) -> LieAlgebra:
    with open(path, "r", encoding="utf-8") as f:
        return parse_structure_constants(f.read(), name=path)


def dump_structure_constants(algebra: LieAlgebra) -> str:
    lines = [f"dim {algebra.dim}"]
    for (i, j, k), value in sorted(algebra.constants.items()):
        if i < j:
            lines.append(f"{i + 1} {j + 1} {k + 1} {value.re} {value.im}")
    return "\n".join(lines) + "\n"
