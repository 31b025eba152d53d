"""
二维坐标卡 (z, ξ) 上的对称仿射联络
"""
import logging
from dataclasses import dataclass, field, fields
from typing import Dict, Tuple

from core.symbolic_core import Expr, const, differentiate
from utils.logging_config import setup_logging

logger = setup_logging(log_level=logging.INFO, log_tag="chart_connection")

Z, XI = "z", "xi"
COORDINATES = (Z, XI)

# Killing 残差分量顺序：每个坐标对先给 ∂z 分量再给 ∂ξ 分量
KILLING_PAIRS = ((Z, XI), (Z, Z), (XI, XI))
KILLING_COMPONENTS = tuple(f"({i},{j}):{k}" for i, j in KILLING_PAIRS for k in COORDINATES)


def _as_expr(value) -> Expr:
    return value if isinstance(value, Expr) else const(value)


@dataclass(frozen=True)
class ChartConnection2D:
    """字段名 k_ij 表示 Γ^k_ij；Γ^k_ij = Γ^k_ji 由表示保证"""
    z_zz: Expr = field(default_factory=Expr)
    z_zxi: Expr = field(default_factory=Expr)
    z_xixi: Expr = field(default_factory=Expr)
    xi_zz: Expr = field(default_factory=Expr)
    xi_zxi: Expr = field(default_factory=Expr)
    xi_xixi: Expr = field(default_factory=Expr)

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, _as_expr(getattr(self, f.name)))

    def gamma(self, k: str, i: str, j: str) -> Expr:
        """Γ^k_ij"""
        if i == XI and j == Z:
            i, j = Z, XI
        return getattr(self, f"{k}_{i}{j}")

    def entries(self) -> Dict[str, Expr]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class VectorFieldExpr:
    """X = a ∂z + b ∂ξ"""
    a: Expr = field(default_factory=Expr)
    b: Expr = field(default_factory=Expr)

    def __post_init__(self):
        object.__setattr__(self, "a", _as_expr(self.a))
        object.__setattr__(self, "b", _as_expr(self.b))

    def component(self, k: str) -> Expr:
        return self.a if k == Z else self.b

    def apply(self, f: Expr) -> Expr:
        """X(f) = a ∂z f + b ∂ξ f"""
        return self.a * differentiate(f, Z) + self.b * differentiate(f, XI)

    def __add__(self, other: "VectorFieldExpr") -> "VectorFieldExpr":
        return VectorFieldExpr(self.a + other.a, self.b + other.b)


@dataclass(frozen=True)
class ProjectiveCoefficients:
    """ξ'' = K0 + K1 ξ' + K2 ξ'^2 + K3 ξ'^3"""
    K0: Expr = field(default_factory=Expr)
    K1: Expr = field(default_factory=Expr)
    K2: Expr = field(default_factory=Expr)
    K3: Expr = field(default_factory=Expr)

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, _as_expr(getattr(self, f.name)))


def reference_connection() -> ChartConnection2D:
    """平坦参考联络 ∇₀：Γ^z_zz = Γ^ξ_zξ = 1"""
    return ChartConnection2D(z_zz=const(1), xi_zxi=const(1))


def torsion_2d(conn: ChartConnection2D) -> Dict[Tuple[str, str, str], Expr]:
    return {(k, i, j): conn.gamma(k, i, j) - conn.gamma(k, j, i)
            for k in COORDINATES for i in COORDINATES for j in COORDINATES if i != j}


def curvature_2d(conn: ChartConnection2D) -> Dict[Tuple[str, str, str, str], Expr]:
    """
    R^l_ijk = ∂_i Γ^l_jk − ∂_j Γ^l_ik + Σ_m (Γ^l_im Γ^m_jk − Γ^l_jm Γ^m_ik)，只取 i ≠ j 的 8 个分量
    :return: {(l, i, j, k): Expr}
    """
    G = conn.gamma
    out = {}
    for l in COORDINATES:
        for i in COORDINATES:
            for j in COORDINATES:
                if i == j:
                    continue
                for k in COORDINATES:
                    value = differentiate(G(l, j, k), i) - differentiate(G(l, i, k), j)
                    for m in COORDINATES:
                        value = value + G(l, i, m) * G(m, j, k) - G(l, j, m) * G(m, i, k)
                    out[(l, i, j, k)] = value
    return out


def is_flat(conn: ChartConnection2D) -> bool:
    return all(v.is_zero() for v in curvature_2d(conn).values())


def killing_residual(conn: ChartConnection2D, X: VectorFieldExpr) -> Tuple[Expr, ...]:
    """
    联络的 Lie 导数 (L_X ∇)^k_ij
        = ∂_i∂_j X^k + X(Γ^k_ij) − Γ^m_ij ∂_m X^k + ∂_i X^m Γ^k_mj + ∂_j X^m Γ^k_im
    按 KILLING_COMPONENTS 的顺序返回 6 个分量，全为零当且仅当 X 是 Killing 场
    """
    G = conn.gamma
    out = []
    for i, j in KILLING_PAIRS:
        for k in COORDINATES:
            Xk = X.component(k)
            value = differentiate(differentiate(Xk, i), j) + X.apply(G(k, i, j))
            for m in COORDINATES:
                Xm = X.component(m)
                value = value - G(m, i, j) * differentiate(Xk, m) \
                    + differentiate(Xm, i) * G(k, m, j) + differentiate(Xm, j) * G(k, i, m)
            out.append(value)
    return tuple(out)


def projectivize(conn: ChartConnection2D) -> ProjectiveCoefficients:
    """沿测地线以 z 为参数消去后 ξ(z) 满足的三次方程的系数"""
    return ProjectiveCoefficients(
        K0=-conn.xi_zz,
        K1=conn.z_zz - 2 * conn.xi_zxi,
        K2=2 * conn.z_zxi - conn.xi_xixi,
        K3=conn.z_xixi,
    )


def projective_change(conn: ChartConnection2D, omega_z, omega_xi) -> ChartConnection2D:
    """Γ^k_ij + δ^k_i ω_j + δ^k_j ω_i，保持测地线的非参数化像不变"""
    wz, wxi = _as_expr(omega_z), _as_expr(omega_xi)
    return ChartConnection2D(
        z_zz=conn.z_zz + 2 * wz,
        z_zxi=conn.z_zxi + wxi,
        z_xixi=conn.z_xixi,
        xi_zz=conn.xi_zz,
        xi_zxi=conn.xi_zxi + wz,
        xi_xixi=conn.xi_xixi + 2 * wxi,
    )


def liouville_invariants(K: ProjectiveCoefficients) -> Tuple[Expr, Expr]:
    """射影平坦当且仅当 L1 = L2 = 0"""
    def d(x, *vs):
        for v in vs:
            x = differentiate(x, v)
        return x

    K0, K1, K2, K3 = K.K0, K.K1, K.K2, K.K3
    L1 = (2 * d(K1, Z, XI) - d(K2, Z, Z) - 3 * d(K0, XI, XI)
          - 6 * K0 * d(K3, Z) - 3 * K3 * d(K0, Z)
          + 3 * K0 * d(K2, XI) + 3 * K2 * d(K0, XI)
          + K1 * d(K2, Z) - 2 * K1 * d(K1, XI))
    L2 = (2 * d(K2, Z, XI) - d(K1, XI, XI) - 3 * d(K3, Z, Z)
          + 6 * K3 * d(K0, XI) + 3 * K0 * d(K3, XI)
          - 3 * K3 * d(K1, Z) - 3 * K1 * d(K3, Z)
          - K2 * d(K1, XI) + 2 * K2 * d(K2, Z))
    return L1, L2
