"""
模群上 Eisenstein 级数 E2、E4 的数值夹具，用来给符号等变恒等式提供浮点见证
"""
import cmath
import logging
import math
import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.symbolic_core import GroupElement
from utils.logging_config import setup_logging

logger = setup_logging(log_level=logging.INFO, log_tag="modular_fixtures")

DEFAULT_ORDER = 64
MAX_ORDER = 20000
TAIL_TOLERANCE = 1e-16
# a_n ≤ 300 n^4 对 E2 (24σ1) 与 E4 (240σ3) 都成立
_COEFFICIENT_BOUND = 300.0

# E2(γξ) = (cξ+d)^2 E2(ξ) + (6/(πi)) c (cξ+d)
E2_QUASIMODULAR_CONSTANT = 6 / (math.pi * 1j)

SERIES_NAMES = ("E2", "E4")


class TruncationError(ValueError):
    pass


def sigma_table(k: int, order: int) -> np.ndarray:
    """σ_k(n)，n = 0..order，σ_k(0) 记为 0"""
    sig = np.zeros(order + 1, dtype=np.float64)
    for d in range(1, order + 1):
        sig[d::d] += float(d) ** k
    return sig


class QSeries:
    """截断 q-展开 Σ_{n≤N} a_n q^n"""

    def __init__(self, name: str, coeffs: np.ndarray):
        self.name = name
        self.coeffs = np.asarray(coeffs, dtype=np.float64)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __repr__(self):
        head = ", ".join(f"{int(a)}" for a in self.coeffs[:5])
        return f"QSeries({self.name}, N={self.order}, [{head}, ...])"


@lru_cache(maxsize=32)
def eisenstein_series(name: str, order: int = DEFAULT_ORDER) -> QSeries:
    """
    E2 = 1 − 24 Σ σ1(n) q^n，E4 = 1 + 240 Σ σ3(n) q^n
    :param name: E2 | E4
    :param order: 截断阶 N
    """
    if name == "E2":
        coeffs = -24.0 * sigma_table(1, order)
    elif name == "E4":
        coeffs = 240.0 * sigma_table(3, order)
    else:
        raise ValueError(f"未知的级数: {name}，可选: {', '.join(SERIES_NAMES)}")
    coeffs[0] = 1.0
    return QSeries(name, coeffs)


def required_order(q_abs: float, m: int = 0, tolerance: float = TAIL_TOLERANCE) -> int:
    """尾项界 300·n^{4+m}(2π)^m |q|^n < tolerance 且已进入单调递减区的最小 n（不小于默认阶）"""
    if q_abs == 0:
        return DEFAULT_ORDER
    log_q = math.log(q_abs)
    turning = (4 + m) / -log_q
    n = DEFAULT_ORDER
    while n <= MAX_ORDER:
        log_term = math.log(_COEFFICIENT_BOUND) + (4 + m) * math.log(n) + m * math.log(2 * math.pi) + n * log_q
        if n > turning and log_term < math.log(tolerance):
            return n
        n += max(1, n // 8)
    raise TruncationError(f"|q| = {q_abs:.6g} 时需要的截断阶超过 {MAX_ORDER}")


def eval_qseries(s: QSeries, xi: complex, m: int = 0) -> complex:
    """
    m 阶导数 Σ a_n (2πi n)^m q^n，q = e^{2πiξ}
    截断阶不足时自动延长同名级数
    """
    xi = complex(xi)
    if xi.imag <= 0:
        raise ValueError(f"ξ 必须在上半平面: {xi}")
    if m < 0:
        raise ValueError(f"导数阶数不能为负: {m}")
    q = cmath.exp(2j * math.pi * xi)
    n_needed = required_order(abs(q), m)
    series = s if n_needed <= s.order else eisenstein_series(s.name, n_needed)
    if n_needed > s.order:
        logger.debug(f"{s.name} 截断阶从 {s.order} 延长到 {n_needed} (Im ξ = {xi.imag:.4g})")
    n = np.arange(n_needed + 1)
    weights = (2j * math.pi * n) ** m if m else np.ones(n_needed + 1)
    return complex(np.sum(series.coeffs[: n_needed + 1] * weights * np.power(q, n)))


def oracle(name: str):
    """符号引擎 NumericBindings 使用的 (order, point) -> value 预言机"""
    series = eisenstein_series(name)
    return lambda order, point: eval_qseries(series, point, order)


def _relative(lhs: complex, rhs: complex) -> float:
    return abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs))


def modular_law_residual(name: str, gamma: GroupElement, xi: complex) -> float:
    """E4(γξ) = L^4 E4(ξ)；E2(ξ) = E2(γξ)L^-2 − K c L^-1 的相对残差"""
    series = eisenstein_series(name)
    lin = gamma.lin(xi)
    gx = gamma.moebius(xi)
    if name == "E4":
        return _relative(eval_qseries(series, gx), lin ** 4 * eval_qseries(series, xi))
    c = complex(gamma.c)
    rhs = eval_qseries(series, gx) / lin ** 2 - E2_QUASIMODULAR_CONSTANT * c / lin
    return _relative(eval_qseries(series, xi), rhs)


def random_sl2z(rng: random.Random, bound: int = 5) -> GroupElement:
    """拒绝采样：元素绝对值不超过 bound 的 SL(2,Z) 元素"""
    while True:
        a, b, c, d = (rng.randint(-bound, bound) for _ in range(4))
        if a * d - b * c == 1:
            return GroupElement(a, b, c, d)


def random_upper_half_point(rng: random.Random) -> complex:
    return complex(rng.uniform(-0.5, 0.5), rng.uniform(1.0, 2.0))


def quasimodular_scalars(f11: complex, f22: complex) -> Tuple[complex, complex]:
    """f12 = s·E2, g22 = t·E2 使拟模常数分别等于 f22 − 2f11 与 −f22"""
    target_f12, target_g22 = f22 - 2 * f11, -f22
    if target_f12 == 0 and target_g22 == 0:
        logger.info("f22 = 2f11 = 0，两个拟模常数均为零，取 s = t = 0")
        return 0j, 0j
    return target_f12 / E2_QUASIMODULAR_CONSTANT, target_g22 / E2_QUASIMODULAR_CONSTANT


@dataclass
class EquivarianceCheck:
    s: complex
    t: complex
    max_abs: Dict[str, float] = field(default_factory=dict)
    max_rel: Dict[str, float] = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return max(self.max_rel.values(), default=0.0)


def numeric_equivariance_check(f11: complex, f22: complex, gamma: GroupElement,
                               sample_points: Sequence[complex],
                               s_override: Optional[complex] = None,
                               t_override: Optional[complex] = None) -> EquivarianceCheck:
    """
    f12 = s·E2, g22 = t·E2, w = E4 时 f12, g12, g22 三个化简方程在采样点上的残差
    :param s_override: 替换 s，用于扰动见证
    :return: EquivarianceCheck，max_rel 为相对残差
    """
    f11, f22 = complex(f11), complex(f22)
    s, t = quasimodular_scalars(f11, f22)
    if s_override is not None:
        s = complex(s_override)
    if t_override is not None:
        t = complex(t_override)
    e2, e4 = eisenstein_series("E2"), eisenstein_series("E4")
    c = complex(gamma.c)
    check = EquivarianceCheck(s=s, t=t, max_abs={k: 0.0 for k in ("f12", "g12", "g22")},
                              max_rel={k: 0.0 for k in ("f12", "g12", "g22")})
    for xi in sample_points:
        xi = complex(xi)
        gx, lin = gamma.moebius(xi), gamma.lin(xi)
        E2, dE2 = eval_qseries(e2, xi), eval_qseries(e2, xi, 1)
        E2g, dE2g = eval_qseries(e2, gx), eval_qseries(e2, gx, 1)
        E4, E4g = eval_qseries(e4, xi), eval_qseries(e4, gx)
        f12, f12g, g22, g22g = s * E2, s * E2g, t * E2, t * E2g
        g12 = (E4 - s * dE2 + t * dE2) / 2
        g12g = (E4g - s * dE2g + t * dE2g) / 2
        pairs = {
            "f12": (f12, f12g / lin ** 2 - c * f22 / lin + 2 * c * f11 / lin),
            "g12": (g12, g12g / lin ** 4 + c * c * (f11 - f22) / lin ** 2 + c * (f12g - g22g) / lin ** 3),
            "g22": (g22, g22g / lin ** 2 + c * f22 / lin),
        }
        for name, (lhs, rhs) in pairs.items():
            check.max_abs[name] = max(check.max_abs[name], abs(lhs - rhs))
            check.max_rel[name] = max(check.max_rel[name], _relative(lhs, rhs))
    logger.debug(f"数值等变检查 γ=[{gamma.key()}]: 最大相对残差 {check.max_residual:.3e}")
    return check
