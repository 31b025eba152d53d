import logging
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from core.elliptic_family import FamilyParams
from core.lie_geometry import BUILTIN_NAMES, InvariantMetric, LieAlgebra, load_structure_constants
from core.symbolic_core import ExactComplex, GroupElement
from utils.logging_config import setup_logging

logger = setup_logging(log_level=logging.INFO, log_tag="models")

DEFAULT_SEED = 20240601
DEFAULT_TOLERANCE = 1e-8


class ScenarioName(str, Enum):
    MODEL_METRICS = "model-metrics"
    LIOUVILLE_FLATNESS = "liouville-flatness"
    KILLING_DIM = "killing-dim"
    EQUIVARIANCE_SYMBOLIC = "equivariance-symbolic"
    EQUIVARIANCE_NUMERIC = "equivariance-numeric"
    WANG_COFRAME = "wang-coframe"
    ORBIT_VOLUME_FORM = "orbit-volume-form"
    MODULI_COUNT = "moduli-count"
    FLAT_SEARCH = "flat-search"

    @property
    def description(self) -> str:
        return SCENARIO_DESCRIPTIONS[self]


SCENARIO_DESCRIPTIONS: Dict[ScenarioName, str] = {
    ScenarioName.MODEL_METRICS: "三维模型李代数上的左不变度量：sl2 的 Killing 型常曲率，abelian3/heisenberg3/sol3 平坦",
    ScenarioName.LIOUVILLE_FLATNESS: "椭圆丛联络族射影平坦：K0 = 0，K1 为常数，L1 = L2 = 0",
    ScenarioName.KILLING_DIM: "通用参数下 Killing 代数一维，由基本向量场 d/dz 生成",
    ScenarioName.EQUIVARIANCE_SYMBOLIC: "拟模变换律下 Γ-等变方程组的六个残差形式恒等为零",
    ScenarioName.EQUIVARIANCE_NUMERIC: "用 E2/E4 Eisenstein 级数数值验证化简后的等变方程",
    ScenarioName.WANG_COFRAME: "Lie-Cartan 余标架微分全为零当且仅当李代数交换；模型代数幺模",
    ScenarioName.ORBIT_VOLUME_FORM: "sl2 伴随轨道上的不变 2-形式非退化，即为体积形式",
    ScenarioName.MODULI_COUNT: "亏格 g 时联络族参数空间维数为 5g+1",
    ScenarioName.FLAT_SEARCH: "在小整数系数对称度量中穷举曲率为零的左不变度量",
}


def _exact(value: str) -> str:
    """校验并规范化精确复数字符串 "p/q+p/q i" """
    return str(ExactComplex.parse(value))


class ScenarioConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int = DEFAULT_SEED
    tolerance: float = Field(default=DEFAULT_TOLERANCE, gt=0)


class FamilyParamsConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    f11: str = "1"
    f22: str = "3"
    f12: str = "f12"
    g22: str = "g22"
    w: str = "w"
    pole: str = "xi0"

    @field_validator("f11", "f22")
    @classmethod
    def _check_exact(cls, value: str) -> str:
        return _exact(value)

    @field_validator("f12", "g22", "w")
    @classmethod
    def _check_symbol(cls, value: str) -> str:
        if not value.isidentifier():
            raise ValueError(f"函数符号名必须是标识符: {value!r}")
        return value

    @model_validator(mode="after")
    def _check_params(self):
        self.to_params()
        return self

    def to_params(self) -> FamilyParams:
        return FamilyParams.build(ExactComplex.parse(self.f11), ExactComplex.parse(self.f22),
                                  f12=self.f12, g22=self.g22, w=self.w, pole=self.pole)


class GroupElementConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    a: int
    b: int
    c: int
    d: int

    @model_validator(mode="after")
    def _check_det(self):
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError(f"ad − bc 必须为 1: ({self.a}, {self.b}, {self.c}, {self.d})")
        return self

    def to_element(self) -> GroupElement:
        return GroupElement(self.a, self.b, self.c, self.d)


def _elements(*rows: Tuple[int, int, int, int]) -> List[GroupElementConfig]:
    return [GroupElementConfig(a=a, b=b, c=c, d=d) for a, b, c, d in rows]


def _check_builtin_names(names: List[str]) -> List[str]:
    unknown = [n for n in names if n not in BUILTIN_NAMES]
    if unknown:
        raise ValueError(f"未知的内置李代数: {unknown}，可选: {', '.join(BUILTIN_NAMES)}")
    return names


def _load_algebra(path: str) -> LieAlgebra:
    try:
        return load_structure_constants(path)
    except OSError as e:
        raise ValueError(f"无法读取结构常数文件 {path}: {e}")


class ModelMetricsConfig(ScenarioConfig):
    algebras: List[str] = Field(default_factory=lambda: list(BUILTIN_NAMES))
    scale_factors: List[str] = Field(default_factory=lambda: ["2", "-1", "1/3"])
    random_planes: int = Field(default=5, ge=1)
    # 可选：从结构常数文件读入额外的李代数
    structure_constants: Optional[str] = None
    metric: Optional[List[List[str]]] = None

    @field_validator("algebras")
    @classmethod
    def _check_algebras(cls, names: List[str]) -> List[str]:
        return _check_builtin_names(names)

    @field_validator("scale_factors")
    @classmethod
    def _check_scales(cls, values: List[str]) -> List[str]:
        out = [_exact(v) for v in values]
        if any(ExactComplex.parse(v).is_zero() for v in out):
            raise ValueError("缩放因子不能为零")
        return out

    @field_validator("metric")
    @classmethod
    def _check_metric(cls, rows: Optional[List[List[str]]]) -> Optional[List[List[str]]]:
        if rows is None:
            return None
        return [[_exact(v) for v in row] for row in rows]

    @model_validator(mode="after")
    def _check_file(self):
        if self.metric is not None and not self.structure_constants:
            raise ValueError("metric 只能与 structure_constants 一起使用")
        if self.structure_constants:
            algebra = _load_algebra(self.structure_constants)
            if self.metric is not None:
                metric = InvariantMetric([[ExactComplex.parse(v) for v in row] for row in self.metric])
                if metric.dim != algebra.dim:
                    raise ValueError(f"度量维数 {metric.dim} 与李代数维数 {algebra.dim} 不符")
                if not metric.is_nondegenerate():
                    raise ValueError(f"度量退化: {metric}")
        return self


class FamilyScenarioConfig(ScenarioConfig):
    family: FamilyParamsConfig = Field(default_factory=FamilyParamsConfig)


class LiouvilleFlatnessConfig(FamilyScenarioConfig):
    pass


class KillingDimConfig(FamilyScenarioConfig):
    pass


class EquivarianceSymbolicConfig(FamilyScenarioConfig):
    group_elements: List[GroupElementConfig] = Field(
        default_factory=lambda: _elements((0, -1, 1, 0), (1, 1, 0, 1), (2, 1, 1, 1), (1, 0, 3, 1)))
    random_group_elements: int = Field(default=5, ge=0)


class EquivarianceNumericConfig(ScenarioConfig):
    f11: float = 1.0
    f22: float = 3.0
    sample_points: List[str] = Field(default_factory=lambda: ["2j", "1+2j", "-1+3j"])
    group_elements: List[GroupElementConfig] = Field(
        default_factory=lambda: _elements((0, -1, 1, 0), (1, 1, 0, 1)))
    random_group_elements: int = Field(default=10, ge=0)
    random_points: int = Field(default=10, ge=0)
    group_bound: int = Field(default=5, ge=1)
    perturbation: float = 2.0
    perturbation_threshold: float = 1e-3
    finite_difference_step: float = Field(default=1e-5, gt=0)
    finite_difference_tolerance: float = Field(default=1e-6, gt=0)

    @field_validator("sample_points")
    @classmethod
    def _check_points(cls, values: List[str]) -> List[str]:
        for v in values:
            try:
                point = complex(v.replace(" ", ""))
            except ValueError:
                raise ValueError(f"无法解析采样点: {v!r}")
            if point.imag <= 0:
                raise ValueError(f"采样点必须在上半平面: {v!r}")
        return values

    def points(self) -> List[complex]:
        return [complex(v.replace(" ", "")) for v in self.sample_points]


class WangCoframeConfig(ScenarioConfig):
    algebras: List[str] = Field(default_factory=lambda: list(BUILTIN_NAMES))
    structure_constants: Optional[str] = None

    @field_validator("algebras")
    @classmethod
    def _check_algebras(cls, names: List[str]) -> List[str]:
        return _check_builtin_names(names)

    @field_validator("structure_constants")
    @classmethod
    def _check_file(cls, path: Optional[str]) -> Optional[str]:
        if path:
            _load_algebra(path)
        return path


class OrbitVolumeFormConfig(ScenarioConfig):
    # sl2 基 (H, E, F) 下的坐标
    vectors: List[List[str]] = Field(default_factory=lambda: [["1", "0", "0"], ["1", "1", "0"]])
    null_vectors: List[List[str]] = Field(default_factory=lambda: [["0", "1", "0"]])

    @field_validator("vectors", "null_vectors")
    @classmethod
    def _check_vectors(cls, rows: List[List[str]]) -> List[List[str]]:
        if any(len(row) != 3 for row in rows):
            raise ValueError("sl2 向量必须有 3 个坐标")
        return [[_exact(v) for v in row] for row in rows]


class ModuliCountConfig(ScenarioConfig):
    genus: int = Field(default=2, ge=2)
    genus_range: Tuple[int, int] = (2, 50)

    @field_validator("genus_range")
    @classmethod
    def _check_range(cls, value: Tuple[int, int]) -> Tuple[int, int]:
        if value[0] < 2 or value[1] < value[0]:
            raise ValueError(f"亏格范围无效: {value}")
        return value


class FlatSearchConfig(ScenarioConfig):
    algebras: List[str] = Field(default_factory=lambda: ["abelian3", "heisenberg3", "sol3"])
    values: List[int] = Field(default_factory=lambda: [0, 1])

    @field_validator("algebras")
    @classmethod
    def _check_algebras(cls, names: List[str]) -> List[str]:
        return _check_builtin_names(names)

    @field_validator("values")
    @classmethod
    def _check_values(cls, values: List[int]) -> List[int]:
        if not values or len(set(values)) != len(values):
            raise ValueError("values 不能为空且不能重复")
        if len(values) > 3:
            raise ValueError("values 最多 3 个，穷举规模为 len(values)^6")
        return values


SCENARIO_CONFIGS: Dict[ScenarioName, type] = {
    ScenarioName.MODEL_METRICS: ModelMetricsConfig,
    ScenarioName.LIOUVILLE_FLATNESS: LiouvilleFlatnessConfig,
    ScenarioName.KILLING_DIM: KillingDimConfig,
    ScenarioName.EQUIVARIANCE_SYMBOLIC: EquivarianceSymbolicConfig,
    ScenarioName.EQUIVARIANCE_NUMERIC: EquivarianceNumericConfig,
    ScenarioName.WANG_COFRAME: WangCoframeConfig,
    ScenarioName.ORBIT_VOLUME_FORM: OrbitVolumeFormConfig,
    ScenarioName.MODULI_COUNT: ModuliCountConfig,
    ScenarioName.FLAT_SEARCH: FlatSearchConfig,
}


class CheckResult(BaseModel):
    name: str
    passed: bool
    anchor: str
    exact_zero: Optional[bool] = None
    residual: Optional[str] = None
    numeric_max: Optional[float] = None
    detail: str = ""


class Report(BaseModel):
    scenario: str
    passed: bool
    seed: int
    checks: List[CheckResult] = Field(default_factory=list)
    wall_time: Optional[float] = None

    def to_json(self, timing: bool = False) -> str:
        return self.model_dump_json(indent=2, exclude=None if timing else {"wall_time"})


class SuiteReport(BaseModel):
    passed: bool
    reports: List[Report] = Field(default_factory=list)

    def to_json(self, timing: bool = False) -> str:
        exclude = None if timing else {"reports": {"__all__": {"wall_time"}}}
        return self.model_dump_json(indent=2, exclude=exclude)
