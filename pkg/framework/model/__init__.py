from .models import (
    CheckResult,
    Report,
    ScenarioConfig,
    ScenarioName,
    SuiteReport,
    SCENARIO_CONFIGS,
    SCENARIO_DESCRIPTIONS,
)

from .statistics import Statistics

__all__ = [
    "CheckResult",
    "Report",
    "ScenarioConfig",
    "ScenarioName",
    "SuiteReport",
    "SCENARIO_CONFIGS",
    "SCENARIO_DESCRIPTIONS",
    "Statistics"
]
