import logging
from typing import Iterable, Tuple

from model.models import CheckResult, Report, SuiteReport
from utils import logging_config

logger = logging_config.setup_logging(logging.INFO, "statistics")


class Statistics:
    """报告的人类可读渲染"""

    @classmethod
    def render_check(cls, check: CheckResult) -> str:
        mark = "PASS" if check.passed else "FAIL"
        content = f"  [{mark}] {check.name}\n"
        content += f"         依据：{check.anchor}\n"
        if check.exact_zero is not None:
            content += f"         精确为零：{'是' if check.exact_zero else '否'}\n"
        if check.residual:
            content += f"         残差：{check.residual}\n"
        if check.numeric_max is not None:
            content += f"         数值最大残差：{check.numeric_max:.3e}\n"
        if check.detail:
            content += f"         说明：{check.detail}\n"
        return content

    @classmethod
    def render_report(cls, report: Report) -> str:
        passed = sum(1 for c in report.checks if c.passed)
        content = f"场景：{report.scenario}\n"
        content += f"结果：{'通过' if report.passed else '失败'} ({passed}/{len(report.checks)})\n"
        content += f"随机种子：{report.seed}\n"
        if report.wall_time is not None:
            content += f"耗时：{report.wall_time:.3f} 秒\n"
        content += "检查项：\n"
        for check in report.checks:
            content += cls.render_check(check)
        return content

    @classmethod
    def render_suite(cls, suite: SuiteReport) -> str:
        content = ""
        for report in suite.reports:
            content += cls.render_report(report) + "\n"
        failed = [r.scenario for r in suite.reports if not r.passed]
        content += f"全部场景：{len(suite.reports)}，失败：{len(failed)}\n"
        if failed:
            content += f"失败场景：{', '.join(failed)}\n"
        return content

    @classmethod
    def render_scenarios(cls, scenarios: Iterable[Tuple[str, str]]) -> str:
        scenarios = list(scenarios)
        width = max((len(name) for name, _ in scenarios), default=0)
        return "".join(f"{name.ljust(width)}  {description}\n" for name, description in scenarios)
