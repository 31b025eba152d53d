import json
import logging
import os
import time
import traceback
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel

from control.scenarios import SCENARIOS
from model import CheckResult, Report, SCENARIO_CONFIGS, ScenarioName, SuiteReport
from utils.AsyncExecutor import AsyncExecutor
from utils.logging_config import setup_logging

logger = setup_logging(log_level=logging.INFO, log_tag="scenario_controller")


class ScenarioError(ValueError):
    """未知场景、配置文件缺失或格式错误"""
    pass


def list_scenarios() -> List[Tuple[str, str]]:
    return [(name.value, name.description) for name in ScenarioName]


def scenario_names() -> List[str]:
    return [name.value for name in ScenarioName]


def resolve(scenario: str) -> ScenarioName:
    try:
        return ScenarioName(scenario)
    except ValueError:
        raise ScenarioError(f"未知场景: {scenario}，可选: {', '.join(scenario_names())}")


def load_config(scenario: ScenarioName, config_path: Optional[str] = None,
                seed: Optional[int] = None, tolerance: Optional[float] = None) -> BaseModel:
    """
    读取并校验场景配置；命令行的 seed/tolerance 覆盖配置文件
    :raise ScenarioError: 文件不可读或不是 JSON 对象
    :raise pydantic.ValidationError: 不符合场景的配置模型
    """
    config_cls = SCENARIO_CONFIGS[scenario]
    data: Dict = {}
    if config_path:
        try:
            with open(config_path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except OSError as e:
            raise ScenarioError(f"无法读取配置文件 {config_path}: {e}")
        except json.JSONDecodeError as e:
            raise ScenarioError(f"配置文件 {config_path} 不是合法 JSON: {e}")
        if not isinstance(data, dict):
            raise ScenarioError(f"配置文件 {config_path} 顶层必须是对象")
    if seed is not None:
        data["seed"] = seed
    if tolerance is not None:
        data["tolerance"] = tolerance
    config = config_cls.model_validate(data)
    logger.debug(f"{scenario.value} 配置: {config.model_dump()}")
    return config


def execute(scenario: ScenarioName, config: BaseModel) -> Report:
    """执行单个场景；场景内部的意外异常记为失败检查 scenario-crashed"""
    start = time.perf_counter()
    try:
        checks = SCENARIOS[scenario](config)
    except Exception as e:
        logger.error(f"场景 {scenario.value} 异常: {e}")
        logger.error(traceback.format_exc())
        checks = [CheckResult(name="scenario-crashed", passed=False,
                              anchor="the scenario ran to completion",
                              detail=f"{type(e).__name__}: {e}")]
    elapsed = time.perf_counter() - start
    passed = bool(checks) and all(c.passed for c in checks)
    report = Report(scenario=scenario.value, passed=passed, seed=config.seed, checks=checks, wall_time=elapsed)
    failed = [c.name for c in checks if not c.passed]
    if failed:
        logger.warning(f"场景 {scenario.value} 失败 {len(failed)} 项: {failed}")
    else:
        logger.info(f"场景 {scenario.value} 通过 ({len(checks)} 项, {elapsed:.2f} 秒)")
    return report


def write_report(text: str, out_path: Optional[str]) -> None:
    if not out_path:
        return
    directory = os.path.dirname(os.path.abspath(out_path))
    os.makedirs(directory, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as f:
        f.write(text + "\n")
    logger.info(f"报告已写入 {out_path}")


def run(scenario: str, config_path: Optional[str] = None, out_path: Optional[str] = None,
        seed: Optional[int] = None, tolerance: Optional[float] = None, timing: bool = False) -> Report:
    """
    校验配置、执行场景、写出结构化报告
    :param timing: 结构化报告中是否包含耗时
    :return: Report（wall_time 始终填写，供人类可读输出使用）
    """
    name = resolve(scenario)
    config = load_config(name, config_path, seed, tolerance)
    report = execute(name, config)
    write_report(report.to_json(timing), out_path)
    return report


def run_all(config_dir: Optional[str] = None, out_path: Optional[str] = None,
            seed: Optional[int] = None, tolerance: Optional[float] = None, timing: bool = False,
            processes: bool = False, max_workers: Optional[int] = None) -> SuiteReport:
    """
    并行执行全部场景，结果按场景枚举顺序排列
    :param config_dir: 目录下的 <scenario>.json 作为对应场景的配置，缺失时用默认值
    :param processes: 使用进程池代替线程池
    """
    if config_dir and not os.path.isdir(config_dir):
        raise ScenarioError(f"配置目录不存在: {config_dir}")
    configs = {}
    for name in ScenarioName:
        path = os.path.join(config_dir, f"{name.value}.json") if config_dir else None
        configs[name] = load_config(name, path if path and os.path.isfile(path) else None, seed, tolerance)

    with AsyncExecutor(max_workers=max_workers, use_processes=processes) as executor:
        logger.info(f"并行执行 {len(configs)} 个场景，{'进程' if processes else '线程'}数 {executor.max_workers}")
        for name, config in configs.items():
            executor.execute_async(name.value, execute, name, config)
        results = executor.gather()

    reports = []
    for name in ScenarioName:
        result = results[name.value]
        if isinstance(result, Exception):
            result = Report(scenario=name.value, passed=False, seed=configs[name].seed, checks=[
                CheckResult(name="scenario-crashed", passed=False, anchor="the scenario ran to completion",
                            detail=str(result.args[0]) if result.args else str(result))])
        reports.append(result)
    suite = SuiteReport(passed=all(r.passed for r in reports), reports=reports)
    write_report(suite.to_json(timing), out_path)
    return suite
