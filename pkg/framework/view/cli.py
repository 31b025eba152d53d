"""
命令行入口：
    main.py run <scenario|all> [--config FILE] [--out FILE] [--seed N] [--tolerance X] [--timing] [--processes]
    main.py list
    main.py --log-level WARNING --log-dir logs run all
退出码：0 全部通过，1 有检查失败，2 用法或配置错误，130 Ctrl+C
"""
import argparse
import json
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from control.scenario_controller import ScenarioError, list_scenarios, run, run_all, scenario_names
from model import Statistics
from utils.logging_config import enable_module_files, override_level, setup_logging

logger = setup_logging(log_level=logging.INFO, log_tag="cli")

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_INTERRUPTED = 130

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rigidity", description="刚性几何结构的符号/数值验证场景")
    parser.add_argument("--log-level", choices=LOG_LEVELS, type=str.upper,
                        help="覆盖 logging.json 中所有模块的控制台日志级别")
    parser.add_argument("--log-dir", help="同时把日志写入该目录：一个汇总文件，另外每个模块一个文件")
    sub = parser.add_subparsers(dest="command", required=True)

    names = ", ".join(scenario_names())
    run_parser = sub.add_parser("run", help="运行一个场景或全部场景",
                                description=f"可选场景: {names}, all")
    run_parser.add_argument("scenario", help=f"场景名（{names}）或 all")
    run_parser.add_argument("--config", help="JSON 配置文件；场景为 all 时为配置目录")
    run_parser.add_argument("--out", help="结构化报告输出路径 (JSON)")
    run_parser.add_argument("--seed", type=int, help="覆盖配置中的随机种子")
    run_parser.add_argument("--tolerance", type=float, help="覆盖配置中的数值容差")
    run_parser.add_argument("--timing", action="store_true", help="结构化报告中包含耗时")
    run_parser.add_argument("--processes", action="store_true", help="all 时使用进程池")
    run_parser.add_argument("--workers", type=int, help="all 时的并行数，默认为物理核数")

    sub.add_parser("list", help="列出全部场景")
    return parser


def _validation_message(e: ValidationError) -> str:
    lines = [f"配置校验失败 ({e.error_count()} 处):"]
    for err in e.errors():
        location = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"  {location}: {err['msg']}")
    return "\n".join(lines)


def _run(args: argparse.Namespace) -> int:
    if args.tolerance is not None and args.tolerance <= 0:
        raise ScenarioError(f"--tolerance 必须为正: {args.tolerance}")
    if args.workers is not None and args.workers <= 0:
        raise ScenarioError(f"--workers 必须为正: {args.workers}")
    if args.scenario == "all":
        suite = run_all(args.config, args.out, seed=args.seed, tolerance=args.tolerance, timing=args.timing,
                        processes=args.processes, max_workers=args.workers)
        print(Statistics.render_suite(suite), end="")
        return EXIT_PASS if suite.passed else EXIT_FAIL
    report = run(args.scenario, args.config, args.out, seed=args.seed, tolerance=args.tolerance,
                 timing=args.timing)
    print(Statistics.render_report(report), end="")
    return EXIT_PASS if report.passed else EXIT_FAIL


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    if args.log_level:
        override_level(args.log_level)
    if args.log_dir:
        logger.info(f"日志同时写入目录: {enable_module_files(args.log_dir)}")

    if args.command == "list":
        print(Statistics.render_scenarios(list_scenarios()), end="")
        return EXIT_PASS
    try:
        return _run(args)
    except ValidationError as e:
        print(_validation_message(e), file=sys.stderr)
        return EXIT_USAGE
    except (ScenarioError, json.JSONDecodeError) as e:
        print(f"错误: {e}", file=sys.stderr)
        return EXIT_USAGE
