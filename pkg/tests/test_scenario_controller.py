import sys
import os
ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.append(ROOT)
sys.path.append(os.path.join(ROOT, "framework"))
import contextlib
import io
import json
import logging
import tempfile
import unittest
from unittest import mock

from pydantic import ValidationError

from control.scenario_controller import (
    ScenarioError, execute, list_scenarios, load_config, resolve, run, run_all, scenario_names,
)
from control.scenarios import SCENARIOS
from model import ScenarioName, Statistics
from view import cli
from utils.logging_config import disable_module_files

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s',
    handlers=[
        logging.StreamHandler(sys.stdout)
    ]
)
logger = logging.getLogger(__name__)


def _boom(config):
    raise ZeroDivisionError("boom")


class TestScenarioController(unittest.TestCase):
    def setUp(self):
        self.test_name = self._testMethodName
        logger.info(f"\n{'='*60}\nStarting test: {self.test_name}\n{'='*60}")
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()
        logger.info(f"\nFinished test: {self.test_name}\n{'='*60}\n")

    def _write(self, name: str, content) -> str:
        path = os.path.join(self.tmp.name, name)
        with open(path, "w", encoding="utf-8") as f:
            f.write(content if isinstance(content, str) else json.dumps(content))
        return path

    def test_list_scenarios(self):
        names = scenario_names()
        self.assertEqual(len(names), 9)
        self.assertEqual(names[0], "model-metrics")
        self.assertIn("flat-search", names)
        text = Statistics.render_scenarios(list_scenarios())
        for name in names:
            self.assertIn(name, text)

    def test_resolve_unknown(self):
        self.assertEqual(resolve("killing-dim"), ScenarioName.KILLING_DIM)
        with self.assertRaises(ScenarioError):
            resolve("killing-dimension")

    def test_config_errors(self):
        with self.assertRaises(ValidationError):
            load_config(ScenarioName.MODULI_COUNT, self._write("extra.json", {"genus": 3, "colour": "red"}))
        with self.assertRaises(ValidationError):
            load_config(ScenarioName.MODULI_COUNT, self._write("low.json", {"genus": 1}))
        with self.assertRaises(ValidationError):
            load_config(ScenarioName.KILLING_DIM, self._write("fam.json", {"family": {"f11": "abc"}}))
        with self.assertRaises(ScenarioError):
            load_config(ScenarioName.MODULI_COUNT, self._write("bad.json", "{not json"))
        with self.assertRaises(ScenarioError):
            load_config(ScenarioName.MODULI_COUNT, self._write("list.json", [1, 2]))
        with self.assertRaises(ScenarioError):
            load_config(ScenarioName.MODULI_COUNT, os.path.join(self.tmp.name, "missing.json"))

    def test_bad_structure_constants_file_is_a_config_error(self):
        path = self._write("bad.txt", "dim 3\n1 1 2 1 0\n")
        with self.assertRaises(ValidationError):
            load_config(ScenarioName.WANG_COFRAME, self._write("wang.json", {"structure_constants": path}))

    def test_overrides(self):
        config = load_config(ScenarioName.MODULI_COUNT, self._write("seed.json", {"seed": 5}), seed=9, tolerance=1e-6)
        self.assertEqual(config.seed, 9)
        self.assertEqual(config.tolerance, 1e-6)

    def test_every_scenario_passes_with_defaults(self):
        for name in ScenarioName:
            report = run(name.value)
            failed = [c.name for c in report.checks if not c.passed]
            self.assertTrue(report.passed, f"{name.value}: {failed}")
            self.assertTrue(report.checks)

    def test_non_generic_killing_config(self):
        path = self._write("killing.json", {"family": {"f11": "1", "f22": "1"}})
        report = run("killing-dim", path)
        self.assertTrue(report.passed)
        self.assertTrue(any("non-generic" in c.name for c in report.checks))

    def test_external_structure_constants(self):
        path = self._write("heis.txt", "# heisenberg\ndim 3\n1 2 3 1 0\n")
        config = self._write("metrics.json", {"structure_constants": path,
                                              "metric": [["1", "0", "0"], ["0", "0", "1"], ["0", "1", "0"]]})
        self.assertTrue(run("model-metrics", config).passed)
        self.assertTrue(run("wang-coframe", self._write("wang.json", {"structure_constants": path})).passed)

    def test_report_is_deterministic(self):
        for scenario in ("equivariance-numeric", "model-metrics"):
            first = os.path.join(self.tmp.name, f"{scenario}-1.json")
            second = os.path.join(self.tmp.name, "nested", f"{scenario}-2.json")
            run(scenario, out_path=first, seed=11)
            run(scenario, out_path=second, seed=11)
            with open(first, encoding="utf-8") as f1, open(second, encoding="utf-8") as f2:
                a, b = f1.read(), f2.read()
            self.assertEqual(a, b)
            self.assertNotIn("wall_time", a)
            self.assertEqual(json.loads(a)["seed"], 11)

    def test_timing_is_opt_in(self):
        out = os.path.join(self.tmp.name, "timed.json")
        run("moduli-count", out_path=out, timing=True)
        with open(out, encoding="utf-8") as f:
            self.assertIsNotNone(json.load(f)["wall_time"])

    def test_crash_becomes_failed_check(self):
        with mock.patch.dict(SCENARIOS, {ScenarioName.MODULI_COUNT: _boom}):
            report = execute(ScenarioName.MODULI_COUNT, load_config(ScenarioName.MODULI_COUNT))
        self.assertFalse(report.passed)
        self.assertEqual(report.checks[0].name, "scenario-crashed")
        self.assertIn("ZeroDivisionError", report.checks[0].detail)

    def test_run_all_keeps_scenario_order(self):
        out = os.path.join(self.tmp.name, "suite.json")
        suite = run_all(out_path=out, max_workers=2)
        self.assertTrue(suite.passed, [r.scenario for r in suite.reports if not r.passed])
        self.assertEqual([r.scenario for r in suite.reports], scenario_names())
        with open(out, encoding="utf-8") as f:
            self.assertNotIn("wall_time", f.read())

    def test_run_all_missing_directory(self):
        with self.assertRaises(ScenarioError):
            run_all(os.path.join(self.tmp.name, "nowhere"))


class TestCli(unittest.TestCase):
    def setUp(self):
        self.test_name = self._testMethodName
        logger.info(f"\n{'='*60}\nStarting test: {self.test_name}\n{'='*60}")
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()
        logger.info(f"\nFinished test: {self.test_name}\n{'='*60}\n")

    def _main(self, *argv):
        out, err = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            code = cli.main(list(argv))
        return code, out.getvalue(), err.getvalue()

    def test_list(self):
        code, out, _ = self._main("list")
        self.assertEqual(code, cli.EXIT_PASS)
        self.assertIn("orbit-volume-form", out)

    def test_usage_errors(self):
        self.assertEqual(self._main()[0], cli.EXIT_USAGE)
        self.assertEqual(self._main("run", "no-such-scenario")[0], cli.EXIT_USAGE)
        self.assertEqual(self._main("run", "moduli-count", "--tolerance", "-1")[0], cli.EXIT_USAGE)
        self.assertEqual(self._main("run", "moduli-count", "--seed", "x")[0], cli.EXIT_USAGE)

    def test_log_level_override(self):
        try:
            code, _, _ = self._main("--log-level", "warning", "list")
            self.assertEqual(code, cli.EXIT_PASS)
            self.assertEqual(logging.getLogger("cli").level, logging.WARNING)
            self.assertEqual(logging.getLogger("scenario_controller").level, logging.WARNING)
        finally:
            self._main("--log-level", "INFO", "list")
        self.assertEqual(self._main("--log-level", "LOUD", "list")[0], cli.EXIT_USAGE)

    def test_log_dir_writes_module_files(self):
        log_dir = os.path.join(self.tmp.name, "logs")
        try:
            code, _, _ = self._main("--log-dir", log_dir, "list")
            self.assertEqual(code, cli.EXIT_PASS)
            for handler in logging.getLogger("cli").handlers:
                handler.flush()
        finally:
            disable_module_files()
        names = os.listdir(log_dir)
        cli_files = [name for name in names if name.endswith("_cli.log")]
        self.assertEqual(len(cli_files), 1, names)
        self.assertTrue(any(name.endswith("_scenario_controller.log") for name in names), names)
        with open(os.path.join(log_dir, cli_files[0]), encoding="utf-8") as f:
            self.assertIn(os.path.abspath(log_dir), f.read())

    def test_invalid_config(self):
        path = os.path.join(self.tmp.name, "bad.json")
        with open(path, "w", encoding="utf-8") as f:
            json.dump({"genus": 2, "unknown": 1}, f)
        code, _, err = self._main("run", "moduli-count", "--config", path)
        self.assertEqual(code, cli.EXIT_USAGE)
        self.assertIn("unknown", err)

    def test_pass_and_fail(self):
        code, out, _ = self._main("run", "moduli-count", "--seed", "3")
        self.assertEqual(code, cli.EXIT_PASS)
        self.assertIn("随机种子：3", out)
        with mock.patch.dict(SCENARIOS, {ScenarioName.MODULI_COUNT: _boom}):
            code, out, _ = self._main("run", "moduli-count")
        self.assertEqual(code, cli.EXIT_FAIL)
        self.assertIn("scenario-crashed", out)


if __name__ == "__main__":
    unittest.main(verbosity=2)
