import sys
import os
ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.append(ROOT)
sys.path.append(os.path.join(ROOT, "framework"))
import logging
import tempfile
import unittest
from logging.handlers import RotatingFileHandler

from utils.logging_config import ModuleFilter, disable_module_files, enable_module_files, setup_logging

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s',
    handlers=[
        logging.StreamHandler(sys.stdout)
    ]
)
logger = logging.getLogger(__name__)


def _read(directory: str, suffix: str) -> str:
    names = [name for name in os.listdir(directory) if name.endswith(suffix)]
    if len(names) != 1:
        raise AssertionError(f"{suffix}: {names}")
    with open(os.path.join(directory, names[0]), encoding="utf-8") as f:
        return f.read()


class TestModuleFiles(unittest.TestCase):
    def setUp(self):
        self.test_name = self._testMethodName
        logger.info(f"\n{'='*60}\nStarting test: {self.test_name}\n{'='*60}")
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        disable_module_files()
        self.tmp.cleanup()
        logger.info(f"\nFinished test: {self.test_name}\n{'='*60}\n")

    def test_each_module_gets_its_own_file(self):
        first = setup_logging(logging.INFO, "unit_first")
        log_dir = enable_module_files(self.tmp.name)
        # 开启之后新建的 logger 同样写文件
        second = setup_logging(logging.INFO, "unit_second")
        first.warning("first-only message")
        second.warning("second-only message")
        for handler in first.handlers + second.handlers:
            handler.flush()

        first_text = _read(log_dir, "_unit_first.log")
        self.assertIn("first-only message", first_text)
        self.assertNotIn("second-only message", first_text)
        self.assertIn("second-only message", _read(log_dir, "_unit_second.log"))
        summary = [name for name in os.listdir(log_dir) if name.count("_") == 1]
        self.assertEqual(len(summary), 1)
        with open(os.path.join(log_dir, summary[0]), encoding="utf-8") as f:
            text = f.read()
        self.assertIn("first-only message", text)
        self.assertIn("second-only message", text)

    def test_module_handler_is_filtered(self):
        enable_module_files(self.tmp.name)
        unit = setup_logging(logging.INFO, "unit_filtered")
        module_handlers = [h for h in unit.handlers
                           if isinstance(h, RotatingFileHandler) and h.baseFilename.endswith("_unit_filtered.log")]
        self.assertEqual(len(module_handlers), 1)
        self.assertTrue(any(isinstance(f, ModuleFilter) for f in module_handlers[0].filters))

    def test_disable_detaches_files(self):
        enable_module_files(self.tmp.name)
        unit = setup_logging(logging.INFO, "unit_detached")
        self.assertTrue(any(isinstance(h, RotatingFileHandler) for h in unit.handlers))
        disable_module_files()
        self.assertFalse(any(isinstance(h, RotatingFileHandler) for h in unit.handlers))
        self.assertEqual(len(unit.handlers), 1)


if __name__ == "__main__":
    unittest.main(verbosity=2)
