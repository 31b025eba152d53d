import sys
import os
ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.append(ROOT)
sys.path.append(os.path.join(ROOT, "framework"))
import logging
import subprocess
import threading
import time
import unittest

from utils.AsyncExecutor import AsyncExecutor, default_workers
from utils.ProcessTerminator import ProcessTerminator

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s',
    handlers=[
        logging.StreamHandler(sys.stdout)
    ]
)
logger = logging.getLogger(__name__)


def square(x):
    return x * x


def fail(message):
    raise ValueError(message)


class TestAsyncExecutor(unittest.TestCase):
    def setUp(self):
        """每个测试用例开始前执行"""
        self.test_name = self._testMethodName
        logger.info(f"\n{'='*60}\nStarting test: {self.test_name}\n{'='*60}")
        self.executor = AsyncExecutor(max_workers=2)
        self.callback_results = []

    def tearDown(self):
        """每个测试用例结束后执行"""
        self.executor.shutdown()
        logger.info(f"\nFinished test: {self.test_name}\n{'='*60}\n")

    def test_initialization(self):
        self.assertEqual(self.executor.max_workers, 2)
        self.assertFalse(self.executor.use_processes)
        self.assertTrue(self.executor._loop_ready.is_set())
        self.assertGreaterEqual(default_workers(), 1)

    def test_execute_with_callback(self):
        done = threading.Event()

        def callback(result):
            self.callback_results.append(result)
            done.set()

        self.executor.execute_async("square", square, 7, callback=callback)
        self.assertTrue(done.wait(5.0))
        self.assertEqual(self.callback_results, [49])
        self.assertEqual(self.executor.result("square"), 49)
        self.assertEqual(self.executor.get_task_status(), {"square": "done"})

    def test_duplicate_task_id(self):
        self.executor.execute_async("t", square, 2)
        with self.assertRaises(RuntimeError) as ctx:
            self.executor.execute_async("t", square, 3)
        self.assertEqual(ctx.exception.args[1], AsyncExecutor.TASKID_EXISTED)

    def test_failed_task(self):
        done = threading.Event()

        def callback(result):
            self.callback_results.append(result)
            done.set()

        self.executor.execute_async("bad", fail, "broken", callback=callback)
        self.assertTrue(done.wait(5.0))
        self.assertIsInstance(self.callback_results[0], RuntimeError)
        with self.assertRaises(RuntimeError) as ctx:
            self.executor.result("bad")
        self.assertEqual(ctx.exception.args[1], AsyncExecutor.TASK_FAILED)
        self.assertEqual(self.executor.get_task_status()["bad"], "failed")

    def test_unknown_task(self):
        with self.assertRaises(RuntimeError) as ctx:
            self.executor.result("missing")
        self.assertEqual(ctx.exception.args[1], AsyncExecutor.TASK_NOT_FOUND)
        self.assertFalse(self.executor.cancel_task("missing"))

    def test_gather_keeps_submission_order(self):
        for i in (5, 1, 4, 2):
            self.executor.execute_async(f"t{i}", square, i)
        self.executor.execute_async("bad", fail, "x")
        results = self.executor.gather()
        self.assertEqual(list(results), ["t5", "t1", "t4", "t2", "bad"])
        self.assertEqual([results[k] for k in ("t5", "t1", "t4", "t2")], [25, 1, 16, 4])
        self.assertIsInstance(results["bad"], RuntimeError)
        self.assertEqual(self.executor.has_tasks(), 0)

    def test_task_cancellation(self):
        block = threading.Event()
        for i in range(2):
            self.executor.execute_async(f"fill_{i}", block.wait, 5.0)
        self.executor.execute_async("to_cancel", square, 3)
        cancelled = self.executor.cancel_task("to_cancel")
        # 任务可能已被调度，两种情况都接受
        self.assertTrue(cancelled or not self.executor.is_task_active("to_cancel"))
        block.set()

    def test_submit_after_shutdown(self):
        self.executor.shutdown()
        with self.assertRaises(RuntimeError) as ctx:
            self.executor.execute_async("late", square, 1)
        self.assertEqual(ctx.exception.args[1], AsyncExecutor.SHUTDOWN)

    def test_process_pool(self):
        with AsyncExecutor(max_workers=2, use_processes=True) as executor:
            self.assertTrue(executor.use_processes)
            for i in range(4):
                executor.execute_async(f"p{i}", square, i)
            results = executor.gather(timeout=60)
        self.assertEqual(list(results.values()), [0, 1, 4, 9])


class TestProcessTerminator(unittest.TestCase):
    def setUp(self):
        self.test_name = self._testMethodName
        logger.info(f"\n{'='*60}\nStarting test: {self.test_name}\n{'='*60}")

    def tearDown(self):
        logger.info(f"\nFinished test: {self.test_name}\n{'='*60}\n")

    def test_terminate_children(self):
        child = subprocess.Popen([sys.executable, "-c", "import time; time.sleep(60)"])
        time.sleep(0.2)
        pids = ProcessTerminator.terminate_children(timeout=5.0)
        self.assertIn(child.pid, pids)
        self.assertIsNotNone(child.wait(timeout=5.0))

    def test_terminate_missing_process(self):
        child = subprocess.Popen([sys.executable, "-c", "pass"])
        child.wait(timeout=10.0)
        self.assertTrue(ProcessTerminator.terminate(child.pid))


if __name__ == "__main__":
    unittest.main(verbosity=2)
