import asyncio
import concurrent.futures
import logging
import threading
import traceback
from collections import OrderedDict
from concurrent.futures import Future, ProcessPoolExecutor, ThreadPoolExecutor
from functools import partial
from typing import Any, Callable, Dict, Iterable, Optional, Union

import psutil

from utils.logging_config import setup_logging

logger = setup_logging(log_level=logging.INFO, log_tag="AsyncExecutor")


def default_workers() -> int:
    """物理核数，取不到时为 1"""
    return psutil.cpu_count(logical=False) or 1


class AsyncExecutor:
    """
    后台事件循环 + 线程池/进程池
    任务以 task_id 标识，结果按提交顺序收集
    """
    SHUTDOWN = 0
    LOOP_NOT_READY = 1
    LOOP_STOPED = 2
    LOOP_READY_TIMEOUT = 3
    TASK_NOT_FOUND = 4
    TASKID_EXISTED = 5
    TASK_FAILED = 8

    def __init__(self, *, max_workers: Optional[int] = None, use_processes: bool = False):
        workers = max_workers or default_workers()
        self._use_processes = use_processes
        self._pool = ProcessPoolExecutor(max_workers=workers) if use_processes else ThreadPoolExecutor(max_workers=workers)
        self._max_workers = workers
        self._running_tasks: "OrderedDict[str, Future]" = OrderedDict()
        self._event_loop_thread: Optional[threading.Thread] = None
        self._event_loop: Optional[asyncio.AbstractEventLoop] = None
        self._lock = threading.Lock()
        self._loop_ready = threading.Event()
        self._shutdown_flag = False
        logger.debug(f"AsyncExecutor: {'process' if use_processes else 'thread'} pool, workers = {workers}")
        self._start_event_loop()

    @property
    def max_workers(self) -> int:
        return self._max_workers

    @property
    def use_processes(self) -> bool:
        return self._use_processes

    def _start_event_loop(self) -> None:
        """在后台线程启动事件循环"""
        def run_loop():
            try:
                self._event_loop = asyncio.new_event_loop()
                asyncio.set_event_loop(self._event_loop)
                self._loop_ready.set()
                self._event_loop.run_forever()
            except Exception as e:
                logger.error(f"Error in asyncio event loop: {e}")
            finally:
                if self._event_loop:
                    self._event_loop.close()
                if not self._shutdown_flag:
                    logger.error("Async event loop stopped unexpectedly")

        self._event_loop_thread = threading.Thread(target=run_loop, daemon=True, name="AsyncEventLoop")
        self._event_loop_thread.start()
        self._loop_ready.wait(timeout=10)
        if not self._loop_ready.is_set():
            raise RuntimeError("Failed to start event loop", self.LOOP_READY_TIMEOUT)

    def execute_async(self, task_id: str, func: Callable[..., Any], *args,
                      callback: Optional[Callable[[Union[Any, Exception]], None]] = None, **kwargs) -> Future:
        """
        提交任务
        :param task_id: 任务标识，不可重复
        :param callback: 完成回调，参数为结果或 RuntimeError
        :return: concurrent.futures.Future
        """
        if self._shutdown_flag:
            raise RuntimeError("Executor is shutting down", self.SHUTDOWN)
        if not self._event_loop or not self._loop_ready.is_set():
            raise RuntimeError("Event loop not ready", self.LOOP_NOT_READY)

        with self._lock:
            if task_id in self._running_tasks:
                raise RuntimeError(f"Task {task_id} already exists", self.TASKID_EXISTED)

            async def async_wrapper():
                return await self._event_loop.run_in_executor(self._pool, partial(func, *args, **kwargs))

            future = asyncio.run_coroutine_threadsafe(async_wrapper(), self._event_loop)
            self._running_tasks[task_id] = future
        logger.debug(f"Task {task_id} submitted")
        future.add_done_callback(partial(self._done_callback, task_id, callback))
        return future

    def _done_callback(self, task_id: str, callback: Optional[Callable], future: Future) -> None:
        try:
            result = future.result()
        except (concurrent.futures.CancelledError, asyncio.CancelledError):
            logger.debug(f"Task: {task_id} is cancelled")
            result = RuntimeError(f"Task {task_id} cancelled", self.TASK_FAILED)
        except Exception as e:
            logger.error(f"Task: {task_id} failed: {e}")
            logger.debug(traceback.format_exc())
            result = RuntimeError(f"Task {task_id} failed: {e}", self.TASK_FAILED)
        if callback:
            callback(result)

    def result(self, task_id: str, timeout: Optional[float] = None) -> Any:
        """阻塞等待任务结果；任务失败时抛出 RuntimeError(msg, TASK_FAILED)"""
        future = self._running_tasks.get(task_id)
        if future is None:
            raise RuntimeError(f"Task {task_id} not found", self.TASK_NOT_FOUND)
        try:
            return future.result(timeout)
        except concurrent.futures.TimeoutError:
            raise
        except (concurrent.futures.CancelledError, asyncio.CancelledError) as e:
            raise RuntimeError(f"Task {task_id} cancelled", self.TASK_FAILED) from e
        except Exception as e:
            raise RuntimeError(f"Task {task_id} failed: {e}", self.TASK_FAILED) from e

    def gather(self, task_ids: Optional[Iterable[str]] = None,
               timeout: Optional[float] = None) -> "OrderedDict[str, Union[Any, Exception]]":
        """按提交顺序收集结果，失败的任务以 RuntimeError 作为结果"""
        ids = list(task_ids) if task_ids is not None else list(self._running_tasks)
        results: "OrderedDict[str, Union[Any, Exception]]" = OrderedDict()
        for task_id in ids:
            try:
                results[task_id] = self.result(task_id, timeout)
            except RuntimeError as e:
                results[task_id] = e
        return results

    def cancel_task(self, task_id: str) -> bool:
        future = self._running_tasks.get(task_id)
        if future is None:
            return False
        return future.cancel()

    def is_task_active(self, task_id: str) -> bool:
        future = self._running_tasks.get(task_id)
        return future is not None and not future.done()

    def has_tasks(self) -> int:
        return sum(1 for f in self._running_tasks.values() if not f.done())

    def get_task_status(self) -> Dict[str, str]:
        status = {}
        for task_id, future in self._running_tasks.items():
            if future.cancelled():
                status[task_id] = "cancelled"
            elif future.done():
                status[task_id] = "failed" if future.exception() else "done"
            else:
                status[task_id] = "running"
        return status

    def shutdown(self, wait: bool = True) -> None:
        if self._shutdown_flag:
            return
        self._shutdown_flag = True
        for future in self._running_tasks.values():
            if not wait:
                future.cancel()
        self._pool.shutdown(wait=wait, cancel_futures=not wait)
        if self._event_loop and self._event_loop.is_running():
            self._event_loop.call_soon_threadsafe(self._event_loop.stop)
        if self._event_loop_thread:
            self._event_loop_thread.join(timeout=5)
        logger.debug("AsyncExecutor shutdown")

    def __enter__(self) -> "AsyncExecutor":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.shutdown(wait=exc_type is None)
