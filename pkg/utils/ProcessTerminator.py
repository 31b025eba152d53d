import logging
from typing import List

import psutil

from utils.logging_config import setup_logging

logger = setup_logging(log_level=logging.INFO, log_tag="ProcessTerminator")


class ProcessTerminator:
    @staticmethod
    def terminate(pid: int, timeout: float = 3.0) -> bool:
        """先 terminate，超时后 kill"""
        try:
            process = psutil.Process(pid)
            process.terminate()
            try:
                process.wait(timeout=timeout)
            except psutil.TimeoutExpired:
                logger.warning(f"进程 {pid} 未在 {timeout} 秒内退出，强制结束")
                process.kill()
            return True
        except psutil.NoSuchProcess:
            return True  # 进程已退出
        except psutil.AccessDenied as e:
            logger.error(f"无权限结束进程 {pid}: {e}")
            return False

    @staticmethod
    def terminate_children(timeout: float = 3.0) -> List[int]:
        """结束当前进程的全部子进程（递归），返回被处理的 pid"""
        children = psutil.Process().children(recursive=True)
        for child in children:
            try:
                child.terminate()
            except psutil.NoSuchProcess:
                pass
        _, alive = psutil.wait_procs(children, timeout=timeout)
        for child in alive:
            try:
                logger.warning(f"子进程 {child.pid} 未响应 terminate，强制结束")
                child.kill()
            except psutil.NoSuchProcess:
                pass
        if children:
            logger.info(f"已结束 {len(children)} 个子进程")
        return [child.pid for child in children]
