# version 3.0

import logging
import inspect
import sys
import os, json
from pathlib import Path
from typing import Dict, Optional
from threading import Lock
import atexit
from logging.handlers import RotatingFileHandler

# 相对路径相对于本文件所在目录
_config_path = os.path.join("..", "logging.json")
""" json demo content:
{
    "app_name": "Rigidity",
    "release": true,
    "release_log_level": "INFO",
    "log_format": "%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    "file_logging": {
      "enabled": false,
      "max_bytes": 10485760,
      "backup_count": 0
    }
  }
"""

_DEFAULT_CONFIG = {
    "app_name": "app",
    "release": False,
    "release_log_level": logging.INFO,
    "log_format": "%(asctime)s-%(filename)s:%(funcName)s:%(lineno)d-%(levelname)s-[%(name)s]%(message)s",
    "file_logging": {
      "enabled": False,
      "max_bytes": 10485760,
      "backup_count": 0
    }
}
_current_config: Dict = dict(_DEFAULT_CONFIG)
# setup_logging 建立的 logger，override_level 统一调整
_managed_loggers: Dict[str, logging.Logger] = {}
_level_override: Optional[int] = None
# enable_module_files 指定的日志目录
_file_override: Optional[str] = None
_module_files: Dict[str, bool] = {}

def _load_config() -> bool:
    """模块第一次加载时从logging.json读取配置，找不到则使用默认配置"""
    global _current_config, _config_path

    try:
        base_dir = os.path.dirname(os.path.abspath(__file__))
        abs_path = _config_path
        if not os.path.isabs(abs_path):
            abs_path = os.path.normpath(os.path.join(base_dir, abs_path))
        config_path = str(Path(abs_path).resolve())
        _config_path = config_path
        if os.path.exists(config_path):
            with open(config_path, 'r', encoding="utf-8") as f:
                _current_config = {**_DEFAULT_CONFIG, **json.load(f)}
            return True
    except Exception as e:
        sys.stderr.write(f"加载日志配置文件失败: {e}, 使用默认配置\n")

    sys.stderr.write("未找到日志配置文件logging.json，使用默认配置。\n")
    _current_config = dict(_DEFAULT_CONFIG)
    return False

class FileManager:
    """全局日志文件管理器（单例模式）"""
    _instance = None
    _lock = Lock()
    _open_rotating_handlers: Dict[str, RotatingFileHandler] = {}

    def __new__(cls):
        if cls._instance is None:
            with cls._lock:
                if cls._instance is None:
                    cls._instance = super().__new__(cls)
        return cls._instance

    def get_rotating_handler(
        self,
        path: str,
        max_bytes: int = 10*1024*1024,
        backup_count: int = 5,
        mode: str = "a"
    ) -> RotatingFileHandler:
        """同一路径只打开一个RotatingFileHandler"""
        with self._lock:
            if path not in self._open_rotating_handlers:
                dirname = os.path.dirname(path)
                if dirname:
                    os.makedirs(dirname, exist_ok=True)
                self._open_rotating_handlers[path] = RotatingFileHandler(
                    filename=path,
                    maxBytes=max_bytes,
                    backupCount=backup_count,
                    encoding="utf-8",
                    mode=mode
                )
            return self._open_rotating_handlers[path]

    def close_all(self):
        with self._lock:
            for handler in self._open_rotating_handlers.values():
                try:
                    handler.close()
                except Exception:
                    pass
            self._open_rotating_handlers.clear()

_file_manager = FileManager()
atexit.register(_file_manager.close_all)

class ModuleFilter(logging.Filter):
    def __init__(self, logger_name):
        super().__init__()
        self.logger_name = logger_name

    def filter(self, record):
        return record.name == self.logger_name or record.exc_info is not None

def _get_caller_module() -> str:
    """获取调用者模块名"""
    frame = inspect.currentframe()
    try:
        if frame is not None and frame.f_back is not None:
            caller_frame = frame.f_back.f_back
            if caller_frame is not None:
                module_path = caller_frame.f_globals.get("__file__", "unknown")
                return os.path.splitext(os.path.basename(module_path))[0]
    finally:
        del frame
    return "unknown"

def _level(value) -> int:
    if isinstance(value, str):
        level = logging.getLevelName(value.upper())
        if not isinstance(level, int):
            raise ValueError(f"未知日志级别: {value}")
        return level
    return int(value)

def override_level(level) -> int:
    """
    覆盖所有模块的控制台日志级别，之后新建的 logger 同样生效
    :param level: 级别名 (DEBUG/INFO/WARNING/ERROR) 或数值
    :return: 生效的数值级别
    """
    global _level_override
    _level_override = _level(level)
    for logger in _managed_loggers.values():
        logger.setLevel(_level_override)
        for handler in logger.handlers:
            if isinstance(handler, logging.StreamHandler) and not isinstance(handler, RotatingFileHandler):
                handler.setLevel(_level_override)
    return _level_override

def _app_name() -> str:
    return f"{_current_config['app_name']}_{'release' if _current_config['release'] else 'debug'}"

def _log_dir() -> str:
    return _file_override or os.path.join(os.path.dirname(_config_path), "logs")

def _formatter() -> logging.Formatter:
    return logging.Formatter(_current_config.get("log_format") or _DEFAULT_CONFIG["log_format"])

def _attach_file_handlers(logger: logging.Logger, module_name: str, level: int,
                          max_bytes=10485760, backup_count=0) -> None:
    """按配置和 enable_module_files 的状态给 logger 挂滚动文件"""
    file_logging = _current_config.get("file_logging", {})
    if file_logging.get("enabled") or _file_override:
        app_handler = _file_manager.get_rotating_handler(
            os.path.join(_log_dir(), f"{_app_name()}.log"),
            max_bytes=file_logging.get("max_bytes") or 10*1024*1024,
            backup_count=file_logging.get("backup_count") or 0,
        )
        app_handler.setFormatter(_formatter())
        app_handler.setLevel(level)
        if app_handler not in logger.handlers:
            logger.addHandler(app_handler)

    per_module = _module_files.get(module_name, False) and not _current_config["release"]
    if per_module or _file_override:
        module_handler = _file_manager.get_rotating_handler(
            os.path.join(_log_dir(), f"{_app_name()}_{module_name}.log"),
            max_bytes=max_bytes,
            backup_count=backup_count,
        )
        module_handler.setLevel(level)
        if not module_handler.filters:
            module_handler.addFilter(ModuleFilter(module_name))
        module_handler.setFormatter(_formatter())
        if module_handler not in logger.handlers:
            logger.addHandler(module_handler)

def enable_module_files(log_dir: str) -> str:
    """
    把所有模块的日志同时写入 log_dir：一个汇总文件加每个模块一个文件
    :param log_dir: 日志目录，不存在时创建
    :return: 实际使用的绝对路径
    """
    global _file_override
    _file_override = os.path.abspath(log_dir)
    os.makedirs(_file_override, exist_ok=True)
    for name, logger in _managed_loggers.items():
        _attach_file_handlers(logger, name, logger.level)
    return _file_override

def disable_module_files() -> None:
    """撤销 enable_module_files，关闭它打开的文件，恢复 logging.json 的文件配置"""
    global _file_override
    _file_override = None
    for logger in _managed_loggers.values():
        for handler in logger.handlers[:]:
            if isinstance(handler, RotatingFileHandler):
                logger.removeHandler(handler)
    _file_manager.close_all()
    for name, logger in _managed_loggers.items():
        _attach_file_handlers(logger, name, logger.level)

def setup_logging(log_level=logging.INFO, log_tag=None, b_log_file: bool = False, max_bytes=10485760, backup_count=0):
    """
    配置模块级日志
    :param log_level: 开发模式下本模块的日志级别，release模式统一使用release_log_level
    :param log_tag: logger名称，None表示使用调用模块的文件名
    :param b_log_file: 是否额外输出到本模块专有的日志文件
    :param max_bytes: 单个日志文件最大字节数
    :param backup_count: 保留的备份日志文件数量
    :return: logging.Logger
    """
    release = bool(_current_config["release"])
    effective_log_level = _level(_current_config["release_log_level"]) if release else log_level
    if _level_override is not None:
        effective_log_level = _level_override

    module_name = log_tag or _get_caller_module()
    logger = logging.getLogger(module_name)
    logger.setLevel(effective_log_level)
    logger.propagate = False
    _managed_loggers[module_name] = logger
    _module_files[module_name] = b_log_file

    for handler in logger.handlers[:]:
        logger.removeHandler(handler)

    # 控制台输出走stderr，stdout留给报告
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(_formatter())
    console_handler.setLevel(effective_log_level)
    logger.addHandler(console_handler)

    _attach_file_handlers(logger, module_name, effective_log_level, max_bytes, backup_count)
    return logger

_load_config()
