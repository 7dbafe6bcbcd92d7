import os
import logging
import threading

import colorlog
from config.config import Config


class Logger:
    _instance = None
    _lock = threading.Lock()

    def __new__(cls):
        """单例：整个进程共用一个 csslab 日志记录器；矩阵的工作线程也会走到这里"""
        if cls._instance is None:
            with cls._lock:
                if cls._instance is None:
                    instance = super().__new__(cls)
                    instance.init_logger()
                    cls._instance = instance
        return cls._instance

    def init_logger(self):
        """初始化日志记录器"""
        os.makedirs(Config.REPORT_DIR, exist_ok=True)
        self.logger = logging.getLogger('csslab')
        self.logger.setLevel(logging.DEBUG)
        self.logger.propagate = False

        if self.logger.handlers:
            return

        # 控制台输出到 stderr，stdout 留给报告
        self.console_handler = logging.StreamHandler()
        self.console_handler.setLevel(self._level_from_config())

        file_handler = logging.FileHandler(
            filename=os.path.join(Config.REPORT_DIR, 'csslab.log'),
            mode='a',
            encoding='utf-8'
        )
        file_handler.setLevel(logging.INFO)

        console_formatter = colorlog.ColoredFormatter(
            '%(log_color)s%(asctime)s - %(levelname)-8s - %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S',
            log_colors={
                'DEBUG': 'cyan',
                'INFO': 'green',
                'WARNING': 'yellow',
                'ERROR': 'red',
                'CRITICAL': 'red,bg_white',
            }
        )
        file_formatter = logging.Formatter(
            '%(asctime)s - %(levelname)-8s - %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        )

        self.console_handler.setFormatter(console_formatter)
        file_handler.setFormatter(file_formatter)

        self.logger.addHandler(self.console_handler)
        self.logger.addHandler(file_handler)

    @staticmethod
    def _level_from_config():
        level = str(Config.setting('log_level', 'INFO')).upper()
        return getattr(logging, level, logging.INFO)

    @classmethod
    def set_level(cls, level):
        """调整控制台日志级别（--log-level / 配置切换后调用）"""
        instance = cls()
        resolved = getattr(logging, str(level).upper(), None)
        if resolved is None:
            instance.logger.warning(f"无效的日志级别: {level}")
            return
        for handler in instance.logger.handlers:
            if isinstance(handler, logging.StreamHandler) and not isinstance(handler, logging.FileHandler):
                handler.setLevel(resolved)

    @classmethod
    def info(cls, message):
        cls().logger.info(message)

    @classmethod
    def debug(cls, message):
        cls().logger.debug(message)

    @classmethod
    def warning(cls, message):
        cls().logger.warning(message)

    @classmethod
    def error(cls, message, exc_info=False):
        """
        记录错误级别日志
        参数:
            message (str): 错误消息
            exc_info (bool): 是否包含异常堆栈
        """
        cls().logger.error(message, exc_info=exc_info)

    @classmethod
    def success(cls, message):
        """成功信息：INFO 级别，带 SUCCESS 前缀"""
        cls().logger.info(f"SUCCESS: {message}")

    @classmethod
    def exception(cls, message):
        """记录异常信息（自动包含堆栈跟踪）"""
        cls().logger.exception(message)
