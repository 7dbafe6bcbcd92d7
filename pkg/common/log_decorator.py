import functools
import time
import traceback
from common.logger import Logger
from config.config import Config


class LogDecorator:
    """日志装饰器：统一记录实验入口、耗时与异常"""

    @staticmethod
    def log_function_call(include_args=False, include_result=False, log_level="info"):
        """
        记录函数调用的装饰器

        参数:
            include_args (bool): 是否记录函数参数
            include_result (bool): 是否记录函数返回值
            log_level (str): 日志级别，可选值: debug, info, warning, error
        """
        def decorator(func):
            @functools.wraps(func)
            def wrapper(*args, **kwargs):
                log_method = getattr(Logger, log_level.lower(), Logger.info)
                func_name = func.__qualname__

                start_msg = f"开始执行 {func_name}"
                if include_args:
                    start_msg += f" - 参数: args={args}, kwargs={kwargs}"
                log_method(start_msg)

                start_time = time.perf_counter()
                try:
                    result = func(*args, **kwargs)
                except Exception as e:
                    duration = time.perf_counter() - start_time
                    Logger.error(f"执行 {func_name} 时发生异常 - 耗时: {duration:.3f}秒 - "
                                 f"{type(e).__name__}: {str(e)}")
                    Logger.debug(f"异常堆栈: {traceback.format_exc()}")
                    raise

                duration = time.perf_counter() - start_time
                end_msg = f"完成执行 {func_name} - 耗时: {duration:.3f}秒"
                if include_result:
                    end_msg += f" - 返回值: {result}"
                log_method(end_msg)
                return result

            return wrapper
        return decorator

    @staticmethod
    def log_test_case(test_name=None):
        """
        实验用例日志装饰器（YAML 用例使用）

        参数:
            test_name (str): 用例名称，为 None 时取 self.name 或函数名
        """
        def decorator(func):
            @functools.wraps(func)
            def wrapper(*args, **kwargs):
                name = test_name
                if name is None and args:
                    name = getattr(args[0], 'name', None)
                name = name or func.__name__

                Logger.info(f"开始执行实验用例: {name}")
                start_time = time.perf_counter()
                try:
                    result = func(*args, **kwargs)
                except Exception as e:
                    duration = time.perf_counter() - start_time
                    Logger.error(f"实验用例执行失败: {name} - 耗时: {duration:.3f}秒 - 错误: {str(e)}")
                    raise

                duration = time.perf_counter() - start_time
                Logger.success(f"实验用例执行成功: {name} - 耗时: {duration:.3f}秒")
                return result

            return wrapper
        return decorator

    @staticmethod
    def log_performance(operation_name=None):
        """
        耗时分级：小于阈值的 1/5 记 DEBUG，小于阈值记 INFO，超过阈值记 WARNING。
        阈值取配置项 slow_operation_seconds。
        """
        def decorator(func):
            @functools.wraps(func)
            def wrapper(*args, **kwargs):
                name = operation_name or func.__name__
                slow = float(Config.setting('slow_operation_seconds', 5.0))

                start_time = time.perf_counter()
                try:
                    result = func(*args, **kwargs)
                except Exception as e:
                    duration = time.perf_counter() - start_time
                    Logger.error(f"耗时监控: {name} - 耗时: {duration:.3f}秒 - 错误: {str(e)}")
                    raise

                duration = time.perf_counter() - start_time
                if duration < slow / 5:
                    Logger.debug(f"耗时监控: {name} - 耗时: {duration:.3f}秒 (快速)")
                elif duration < slow:
                    Logger.info(f"耗时监控: {name} - 耗时: {duration:.3f}秒 (正常)")
                else:
                    Logger.warning(f"耗时监控: {name} - 耗时: {duration:.3f}秒 (较慢，阈值 {slow}秒)")
                return result

            return wrapper
        return decorator


def log_function(include_args=False, include_result=False, log_level="info"):
    """便捷函数：记录函数调用"""
    return LogDecorator.log_function_call(include_args, include_result, log_level)


def log_test(test_name=None):
    """便捷函数：记录实验用例"""
    return LogDecorator.log_test_case(test_name)


def log_perf(operation_name=None):
    """便捷函数：耗时监控"""
    return LogDecorator.log_performance(operation_name)
