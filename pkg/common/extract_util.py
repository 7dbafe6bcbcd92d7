import os
import re
from jsonpath import jsonpath
from common.logger import Logger
from config.config import Config


class ExtractUtil:
    """
        数据提取和变量替换工具类
        功能：从实验报告中按 jsonpath 提取数据，并替换后续用例中的 ${变量}
    """
    # 类变量，存储提取的数据
    extract_data = {}

    _VARIABLE = re.compile(r'\$\{([^}]+)\}')
    _WHOLE_VARIABLE = re.compile(r'^\$\{([^}]+)\}$')

    @staticmethod
    def extract(report, rule):
        """
        按单条规则提取
        规则格式: 'jsonpath:$.a.b'、'$.a.b'（默认 jsonpath）或 'body:a.b'（点分路径）
        """
        method, path = 'jsonpath', rule
        if ':' in rule and not rule.startswith('$'):
            method, path = rule.split(':', 1)
        method = method.strip().lower()

        if method == 'jsonpath':
            found = jsonpath(report, path.strip())
            return found[0] if found else None
        if method == 'body':
            result = report
            for key in path.strip().split('.'):
                if isinstance(result, dict):
                    result = result.get(key)
                elif isinstance(result, list) and key.isdigit() and int(key) < len(result):
                    result = result[int(key)]
                else:
                    return None
            return result
        raise ValueError(f"不支持的提取方式: {method}")

    @classmethod
    def extract_values(cls, report, extract_rules):
        """
        从报告中提取数据并保存到类变量
        参数:
            report: 报告字典
            extract_rules: 提取规则字典 {变量名: 提取规则}
        返回:
            dict: 本次提取结果
        """
        if not extract_rules or not isinstance(extract_rules, dict):
            Logger.warning("提取规则为空或格式错误，跳过提取")
            return {}

        extracted = {}
        for key, rule in extract_rules.items():
            try:
                value = cls.extract(report, str(rule))
            except Exception as e:
                Logger.error(f"提取数据时出错: {key} - {str(e)}")
                value = None
            extracted[key] = value
            if value is not None:
                cls.extract_data[key] = value
                Logger.debug(f"提取成功: {key} = {value}")
            else:
                Logger.warning(f"提取失败: {key} = None")
        return extracted

    @classmethod
    def _variables(cls):
        variables = {}
        variables.update(Config.get_profile())
        variables.update(os.environ)
        variables.update(cls.extract_data)
        return variables

    @classmethod
    def replace_dynamic_values(cls, data):
        """
        递归替换数据中的 ${变量} 占位符
        整个字符串恰好是一个占位符时保留变量原来的类型（数字、列表等）
        """
        return cls._replace(data, cls._variables())

    @classmethod
    def _replace(cls, data, variables):
        if isinstance(data, dict):
            return {key: cls._replace(value, variables) for key, value in data.items()}
        if isinstance(data, list):
            return [cls._replace(item, variables) for item in data]
        if not isinstance(data, str):
            return data

        whole = cls._WHOLE_VARIABLE.match(data)
        if whole and whole.group(1) in variables:
            return variables[whole.group(1)]

        def replace_match(match):
            name = match.group(1)
            if name not in variables:
                Logger.warning(f"未定义的变量: {name}")
                return match.group(0)
            return str(variables[name])

        return cls._VARIABLE.sub(replace_match, data)

    @classmethod
    def clear_extract_data(cls):
        cls.extract_data = {}
        Logger.debug("已清空提取数据")
