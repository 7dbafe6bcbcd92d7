import os
import sys
import json
import platform
from datetime import datetime
from pathlib import Path

import allure
import numpy
import pytest
import yaml

from common.assert_util import AssertUtil
from common.extract_util import ExtractUtil
from common.log_decorator import log_function, log_test
from common.logger import Logger
from config.config import Config
from fixtures.lab_fixture import corpus_spec, lab_profile, run_cli  # noqa: F401
from lab import SCHEMA_VERSION, __version__


def pytest_addoption(parser):
    """添加命令行选项"""
    parser.addoption(
        "--profile",
        action="store",
        default=None,
        help="实验配置名称: default / quick / thorough"
    )


@log_function()
def pytest_configure(config):
    """配置初始化"""
    profile = config.getoption("--profile")
    if profile:
        Config.use_profile(profile)
        Logger.info(f"使用命令行指定配置: {profile}")
    else:
        Logger.info(f"使用默认实验配置: {Config.profile_name()}")
    Logger.debug(f"当前配置: {Config.get_profile()}")

    _record_environment_info(config)

    config.addinivalue_line("markers", "priority(value): 设置实验用例优先级")
    config.addinivalue_line("markers", "feature(name): 设置实验功能模块")
    Logger.info("pytest配置初始化完成")


def _record_environment_info(config):
    """记录环境信息到Allure报告"""
    alluredir = getattr(config.option, "allure_report_dir", None)
    if not alluredir:
        return
    try:
        # 使用英文键名避免乱码
        environment_info = {
            "Profile": Config.profile_name(),
            "Tool Version": __version__,
            "Report Schema": SCHEMA_VERSION,
            "Max Workers": Config.max_workers(),
            "Project Path": str(Path.cwd()),
            "Python Version": f"{sys.version_info.major}.{sys.version_info.minor}.{sys.version_info.micro}",
            "Numpy Version": numpy.__version__,
            "Operating System": f"{platform.system()} {platform.release()}",
            "Execution Time": datetime.now().strftime("%Y-%m-%d %H:%M:%S"),
            "Pytest Version": pytest.__version__
        }
        os.makedirs(alluredir, exist_ok=True)
        with open(os.path.join(alluredir, "environment.properties"), 'w', encoding='utf-8') as f:
            for key, value in environment_info.items():
                f.write(f"{key}={str(value)}\n")
    except Exception as e:
        Logger.warning(f"记录环境信息失败: {str(e)}")


def pytest_collect_file(file_path, parent):
    """只收集 data/test_cases 下的 YAML 实验用例"""
    if file_path.suffix == ".yaml" and str(file_path).startswith(Config.TEST_CASES_DIR):
        return YamlFile.from_parent(parent, path=file_path)


class YamlFile(pytest.File):
    """YAML实验用例加载器"""

    def collect(self):
        try:
            test_cases = self._load_and_validate_yaml()
        except yaml.YAMLError as e:
            pytest.fail(f"YAML文件解析失败: {self.path}\n错误详情: {str(e)}")

        for idx, case in enumerate(test_cases):
            yield self._create_yaml_item(idx, case)

    def _load_and_validate_yaml(self):
        with open(self.path, 'r', encoding='utf-8') as f:
            test_cases = yaml.safe_load(f) or []

        if not isinstance(test_cases, list):
            Logger.warning(f"YAML文件根元素应为列表: {self.path}")
            return []
        return test_cases

    def _create_yaml_item(self, idx, case):
        """用例名包含文件相对路径与序号，保证唯一"""
        if not isinstance(case, dict):
            Logger.warning(f"忽略非字典类型的用例: {self.path} 第{idx + 1}条")
            case = {'name': f'invalid_case_{idx}', 'invalid': True}

        rel_path = str(self.path.relative_to(Config.TEST_CASES_DIR)).replace(os.sep, "_")
        unique_name = f"{rel_path}-{idx}_{case.get('name', 'unnamed')}"
        return YamlItem.from_parent(self, name=unique_name, spec=case, index=idx)


class YamlItem(pytest.Item):
    """
    单条 YAML 实验用例：
    experiment 交给命令行执行器，extract 提取变量供同文件后续用例 ${name} 引用，expect 断言报告
    """

    def __init__(self, name, parent, spec, index=0):
        super().__init__(name, parent)
        self.spec = spec
        self.index = index
        self.feature = self.spec.get("feature", "默认模块")
        self.priority = self.spec.get("priority")
        for mark in self.spec.get("marks") or []:
            self.add_marker(getattr(pytest.mark, mark))

    def _validate_spec(self):
        """验证用例必需字段"""
        if not isinstance(self.spec.get('experiment'), dict):
            pytest.fail(f"实验用例缺少 experiment 配置 (用例: {self.name})")
        if not isinstance(self.spec.get('expect'), dict):
            pytest.fail(f"实验用例缺少 expect 配置 (用例: {self.name})")

    @log_test()
    def runtest(self):
        if self.spec.get('invalid'):
            pytest.skip("无效的实验用例格式")
        self._validate_spec()

        # 每个文件的第一条用例开始前清空提取变量
        if self.index == 0:
            ExtractUtil.clear_extract_data()

        allure.dynamic.title(self.spec.get('name', self.name))
        allure.dynamic.description(self.spec.get('description', ''))
        allure.dynamic.feature(self.feature)

        spec = ExtractUtil.replace_dynamic_values(self.spec)
        report = self._execute_experiment(spec['experiment'])
        self._handle_extraction(report, spec.get('extract'))
        self._handle_assertions(report, spec['expect'])

    def _execute_experiment(self, experiment):
        from lab.cli_harness import execute

        with allure.step("执行实验"):
            allure.attach(
                yaml.safe_dump(experiment, allow_unicode=True, sort_keys=False),
                name="实验配置",
                attachment_type=allure.attachment_type.YAML
            )
            exit_code, report = execute(experiment)
            allure.attach(
                json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False),
                name="实验报告",
                attachment_type=allure.attachment_type.JSON
            )
            Logger.info(f"实验完成，退出码: {exit_code}")
            return report

    def _handle_extraction(self, report, extract_rules):
        if not extract_rules:
            return
        with allure.step("提取变量"):
            extracted = ExtractUtil.extract_values(report, extract_rules)
            allure.attach(
                json.dumps(extracted, indent=2, ensure_ascii=False, default=str),
                name="提取结果",
                attachment_type=allure.attachment_type.JSON
            )

    def _handle_assertions(self, report, expect):
        with allure.step("验证报告"):
            results = AssertUtil.compare_report(report, expect)
            allure.attach(
                AssertUtil.format_table(results),
                name="断言对比表",
                attachment_type=allure.attachment_type.TEXT
            )
            AssertUtil.assert_report(report, expect)

    def repr_failure(self, excinfo):
        """断言失败时只显示对比表"""
        if isinstance(excinfo.value, AssertionError):
            return str(excinfo.value)
        return super().repr_failure(excinfo)

    def reportinfo(self):
        return self.path, None, f"实验用例: {self.name}"


def pytest_collection_modifyitems(config, items):
    for item in items:
        if isinstance(item, YamlItem):
            item.add_marker(pytest.mark.feature(item.feature))
            if item.priority is not None:
                item.add_marker(pytest.mark.priority(item.priority))


@pytest.hookimpl(tryfirst=True, hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """统一的测试报告处理"""
    outcome = yield
    rep = outcome.get_result()

    if rep.when == 'call':
        _handle_test_report(rep, item)


def _handle_test_report(rep, item):
    """处理测试报告日志"""
    case_name = getattr(item, 'name', '未命名用例')
    if rep.failed:
        Logger.error(f"用例执行失败: {case_name}")
        err_msg = str(getattr(rep, 'longrepr', '未知错误'))
        Logger.error(f"失败原因: {err_msg[:500]}{'...' if len(err_msg) > 500 else ''}")
    elif rep.passed:
        Logger.success(f"用例执行成功: {case_name}")


@pytest.fixture(autouse=True)
def auto_clean_extract():
    """Python 用例结束后清理提取变量（YAML 用例不经过 fixture，变量在同文件内保留）"""
    yield
    ExtractUtil.clear_extract_data()
