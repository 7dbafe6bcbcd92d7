import re
import json
from numbers import Number
from common.logger import Logger


REGEX_PREFIX = "!!python/regex "


class AssertUtil:
    @staticmethod
    def assert_report(report, expect_config):
        """
        报告断言：退出码 + 报告主体（期望是实际报告的子集）
        返回断言结果列表；有失败项时抛出 AssertionError，消息中附对比表
        """
        results = AssertUtil.compare_report(report, expect_config)
        failed = [r for r in results if not r["passed"]]
        if failed:
            context = {
                "status": report.get("status"),
                "exit_code": report.get("exit_code"),
                "error": report.get("error"),
            }
            raise AssertionError(
                f"{len(failed)} 项断言失败\n\n{AssertUtil.format_table(results)}\n\n"
                f"报告上下文:\n{json.dumps(context, indent=2, ensure_ascii=False, default=str)}")
        Logger.info(f"✅ 报告断言通过，共 {len(results)} 项")
        return results

    @staticmethod
    def compare_report(report, expect_config):
        """只比较，不抛异常"""
        results = []
        if not expect_config:
            return results
        if "exit_code" in expect_config:
            results.extend(AssertUtil._assert_exit_code(report, expect_config["exit_code"]))
        if "body" in expect_config:
            results.extend(AssertUtil._recursive_compare(report, expect_config["body"], path="body"))
        return results

    @staticmethod
    def _assert_exit_code(report, expected_code):
        """断言退出码，返回断言结果列表"""
        actual_code = report.get("exit_code")
        passed = actual_code == expected_code
        if passed:
            message = f"退出码匹配：实际={actual_code}，预期={expected_code}"
            Logger.info(f"✅ 退出码断言通过: {expected_code}")
        else:
            message = f"退出码不匹配：实际={actual_code}，预期={expected_code}"
            Logger.error(message)
        return [{
            "type": "退出码",
            "field": "exit_code",
            "expected": expected_code,
            "actual": actual_code,
            "passed": passed,
            "message": message
        }]

    @staticmethod
    def _is_number(value):
        return isinstance(value, Number) and not isinstance(value, bool)

    @staticmethod
    def _is_approx(expected):
        return isinstance(expected, dict) and set(expected) <= {"approx", "tol"} and "approx" in expected

    @staticmethod
    def _recursive_compare(actual, expected, path=""):
        """
        递归比较实际值和期望值
        返回断言结果列表
        """
        results = []

        # 正则匹配（先于类型检查，实际值可以是任意类型）
        if isinstance(expected, str) and expected.startswith(REGEX_PREFIX):
            pattern = expected[len(REGEX_PREFIX):]
            actual_str = actual if isinstance(actual, str) else str(actual)
            passed = re.fullmatch(pattern, actual_str) is not None
            results.append({
                "type": "正则匹配",
                "field": path,
                "expected": pattern,
                "actual": actual_str,
                "passed": passed,
                "message": f"正则匹配失败: {path} 值={actual_str}, 模式={pattern}" if not passed else ""
            })
            return results

        # 数值区间 {approx: x, tol: t}
        if AssertUtil._is_approx(expected):
            target = expected["approx"]
            tol = expected.get("tol", 1e-9)
            passed = AssertUtil._is_number(actual) and abs(actual - target) <= tol
            results.append({
                "type": "近似匹配",
                "field": path,
                "expected": f"{target} ± {tol}",
                "actual": actual,
                "passed": passed,
                "message": f"数值超出范围: {path} 实际={actual}, 预期={target} ± {tol}" if not passed else ""
            })
            return results

        # 整数与浮点数按数值比较
        if AssertUtil._is_number(expected) and AssertUtil._is_number(actual):
            passed = actual == expected
            results.append({
                "type": "值匹配",
                "field": path,
                "expected": expected,
                "actual": actual,
                "passed": passed,
                "message": (f"值不匹配: {path} 实际={actual}, 预期={expected}"
                            if not passed else f"值匹配: {path} 值符合预期")
            })
            return results

        # 类型检查层（None 只与 None 相等，交给值匹配）
        if expected is not None and type(expected) != type(actual):
            results.append({
                "type": "类型匹配",
                "field": path,
                "expected": type(expected).__name__,
                "actual": type(actual).__name__,
                "passed": False,
                "message": f"类型不匹配: 期望={type(expected).__name__}, 实际={type(actual).__name__}"
            })
            return results

        if isinstance(expected, dict):
            for key, exp_val in expected.items():
                current_path = f"{path}.{key}" if path else key
                if key not in actual:
                    results.append({
                        "type": "字段存在",
                        "field": current_path,
                        "expected": "存在",
                        "actual": "不存在",
                        "passed": False,
                        "message": f"字段缺失: {current_path}"
                    })
                else:
                    results.extend(AssertUtil._recursive_compare(actual[key], exp_val, current_path))

        elif isinstance(expected, list):
            if len(actual) != len(expected):
                results.append({
                    "type": "数组长度",
                    "field": path,
                    "expected": len(expected),
                    "actual": len(actual),
                    "passed": False,
                    "message": f"数组长度不匹配: {path} 实际长度={len(actual)}, 预期长度={len(expected)}"
                })
            else:
                for i, (act_item, exp_item) in enumerate(zip(actual, expected)):
                    results.extend(AssertUtil._recursive_compare(act_item, exp_item, f"{path}[{i}]"))

        else:
            passed = actual == expected
            results.append({
                "type": "值匹配",
                "field": path,
                "expected": expected,
                "actual": actual,
                "passed": passed,
                "message": (f"值不匹配: {path} 实际={actual}, 预期={expected}"
                            if not passed else f"值匹配: {path} 值符合预期")
            })

        return results

    @staticmethod
    def format_table(results):
        """生成断言对比表（纯文本）"""
        header = ("结果", "类型", "字段", "预期", "实际")
        rows = [header] + [
            ("✅" if r["passed"] else "❌", r["type"], r["field"], AssertUtil._short(r["expected"]),
             AssertUtil._short(r["actual"]))
            for r in results
        ]
        widths = [max(len(str(row[i])) for row in rows) for i in range(len(header))]
        lines = [" | ".join(str(cell).ljust(width) for cell, width in zip(row, widths)) for row in rows]
        lines.insert(1, "-+-".join("-" * width for width in widths))
        return "\n".join(lines)

    @staticmethod
    def _short(value, limit=60):
        text = value if isinstance(value, str) else json.dumps(value, ensure_ascii=False, default=str)
        return text if len(text) <= limit else text[:limit - 3] + "..."
