"""
命令行入口

动词: run, reduce, matrix, sweep, list, rerun, selftest。
每次调用生成一份自描述报告（JSON 或 YAML），写入 --output 并回显到标准输出；
日志只写标准错误与 reports/csslab.log。

退出码: 0 成功；1 实验失败或矩阵中有失败单元；2 配置错误；3 精确枚举不可行。
"""
import argparse
import csv
import hashlib
import json
import os
import shutil
import subprocess
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from typing import List, Optional

import yaml

from common.extract_util import ExtractUtil
from common.log_decorator import log_function
from common.logger import Logger
from common.yaml_util import YamlUtil
from config.config import Config
from lab import SCHEMA_VERSION, __version__
from lab import corpus
from lab.advantage_stats import estimate_advantage, exact_advantage, negligibility_sweep, required_trials
from lab.coins import check_seed
from lab.core_model import AttackModel
from lab.exceptions import (ConfigError, EnumerationInfeasible, IncomparableConfigurations, LabError,
                            TrialFailure, UnknownCorpusId, UnsupportedSplitExperiment)
from lab.games import GameKind, GameSpec
from lab.reductions import Direction, PairDraw, TieBreakMode, run_reduction

VERBS = ("run", "reduce", "matrix", "sweep", "list", "rerun", "selftest")
EXPERIMENT_VERBS = ("run", "reduce", "sweep")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3

_STATUS = {EXIT_OK: "ok", EXIT_FAILED: "failed", EXIT_CONFIG: "config_error", EXIT_INFEASIBLE: "infeasible"}

# 不进入配置回显的字段（只影响输出位置与格式）
_OUTPUT_FIELDS = ("output", "format", "csv")

_SUMMARY_FIELDS = {
    "verb": "$.verb",
    "game": "$.config.game",
    "atk": "$.config.atk",
    "scheme": "$.config.scheme",
    "adversary": "$.config.adversary",
    "sampler": "$.config.sampler",
    "k": "$.config.k",
    "mode": "$.result.mode",
    "adv": "$.result.adv",
    "adv_hat": "$.result.adv_hat",
    "interval": "$.result.interval",
    "residual": "$.reduction.check.residual",
    "verdict": "$.reduction.check.verdict",
    "error": "$.error.type",
}


@dataclass
class RunConfig:
    verb: str = "run"
    game: str = "ind"
    atk: str = "cpa"
    scheme: Optional[str] = None
    adversary: Optional[str] = None
    sampler: Optional[str] = None
    k: int = 4
    n: Optional[int] = None
    epsilon: Optional[float] = None
    delta: Optional[float] = None
    master_seed: int = 0
    exact: bool = False
    tie_break: str = TieBreakMode.COINFLIP.value
    pair_draw: str = PairDraw.INDEPENDENT.value
    direction: Optional[str] = None
    k_list: Optional[List[int]] = None
    c_values: Optional[List[float]] = None
    matrix: Optional[str] = None
    report: Optional[str] = None
    output: Optional[str] = None
    format: str = "json"
    csv: Optional[str] = None

    @classmethod
    def from_dict(cls, data) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError(f"experiment config must be a mapping, got {type(data).__name__}")
        data = dict(data)
        if "seed" in data:
            if "master_seed" in data:
                raise ConfigError("give either seed or master_seed, not both")
            data["master_seed"] = data.pop("seed")
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**{key: value for key, value in data.items() if value is not None})

    def validate(self) -> "RunConfig":
        if self.verb not in VERBS:
            raise ConfigError(f"unknown verb {self.verb!r}, expected one of {', '.join(VERBS)}")
        if self.format not in ("json", "yaml"):
            raise ConfigError(f"unknown report format {self.format!r}")
        check_seed(self.master_seed)

        if self.verb == "matrix" and not self.matrix:
            raise ConfigError("matrix needs a config file path")
        if self.verb == "rerun" and not self.report:
            raise ConfigError("rerun needs a report path")
        if self.verb not in EXPERIMENT_VERBS:
            return self

        self.k = _as_int("k", self.k)
        if self.verb == "reduce":
            if not self.direction:
                raise ConfigError("reduce needs a direction (css_from_ind or ind_from_css)")
            direction = Direction.parse(self.direction)
            self.direction = direction.value
            self.game = "ind" if direction is Direction.CSS_FROM_IND else "css"
            self.tie_break = TieBreakMode.parse(self.tie_break).value
            self.pair_draw = PairDraw.parse(self.pair_draw).value
        elif self.direction is not None:
            raise ConfigError("direction only applies to reduce")

        game = GameKind.parse(self.game)
        if game is GameKind.CSS_SPLIT:
            raise ConfigError("the split experiment only serves consistency checks, use game css")
        self.game = game.value
        self.atk = AttackModel.parse(self.atk).value
        if not self.scheme or not self.adversary:
            raise ConfigError("scheme and adversary are required")
        self.scheme = corpus.canonical_id(corpus.SCHEMES, self.scheme)
        wanted = corpus.IND_ADVERSARIES if game is GameKind.IND else corpus.CSS_ADVERSARIES
        self.adversary = corpus.canonical_id(wanted, self.adversary)
        if game is GameKind.IND:
            if self.sampler is not None and self.verb != "reduce":
                raise ConfigError("ind games take no sampler")
            self.sampler = None if self.verb != "reduce" else "uniform_sampler"
        else:
            self.sampler = corpus.canonical_id(corpus.SAMPLERS, self.sampler or "uniform_sampler")

        if self.exact:
            if self.verb == "sweep":
                raise ConfigError("sweep runs in estimate mode only")
            if self.n is not None or self.epsilon is not None:
                raise ConfigError("exact mode takes neither n nor epsilon")
            self.delta = None
        else:
            if (self.n is None) == (self.epsilon is None):
                raise ConfigError("give exactly one of n or epsilon")
            if self.n is not None:
                self.n = _as_int("n", self.n)
            else:
                self.epsilon = _as_float("epsilon", self.epsilon)
            if self.delta is None:
                self.delta = Config.setting("default_delta", 0.01)
            self.delta = _as_float("delta", self.delta)

        if self.verb == "sweep":
            if not self.k_list:
                raise ConfigError("sweep needs k_list")
            self.k_list = [_as_int("k_list", k) for k in self.k_list]
        if self.c_values is not None:
            self.c_values = [_as_float("c", c) for c in self.c_values]
        return self

    def trials(self) -> Optional[int]:
        if self.exact:
            return None
        return self.n if self.n is not None else required_trials(self.epsilon, self.delta)

    def to_dict(self):
        echo = {f.name: getattr(self, f.name) for f in fields(self) if f.name not in _OUTPUT_FIELDS}
        if echo.get("k_list") is not None:
            echo["k_list"] = list(echo["k_list"])
        if echo.get("c_values") is not None:
            echo["c_values"] = list(echo["c_values"])
        return echo


def _as_int(name, value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        try:
            text = str(value).strip()
            if not text.lstrip("-").isdigit():
                raise ValueError(text)
            value = int(text)
        except ValueError:
            raise ConfigError(f"{name} must be an integer, got {value!r}") from None
    return value


def _as_float(name, value) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number, got {value!r}") from None


class TranscriptDigest:
    """按执行顺序对每条 TrialRecord 的规范 JSON 做 SHA-256"""

    def __init__(self):
        self._hash = hashlib.sha256()
        self.records = 0

    def __call__(self, record):
        line = json.dumps(record.to_dict(), sort_keys=True, ensure_ascii=False) + "\n"
        self._hash.update(line.encode("utf-8"))
        self.records += 1

    def to_dict(self):
        return {"algorithm": "sha256", "records": self.records, "hexdigest": self._hash.hexdigest()}


def build_spec(config: RunConfig, k: int = None) -> GameSpec:
    k = config.k if k is None else k
    sample = corpus.build_sampler(config.sampler) if config.game != "ind" else None
    return GameSpec(config.game, corpus.build_scheme(config.scheme, k), corpus.build_adversary(config.adversary),
                    config.atk, sample)


def _new_report(verb, echo):
    return {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "verb": verb,
        "config": echo,
        "status": None,
        "exit_code": None,
        "result": None,
        "reduction": None,
        "sweep": None,
        "matrix": None,
        "corpus": None,
        "spec": None,
        "transcript_digest": None,
        "error": None,
        "wall_clock_seconds": None,
    }


# ---------------------------------------------------------------------------
# 各动词
# ---------------------------------------------------------------------------

def _run(config: RunConfig, report):
    spec = build_spec(config)
    report["spec"] = spec.describe()
    if config.exact:
        report["result"] = exact_advantage(spec).to_dict()
        return EXIT_OK
    digest = TranscriptDigest()
    estimate = estimate_advantage(spec, config.trials(), config.delta, config.master_seed, record_sink=digest)
    report["result"] = estimate.to_dict()
    report["transcript_digest"] = digest.to_dict()
    return EXIT_OK


def _reduce(config: RunConfig, report):
    spec = build_spec(config)
    outcome = run_reduction(
        spec,
        config.direction,
        sample=corpus.build_sampler("uniform_sampler"),
        exact=config.exact,
        n=config.trials(),
        delta=config.delta,
        master_seed=config.master_seed,
        mode=TieBreakMode.parse(config.tie_break),
        pair_draw=PairDraw.parse(config.pair_draw),
    )
    report["reduction"] = {
        "direction": config.direction,
        "tie_break": config.tie_break,
        "pair_draw": config.pair_draw,
        "original": outcome.original.to_dict(),
        "constructed": outcome.constructed.to_dict(),
        "check": outcome.report.to_dict(),
    }
    return EXIT_OK


def _sweep(config: RunConfig, report):
    result = negligibility_sweep(lambda k: build_spec(config, k), config.k_list, config.trials(), config.delta,
                                 config.master_seed, config.c_values)
    report["sweep"] = result.to_dict()
    return EXIT_OK


def _list(config: RunConfig, report):
    report["corpus"] = {
        "entries": [entry.to_dict() for entry in corpus.entries()],
        "documented": [row.to_dict() for row in corpus.DOCUMENTED_ADVANTAGES],
    }
    return EXIT_OK


def _matrix_cells(document):
    """矩阵文件: 单元列表，或包含 defaults / cells / grid 的映射"""
    if document is None:
        return []
    if isinstance(document, list):
        return [dict(cell) if isinstance(cell, dict) else cell for cell in document]
    if not isinstance(document, dict):
        raise ConfigError("matrix file must hold a list of cells or a mapping")
    unknown = sorted(set(document) - {"defaults", "cells", "grid"})
    if unknown:
        raise ConfigError(f"unknown matrix keys: {', '.join(unknown)}")
    defaults = document.get("defaults") or {}
    if not isinstance(defaults, dict):
        raise ConfigError("matrix defaults must be a mapping")

    cells = []
    for cell in document.get("cells") or []:
        cells.append({**defaults, **cell} if isinstance(cell, dict) else cell)

    grid = document.get("grid")
    if grid:
        if not isinstance(grid, dict):
            raise ConfigError("matrix grid must be a mapping")
        for game in grid.get("games") or ["ind"]:
            for atk in grid.get("atks") or ["cpa"]:
                for scheme in grid.get("schemes") or []:
                    for adversary in grid.get("adversaries") or []:
                        if not _kind_matches(game, adversary):
                            continue
                        cells.append({**defaults, "game": game, "atk": atk, "scheme": scheme,
                                      "adversary": adversary})
    return cells


def _kind_matches(game, adversary) -> bool:
    try:
        wanted = GameKind.parse(game).adversary_kind
        entry = corpus.lookup((corpus.IND_ADVERSARIES, corpus.CSS_ADVERSARIES), adversary)
    except (ConfigError, UnknownCorpusId):
        # 未知 id 保留为单元，由单元自己报错
        return True
    return entry.kind == (corpus.IND_ADVERSARIES if wanted == "ind" else corpus.CSS_ADVERSARIES)


def _summary_row(index, cell_report):
    row = {"cell": index, "status": cell_report["status"], "exit_code": cell_report["exit_code"]}
    for name, rule in _SUMMARY_FIELDS.items():
        try:
            row[name] = ExtractUtil.extract(cell_report, rule)
        except Exception:
            row[name] = None
    return row


def _input_path(path):
    """相对路径优先按当前目录解析，不存在时交给 YamlUtil 按项目根目录解析"""
    return os.path.abspath(path) if os.path.exists(path) else path


def _write_csv(path, rows):
    path = os.path.abspath(path)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    columns = ["cell", "status", "exit_code"] + list(_SUMMARY_FIELDS)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({key: json.dumps(value) if isinstance(value, list) else value
                             for key, value in row.items()})
    Logger.info(f"汇总表已写入: {path}")


def _matrix(config: RunConfig, report):
    cells = _matrix_cells(YamlUtil.read_yaml(_input_path(config.matrix)))
    workers = Config.max_workers()
    Logger.info(f"矩阵共 {len(cells)} 个单元，并发 {workers}")

    def run_cell(cell):
        if isinstance(cell, dict):
            cell = {"verb": "run", **cell}
        return execute(cell, nested=True)[1]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        cell_reports = list(pool.map(run_cell, cells))

    rows = [_summary_row(i, cell_report) for i, cell_report in enumerate(cell_reports)]
    failed = sum(1 for cell_report in cell_reports if cell_report["exit_code"] != EXIT_OK)
    report["matrix"] = {"source": config.matrix, "cell_count": len(cells), "failed": failed,
                        "summary": rows, "cells": cell_reports}
    if config.csv:
        _write_csv(config.csv, rows)
    if failed:
        Logger.warning(f"矩阵完成，{failed}/{len(cells)} 个单元失败")
        return EXIT_FAILED
    Logger.success(f"矩阵完成，{len(cells)} 个单元全部成功")
    return EXIT_OK


def report_body(report):
    """去掉所有 wall_clock_seconds 字段后的报告主体（用于可复现比较）"""
    if isinstance(report, dict):
        return {key: report_body(value) for key, value in report.items() if key != "wall_clock_seconds"}
    if isinstance(report, list):
        return [report_body(item) for item in report]
    return report


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, ensure_ascii=False)


def _rerun(config: RunConfig, report):
    source = YamlUtil.read_yaml(_input_path(config.report))
    if not isinstance(source, dict) or not isinstance(source.get("config"), dict):
        raise ConfigError(f"{config.report} is not a report with an embedded config")
    exit_code, inner = execute(source["config"], nested=True)
    matches = canonical_json(report_body(inner)) == canonical_json(report_body(source))
    inner["rerun"] = {"source": config.report, "matches": matches}
    if not matches:
        Logger.error(f"重放结果与原报告不一致: {config.report}")
        inner["exit_code"] = EXIT_FAILED
        inner["status"] = _STATUS[EXIT_FAILED]
        return EXIT_FAILED, inner
    Logger.success(f"重放结果与原报告一致: {config.report}")
    return exit_code, inner


@log_function(include_result=True)
def run_selftest():
    """执行测试套件（allure 结果写入 reports/allure_results），返回 pytest 退出码"""
    os.makedirs(Config.REPORT_DIR, exist_ok=True)
    allure_results_dir = os.path.abspath(os.path.join(Config.REPORT_DIR, "allure_results"))
    if os.path.exists(allure_results_dir):
        shutil.rmtree(allure_results_dir)
        Logger.info(f"已清理历史allure结果目录: {allure_results_dir}")
    os.makedirs(allure_results_dir, exist_ok=True)

    Logger.debug(f"使用的Python路径: {sys.executable}")
    result = subprocess.run([sys.executable, "-m", "pytest", f"--alluredir={allure_results_dir}", "-v"],
                            cwd=Config.BASE_DIR, check=False)
    if result.returncode != 0:
        Logger.warning(f"测试执行完成，但有失败用例 (退出码: {result.returncode})")
    else:
        Logger.success("测试执行完成，所有用例通过")

    allure_report_dir = os.path.join(Config.REPORT_DIR, "allure_report")
    if shutil.which("allure"):
        Logger.info("生成Allure测试报告")
        subprocess.run(["allure", "generate", allure_results_dir, "-o", allure_report_dir, "--clean"], check=False)
    else:
        Logger.warning("未找到 allure 命令行，跳过HTML报告生成")
        allure_report_dir = None
    return result.returncode, allure_results_dir, allure_report_dir


def _selftest(config: RunConfig, report):
    returncode, results_dir, report_dir = run_selftest()
    report["result"] = {"pytest_exit_code": returncode, "allure_results": results_dir, "allure_report": report_dir}
    return EXIT_OK if returncode == 0 else EXIT_FAILED


_HANDLERS = {
    "run": _run,
    "reduce": _reduce,
    "sweep": _sweep,
    "list": _list,
    "matrix": _matrix,
    "selftest": _selftest,
}


def _error(exc, witness=None):
    return {"type": type(exc).__name__, "message": str(exc), "witness": witness}


def execute(config, nested=False):
    """
    执行一次调用并返回 (exit_code, report)。
    config 可以是 RunConfig 或字典；所有异常都映射为退出码并写入 report["error"]。
    nested=True 时（矩阵单元、重放）不允许再嵌套 rerun / selftest。
    """
    start = time.perf_counter()
    raw = config.to_dict() if isinstance(config, RunConfig) else config
    report = _new_report(raw.get("verb") if isinstance(raw, dict) else None, raw)
    try:
        if not isinstance(config, RunConfig):
            config = RunConfig.from_dict(config)
        config.validate()
        if nested and config.verb in ("rerun", "selftest"):
            raise ConfigError(f"{config.verb} cannot be nested")
        report["verb"] = config.verb
        report["config"] = config.to_dict()
        Logger.info(f"执行 {config.verb}: {canonical_json(report['config'])}")
        if config.verb == "rerun":
            exit_code, report = _rerun(config, report)
        else:
            exit_code = _HANDLERS[config.verb](config, report)
    except EnumerationInfeasible as e:
        Logger.error(f"精确枚举不可行: {e}")
        exit_code, report["error"] = EXIT_INFEASIBLE, _error(e, {"required_bits": e.required_bits,
                                                                   "limit": e.limit})
    except (ConfigError, UnsupportedSplitExperiment, IncomparableConfigurations, yaml.YAMLError, OSError) as e:
        Logger.error(f"配置错误: {type(e).__name__}: {e}")
        exit_code, report["error"] = EXIT_CONFIG, _error(e)
    except TrialFailure as e:
        Logger.error(f"实验失败: {e}")
        exit_code, report["error"] = EXIT_FAILED, _error(e, e.witness())
    except LabError as e:
        Logger.error(f"实验失败: {type(e).__name__}: {e}")
        exit_code, report["error"] = EXIT_FAILED, _error(e)
    except Exception as e:
        Logger.exception(f"未预期的错误: {type(e).__name__}: {e}")
        exit_code, report["error"] = EXIT_FAILED, _error(e)

    report["exit_code"] = exit_code
    report["status"] = _STATUS[exit_code]
    report["wall_clock_seconds"] = round(time.perf_counter() - start, 6)
    return exit_code, report


def render(report, fmt="json") -> str:
    if fmt == "yaml":
        return YamlUtil.dump(report)
    return json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_report(report, path, fmt="json"):
    path = os.path.abspath(path)
    if fmt == "yaml":
        YamlUtil.write_yaml(path, report)
        return
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(render(report, fmt))
    Logger.info(f"报告已写入: {path}")


# ---------------------------------------------------------------------------
# 参数解析
# ---------------------------------------------------------------------------

def _experiment_flags(parser):
    parser.add_argument("--game", choices=[g.value for g in GameKind if g is not GameKind.CSS_SPLIT])
    parser.add_argument("--atk", choices=[a.value for a in AttackModel])
    parser.add_argument("--scheme")
    parser.add_argument("--adversary")
    parser.add_argument("--sampler")
    parser.add_argument("--k", type=int)
    parser.add_argument("--n", type=int)
    parser.add_argument("--epsilon", type=float)
    parser.add_argument("--delta", type=float)
    parser.add_argument("--seed", dest="master_seed", type=int)
    parser.add_argument("--exact", action="store_true", default=None)
    parser.add_argument("--tie-break", dest="tie_break", choices=TieBreakMode.choices())
    parser.add_argument("--pair-draw", dest="pair_draw", choices=[m.value for m in PairDraw])
    parser.add_argument("--c", dest="c_values", type=float, nargs="+")


def _common_flags(parser):
    parser.add_argument("--output", help="报告输出路径")
    parser.add_argument("--format", choices=["json", "yaml"])
    parser.add_argument("--profile", help="实验配置名称（lab_config.yaml）")
    parser.add_argument("--log-level", dest="log_level", help="控制台日志级别")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="csslab", description="IND / CSS 博弈实验室")
    verbs = parser.add_subparsers(dest="verb", required=True)

    run = verbs.add_parser("run", help="运行单个实验")
    _experiment_flags(run)
    _common_flags(run)

    reduce = verbs.add_parser("reduce", help="检查归约恒等式")
    _experiment_flags(reduce)
    reduce.add_argument("--direction", required=True, choices=[d.value for d in Direction])
    _common_flags(reduce)

    sweep = verbs.add_parser("sweep", help="对安全参数做有限扫描")
    _experiment_flags(sweep)
    sweep.add_argument("--k-list", dest="k_list", type=int, nargs="+", required=True)
    _common_flags(sweep)

    matrix = verbs.add_parser("matrix", help="运行实验矩阵")
    matrix.add_argument("matrix", help="矩阵配置文件（JSON 或 YAML）")
    matrix.add_argument("--csv", help="汇总表 CSV 输出路径")
    _common_flags(matrix)

    rerun = verbs.add_parser("rerun", help="按报告中的配置重放")
    rerun.add_argument("report", help="报告文件")
    _common_flags(rerun)

    listing = verbs.add_parser("list", help="列出语料库")
    _common_flags(listing)

    selftest = verbs.add_parser("selftest", help="运行测试套件")
    _common_flags(selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_CONFIG

    options = {key: value for key, value in vars(args).items() if value is not None}
    profile = options.pop("profile", None)
    log_level = options.pop("log_level", None)
    if profile:
        try:
            Config.use_profile(profile)
        except KeyError as e:
            Logger.error(str(e))
            return EXIT_CONFIG
    if log_level:
        Logger.set_level(log_level)

    output, fmt = options.get("output"), options.get("format", "json")
    exit_code, report = execute(options)
    text = render(report, fmt)
    if output:
        try:
            write_report(report, output, fmt)
        except OSError as e:
            Logger.error(f"报告写入失败: {output} - {e}")
            exit_code = EXIT_CONFIG
    sys.stdout.write(text)
    return exit_code
