import pytest
from common.logger import Logger
from config.config import Config
from lab import corpus
from lab.games import GameSpec


@pytest.fixture(scope="function")
def corpus_spec():
    """按语料库 id 构造实验配置（默认 k=4，CSS 默认均匀抽样）"""

    def build(game, scheme, adversary, atk="cpa", sampler=None, k=4, **caps):
        if game != "ind" and sampler is None:
            sampler = "uniform_sampler"
        sample = corpus.build_sampler(sampler) if sampler else None
        return GameSpec(game, corpus.build_scheme(scheme, k), corpus.build_adversary(adversary), atk, sample, **caps)

    return build


@pytest.fixture(scope="function")
def lab_profile():
    """切换实验配置，用例结束后恢复"""
    Config.reset()

    def use(name):
        Logger.info(f"切换实验配置: {name}")
        return Config.use_profile(name)

    yield use
    Config.reset()


@pytest.fixture(scope="function")
def run_cli():
    """直接调用命令行执行器，返回 (exit_code, report)"""
    from lab.cli_harness import execute

    def run(**experiment):
        experiment.setdefault("verb", "run")
        return execute(experiment)

    return run
