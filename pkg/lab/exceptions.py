"""
实验室异常体系

LabError 为根异常；CLI 根据异常类型映射退出码（见 lab.cli_harness）。
"""
from typing import Optional


class LabError(Exception):
    """所有实验室异常的基类"""


class ConfigError(LabError):
    """运行配置非法（退出码 2）"""


class UnknownCorpusId(ConfigError, KeyError):
    """语料库中不存在的 id"""

    def __init__(self, kind: str, corpus_id: str):
        self.kind = kind
        self.corpus_id = corpus_id
        super().__init__(f"unknown {kind} id: {corpus_id}")

    def __str__(self):
        return self.args[0]


class ContractViolation(LabError):
    """算法违反了行为契约"""


class InvalidAdversaryOutput(ContractViolation):
    """敌手输出不合法（消息长度不等、状态过长、消息空间不合规等）"""


class CoinBudgetExceeded(ContractViolation):
    """读取的随机比特超过了声明的预算"""

    def __init__(self, label: str, budget: int, requested: int):
        self.label = label
        self.budget = budget
        self.requested = requested
        super().__init__(f"coin budget exceeded in '{label}': declared {budget} bits, requested {requested}")


class InvalidMessageSpace(ContractViolation, ValueError):
    """消息空间不满足不变量"""


class DomainError(LabError, ValueError):
    """消息不在部分信息函数的定义域内"""

    def __init__(self, message: str = "message outside function domain"):
        super().__init__(message)


class OracleError(LabError):
    """解密预言机相关错误的基类"""


class PolicyRefusal(OracleError):
    """预言机策略拒绝回答；敌手可以捕获并继续"""

    def __init__(self, reason):
        self.reason = reason
        super().__init__(f"oracle refused query: {getattr(reason, 'value', reason)}")


class QueryCapExceeded(OracleError):
    def __init__(self, phase, cap: int):
        self.phase = phase
        self.cap = cap
        super().__init__(f"query cap of {cap} exceeded in {getattr(phase, 'value', phase)}")


class PhaseError(OracleError):
    """预言机阶段转换非法"""


class UnsupportedSplitExperiment(LabError):
    """敌手不支持无密文调用，无法运行拆分实验"""


class EnumerationInfeasible(LabError):
    """随机带总长度超出精确枚举上限（退出码 3）"""

    def __init__(self, required_bits: int, limit: int):
        self.required_bits = required_bits
        self.limit = limit
        super().__init__(f"exact enumeration needs {required_bits} coin bits, limit is {limit}")


class IncomparableConfigurations(LabError):
    """两个优势来自不同方案/攻击模型/安全参数，无法比较"""


class TrialFailure(LabError):
    """单次实验失败，携带复现所需的见证（臂 b 与种子）"""

    def __init__(self, b: int, seed: Optional[int], cause: BaseException):
        self.b = b
        self.seed = seed
        self.cause = cause
        super().__init__(f"trial failed (b={b}, seed={seed}): {type(cause).__name__}: {cause}")

    def witness(self):
        return {"b": self.b, "seed": self.seed, "error": type(self.cause).__name__, "message": str(self.cause)}
