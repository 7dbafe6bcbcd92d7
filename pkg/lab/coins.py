"""
随机带（coin tape）模型

每个概率算法从一段显式的随机带读取比特，并事先声明比特预算。
同一套分段逻辑既用于蒙特卡洛（随机带由种子派生），也用于精确枚举（随机带取遍 0..2^T-1）。

种子派生（固定，不依赖标准库默认实现）:
    trial_seed = SHA-256("csslab/trial" || master_seed[8B] || arm[1B] || index[8B]) 的前 8 字节（大端）
    tape       = SHA-256("csslab/tape" || seed[8B] || counter[4B])，counter = 0,1,... 拼接后取前 T 比特
"""
import hashlib
from dataclasses import dataclass
from typing import Iterator, Tuple

from lab.exceptions import CoinBudgetExceeded, ConfigError

SEED_BITS = 64
SEED_LIMIT = 1 << SEED_BITS

_TRIAL_DOMAIN = b"csslab/trial"
_TAPE_DOMAIN = b"csslab/tape"

# 固定的分段顺序
SEGMENT_ORDER = ("keygen", "phase1", "draw", "encrypt", "sample", "phase2")


def check_seed(seed: int) -> int:
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < SEED_LIMIT:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return seed


def derive_trial_seed(master_seed: int, arm: int, index: int) -> int:
    """由主种子、臂（b）与序号派生单次实验种子；两臂的种子流互不相交"""
    check_seed(master_seed)
    if arm not in (0, 1):
        raise ConfigError(f"arm must be 0 or 1, got {arm!r}")
    digest = hashlib.sha256(
        _TRIAL_DOMAIN
        + master_seed.to_bytes(8, "big")
        + bytes([arm])
        + index.to_bytes(8, "big")
    ).digest()
    return int.from_bytes(digest[:8], "big")


def expand_tape(seed: int, total_bits: int) -> int:
    """把 64 位种子扩展为 total_bits 比特的随机带（整数表示，高位在前）"""
    check_seed(seed)
    if total_bits <= 0:
        return 0
    blocks = []
    produced = 0
    counter = 0
    while produced < total_bits:
        blocks.append(hashlib.sha256(_TAPE_DOMAIN + seed.to_bytes(8, "big") + counter.to_bytes(4, "big")).digest())
        produced += 256
        counter += 1
    stream = int.from_bytes(b"".join(blocks), "big")
    return stream >> (produced - total_bits)


class Coins:
    """
    单个算法调用的随机比特读取器

    按最高位优先顺序分发比特；超出声明预算时抛出 CoinBudgetExceeded。
    """

    __slots__ = ("_value", "_budget", "_cursor", "label")

    def __init__(self, value: int, budget: int, label: str = "coins"):
        if budget < 0 or not 0 <= value < (1 << budget):
            raise ValueError(f"coin value {value} does not fit a budget of {budget} bits")
        self._value = value
        self._budget = budget
        self._cursor = 0
        self.label = label

    @property
    def budget(self) -> int:
        return self._budget

    @property
    def remaining(self) -> int:
        return self._budget - self._cursor

    def take(self, n: int) -> int:
        if n < 0:
            raise ValueError("cannot take a negative number of bits")
        if n == 0:
            return 0
        if self._cursor + n > self._budget:
            raise CoinBudgetExceeded(self.label, self._budget, self._cursor + n)
        shift = self._budget - self._cursor - n
        self._cursor += n
        return (self._value >> shift) & ((1 << n) - 1)

    def bit(self) -> int:
        return self.take(1)

    def reserve(self, n: int, label: str = None) -> "Coins":
        """切出接下来的 n 比特，交给子算法"""
        return Coins(self.take(n), n, label or f"{self.label}/sub")

    @classmethod
    def empty(cls, label: str = "none") -> "Coins":
        return cls(0, 0, label)


@dataclass(frozen=True)
class TapeLayout:
    """各分段宽度，顺序固定为 SEGMENT_ORDER"""
    keygen: int = 0
    phase1: int = 0
    draw: int = 0
    encrypt: int = 0
    sample: int = 0
    phase2: int = 0

    def __post_init__(self):
        for name in SEGMENT_ORDER:
            if getattr(self, name) < 0:
                raise ValueError(f"negative segment width for {name}")

    @property
    def total(self) -> int:
        return sum(getattr(self, name) for name in SEGMENT_ORDER)

    def segments(self) -> Iterator[Tuple[str, int]]:
        for name in SEGMENT_ORDER:
            yield name, getattr(self, name)

    def to_dict(self):
        return {name: width for name, width in self.segments()}


class CoinTape:
    """一次实验的完整随机带，按 TapeLayout 切成互不相交的分段"""

    def __init__(self, value: int, layout: TapeLayout):
        total = layout.total
        if not 0 <= value < (1 << total):
            raise ValueError(f"tape value does not fit {total} bits")
        self.value = value
        self.layout = layout
        self._coins = {}
        offset = total
        for name, width in layout.segments():
            offset -= width
            self._coins[name] = Coins((value >> offset) & ((1 << width) - 1), width, name)

    @classmethod
    def from_seed(cls, seed: int, layout: TapeLayout) -> "CoinTape":
        return cls(expand_tape(seed, layout.total), layout)

    def segment(self, name: str) -> Coins:
        return self._coins[name]
