"""
领域模型与行为契约

比特串（消息/密文/函数值）、消息空间、部分信息函数库，以及方案、敌手、Sample 算法的抽象基类。
所有值类型构造后不可变；所有算法只能是 (输入, 随机带) 的纯函数。
"""
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, Iterator, Optional, Tuple, Union

from common.logger import Logger
from config.config import Config
from lab.coins import Coins, TapeLayout, CoinTape, derive_trial_seed, expand_tape
from lab.exceptions import (
    ConfigError,
    ContractViolation,
    DomainError,
    InvalidAdversaryOutput,
    InvalidMessageSpace,
    UnknownCorpusId,
)


# ---------------------------------------------------------------------------
# 安全参数 / 攻击模型 / 挑战比特
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SecurityParameter:
    k: int

    def __post_init__(self):
        if not isinstance(self.k, int) or isinstance(self.k, bool) or self.k < 1:
            raise ConfigError(f"security parameter must be a positive integer, got {self.k!r}")

    @classmethod
    def of(cls, k) -> "SecurityParameter":
        return k if isinstance(k, cls) else cls(k)


class AttackModel(Enum):
    CPA = "cpa"
    CCA1 = "cca1"
    CCA2 = "cca2"

    @classmethod
    def parse(cls, text) -> "AttackModel":
        if isinstance(text, cls):
            return text
        try:
            return cls(str(text).strip().lower())
        except ValueError:
            raise ConfigError(f"unknown attack model: {text!r}") from None

    def __str__(self):
        return self.value


ChallengeBit = int


def check_bit(b) -> int:
    if b not in (0, 1) or isinstance(b, bool):
        raise ValueError(f"challenge bit must be 0 or 1, got {b!r}")
    return b


# ---------------------------------------------------------------------------
# 比特串
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Bits:
    """
    定长比特串，value 的第 i 位（最低位为 0）即串的第 i 位。
    相等性区分子类：同样比特的 Message 与 Ciphertext 不相等。
    """
    value: int
    width: int

    _min_width = 0

    def __post_init__(self):
        if not isinstance(self.width, int) or self.width < self._min_width:
            raise ValueError(f"{type(self).__name__} width must be >= {self._min_width}, got {self.width!r}")
        if not isinstance(self.value, int) or not 0 <= self.value < (1 << self.width):
            raise ValueError(f"{type(self).__name__} value {self.value!r} does not fit {self.width} bits")

    @classmethod
    def from_string(cls, text: str):
        """解析 '1011' 或 '0b1011'，最左侧为最高位"""
        digits = str(text).strip()
        if digits.startswith("0b"):
            digits = digits[2:]
        if digits and set(digits) - {"0", "1"}:
            raise ValueError(f"not a bit string: {text!r}")
        return cls(int(digits, 2) if digits else 0, len(digits))

    def bit(self, index: int) -> int:
        if not 0 <= index < self.width:
            raise IndexError(f"bit {index} outside width {self.width}")
        return (self.value >> index) & 1

    def flip(self, index: int):
        self.bit(index)
        return type(self)(self.value ^ (1 << index), self.width)

    def __xor__(self, other: "Bits"):
        if not isinstance(other, Bits) or other.width != self.width:
            return NotImplemented
        return type(self)(self.value ^ other.value, self.width)

    def to_bytes(self) -> bytes:
        return self.value.to_bytes(byte_length(self.width), "big")

    def __str__(self):
        return format(self.value, f"0{self.width}b") if self.width else ""


class Message(Bits):
    """明文，长度至少 1 比特"""
    _min_width = 1


class Ciphertext(Bits):
    pass


class Value(Bits):
    """部分信息函数的取值，只按相等比较"""


def byte_length(width: int) -> int:
    return (width + 7) // 8


class Bottom:
    """解密拒绝符号 ⊥（单例），与任何消息都不相等"""
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __reduce__(self):
        return (Bottom, ())

    def __repr__(self):
        return "BOTTOM"

    def __str__(self):
        return "⊥"


BOTTOM = Bottom()

DecryptResult = Union[Message, Bottom]


def render_result(result) -> str:
    """transcript / 报告中的统一字符串表示"""
    return str(result)


class PublicKey:
    """
    公钥。data 是公开参数，敌手可以直接读取；
    加密用到的私密材料只绑定在方案给出的加密函数里，不作为字节暴露。
    """
    __slots__ = ("data", "_seal")

    def __init__(self, data: bytes = b"", seal: Optional[Callable[[Message, Coins], Ciphertext]] = None):
        if not isinstance(data, (bytes, bytearray)):
            raise TypeError("public key data must be bytes")
        self.data = bytes(data)
        self._seal = seal

    def seal(self, x: Message, coins: Coins) -> Ciphertext:
        """用绑定的加密函数加密"""
        if self._seal is None:
            raise ContractViolation("public key carries no encryption function")
        return self._seal(x, coins)

    def __bytes__(self):
        return self.data

    def __len__(self):
        return len(self.data)

    def __repr__(self):
        return f"PublicKey({self.data.hex()!r})"


@dataclass(frozen=True)
class KeyPair:
    pk: PublicKey
    sk: bytes

    def __post_init__(self):
        if not isinstance(self.pk, PublicKey):
            object.__setattr__(self, "pk", PublicKey(self.pk))


@dataclass(frozen=True)
class StateInfo:
    """第一阶段传给第二阶段的不透明状态"""
    data: bytes = b""

    def __post_init__(self):
        if not isinstance(self.data, (bytes, bytearray)):
            raise TypeError("state information must be bytes")
        object.__setattr__(self, "data", bytes(self.data))

    def __len__(self):
        return len(self.data)


# ---------------------------------------------------------------------------
# 消息空间
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MessageSpace:
    """
    有限、等长、无重复的消息列表，大小为 2 的幂。
    sample 读取 draw_bits 个随机比特作为下标，因此从均匀随机带得到的是精确均匀分布。
    """
    elements: Tuple[Message, ...]

    def __post_init__(self):
        elements = tuple(self.elements)
        object.__setattr__(self, "elements", elements)
        if not elements:
            raise InvalidMessageSpace("message space is empty")
        if not all(isinstance(x, Message) for x in elements):
            raise InvalidMessageSpace("message space elements must be messages")
        if len({x.width for x in elements}) != 1:
            raise InvalidMessageSpace("messages in a space must have equal length")
        if len(set(elements)) != len(elements):
            raise InvalidMessageSpace("message space contains duplicates")
        size = len(elements)
        if size & (size - 1):
            raise InvalidMessageSpace(f"message space size must be a power of two, got {size}")

    @classmethod
    def full(cls, width: int) -> "MessageSpace":
        """{0,1}^width，按数值升序"""
        if not isinstance(width, int) or not 1 <= width <= 8:
            raise InvalidMessageSpace(f"full message space supports widths 1..8, got {width!r}")
        return cls(tuple(Message(i, width) for i in range(1 << width)))

    @classmethod
    def of(cls, *values: int, width: int) -> "MessageSpace":
        return cls(tuple(Message(v, width) for v in values))

    @property
    def width(self) -> int:
        return self.elements[0].width

    @property
    def draw_bits(self) -> int:
        return len(self.elements).bit_length() - 1

    def sample(self, coins: Coins) -> Message:
        return self.elements[coins.take(self.draw_bits)]

    def index(self, x: Message) -> int:
        return self.elements.index(x)

    def __contains__(self, x):
        return x in self.elements

    def __len__(self):
        return len(self.elements)

    def __iter__(self) -> Iterator[Message]:
        return iter(self.elements)

    def to_bytes(self) -> bytes:
        """宽度(2B) + 元素个数(4B) + 各元素(每个 ceil(width/8) 字节)"""
        body = b"".join(x.to_bytes() for x in self.elements)
        return self.width.to_bytes(2, "big") + len(self.elements).to_bytes(4, "big") + body

    @classmethod
    def from_bytes(cls, data: bytes) -> Tuple["MessageSpace", bytes]:
        """反序列化，返回 (空间, 剩余字节)"""
        if len(data) < 6:
            raise InvalidMessageSpace("truncated message space encoding")
        width = int.from_bytes(data[:2], "big")
        count = int.from_bytes(data[2:6], "big")
        step = byte_length(width)
        end = 6 + count * step
        if width < 1 or len(data) < end:
            raise InvalidMessageSpace("truncated message space encoding")
        elements = tuple(
            Message(int.from_bytes(data[6 + i * step:6 + (i + 1) * step], "big"), width)
            for i in range(count)
        )
        return cls(elements), data[end:]

    def __str__(self):
        shown = ", ".join(str(x) for x in self.elements[:4])
        more = ", ..." if len(self.elements) > 4 else ""
        return f"{{{shown}{more}}} ({len(self.elements)} x {self.width} bits)"


def uniform_sample(space: MessageSpace, coins: Coins) -> Message:
    """默认 Sample：从空间中均匀抽取一个元素"""
    if not isinstance(space, MessageSpace) or len(space) == 0:
        raise InvalidMessageSpace("cannot sample from an empty message space")
    return space.sample(coins)


# ---------------------------------------------------------------------------
# 部分信息函数
# ---------------------------------------------------------------------------

def _any_message(x) -> bool:
    return isinstance(x, Message)


@dataclass(frozen=True)
class PartialInfoFunction:
    """
    可多项式验证的部分信息函数 f。

    name + params 唯一确定一个函数（相等性只看这两项）；实验按名称从函数库重建 f 再计分。
    """
    name: str
    params: Tuple[Tuple[str, Any], ...] = ()
    description: str = field(default="", compare=False)
    evaluator: Callable[[Message], Value] = field(default=None, compare=False, repr=False)
    domain: Callable[[Message], bool] = field(default=_any_message, compare=False, repr=False)

    def in_domain(self, x) -> bool:
        return isinstance(x, Message) and bool(self.domain(x))

    def evaluate(self, x: Message) -> Value:
        if not self.in_domain(x):
            raise DomainError()
        return self.evaluator(x)

    def verify(self, x: Message, v) -> int:
        """验证器 A(x, v)：v = f(x) 时为 1，否则为 0"""
        return int(v == self.evaluate(x))

    def param(self, key: str, default=None):
        return dict(self.params).get(key, default)

    def domain_elements(self, width: int) -> Tuple[Message, ...]:
        """给定宽度下的有限定义域（穷举验证用）"""
        if self.name == "two_point":
            return self.param("x0"), self.param("x1")
        return MessageSpace.full(width).elements

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "params": {k: str(v) for k, v in self.params}}

    def __str__(self):
        if not self.params:
            return self.name
        inner = ", ".join(f"{k}={v}" for k, v in self.params)
        return f"{self.name}({inner})"


def _lsb() -> PartialInfoFunction:
    return PartialInfoFunction("lsb", (), "最低位", lambda x: Value(x.bit(0), 1))


def _msb() -> PartialInfoFunction:
    return PartialInfoFunction("msb", (), "最高位", lambda x: Value(x.bit(x.width - 1), 1))


def _parity() -> PartialInfoFunction:
    return PartialInfoFunction("parity", (), "各位异或", lambda x: Value(bin(x.value).count("1") & 1, 1))


def _constant() -> PartialInfoFunction:
    return PartialInfoFunction("constant", (), "恒为 0", lambda x: Value(0, 1))


def _two_point(x0: Message, x1: Message) -> PartialInfoFunction:
    if not isinstance(x0, Message) or not isinstance(x1, Message):
        raise InvalidAdversaryOutput("two-point function needs two messages")
    if x0.width != x1.width:
        raise InvalidAdversaryOutput("two-point function needs messages of equal length")
    if x0 == x1:
        raise InvalidAdversaryOutput("two-point function needs distinct messages")
    return PartialInfoFunction(
        "two_point",
        (("x0", x0), ("x1", x1)),
        f"f({x0})=0, f({x1})=1",
        lambda x: Value(0 if x == x0 else 1, 1),
        lambda x: x == x0 or x == x1,
    )


# 已注册的部分信息函数：名称 -> 工厂
PARTIAL_INFO_LIBRARY: Dict[str, Callable[..., PartialInfoFunction]] = {
    "lsb": _lsb,
    "msb": _msb,
    "parity": _parity,
    "constant": _constant,
    "two_point": _two_point,
}


def build_partial_info(name: str, **params) -> PartialInfoFunction:
    factory = PARTIAL_INFO_LIBRARY.get(name)
    if factory is None:
        raise UnknownCorpusId("partial_info", name)
    return factory(**params)


def resolve_partial_info(f) -> PartialInfoFunction:
    """按名称与参数从函数库重建 f；未注册或参数不符视为敌手输出非法"""
    if not isinstance(f, PartialInfoFunction):
        raise InvalidAdversaryOutput(f"claim function must be a PartialInfoFunction, got {type(f).__name__}")
    factory = PARTIAL_INFO_LIBRARY.get(f.name)
    if factory is None:
        raise InvalidAdversaryOutput(f"partial-information function '{f.name}' is not registered")
    try:
        return factory(**dict(f.params))
    except TypeError as e:
        raise InvalidAdversaryOutput(f"bad parameters for '{f.name}': {e}") from None


def verify_partial_info(f: PartialInfoFunction, x: Message, v: Value) -> int:
    return f.verify(x, v)


@dataclass(frozen=True)
class PartialInfoClaim:
    v: Value
    f: PartialInfoFunction

    def to_dict(self):
        return {"v": str(self.v), "f": self.f.to_dict()}


# ---------------------------------------------------------------------------
# 行为契约
# ---------------------------------------------------------------------------

class Scheme(ABC):
    """
    公钥加密方案 (K, E, D)，构造时绑定安全参数 k。
    keygen_bits / coin_budget 分别是密钥生成与单次加密声明的随机比特数。
    """
    name = "scheme"

    def __init__(self, k):
        self.k = SecurityParameter.of(k).k

    @property
    def message_bits(self) -> int:
        return self.k

    @property
    @abstractmethod
    def keygen_bits(self) -> int:
        ...

    @property
    @abstractmethod
    def coin_budget(self) -> int:
        ...

    @abstractmethod
    def keygen(self, coins: Coins) -> KeyPair:
        ...

    @abstractmethod
    def encrypt(self, pk: PublicKey, x: Message, coins: Coins) -> Ciphertext:
        ...

    @abstractmethod
    def decrypt(self, sk: bytes, y: Ciphertext) -> DecryptResult:
        ...

    def describe(self):
        return {"id": self.name, "k": self.k, "keygen_bits": self.keygen_bits, "coin_budget": self.coin_budget}


class IndAdversary(ABC):
    """IND 敌手 A = (A1, A2)"""
    kind = "ind"
    name = "ind_adversary"

    def phase1_bits(self, k: int) -> int:
        return 0

    def phase2_bits(self, k: int) -> int:
        return 0

    @abstractmethod
    def phase1(self, k: int, pk: PublicKey, oracle, coins: Coins) -> Tuple[Message, Message, StateInfo]:
        ...

    @abstractmethod
    def phase2(self, x0: Message, x1: Message, state: StateInfo, y: Ciphertext, oracle, coins: Coins) -> int:
        ...

    def describe(self):
        return {"id": self.name, "kind": self.kind}


class CssAdversary(ABC):
    """
    CSS 敌手 B = (B1, B2)
    supports_no_ciphertext 为真时，phase2 可以在 y=None 下调用（拆分实验）。
    """
    kind = "css"
    name = "css_adversary"
    supports_no_ciphertext = False

    def phase1_bits(self, k: int) -> int:
        return 0

    def phase2_bits(self, k: int) -> int:
        return 0

    def space_bits(self, k: int) -> int:
        """phase1 返回的消息空间最多需要的抽样比特数"""
        return k

    @abstractmethod
    def phase1(self, k: int, pk: PublicKey, oracle, coins: Coins) -> Tuple[MessageSpace, StateInfo]:
        ...

    @abstractmethod
    def phase2(self, space: MessageSpace, state: StateInfo, y: Optional[Ciphertext], oracle,
               coins: Coins) -> PartialInfoClaim:
        ...

    def describe(self):
        return {"id": self.name, "kind": self.kind, "supports_no_ciphertext": self.supports_no_ciphertext}


class SampleAlgorithm(ABC):
    """不看密文的基准算法 Sample(M, s)"""
    name = "sampler"

    def coin_bits(self, space_bits: int) -> int:
        return space_bits

    @abstractmethod
    def sample(self, space: MessageSpace, state: StateInfo, coins: Coins) -> Message:
        ...

    def describe(self):
        return {"id": self.name}


# ---------------------------------------------------------------------------
# 正确性检查
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorrectnessReport:
    scheme: str
    k: int
    coin_tape_bits: int
    pairs_tested: int
    failure_count: int
    failures: Tuple[Dict[str, Any], ...]
    exhaustive: bool

    @property
    def ok(self) -> bool:
        return self.failure_count == 0

    def to_dict(self):
        return {
            "scheme": self.scheme,
            "k": self.k,
            "coin_tape_bits": self.coin_tape_bits,
            "pairs_tested": self.pairs_tested,
            "failure_count": self.failure_count,
            "failures": list(self.failures),
            "exhaustive": self.exhaustive,
        }


# 报告中保留的失败见证个数
_MAX_WITNESSES = 16


def scheme_correctness_check(scheme: Scheme, k, coin_tape_bits: int, seed: int = 0) -> CorrectnessReport:
    """
    对 (消息, 随机带) 对检查 D(sk, E(pk, x, r)) = x 以及解密的确定性。

    随机带前 keygen_bits 位供密钥生成，其余全部交给加密。
    对数不超过 exhaustive_pair_limit 时穷举，否则对所有消息使用同一批带种子的随机带。
    不匹配以见证形式报告，不抛异常。
    """
    k = SecurityParameter.of(k).k
    if k != scheme.k:
        raise ConfigError(f"scheme is bound to k={scheme.k}, asked to check k={k}")
    needed = scheme.keygen_bits + scheme.coin_budget
    if coin_tape_bits < needed:
        raise ConfigError(f"coin tape of {coin_tape_bits} bits is shorter than the scheme's {needed}-bit budget")

    messages = MessageSpace.full(scheme.message_bits).elements
    layout = TapeLayout(keygen=scheme.keygen_bits, encrypt=coin_tape_bits - scheme.keygen_bits)
    total_pairs = len(messages) << coin_tape_bits
    exhaustive = total_pairs <= int(Config.setting("exhaustive_pair_limit", 262144))
    if exhaustive:
        tapes = range(1 << coin_tape_bits)
    else:
        wanted = int(Config.setting("correctness_sample_pairs", 4096))
        count = max(1, math.ceil(wanted / len(messages)))
        tapes = [expand_tape(derive_trial_seed(seed, 0, i), coin_tape_bits) for i in range(count)]

    pairs = 0
    failures = []
    failure_count = 0
    for tape_value in tapes:
        tape = CoinTape(tape_value, layout)
        keys = scheme.keygen(tape.segment("keygen"))
        enc_value = tape.segment("encrypt").take(layout.encrypt)
        for x in messages:
            pairs += 1
            y = scheme.encrypt(keys.pk, x, Coins(enc_value, layout.encrypt, "encrypt"))
            first = scheme.decrypt(keys.sk, y)
            second = scheme.decrypt(keys.sk, y)
            reason = None
            if first != x:
                reason = "mismatch"
            elif second != first:
                reason = "nondeterministic"
            if reason:
                failure_count += 1
                if len(failures) < _MAX_WITNESSES:
                    failures.append({
                        "message": str(x),
                        "tape": tape_value,
                        "ciphertext": str(y),
                        "decrypted": render_result(first),
                        "reason": reason,
                    })

    report = CorrectnessReport(scheme.name, k, coin_tape_bits, pairs, failure_count, tuple(failures), exhaustive)
    if report.ok:
        Logger.debug(f"正确性检查通过: {scheme.name} k={k} 共 {pairs} 对 (穷举={exhaustive})")
    else:
        Logger.warning(f"正确性检查失败: {scheme.name} k={k} 失败 {failure_count}/{pairs}")
    return report
