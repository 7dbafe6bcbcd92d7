"""
实验语料库

可完全枚举的小方案、敌手、Sample 算法与部分信息函数。每个方案都故意留有一个缺陷，
用来让某个攻击模型下的优势可以被观察到:
    identity       : 确定性加密，IND-CPA 即可攻破
    ideal_table    : 由密钥派生的置换表加校验码，任何 1、2 比特的篡改都被拒绝
    leaky_lsb      : 高位用 ideal_table 加密，最低位明文附在末尾
    xor_malleable  : y = r || pad(r) xor x，翻转密文即翻转明文
    cca1_key_leak  : y = x xor P，第一阶段解密一次全零密文即可拿到 P

所有方案的公钥都不含私密字节，私密材料只在 sk 与公钥绑定的加密函数里。
安全参数 k 即消息比特数，1 <= k <= 8。
"""
import hashlib
from abc import abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache, partial
from typing import Callable, Dict, List, Optional, Tuple

from lab.core_model import (
    BOTTOM,
    PARTIAL_INFO_LIBRARY,
    Ciphertext,
    CssAdversary,
    IndAdversary,
    KeyPair,
    Message,
    MessageSpace,
    PartialInfoClaim,
    PublicKey,
    SampleAlgorithm,
    Scheme,
    StateInfo,
    Value,
    build_partial_info,
    uniform_sample,
)
from lab.exceptions import ConfigError, PolicyRefusal, UnknownCorpusId

MAX_K = 8


def _mask(width: int) -> int:
    return (1 << width) - 1


def _byte(value: int) -> bytes:
    return value.to_bytes(1, "big")


# ---------------------------------------------------------------------------
# 方案
# ---------------------------------------------------------------------------

class _CorpusScheme(Scheme):
    """公钥只携带绑定了私密材料的加密函数，encrypt 经由公钥完成"""
    min_k = 1

    def __init__(self, k):
        super().__init__(k)
        if not self.min_k <= self.k <= MAX_K:
            raise ConfigError(f"{self.name} supports {self.min_k} <= k <= {MAX_K}, got k={self.k}")

    def keygen(self, coins):
        secret = self._secret(coins)
        return KeyPair(PublicKey(b"", partial(self._seal, secret)), secret)

    def encrypt(self, pk, x, coins):
        return pk.seal(x, coins)

    def _secret(self, coins) -> bytes:
        return b""

    @abstractmethod
    def _seal(self, secret: bytes, x: Message, coins) -> Ciphertext:
        ...


class IdentityScheme(_CorpusScheme):
    name = "identity_scheme"
    keygen_bits = 0
    coin_budget = 0

    def _seal(self, secret, x, coins):
        return Ciphertext(x.value, x.width)

    def decrypt(self, sk, y):
        if y.width != self.k:
            return BOTTOM
        return Message(y.value, y.width)


# 置换表：2w 位上的 4 轮 Feistel，轮函数取 SHA-256 的首字节
_ROUNDS = 4


@lru_cache(maxsize=65536)
def _round(key: int, width: int, index: int, half: int) -> int:
    digest = hashlib.sha256(b"csslab/ideal_table" + bytes((width, key, index, half))).digest()
    return digest[0] & _mask(width)


def _permute(key: int, width: int, word: int) -> int:
    left, right = word >> width, word & _mask(width)
    for index in range(_ROUNDS):
        left, right = right, left ^ _round(key, width, index, right)
    return (left << width) | right


def _unpermute(key: int, width: int, word: int) -> int:
    left, right = word >> width, word & _mask(width)
    for index in reversed(range(_ROUNDS)):
        left, right = right ^ _round(key, width, index, left), left
    return (left << width) | right


@lru_cache(maxsize=None)
def _check_columns(width: int) -> Tuple[int, Tuple[int, ...]]:
    """
    2w 个数据位的校验列：两两不同且重量至少为 2，所以码的最小距离至少为 3。
    返回 (校验位数, 各数据位的校验列)。
    """
    bits = 2
    while (1 << bits) - 1 - bits < 2 * width:
        bits += 1
    columns = tuple(c for c in range(1, 1 << bits) if bin(c).count("1") >= 2)[:2 * width]
    return bits, columns


def _check_bits(word: int, width: int) -> int:
    check = 0
    for index, column in enumerate(_check_columns(width)[1]):
        if word >> index & 1:
            check ^= column
    return check


def table_ciphertext_bits(width: int) -> int:
    return 2 * width + _check_columns(width)[0]


def _table_encrypt(key: int, x: int, r: int, width: int) -> Tuple[int, int]:
    """data = P_K(x || r)，密文为 data || check(data)，返回 (值, 宽度)"""
    data = _permute(key, width, (x << width) | r)
    bits = _check_columns(width)[0]
    return (data << bits) | _check_bits(data, width), table_ciphertext_bits(width)


def _table_decrypt(key: int, value: int, width: int) -> Optional[int]:
    bits = _check_columns(width)[0]
    data = value >> bits
    if value & _mask(bits) != _check_bits(data, width):
        return None
    return _unpermute(key, width, data) >> width


class IdealTableScheme(_CorpusScheme):
    """
    K 与 r 各 k 位。x || r 经由 K 派生的置换映到 2k 位数据字，再附上固定的校验位。
    合法密文两两相距至少 3 个比特，对合法密文翻转 1 或 2 位必然解密为 ⊥。
    """
    name = "ideal_table_scheme"

    @property
    def keygen_bits(self):
        return self.k

    @property
    def coin_budget(self):
        return self.k

    def _secret(self, coins):
        return _byte(coins.take(self.k))

    def _seal(self, secret, x, coins):
        value, width = _table_encrypt(secret[0], x.value, coins.take(self.k), self.k)
        return Ciphertext(value, width)

    def decrypt(self, sk, y):
        if y.width != table_ciphertext_bits(self.k):
            return BOTTOM
        x = _table_decrypt(sk[0], y.value, self.k)
        return BOTTOM if x is None else Message(x, self.k)


class LeakyLsbScheme(_CorpusScheme):
    """高 k-1 位走 ideal_table，最低位明文附在密文末尾"""
    name = "leaky_lsb_scheme"
    min_k = 2

    @property
    def high_bits(self):
        return self.k - 1

    @property
    def keygen_bits(self):
        return self.high_bits

    @property
    def coin_budget(self):
        return self.high_bits

    def _secret(self, coins):
        return _byte(coins.take(self.high_bits))

    def _seal(self, secret, x, coins):
        value, width = _table_encrypt(secret[0], x.value >> 1, coins.take(self.high_bits), self.high_bits)
        return Ciphertext((value << 1) | (x.value & 1), width + 1)

    def decrypt(self, sk, y):
        if y.width != table_ciphertext_bits(self.high_bits) + 1:
            return BOTTOM
        high = _table_decrypt(sk[0], y.value >> 1, self.high_bits)
        if high is None:
            return BOTTOM
        return Message((high << 1) | (y.value & 1), self.k)


class XorMalleableScheme(_CorpusScheme):
    """
    y = r || (pad[r] ^ x)，pad[r] = ((r ^ K) * 5 + 3) mod 2^k 是由 K 决定的置换表。
    私钥是整张 pad 表。
    """
    name = "xor_malleable_scheme"

    @property
    def keygen_bits(self):
        return self.k

    @property
    def coin_budget(self):
        return self.k

    def _secret(self, coins):
        key = coins.take(self.k)
        mask = _mask(self.k)
        return bytes((((r ^ key) * 5 + 3) & mask) for r in range(1 << self.k))

    def _seal(self, secret, x, coins):
        r = coins.take(self.k)
        return Ciphertext((r << self.k) | (secret[r] ^ x.value), 2 * self.k)

    def decrypt(self, sk, y):
        if y.width != 2 * self.k:
            return BOTTOM
        r = y.value >> self.k
        return Message((y.value & _mask(self.k)) ^ sk[r], self.k)


class Cca1KeyLeakScheme(_CorpusScheme):
    """y = x ^ P；每个 k 位串都是合法密文"""
    name = "cca1_key_leak_scheme"
    coin_budget = 0

    @property
    def keygen_bits(self):
        return self.k

    def _secret(self, coins):
        return _byte(coins.take(self.k))

    def _seal(self, secret, x, coins):
        return Ciphertext(x.value ^ secret[0], self.k)

    def decrypt(self, sk, y):
        if y.width != self.k:
            return BOTTOM
        return Message(y.value ^ sk[0], self.k)


# ---------------------------------------------------------------------------
# 敌手
# ---------------------------------------------------------------------------

def _extremes(k: int) -> Tuple[Message, Message]:
    return Message(0, k), Message(_mask(k), k)


def _guess(candidate, x0: Message, x1: Message, coins) -> int:
    """candidate 与 x1 相同输出 1，与 x0 相同输出 0，否则掷硬币"""
    if candidate == x1:
        return 1
    if candidate == x0:
        return 0
    return coins.bit()


class _TwoExtremesAdversary(IndAdversary):
    def phase2_bits(self, k):
        return 1

    def phase1(self, k, pk, oracle, coins):
        x0, x1 = _extremes(k)
        return x0, x1, StateInfo()


class ReplayDistinguisher(_TwoExtremesAdversary):
    """不加密任何东西，直接拿 y 的比特与 x0, x1 比较"""
    name = "replay_distinguisher"

    def phase2(self, x0, x1, state, y, oracle, coins):
        return _guess(Message(y.value, y.width), x0, x1, coins)


class CoinflipAdversary(_TwoExtremesAdversary):
    name = "coinflip_adversary"

    def phase2(self, x0, x1, state, y, oracle, coins):
        return coins.bit()


class BitflipCca2Adversary(_TwoExtremesAdversary):
    """第二阶段查询翻转了第 0 位的挑战密文，再把答案的第 0 位翻回去"""
    name = "bitflip_cca2_adversary"

    def phase2(self, x0, x1, state, y, oracle, coins):
        try:
            answer = oracle.query(y.flip(0))
        except PolicyRefusal:
            return coins.bit()
        if not isinstance(answer, Message) or answer.width != x0.width:
            return coins.bit()
        return _guess(answer.flip(0), x0, x1, coins)


class Cca1TableAdversary(_TwoExtremesAdversary):
    """第一阶段解密全零密文拿到 pad，第二阶段用 pad 解开挑战"""
    name = "cca1_table_adversary"

    def phase1(self, k, pk, oracle, coins):
        x0, x1 = _extremes(k)
        try:
            answer = oracle.query(Ciphertext(0, k))
        except PolicyRefusal:
            return x0, x1, StateInfo(b"\x00")
        if isinstance(answer, Message) and answer.width == k:
            return x0, x1, StateInfo(b"\x01" + answer.to_bytes())
        return x0, x1, StateInfo(b"\x00")

    def phase2(self, x0, x1, state, y, oracle, coins):
        if state.data[:1] != b"\x01" or y.width != x0.width:
            return coins.bit()
        pad = int.from_bytes(state.data[1:], "big")
        return _guess(Message(y.value ^ pad, y.width), x0, x1, coins)


class LsbExtractor(CssAdversary):
    """M 取满空间，声称 v = y 的第 0 位是 x1 的最低位"""
    name = "lsb_extractor"

    def phase1(self, k, pk, oracle, coins):
        return MessageSpace.full(k), StateInfo()

    def phase2(self, space, state, y, oracle, coins):
        return PartialInfoClaim(Value(y.bit(0), 1), build_partial_info("lsb"))


class ConstantCssAdversary(CssAdversary):
    """v = 0, f 恒为 0；不看密文"""
    name = "constant_css_adversary"
    supports_no_ciphertext = True

    def phase1(self, k, pk, oracle, coins):
        return MessageSpace.full(k), StateInfo()

    def phase2(self, space, state, y, oracle, coins):
        return PartialInfoClaim(Value(0, 1), build_partial_info("constant"))


# ---------------------------------------------------------------------------
# Sample 算法
# ---------------------------------------------------------------------------

class UniformSampler(SampleAlgorithm):
    name = "uniform_sampler"

    def sample(self, space, state, coins):
        return uniform_sample(space, coins)


class AdversarialSampler(SampleAlgorithm):
    """总是返回 M 的第一个元素"""
    name = "adversarial_sampler"

    def coin_bits(self, space_bits):
        return 0

    def sample(self, space, state, coins):
        return space.elements[0]


# ---------------------------------------------------------------------------
# 注册表
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorpusEntry:
    id: str
    kind: str
    factory: Callable = field(compare=False, repr=False)
    description: str = ""
    aliases: Tuple[str, ...] = ()

    def to_dict(self):
        return {"id": self.id, "kind": self.kind, "aliases": list(self.aliases), "description": self.description,
                "documented": [row.to_dict() for row in documented_for(self.id)]}


@dataclass(frozen=True)
class DocumentedAdvantage:
    """k=4 时的精确优势，测试会通过枚举重新生成"""
    game: str
    atk: str
    scheme: str
    adversary: str
    adv: Fraction
    sampler: Optional[str] = None
    k: int = 4

    def to_dict(self):
        return {
            "game": self.game,
            "atk": self.atk,
            "scheme": self.scheme,
            "adversary": self.adversary,
            "sampler": self.sampler,
            "k": self.k,
            "adv": f"{self.adv.numerator}/{self.adv.denominator}",
        }


SCHEMES = "scheme"
IND_ADVERSARIES = "ind_adversary"
CSS_ADVERSARIES = "css_adversary"
SAMPLERS = "sampler"
PARTIAL_INFO = "partial_info"

_PARTIAL_INFO_NOTES = {
    "lsb": "最低位",
    "msb": "最高位",
    "parity": "各位异或",
    "constant": "恒为 0",
    "two_point": "f(x0)=0, f(x1)=1，参数 x0, x1",
}

_ENTRIES: List[CorpusEntry] = [
    CorpusEntry("identity_scheme", SCHEMES, IdentityScheme, "E(x) = x", ("identity",)),
    CorpusEntry("ideal_table_scheme", SCHEMES, IdealTableScheme, "密钥派生置换表加校验码，1、2 比特篡改均被拒绝", ("ideal_table",)),
    CorpusEntry("leaky_lsb_scheme", SCHEMES, LeakyLsbScheme, "高位加密，最低位明文泄露", ("leaky_lsb",)),
    CorpusEntry("xor_malleable_scheme", SCHEMES, XorMalleableScheme, "y = r || pad(r) xor x，可篡改",
                ("xor_malleable",)),
    CorpusEntry("cca1_key_leak_scheme", SCHEMES, Cca1KeyLeakScheme, "y = x xor P，一次解密泄露 P",
                ("cca1_key_leak",)),
    CorpusEntry("replay_distinguisher", IND_ADVERSARIES, ReplayDistinguisher, "直接比较 y 与 x0, x1", ("replay",)),
    CorpusEntry("coinflip_adversary", IND_ADVERSARIES, CoinflipAdversary, "输出一枚公平硬币", ("coinflip",)),
    CorpusEntry("bitflip_cca2_adversary", IND_ADVERSARIES, BitflipCca2Adversary, "第二阶段查询翻转后的挑战密文",
                ("bitflip",)),
    CorpusEntry("cca1_table_adversary", IND_ADVERSARIES, Cca1TableAdversary, "第一阶段查询得到 pad",
                ("cca1_table",)),
    CorpusEntry("lsb_extractor", CSS_ADVERSARIES, LsbExtractor, "v = 密文最低位, f = lsb", ("lsb",)),
    CorpusEntry("constant_css_adversary", CSS_ADVERSARIES, ConstantCssAdversary, "v = 0, f 恒为 0",
                ("constant",)),
    CorpusEntry("uniform_sampler", SAMPLERS, UniformSampler, "在 M 上均匀抽样（默认）", ("uniform",)),
    CorpusEntry("adversarial_sampler", SAMPLERS, AdversarialSampler, "总是返回 M 的第一个元素",
                ("adversarial", "first")),
] + [
    CorpusEntry(name, PARTIAL_INFO, factory, _PARTIAL_INFO_NOTES.get(name, ""), ())
    for name, factory in PARTIAL_INFO_LIBRARY.items()
]

_F = Fraction

DOCUMENTED_ADVANTAGES: Tuple[DocumentedAdvantage, ...] = (
    DocumentedAdvantage("ind", "cpa", "identity_scheme", "replay_distinguisher", _F(1)),
    DocumentedAdvantage("ind", "cpa", "identity_scheme", "coinflip_adversary", _F(0)),
    DocumentedAdvantage("ind", "cca2", "xor_malleable_scheme", "bitflip_cca2_adversary", _F(1)),
    DocumentedAdvantage("ind", "cca1", "xor_malleable_scheme", "bitflip_cca2_adversary", _F(0)),
    DocumentedAdvantage("ind", "cca1", "cca1_key_leak_scheme", "cca1_table_adversary", _F(1)),
    DocumentedAdvantage("ind", "cpa", "cca1_key_leak_scheme", "cca1_table_adversary", _F(0)),
    DocumentedAdvantage("ind", "cpa", "ideal_table_scheme", "replay_distinguisher", _F(0)),
    DocumentedAdvantage("ind", "cpa", "ideal_table_scheme", "coinflip_adversary", _F(0)),
    DocumentedAdvantage("ind", "cca2", "ideal_table_scheme", "bitflip_cca2_adversary", _F(0)),
    DocumentedAdvantage("ind", "cca1", "ideal_table_scheme", "cca1_table_adversary", _F(0)),
    DocumentedAdvantage("css", "cpa", "leaky_lsb_scheme", "lsb_extractor", _F(1, 2), "uniform_sampler"),
    DocumentedAdvantage("css", "cpa", "leaky_lsb_scheme", "lsb_extractor", _F(1, 2), "adversarial_sampler"),
    DocumentedAdvantage("css", "cpa", "leaky_lsb_scheme", "constant_css_adversary", _F(0), "uniform_sampler"),
)


def _index() -> Dict[Tuple[str, str], CorpusEntry]:
    index = {}
    for entry in _ENTRIES:
        for name in (entry.id,) + entry.aliases:
            key = (entry.kind, name)
            if key in index:
                raise RuntimeError(f"duplicate corpus id: {name}")
            index[key] = entry
    return index


_INDEX = _index()


def lookup(kinds, corpus_id: str) -> CorpusEntry:
    """按 id 或别名查找；kinds 可以是单个类别或类别元组"""
    kinds = (kinds,) if isinstance(kinds, str) else tuple(kinds)
    name = str(corpus_id).strip()
    for kind in kinds:
        entry = _INDEX.get((kind, name))
        if entry is not None:
            return entry
    raise UnknownCorpusId("/".join(kinds), name)


def canonical_id(kinds, corpus_id: str) -> str:
    return lookup(kinds, corpus_id).id


def build_scheme(corpus_id: str, k: int) -> Scheme:
    return lookup(SCHEMES, corpus_id).factory(k)


def build_adversary(corpus_id: str):
    return lookup((IND_ADVERSARIES, CSS_ADVERSARIES), corpus_id).factory()


def build_sampler(corpus_id: str = "uniform_sampler") -> SampleAlgorithm:
    return lookup(SAMPLERS, corpus_id).factory()


def entries(kind: str = None) -> List[CorpusEntry]:
    return [entry for entry in _ENTRIES if kind is None or entry.kind == kind]


def documented_for(corpus_id: str) -> List[DocumentedAdvantage]:
    return [row for row in DOCUMENTED_ADVANTAGES
            if corpus_id in (row.scheme, row.adversary, row.sampler)]
