"""
安全实验

单次执行 IND-ATK 实验、统一的 CSS-ATK 实验以及拆分的两个 CSS 实验，
并提供在有界随机带上逐一枚举的精确概率计算。

随机带分段顺序固定: keygen, phase1, draw(x1), encrypt, sample(x0), phase2。
"""
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional, Tuple, Union

from common.log_decorator import log_perf
from common.logger import Logger
from config.config import Config
from lab.coins import CoinTape, TapeLayout, check_seed
from lab.core_model import (
    AttackModel,
    Ciphertext,
    CssAdversary,
    IndAdversary,
    Message,
    MessageSpace,
    PartialInfoClaim,
    SampleAlgorithm,
    Scheme,
    StateInfo,
    Value,
    check_bit,
    resolve_partial_info,
    uniform_sample,
    verify_partial_info,
)
from lab.exceptions import (
    ConfigError,
    ContractViolation,
    EnumerationInfeasible,
    InvalidAdversaryOutput,
    UnsupportedSplitExperiment,
)
from lab.oracle_gate import OracleHandle, OracleTranscript, open_oracle


class GameKind(Enum):
    IND = "ind"
    CSS = "css"
    CSS_SPLIT = "css_split"

    @classmethod
    def parse(cls, text) -> "GameKind":
        if isinstance(text, cls):
            return text
        try:
            return cls(str(text).strip().lower())
        except ValueError:
            raise ConfigError(f"unknown game: {text!r}") from None

    @property
    def adversary_kind(self) -> str:
        return "ind" if self is GameKind.IND else "css"


@dataclass(frozen=True)
class GameSpec:
    """一次实验配置：方案、敌手、攻击模型，CSS 额外需要 Sample 算法"""
    game: GameKind
    scheme: Scheme
    adversary: Union[IndAdversary, CssAdversary]
    atk: AttackModel
    sample: Optional[SampleAlgorithm] = None
    query_cap: Optional[int] = None
    max_state_bytes: Optional[int] = None
    max_value_bits: Optional[int] = None

    def __post_init__(self):
        game = GameKind.parse(self.game)
        object.__setattr__(self, "game", game)
        object.__setattr__(self, "atk", AttackModel.parse(self.atk))
        kind = getattr(self.adversary, "kind", None)
        if kind != game.adversary_kind:
            raise ConfigError(f"{game.value} game needs an {game.adversary_kind} adversary, got {kind!r}")
        if game is GameKind.IND:
            object.__setattr__(self, "sample", None)
        elif self.sample is None:
            raise ConfigError("css games need a sample algorithm")
        if self.query_cap is None:
            object.__setattr__(self, "query_cap", int(Config.setting("query_cap", 65536)))
        if self.max_state_bytes is None:
            object.__setattr__(self, "max_state_bytes", int(Config.setting("max_state_bytes", 4096)))
        if self.max_value_bits is None:
            object.__setattr__(self, "max_value_bits", int(Config.setting("max_value_bits", 64)))

    @property
    def k(self) -> int:
        return self.scheme.k

    def layout(self) -> TapeLayout:
        k = self.k
        adv = self.adversary
        if self.game is GameKind.IND:
            return TapeLayout(
                keygen=self.scheme.keygen_bits,
                phase1=adv.phase1_bits(k),
                encrypt=self.scheme.coin_budget,
                phase2=adv.phase2_bits(k),
            )
        space_bits = adv.space_bits(k)
        return TapeLayout(
            keygen=self.scheme.keygen_bits,
            phase1=adv.phase1_bits(k),
            draw=space_bits,
            encrypt=self.scheme.coin_budget,
            sample=self.sample.coin_bits(space_bits),
            phase2=adv.phase2_bits(k),
        )

    def with_game(self, game) -> "GameSpec":
        return GameSpec(game, self.scheme, self.adversary, self.atk, self.sample,
                        self.query_cap, self.max_state_bytes, self.max_value_bits)

    def describe(self):
        return {
            "game": self.game.value,
            "atk": self.atk.value,
            "k": self.k,
            "scheme": self.scheme.name,
            "adversary": self.adversary.name,
            "sampler": self.sample.name if self.sample is not None else None,
            "coin_layout": self.layout().to_dict(),
        }


@dataclass(frozen=True)
class TrialRecord:
    game: GameKind
    atk: AttackModel
    b: int
    seed: Optional[int]
    d: int
    transcript: OracleTranscript = ()
    challenge: Optional[Ciphertext] = None
    encrypted: Optional[Message] = None
    x0: Optional[Message] = None
    x1: Optional[Message] = None
    claim: Optional[PartialInfoClaim] = field(default=None)

    def to_dict(self):
        return {
            "game": self.game.value,
            "atk": self.atk.value,
            "b": self.b,
            "seed": self.seed,
            "d": self.d,
            "x0": _text(self.x0),
            "x1": _text(self.x1),
            "challenge": _text(self.challenge),
            "encrypted": _text(self.encrypted),
            "claim": self.claim.to_dict() if self.claim is not None else None,
            "transcript": [entry.to_dict() for entry in self.transcript],
        }


def _text(bits):
    return None if bits is None else str(bits)


# ---------------------------------------------------------------------------
# 输出校验
# ---------------------------------------------------------------------------

def _checked_state(spec: GameSpec, state) -> StateInfo:
    if not isinstance(state, StateInfo):
        raise InvalidAdversaryOutput(f"state must be StateInfo, got {type(state).__name__}")
    if len(state) > spec.max_state_bytes:
        raise InvalidAdversaryOutput(f"state of {len(state)} bytes exceeds the {spec.max_state_bytes}-byte cap")
    return state


def _checked_pair(spec: GameSpec, output) -> Tuple[Message, Message, StateInfo]:
    try:
        x0, x1, state = output
    except (TypeError, ValueError):
        raise InvalidAdversaryOutput("phase 1 must return (x0, x1, state)") from None
    if not isinstance(x0, Message) or not isinstance(x1, Message):
        raise InvalidAdversaryOutput("phase 1 must return two messages")
    if x0.width != x1.width:
        raise InvalidAdversaryOutput(f"messages have unequal length: {x0.width} vs {x1.width}")
    if x0.width != spec.scheme.message_bits:
        raise InvalidAdversaryOutput(f"messages must be {spec.scheme.message_bits} bits for {spec.scheme.name}")
    return x0, x1, _checked_state(spec, state)


def _checked_space(spec: GameSpec, output) -> Tuple[MessageSpace, StateInfo]:
    try:
        space, state = output
    except (TypeError, ValueError):
        raise InvalidAdversaryOutput("phase 1 must return (message space, state)") from None
    if not isinstance(space, MessageSpace):
        raise InvalidAdversaryOutput(f"phase 1 must return a MessageSpace, got {type(space).__name__}")
    if space.width != spec.scheme.message_bits:
        raise InvalidAdversaryOutput(f"messages must be {spec.scheme.message_bits} bits for {spec.scheme.name}")
    declared = spec.adversary.space_bits(spec.k)
    if space.draw_bits > declared:
        raise InvalidAdversaryOutput(f"message space of {len(space)} elements needs more than the declared {declared} draw bits")
    return space, _checked_state(spec, state)


def _checked_bit(d) -> int:
    if d not in (0, 1):
        raise InvalidAdversaryOutput(f"adversary output must be a bit, got {d!r}")
    return int(d)


def _score(spec: GameSpec, claim, x: Message) -> int:
    """用函数库重建的 f 经验证器计分：v = f(x_b) 时 d=1"""
    if not isinstance(claim, PartialInfoClaim):
        raise InvalidAdversaryOutput(f"phase 2 must return a PartialInfoClaim, got {type(claim).__name__}")
    if not isinstance(claim.v, Value):
        raise InvalidAdversaryOutput("claimed value must be a Value")
    if claim.v.width > spec.max_value_bits:
        raise InvalidAdversaryOutput(f"claimed value of {claim.v.width} bits exceeds the {spec.max_value_bits}-bit cap")
    f = resolve_partial_info(claim.f)
    if not f.in_domain(x):
        raise InvalidAdversaryOutput(f"claimed function {f} does not cover the scored message")
    return verify_partial_info(f, x, claim.v)


# ---------------------------------------------------------------------------
# 实验执行
# ---------------------------------------------------------------------------

def _execute(spec: GameSpec, game: GameKind, b: int, tape: CoinTape, seed: Optional[int]) -> TrialRecord:
    scheme = spec.scheme
    keys = scheme.keygen(tape.segment("keygen"))
    oracle = open_oracle(scheme, keys.sk, spec.atk, spec.query_cap)
    try:
        if game is GameKind.IND:
            return _ind(spec, b, tape, seed, keys.pk, oracle)
        return _css(spec, game, b, tape, seed, keys.pk, oracle)
    finally:
        oracle.close()


def _ind(spec, b, tape, seed, pk, oracle: OracleHandle) -> TrialRecord:
    adv = spec.adversary
    x0, x1, state = _checked_pair(spec, adv.phase1(spec.k, pk, oracle, tape.segment("phase1")))
    xb = x1 if b else x0
    y = spec.scheme.encrypt(pk, xb, tape.segment("encrypt"))
    oracle.advance_to_phase2(y)
    d = _checked_bit(adv.phase2(x0, x1, state, y, oracle, tape.segment("phase2")))
    return TrialRecord(GameKind.IND, spec.atk, b, seed, d, oracle.transcript, y, xb, x0, x1)


def _css(spec, game, b, tape, seed, pk, oracle: OracleHandle) -> TrialRecord:
    adv = spec.adversary
    space, state = _checked_space(spec, adv.phase1(spec.k, pk, oracle, tape.segment("phase1")))
    x1 = uniform_sample(space, tape.segment("draw"))
    no_ciphertext = game is GameKind.CSS_SPLIT and b == 0
    y = None if no_ciphertext else spec.scheme.encrypt(pk, x1, tape.segment("encrypt"))
    x0 = spec.sample.sample(space, state, tape.segment("sample"))
    if x0 not in space:
        raise ContractViolation(f"sampler {spec.sample.name} returned a message outside the space")

    oracle.advance_to_phase2(y)
    claim = adv.phase2(space, state, y, oracle, tape.segment("phase2"))
    d = _score(spec, claim, x1 if b else x0)
    return TrialRecord(game, spec.atk, b, seed, d, oracle.transcript, y, None if y is None else x1, x0, x1, claim)


def _require(spec: GameSpec, kind: str):
    if spec.adversary.kind != kind:
        raise ConfigError(f"this experiment needs an {kind} adversary, got {spec.adversary.kind!r}")


def run_ind_trial(spec: GameSpec, b: int, seed: int) -> TrialRecord:
    _require(spec, "ind")
    tape = CoinTape.from_seed(check_seed(seed), spec.layout())
    return _execute(spec, GameKind.IND, check_bit(b), tape, seed)


def run_css_trial(spec: GameSpec, b: int, seed: int) -> TrialRecord:
    """统一 CSS 实验：y 总是 x1 的加密，x0 由 Sample 独立抽取，按 v = f(x_b) 计分"""
    _require(spec, "css")
    tape = CoinTape.from_seed(check_seed(seed), spec.layout())
    return _execute(spec, GameKind.CSS, check_bit(b), tape, seed)


def _require_split(spec: GameSpec):
    _require(spec, "css")
    if not spec.adversary.supports_no_ciphertext:
        raise UnsupportedSplitExperiment(f"adversary {spec.adversary.name} cannot run without a ciphertext")


def run_css_split_trial(spec: GameSpec, b: int, seed: int) -> TrialRecord:
    """拆分 CSS 实验：b=1 与统一实验相同；b=0 时第二阶段拿不到密文"""
    _require_split(spec)
    tape = CoinTape.from_seed(check_seed(seed), spec.layout())
    return _execute(spec, GameKind.CSS_SPLIT, check_bit(b), tape, seed)


_RUNNERS = {
    GameKind.IND: run_ind_trial,
    GameKind.CSS: run_css_trial,
    GameKind.CSS_SPLIT: run_css_split_trial,
}


def run_trial(spec: GameSpec, b: int, seed: int) -> TrialRecord:
    return _RUNNERS[spec.game](spec, b, seed)


@log_perf("精确枚举")
def exact_trial_distribution(spec: GameSpec, b: int, total_coin_bits: int = None) -> Fraction:
    """
    逐一枚举随机带，返回 Pr[d=1] 的精确有理数。

    total_coin_bits 为空时取各分段预算之和；超出 max_enumeration_bits 或小于预算之和时抛 EnumerationInfeasible。
    多出预算的比特不影响任何算法，只按同一比例放大计数，因此只枚举预算之和。
    """
    b = check_bit(b)
    if spec.game is GameKind.CSS_SPLIT:
        _require_split(spec)
    layout = spec.layout()
    needed = layout.total
    limit = int(Config.setting("max_enumeration_bits", 24))
    available = needed if total_coin_bits is None else int(total_coin_bits)
    if needed > available:
        raise EnumerationInfeasible(needed, available)
    if available > limit:
        raise EnumerationInfeasible(available, limit)

    hits = 0
    for value in range(1 << needed):
        hits += _execute(spec, spec.game, b, CoinTape(value, layout), None).d
    result = Fraction(hits, 1 << needed)
    Logger.debug(f"枚举完成: {spec.scheme.name}/{spec.adversary.name} {spec.game.value}-{spec.atk.value} "
                 f"b={b} 随机带 {needed} 比特, Pr[d=1]={result}")
    return result
