"""
敌手构造（两个方向）

css_from_ind : 由 IND 敌手 A 构造 CSS 敌手 B。M = (x0, x1)，v = d，f 为两点函数。
ind_from_css : 由 CSS 敌手 B 构造 IND 敌手 A。从 M 中抽出 x0, x1，按验证结果决定 d。

两个恒等式（Sample 取均匀抽样）:
    正向: Adv_ind(A) = 2 * Adv_css(B)，因为 B 的 p(0) 恒为 1/2
    反向: Adv_ind(A) = Adv_css(B)
"""
import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional, Union

from common.log_decorator import log_function
from common.logger import Logger
from lab.advantage_stats import AdvantageEstimate, ExactAdvantage, estimate_advantage, exact_advantage, fraction_text
from lab.coins import Coins
from lab.core_model import (
    CssAdversary,
    IndAdversary,
    Message,
    MessageSpace,
    PartialInfoClaim,
    PartialInfoFunction,
    SampleAlgorithm,
    StateInfo,
    Value,
    build_partial_info,
    resolve_partial_info,
)
from lab.exceptions import ConfigError, IncomparableConfigurations, InvalidAdversaryOutput
from lab.games import GameKind, GameSpec


class _ParsableEnum(Enum):
    @classmethod
    def parse(cls, text):
        if isinstance(text, cls):
            return text
        try:
            return cls(str(text).strip().lower())
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise ConfigError(f"unknown {cls.__name__} {text!r}, expected one of: {choices}") from None


# 判定规则的另一套叫法，也接受驼峰写法
TIE_BREAK_ALIASES = {"paper_pseudocode": "last_match", "analysis_coinflip": "coinflip"}


class TieBreakMode(_ParsableEnum):
    """两侧验证都成功时的判定规则"""
    LAST_MATCH = "last_match"      # 顺序执行两个 if，后者覆盖：d = 1
    COINFLIP = "coinflip"    # 掷硬币

    @classmethod
    def parse(cls, text):
        if isinstance(text, str):
            key = re.sub(r"(?<=[a-z])(?=[A-Z])", "_", text.strip()).lower()
            text = TIE_BREAK_ALIASES.get(key, text)
        return super().parse(text)

    @classmethod
    def choices(cls):
        camel = ["".join(part.title() for part in key.split("_")) for key in TIE_BREAK_ALIASES]
        return [m.value for m in cls] + list(TIE_BREAK_ALIASES) + camel


class PairDraw(_ParsableEnum):
    INDEPENDENT = "independent"
    DISTINCT = "distinct"


class Direction(_ParsableEnum):
    CSS_FROM_IND = "css_from_ind"
    IND_FROM_CSS = "ind_from_css"

    @property
    def scale(self) -> int:
        return 2 if self is Direction.CSS_FROM_IND else 1


def two_point_function(x0: Message, x1: Message) -> PartialInfoFunction:
    """f(x0) = 0, f(x1) = 1，定义域恰为 {x0, x1}"""
    return build_partial_info("two_point", x0=x0, x1=x1)


class CssFromInd(CssAdversary):
    """把 IND 敌手包装成 CSS 敌手；所有预言机查询原样转发"""

    def __init__(self, inner: IndAdversary):
        if getattr(inner, "kind", None) != "ind":
            raise ConfigError("css_from_ind needs an ind adversary")
        self.inner = inner
        self.name = f"css_from_ind({inner.name})"

    def phase1_bits(self, k):
        return self.inner.phase1_bits(k)

    def phase2_bits(self, k):
        return self.inner.phase2_bits(k)

    def space_bits(self, k):
        return 1

    def phase1(self, k, pk, oracle, coins):
        x0, x1, state = self.inner.phase1(k, pk, oracle, coins)
        if not isinstance(x0, Message) or not isinstance(x1, Message):
            raise InvalidAdversaryOutput("inner adversary must output two messages")
        if x0.width != x1.width:
            raise InvalidAdversaryOutput(f"messages have unequal length: {x0.width} vs {x1.width}")
        if x0 == x1:
            raise InvalidAdversaryOutput("inner adversary output x0 = x1, no two-point function exists")
        return MessageSpace((x0, x1)), state

    def phase2(self, space, state, y, oracle, coins):
        x0, x1 = space.elements
        d = self.inner.phase2(x0, x1, state, y, oracle, coins)
        if d not in (0, 1):
            raise InvalidAdversaryOutput(f"inner adversary output must be a bit, got {d!r}")
        return PartialInfoClaim(Value(int(d), 1), two_point_function(x0, x1))


# DISTINCT 抽取 x1 时的最多尝试次数；每次尝试占 space_bits 位随机带
DISTINCT_DRAW_ATTEMPTS = 2

_DRAWN = b"\x00"
_ABSTAINED = b"\x01"


class IndFromCss(IndAdversary):
    """
    把 CSS 敌手包装成 IND 敌手。

    phase1 随机比特: [内层 phase1 | x0 下标 | x1 下标 ...]，每段 space_bits 位；
        INDEPENDENT 只有一段 x1 下标，DISTINCT 有 DISTINCT_DRAW_ATTEMPTS 段，取第一个不等于 x0 下标的。
        全部尝试都撞上 x0 时放弃本次抽取，第二阶段直接输出一枚硬币。
    phase2 随机比特: [内层 phase2 | 判定硬币 1 位]
    状态: 抽取标记 1 字节 + M 的序列化 + 内层状态
    """

    def __init__(self, inner: CssAdversary, mode=TieBreakMode.COINFLIP, pair_draw=PairDraw.INDEPENDENT):
        if getattr(inner, "kind", None) != "css":
            raise ConfigError("ind_from_css needs a css adversary")
        self.inner = inner
        self.mode = TieBreakMode.parse(mode)
        self.pair_draw = PairDraw.parse(pair_draw)
        self.name = f"ind_from_css({inner.name})"

    @property
    def draw_attempts(self) -> int:
        return 1 if self.pair_draw is PairDraw.INDEPENDENT else DISTINCT_DRAW_ATTEMPTS

    def phase1_bits(self, k):
        return self.inner.phase1_bits(k) + (1 + self.draw_attempts) * self.inner.space_bits(k)

    def phase2_bits(self, k):
        return self.inner.phase2_bits(k) + 1

    @staticmethod
    def abstained(state: StateInfo) -> bool:
        return state.data[:1] == _ABSTAINED

    def _second_index(self, i0: int, attempts, draw_bits: int) -> Optional[int]:
        for coins in attempts:
            j = coins.take(draw_bits)
            if self.pair_draw is PairDraw.INDEPENDENT or j != i0:
                return j
        return None

    def phase1(self, k, pk, oracle, coins):
        space_bits = self.inner.space_bits(k)
        inner_coins = coins.reserve(self.inner.phase1_bits(k), "inner/phase1")
        first = coins.reserve(space_bits, "pair/x0")
        attempts = [coins.reserve(space_bits, f"pair/x1/{n}") for n in range(self.draw_attempts)]

        space, state = self.inner.phase1(k, pk, oracle, inner_coins)
        if not isinstance(space, MessageSpace):
            raise InvalidAdversaryOutput("inner adversary must output a MessageSpace")
        if len(space) < 2:
            raise InvalidAdversaryOutput("message space needs at least two messages to draw a pair")
        if space.draw_bits > space_bits:
            raise InvalidAdversaryOutput("message space exceeds the declared draw bits")
        if not isinstance(state, StateInfo):
            raise InvalidAdversaryOutput("inner adversary state must be StateInfo")

        i0 = first.take(space.draw_bits)
        i1 = self._second_index(i0, attempts, space.draw_bits)
        flag = _DRAWN
        if i1 is None:
            # 大小为 2 的幂，i0 ^ 1 必在范围内且不等于 i0
            flag, i1 = _ABSTAINED, i0 ^ 1
        return space.elements[i0], space.elements[i1], StateInfo(flag + space.to_bytes() + state.data)

    def phase2(self, x0, x1, state, y, oracle, coins):
        inner_coins = coins.reserve(coins.remaining - 1, "inner/phase2")
        if self.abstained(state):
            return coins.bit()
        space, rest = MessageSpace.from_bytes(state.data[1:])
        claim = self.inner.phase2(space, StateInfo(rest), y, oracle, inner_coins)
        if not isinstance(claim, PartialInfoClaim):
            raise InvalidAdversaryOutput("inner adversary must output a PartialInfoClaim")
        f = resolve_partial_info(claim.f)
        hit0 = f.in_domain(x0) and f.verify(x0, claim.v) == 1
        hit1 = f.in_domain(x1) and f.verify(x1, claim.v) == 1

        if hit0 and not hit1:
            return 0
        if hit1 and not hit0:
            return 1
        if hit0 and hit1 and self.mode is TieBreakMode.LAST_MATCH:
            return 1
        return coins.bit()


def css_from_ind(adversary: IndAdversary) -> CssFromInd:
    return CssFromInd(adversary)


def ind_from_css(adversary: CssAdversary, mode=TieBreakMode.COINFLIP,
                 pair_draw=PairDraw.INDEPENDENT) -> IndFromCss:
    return IndFromCss(adversary, mode, pair_draw)


# ---------------------------------------------------------------------------
# 恒等式检查
# ---------------------------------------------------------------------------

Advantage = Union[ExactAdvantage, AdvantageEstimate]


@dataclass(frozen=True)
class ResidualReport:
    direction: Direction
    mode: str
    original: Union[Fraction, float]
    constructed: Union[Fraction, float]
    scale: int
    residual: Union[Fraction, float]
    raw_residual: Union[Fraction, float]
    tolerance: Union[Fraction, float]
    passed: bool

    def to_dict(self):
        render = fraction_text if self.mode == "exact" else float
        return {
            "direction": self.direction.value,
            "mode": self.mode,
            "original_adv": render(self.original),
            "constructed_adv": render(self.constructed),
            "scale": self.scale,
            "residual": render(self.residual),
            "raw_residual": render(self.raw_residual),
            "tolerance": render(self.tolerance),
            "verdict": "PASS" if self.passed else "FAIL",
        }


def _infer_direction(original: Advantage, constructed: Advantage) -> Direction:
    if original.game == "ind" and constructed.game != "ind":
        return Direction.CSS_FROM_IND
    if original.game != "ind" and constructed.game == "ind":
        return Direction.IND_FROM_CSS
    raise IncomparableConfigurations("cannot infer the reduction direction from two advantages of the same game")


def check_reduction_identity(original: Advantage, constructed: Advantage, direction=None) -> ResidualReport:
    """
    残差 = scale * constructed - original。
    精确值要求残差为 0；估计值要求 |残差| 不超过 scale * 构造侧半宽 + 原始侧半宽。
    """
    for field_name in ("scheme", "atk", "k"):
        if getattr(original, field_name) != getattr(constructed, field_name):
            raise IncomparableConfigurations(
                f"advantages differ in {field_name}: {getattr(original, field_name)!r} vs {getattr(constructed, field_name)!r}")
    direction = _infer_direction(original, constructed) if direction is None else Direction.parse(direction)
    scale = direction.scale

    if isinstance(original, ExactAdvantage) and isinstance(constructed, ExactAdvantage):
        residual = scale * constructed.adv - original.adv
        return ResidualReport(direction, "exact", original.adv, constructed.adv, scale, residual,
                              constructed.adv - original.adv, Fraction(0), residual == 0)
    if isinstance(original, AdvantageEstimate) and isinstance(constructed, AdvantageEstimate):
        residual = scale * constructed.adv_hat - original.adv_hat
        tolerance = scale * constructed.half_width + original.half_width
        return ResidualReport(direction, "estimate", original.adv_hat, constructed.adv_hat, scale, residual,
                              constructed.adv_hat - original.adv_hat, tolerance, abs(residual) <= tolerance)
    raise IncomparableConfigurations("cannot compare an exact advantage with an estimate")


def constructed_spec(spec: GameSpec, direction, sample: Optional[SampleAlgorithm] = None,
                     mode=TieBreakMode.COINFLIP, pair_draw=PairDraw.INDEPENDENT) -> GameSpec:
    """
    由原始实验配置生成构造后敌手的实验配置。
    正向需要 sample（均匀抽样）；反向沿用原始的攻击模型与方案。
    """
    direction = Direction.parse(direction)
    if direction is Direction.CSS_FROM_IND:
        if spec.game is not GameKind.IND:
            raise ConfigError("css_from_ind starts from an ind experiment")
        if sample is None:
            raise ConfigError("css_from_ind needs a sample algorithm for the constructed experiment")
        return GameSpec(GameKind.CSS, spec.scheme, css_from_ind(spec.adversary), spec.atk, sample,
                        spec.query_cap, spec.max_state_bytes, spec.max_value_bits)
    if spec.game is GameKind.IND:
        raise ConfigError("ind_from_css starts from a css experiment")
    return GameSpec(GameKind.IND, spec.scheme, ind_from_css(spec.adversary, mode, pair_draw), spec.atk, None,
                    spec.query_cap, spec.max_state_bytes, spec.max_value_bits)


@dataclass(frozen=True)
class ReductionOutcome:
    original: Advantage
    constructed: Advantage
    report: ResidualReport


@log_function()
def run_reduction(spec: GameSpec, direction, *, sample: Optional[SampleAlgorithm] = None, exact: bool = True,
                  n: int = None, delta: float = None, master_seed: int = 0,
                  mode=TieBreakMode.COINFLIP, pair_draw=PairDraw.INDEPENDENT) -> ReductionOutcome:
    """分别计算原始与构造后敌手的优势，再检查恒等式"""
    direction = Direction.parse(direction)
    built = constructed_spec(spec, direction, sample, mode, pair_draw)
    if exact:
        original = exact_advantage(spec)
        constructed = exact_advantage(built)
    else:
        if n is None or delta is None:
            raise ConfigError("estimated reduction checks need n and delta")
        original = estimate_advantage(spec, n, delta, master_seed)
        constructed = estimate_advantage(built, n, delta, master_seed)
    report = check_reduction_identity(original, constructed, direction)
    if report.passed:
        Logger.success(f"恒等式成立: {direction.value} 残差={report.to_dict()['residual']}")
    else:
        Logger.warning(f"恒等式不成立: {direction.value} 残差={report.to_dict()['residual']} "
                       f"容差={report.to_dict()['tolerance']}")
    return ReductionOutcome(original, constructed, report)
