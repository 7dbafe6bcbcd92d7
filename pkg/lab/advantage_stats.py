"""
优势估计

蒙特卡洛估计（每臂双侧 Hoeffding 界）、精确优势（随机带枚举）、试验次数规划，
以及对安全参数的有限扫描（只给出表格，不下渐近结论）。
"""
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence, Tuple

import numpy as np

from common.log_decorator import log_perf
from common.logger import Logger
from config.config import Config
from lab.coins import check_seed, derive_trial_seed
from lab.exceptions import ConfigError, LabError, TrialFailure, UnsupportedSplitExperiment
from lab.games import GameSpec, TrialRecord, exact_trial_distribution, run_trial


def _check_delta(delta) -> float:
    delta = float(delta)
    if not 0 < delta < 1:
        raise ConfigError(f"delta must lie in (0, 1), got {delta}")
    return delta


def hoeffding_epsilon(n: int, delta: float) -> float:
    """n 次试验下单臂估计的双侧 Hoeffding 半宽"""
    if n < 1:
        raise ConfigError(f"n must be at least 1, got {n}")
    return math.sqrt(math.log(2 / _check_delta(delta)) / (2 * n))


def required_trials(epsilon: float, delta: float) -> int:
    """使单臂半宽不超过 epsilon 的最小 n"""
    epsilon = float(epsilon)
    if not 0 < epsilon < 1:
        raise ConfigError(f"epsilon must lie in (0, 1), got {epsilon}")
    return math.ceil(math.log(2 / _check_delta(delta)) / (2 * epsilon ** 2))


def fraction_text(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def _clamp(x: float) -> float:
    return max(-1.0, min(1.0, x))


@dataclass(frozen=True)
class AdvantageEstimate:
    scheme: str
    adversary: str
    game: str
    atk: str
    k: int
    n: int
    delta: float
    epsilon: float
    p1_hat: float
    p0_hat: float
    ones1: int
    ones0: int

    @property
    def adv_hat(self) -> float:
        return self.p1_hat - self.p0_hat

    @property
    def half_width(self) -> float:
        return 2 * self.epsilon

    @property
    def interval(self) -> Tuple[float, float]:
        return _clamp(self.adv_hat - self.half_width), _clamp(self.adv_hat + self.half_width)

    def to_dict(self):
        low, high = self.interval
        return {
            "mode": "estimate",
            "scheme": self.scheme,
            "adversary": self.adversary,
            "game": self.game,
            "atk": self.atk,
            "k": self.k,
            "n": self.n,
            "delta": self.delta,
            "epsilon": self.epsilon,
            "p1_hat": self.p1_hat,
            "p0_hat": self.p0_hat,
            "adv_hat": self.adv_hat,
            "interval": [low, high],
            "counts": {"b1": {"ones": self.ones1, "trials": self.n}, "b0": {"ones": self.ones0, "trials": self.n}},
        }


@dataclass(frozen=True)
class ExactAdvantage:
    scheme: str
    adversary: str
    game: str
    atk: str
    k: int
    p1: Fraction
    p0: Fraction
    coin_bits: int

    @property
    def adv(self) -> Fraction:
        return self.p1 - self.p0

    def to_dict(self):
        tapes = 1 << self.coin_bits
        return {
            "mode": "exact",
            "scheme": self.scheme,
            "adversary": self.adversary,
            "game": self.game,
            "atk": self.atk,
            "k": self.k,
            "p1": fraction_text(self.p1),
            "p0": fraction_text(self.p0),
            "adv": fraction_text(self.adv),
            "adv_float": float(self.adv),
            "coin_bits": self.coin_bits,
            "counts": {
                "b1": {"ones": int(self.p1 * tapes), "tapes": tapes},
                "b0": {"ones": int(self.p0 * tapes), "tapes": tapes},
            },
        }


def _labels(spec: GameSpec):
    return dict(scheme=spec.scheme.name, adversary=spec.adversary.name, game=spec.game.value,
                atk=spec.atk.value, k=spec.k)


@log_perf("优势估计")
def estimate_advantage(spec: GameSpec, n: int, delta: float, master_seed: int,
                       record_sink: Optional[Callable[[TrialRecord], None]] = None) -> AdvantageEstimate:
    """
    两臂各跑 n 次试验，种子由 master_seed 派生（两臂种子流不相交）。
    任何一次试验失败都会以 TrialFailure 终止估计，不会静默丢弃。
    """
    if not isinstance(n, int) or n < 1:
        raise ConfigError(f"n must be a positive integer, got {n!r}")
    delta = _check_delta(delta)
    check_seed(master_seed)
    Logger.info(f"开始估计: {spec.scheme.name}/{spec.adversary.name} {spec.game.value}-{spec.atk.value} "
                f"k={spec.k} n={n} delta={delta}")

    outcomes = np.zeros((2, n), dtype=np.int64)
    for arm in (1, 0):
        for i in range(n):
            seed = derive_trial_seed(master_seed, arm, i)
            try:
                record = run_trial(spec, arm, seed)
            except (ConfigError, UnsupportedSplitExperiment):
                raise
            except Exception as e:
                raise TrialFailure(arm, seed, e) from e
            outcomes[arm, i] = record.d
            if record_sink is not None:
                record_sink(record)

    ones = outcomes.sum(axis=1)
    frequencies = outcomes.mean(axis=1)
    estimate = AdvantageEstimate(
        n=n,
        delta=delta,
        epsilon=hoeffding_epsilon(n, delta),
        p1_hat=float(frequencies[1]),
        p0_hat=float(frequencies[0]),
        ones1=int(ones[1]),
        ones0=int(ones[0]),
        **_labels(spec),
    )
    Logger.info(f"估计完成: adv_hat={estimate.adv_hat:.4f} ± {estimate.half_width:.4f}")
    return estimate


def exact_advantage(spec: GameSpec, total_coin_bits: int = None) -> ExactAdvantage:
    p1 = exact_trial_distribution(spec, 1, total_coin_bits)
    p0 = exact_trial_distribution(spec, 0, total_coin_bits)
    result = ExactAdvantage(p1=p1, p0=p0, coin_bits=spec.layout().total, **_labels(spec))
    Logger.info(f"精确优势: {spec.scheme.name}/{spec.adversary.name} {spec.game.value}-{spec.atk.value} "
                f"k={spec.k} adv={fraction_text(result.adv)}")
    return result


@dataclass(frozen=True)
class NegligibilitySweep:
    """按 k 排序的估计表，以及与 k^-c 的逐项比较"""
    points: Tuple[Tuple[int, AdvantageEstimate], ...]
    c_values: Tuple[float, ...]

    @property
    def k_range(self) -> Tuple[int, int]:
        return self.points[0][0], self.points[-1][0]

    def rows(self):
        rows = []
        for k, estimate in self.points:
            abs_adv = abs(estimate.adv_hat)
            abs_upper = max(abs(end) for end in estimate.interval)
            for c in self.c_values:
                threshold = float(k) ** (-c)
                rows.append({
                    "k": k,
                    "c": c,
                    "adv_hat": estimate.adv_hat,
                    "abs_adv": abs_adv,
                    "abs_upper": abs_upper,
                    "threshold": threshold,
                    "below_threshold": abs_adv < threshold,
                    "upper_below_threshold": abs_upper < threshold,
                })
        return rows

    def to_dict(self):
        return {
            "c_values": list(self.c_values),
            "k_range": list(self.k_range),
            "points": [{"k": k, "estimate": estimate.to_dict()} for k, estimate in self.points],
            "rows": self.rows(),
        }


def negligibility_sweep(spec_family: Callable[[int], GameSpec], k_list: Sequence[int], n: int, delta: float,
                        master_seed: int, c_values: Iterable[float] = None) -> NegligibilitySweep:
    k_list = list(k_list)
    if not k_list:
        raise ConfigError("k_list must not be empty")
    if any(b <= a for a, b in zip(k_list, k_list[1:])):
        raise ConfigError(f"k_list must be strictly ascending, got {k_list}")
    if c_values is None:
        c_values = Config.setting("negligibility_exponents", [1, 2])
    c_values = tuple(c_values)
    if not c_values:
        raise ConfigError("at least one exponent c is required")

    points = []
    for k in k_list:
        try:
            spec = spec_family(k)
        except LabError:
            Logger.error(f"构造 k={k} 的实验失败")
            raise
        points.append((k, estimate_advantage(spec, n, delta, master_seed)))
    return NegligibilitySweep(tuple(points), c_values)
