"""
解密预言机闸门

按攻击模型控制两个阶段的解密预言机访问，并记录完整的查询记录（transcript）:
    CPA  : 两个阶段都是空预言机
    CCA1 : 第一阶段可解密，第二阶段为空预言机
    CCA2 : 两个阶段都可解密，第二阶段拒绝与挑战密文逐比特相同的查询

拒绝以 PolicyRefusal 的形式抛给敌手，敌手可以捕获后继续。
句柄有状态（阶段、计数、记录），只归单个实验所有。
"""
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Optional, Tuple

from config.config import Config
from lab.core_model import AttackModel, Ciphertext, DecryptResult, Scheme, render_result
from lab.exceptions import InvalidAdversaryOutput, PhaseError, PolicyRefusal, QueryCapExceeded


class Phase(Enum):
    PHASE1 = "phase1"
    PHASE2 = "phase2"


class RefusalReason(Enum):
    NULL_ORACLE = "null_oracle"
    CHALLENGE_BANNED = "challenge_banned"


@dataclass(frozen=True)
class OraclePolicy:
    atk: AttackModel
    phase: Phase
    banned_challenge: Optional[Ciphertext] = None
    query_cap: int = 65536

    def __post_init__(self):
        if self.query_cap < 1:
            raise ValueError("query cap must be positive")
        if self.banned_challenge is not None and (self.phase is not Phase.PHASE2 or self.atk is not AttackModel.CCA2):
            raise ValueError("only a CCA2 phase-2 policy may ban a challenge")

    @property
    def live(self) -> bool:
        """该阶段是否提供解密"""
        if self.atk is AttackModel.CCA2:
            return True
        return self.atk is AttackModel.CCA1 and self.phase is Phase.PHASE1

    def refusal_for(self, y: Ciphertext) -> Optional[RefusalReason]:
        if not self.live:
            return RefusalReason.NULL_ORACLE
        if self.banned_challenge is not None and y == self.banned_challenge:
            return RefusalReason.CHALLENGE_BANNED
        return None


@dataclass(frozen=True)
class TranscriptEntry:
    phase: Phase
    query: Ciphertext
    answer: Optional[DecryptResult] = None
    refusal: Optional[RefusalReason] = None

    @property
    def refused(self) -> bool:
        return self.refusal is not None

    def to_dict(self):
        return {
            "phase": self.phase.value,
            "query": str(self.query),
            "answer": None if self.refused else render_result(self.answer),
            "refusal": self.refusal.value if self.refused else None,
        }


OracleTranscript = Tuple[TranscriptEntry, ...]


class OracleHandle:
    """一次实验的预言机句柄"""

    def __init__(self, scheme: Scheme, sk: bytes, atk: AttackModel, query_cap: int = None):
        self._scheme = scheme
        self._sk = sk
        self._cap = int(query_cap if query_cap is not None else Config.setting("query_cap", 65536))
        self._policy = OraclePolicy(atk, Phase.PHASE1, None, self._cap)
        self._entries: List[TranscriptEntry] = []
        self._counts = {Phase.PHASE1: 0, Phase.PHASE2: 0}
        self._closed = False

    @property
    def policy(self) -> OraclePolicy:
        return self._policy

    @property
    def phase(self) -> Phase:
        return self._policy.phase

    @property
    def transcript(self) -> OracleTranscript:
        return tuple(self._entries)

    def count(self, phase: Phase = None) -> int:
        return self._counts[phase or self.phase]

    def query(self, y: Ciphertext) -> DecryptResult:
        if self._closed:
            raise PhaseError("oracle handle is closed")
        if not isinstance(y, Ciphertext):
            raise InvalidAdversaryOutput(f"oracle queries must be ciphertexts, got {type(y).__name__}")
        phase = self.phase
        if self._counts[phase] >= self._cap:
            raise QueryCapExceeded(phase, self._cap)
        self._counts[phase] += 1

        reason = self._policy.refusal_for(y)
        if reason is not None:
            self._entries.append(TranscriptEntry(phase, y, None, reason))
            raise PolicyRefusal(reason)

        answer = self._scheme.decrypt(self._sk, y)
        self._entries.append(TranscriptEntry(phase, y, answer, None))
        return answer

    def advance_to_phase2(self, challenge: Optional[Ciphertext]) -> "OracleHandle":
        """
        进入第二阶段。CCA2 下 challenge 成为被禁止的查询；
        challenge 为 None（拆分实验 b=0 分支没有密文）时不禁止任何查询。
        """
        if self.phase is Phase.PHASE2:
            raise PhaseError("already in phase 2")
        banned = challenge if self._policy.atk is AttackModel.CCA2 else None
        self._policy = OraclePolicy(self._policy.atk, Phase.PHASE2, banned, self._cap)
        return self

    def close(self):
        self._closed = True


def open_oracle(scheme: Scheme, sk: bytes, atk, query_cap: int = None) -> OracleHandle:
    return OracleHandle(scheme, sk, AttackModel.parse(atk), query_cap)


def advance_to_phase2(handle: OracleHandle, challenge: Optional[Ciphertext]) -> OracleHandle:
    return handle.advance_to_phase2(challenge)


def query(handle: OracleHandle, y: Ciphertext) -> DecryptResult:
    return handle.query(y)


def transcript_complies(transcript: Iterable[TranscriptEntry], atk, challenge: Optional[Ciphertext] = None,
                        query_cap: int = None) -> bool:
    """事后检查一份查询记录是否符合攻击模型的访问规则"""
    atk = AttackModel.parse(atk)
    counts = {Phase.PHASE1: 0, Phase.PHASE2: 0}
    for entry in transcript:
        counts[entry.phase] += 1
        banned = challenge if entry.phase is Phase.PHASE2 and atk is AttackModel.CCA2 else None
        expected = OraclePolicy(atk, entry.phase, banned).refusal_for(entry.query)
        if entry.refusal is not expected:
            return False
        if not entry.refused and entry.answer is None:
            return False
    if query_cap is not None and max(counts.values()) > query_cap:
        return False
    return True
