import pytest
from hypothesis import given, strategies as st

from lab.coins import Coins
from lab.core_model import AttackModel, Ciphertext, Message
from lab.corpus import build_scheme
from lab.exceptions import InvalidAdversaryOutput, PhaseError, PolicyRefusal, QueryCapExceeded
from lab.oracle_gate import (OraclePolicy, Phase, RefusalReason, TranscriptEntry, advance_to_phase2, open_oracle,
                             query, transcript_complies)


def _keys(scheme, key=5):
    return scheme.keygen(Coins(key, scheme.keygen_bits))


class TestPolicies:
    def test_cpa_refuses_in_both_phases(self):
        scheme = build_scheme("identity", 4)
        handle = open_oracle(scheme, b"", "cpa")
        with pytest.raises(PolicyRefusal) as exc:
            query(handle, Ciphertext(3, 4))
        assert exc.value.reason is RefusalReason.NULL_ORACLE
        advance_to_phase2(handle, Ciphertext(1, 4))
        with pytest.raises(PolicyRefusal):
            query(handle, Ciphertext(3, 4))
        assert [entry.refusal for entry in handle.transcript] == [RefusalReason.NULL_ORACLE] * 2

    def test_cca1_answers_only_before_the_challenge(self):
        scheme = build_scheme("cca1_key_leak", 4)
        keys = _keys(scheme)
        handle = open_oracle(scheme, keys.sk, "cca1")
        assert query(handle, Ciphertext(0, 4)) == Message(5, 4)
        advance_to_phase2(handle, Ciphertext(9, 4))
        with pytest.raises(PolicyRefusal) as exc:
            query(handle, Ciphertext(0, 4))
        assert exc.value.reason is RefusalReason.NULL_ORACLE

    def test_cca2_bans_exactly_the_challenge(self):
        scheme = build_scheme("xor_malleable", 4)
        keys = _keys(scheme)
        challenge = scheme.encrypt(keys.pk, Message(0b1010, 4), Coins(3, 4))
        handle = open_oracle(scheme, keys.sk, AttackModel.CCA2, query_cap=1000)
        assert query(handle, challenge) == Message(0b1010, 4)
        advance_to_phase2(handle, challenge)

        for value in range(1 << 8):
            y = Ciphertext(value, 8)
            if y == challenge:
                with pytest.raises(PolicyRefusal) as exc:
                    query(handle, y)
                assert exc.value.reason is RefusalReason.CHALLENGE_BANNED
            else:
                assert query(handle, y) == scheme.decrypt(keys.sk, y)
        assert handle.count(Phase.PHASE2) == 256
        assert transcript_complies(handle.transcript, "cca2", challenge)

    def test_flipping_one_bit_of_a_malleable_challenge(self):
        scheme = build_scheme("xor_malleable", 4)
        keys = _keys(scheme)
        x = Message(0b0110, 4)
        challenge = scheme.encrypt(keys.pk, x, Coins(7, 4))
        handle = open_oracle(scheme, keys.sk, "cca2").advance_to_phase2(challenge)
        assert query(handle, challenge.flip(0)) == x.flip(0)

    @given(key=st.integers(0, 15), r=st.integers(0, 15), x=st.integers(0, 15), candidate=st.integers(0, (1 << 12) - 1))
    def test_table_scheme_ban_applies_only_to_the_challenge(self, key, r, x, candidate):
        scheme = build_scheme("ideal_table", 4)
        keys = _keys(scheme, key)
        challenge = scheme.encrypt(keys.pk, Message(x, 4), Coins(r, 4))
        handle = open_oracle(scheme, keys.sk, "cca2").advance_to_phase2(challenge)
        y = Ciphertext(candidate, 12)
        if y == challenge:
            with pytest.raises(PolicyRefusal):
                query(handle, y)
        else:
            assert query(handle, y) == scheme.decrypt(keys.sk, y)

    def test_ban_only_allowed_for_cca2_phase2(self):
        with pytest.raises(ValueError):
            OraclePolicy(AttackModel.CCA1, Phase.PHASE2, Ciphertext(0, 4))
        with pytest.raises(ValueError):
            OraclePolicy(AttackModel.CCA2, Phase.PHASE1, Ciphertext(0, 4))

    def test_split_branch_without_ciphertext_bans_nothing(self):
        scheme = build_scheme("identity", 4)
        handle = open_oracle(scheme, b"", "cca2").advance_to_phase2(None)
        assert handle.policy.banned_challenge is None
        assert query(handle, Ciphertext(2, 4)) == Message(2, 4)


class TestHandleLifecycle:
    def test_second_advance_is_a_phase_error(self):
        handle = open_oracle(build_scheme("identity", 4), b"", "cca2")
        handle.advance_to_phase2(None)
        with pytest.raises(PhaseError, match="already in phase 2"):
            handle.advance_to_phase2(None)

    def test_closed_handle_rejects_queries(self):
        handle = open_oracle(build_scheme("identity", 4), b"", "cca2")
        handle.close()
        with pytest.raises(PhaseError):
            query(handle, Ciphertext(0, 4))

    def test_query_cap_is_counted_per_phase(self):
        handle = open_oracle(build_scheme("identity", 4), b"", "cca2", query_cap=2)
        query(handle, Ciphertext(0, 4))
        query(handle, Ciphertext(1, 4))
        with pytest.raises(QueryCapExceeded):
            query(handle, Ciphertext(2, 4))
        assert len(handle.transcript) == 2
        handle.advance_to_phase2(Ciphertext(0, 4))
        assert query(handle, Ciphertext(2, 4)) == Message(2, 4)

    def test_only_ciphertexts_can_be_queried(self):
        handle = open_oracle(build_scheme("identity", 4), b"", "cca2")
        with pytest.raises(InvalidAdversaryOutput):
            query(handle, Message(0, 4))
        assert handle.transcript == ()


class TestTranscriptCompliance:
    def test_answer_in_a_null_phase_is_not_compliant(self):
        entry = TranscriptEntry(Phase.PHASE2, Ciphertext(1, 4), Message(1, 4), None)
        assert not transcript_complies([entry], "cca1")
        assert transcript_complies([entry], "cca2", Ciphertext(0, 4))

    def test_answered_challenge_is_not_compliant(self):
        challenge = Ciphertext(1, 4)
        entry = TranscriptEntry(Phase.PHASE2, challenge, Message(1, 4), None)
        assert not transcript_complies([entry], "cca2", challenge)

    def test_cap_is_checked(self):
        entries = [TranscriptEntry(Phase.PHASE1, Ciphertext(i, 4), None, RefusalReason.NULL_ORACLE) for i in range(3)]
        assert transcript_complies(entries, "cpa", query_cap=3)
        assert not transcript_complies(entries, "cpa", query_cap=2)


@pytest.mark.parametrize("scheme_id", ["identity", "ideal_table", "leaky_lsb", "xor_malleable", "cca1_key_leak"])
@pytest.mark.parametrize("atk", ["cpa", "cca1", "cca2"])
def test_every_ciphertext_against_every_policy(scheme_id, atk):
    scheme = build_scheme(scheme_id, 4)
    keys = _keys(scheme, 0)
    challenge = scheme.encrypt(keys.pk, Message(6, 4), Coins(0, scheme.coin_budget))
    handle = open_oracle(scheme, keys.sk, atk, query_cap=1 << 13)
    everything = [Ciphertext(v, challenge.width) for v in range(1 << challenge.width)]

    answered = {Phase.PHASE1: 0, Phase.PHASE2: 0}
    for phase in (Phase.PHASE1, Phase.PHASE2):
        if phase is Phase.PHASE2:
            handle.advance_to_phase2(challenge)
        for y in everything:
            try:
                assert query(handle, y) == scheme.decrypt(keys.sk, y)
                answered[phase] += 1
            except PolicyRefusal:
                pass

    total = len(everything)
    expected = {"cpa": (0, 0), "cca1": (total, 0), "cca2": (total, total - 1)}[atk]
    assert (answered[Phase.PHASE1], answered[Phase.PHASE2]) == expected
    assert transcript_complies(handle.transcript, atk, challenge, query_cap=1 << 13)
