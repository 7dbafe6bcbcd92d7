from fractions import Fraction

import pytest

from config.config import Config
from lab.coins import derive_trial_seed
from lab.core_model import (IndAdversary, CssAdversary, Message, MessageSpace, PartialInfoClaim,
                            PartialInfoFunction, SampleAlgorithm, StateInfo, Value)
from lab.corpus import build_adversary, build_sampler, build_scheme
from lab.exceptions import (ConfigError, ContractViolation, EnumerationInfeasible, InvalidAdversaryOutput,
                            UnsupportedSplitExperiment)
from lab.games import (GameKind, GameSpec, exact_trial_distribution, run_css_split_trial, run_css_trial,
                       run_ind_trial, run_trial)
from lab.oracle_gate import transcript_complies


class _UnequalPair(IndAdversary):
    name = "unequal_pair"

    def phase1(self, k, pk, oracle, coins):
        return Message(0, k), Message(0, k + 1), StateInfo()

    def phase2(self, x0, x1, state, y, oracle, coins):
        return 0


class _NotABit(IndAdversary):
    name = "not_a_bit"

    def phase1(self, k, pk, oracle, coins):
        return Message(0, k), Message(1, k), StateInfo()

    def phase2(self, x0, x1, state, y, oracle, coins):
        return 2


class _ForgedFunction(CssAdversary):
    name = "forged_function"

    def phase1(self, k, pk, oracle, coins):
        return MessageSpace.full(k), StateInfo()

    def phase2(self, space, state, y, oracle, coins):
        return PartialInfoClaim(Value(0, 1), PartialInfoFunction("always_right", ()))


class _OutsideSampler(SampleAlgorithm):
    name = "outside_sampler"

    def sample(self, space, state, coins):
        return Message(0, space.width + 1)


def _ind(scheme, adversary, atk="cpa", k=4):
    return GameSpec("ind", build_scheme(scheme, k), build_adversary(adversary), atk)


def _css(scheme, adversary, game="css", sampler="uniform_sampler", k=4):
    return GameSpec(game, build_scheme(scheme, k), build_adversary(adversary), "cpa", build_sampler(sampler))


class TestGameSpec:
    def test_adversary_kind_must_match_game(self):
        with pytest.raises(ConfigError):
            GameSpec("ind", build_scheme("identity", 4), build_adversary("lsb"), "cpa")
        with pytest.raises(ConfigError):
            GameSpec("css", build_scheme("identity", 4), build_adversary("replay"), "cpa", build_sampler())

    def test_css_needs_a_sampler(self):
        with pytest.raises(ConfigError):
            GameSpec("css", build_scheme("leaky_lsb", 4), build_adversary("lsb"), "cpa")

    def test_unknown_game(self):
        with pytest.raises(ConfigError):
            GameKind.parse("sem")

    def test_css_layout_orders_segments(self):
        layout = _css("leaky_lsb", "lsb").layout()
        assert layout.to_dict() == {"keygen": 3, "phase1": 0, "draw": 4, "encrypt": 3, "sample": 4, "phase2": 0}
        assert layout.total == 14

    def test_adversarial_sampler_uses_no_coins(self):
        assert _css("leaky_lsb", "lsb", sampler="adversarial").layout().sample == 0


class TestTrials:
    def test_same_seed_gives_the_same_record(self, corpus_spec):
        spec = corpus_spec("ind", "xor_malleable", "bitflip", atk="cca2")
        seed = derive_trial_seed(3, 1, 0)
        assert run_ind_trial(spec, 1, seed) == run_ind_trial(spec, 1, seed)

    @pytest.mark.parametrize("b", [0, 1])
    def test_identity_scheme_is_replayed(self, b):
        record = run_ind_trial(_ind("identity", "replay"), b, 99)
        assert record.d == b
        assert record.challenge.value == record.encrypted.value

    def test_css_always_encrypts_x1(self):
        spec = _css("leaky_lsb", "lsb")
        for i in range(20):
            record = run_css_trial(spec, 0, derive_trial_seed(1, 0, i))
            assert record.encrypted == record.x1
            assert record.challenge.bit(0) == record.x1.bit(0)
            assert record.claim.v == Value(record.x1.bit(0), 1)

    def test_lsb_extractor_wins_when_scored_on_x1(self):
        spec = _css("leaky_lsb", "lsb")
        assert all(run_trial(spec, 1, seed).d == 1 for seed in range(30))

    def test_transcripts_follow_the_attack_model(self):
        spec = _ind("xor_malleable", "bitflip", atk="cca1")
        record = run_ind_trial(spec, 1, 5)
        assert len(record.transcript) == 1
        assert record.transcript[0].refused
        assert transcript_complies(record.transcript, "cca1", record.challenge)

    def test_challenge_bit_must_be_a_bit(self):
        with pytest.raises(ValueError):
            run_ind_trial(_ind("identity", "replay"), 2, 0)


class TestSplitExperiment:
    def test_adversary_needing_a_ciphertext_is_unsupported(self):
        spec = _css("leaky_lsb", "lsb", game="css_split")
        with pytest.raises(UnsupportedSplitExperiment):
            run_css_split_trial(spec, 1, 0)
        with pytest.raises(UnsupportedSplitExperiment):
            exact_trial_distribution(spec, 0)

    def test_b0_branch_has_no_ciphertext(self):
        record = run_css_split_trial(_css("leaky_lsb", "constant", game="css_split"), 0, 4)
        assert record.challenge is None
        assert record.encrypted is None

    @pytest.mark.parametrize("b", [0, 1])
    def test_constant_adversary_scores_the_same_in_both_forms(self, b):
        unified = exact_trial_distribution(_css("leaky_lsb", "constant"), b)
        split = exact_trial_distribution(_css("leaky_lsb", "constant", game="css_split"), b)
        assert unified == split == 1


class TestExactDistribution:
    def test_leaky_lsb_probabilities(self):
        spec = _css("leaky_lsb", "lsb")
        assert exact_trial_distribution(spec, 1) == 1
        assert exact_trial_distribution(spec, 0) == Fraction(1, 2)

    def test_ideal_table_hides_the_message_from_replay(self):
        spec = _ind("ideal_table", "replay")
        assert exact_trial_distribution(spec, 1) == exact_trial_distribution(spec, 0) == Fraction(1, 2)

    def test_extra_tape_bits_do_not_change_the_result(self):
        spec = _ind("identity", "replay")
        assert exact_trial_distribution(spec, 1, total_coin_bits=6) == 1

    def test_tape_shorter_than_budget(self):
        spec = _ind("ideal_table", "replay")
        with pytest.raises(EnumerationInfeasible) as exc:
            exact_trial_distribution(spec, 1, total_coin_bits=5)
        assert (exc.value.required_bits, exc.value.limit) == (9, 5)

    def test_enumeration_limit(self):
        spec = _css("leaky_lsb", "lsb", k=8)
        with pytest.raises(EnumerationInfeasible) as exc:
            exact_trial_distribution(spec, 1)
        assert exc.value.required_bits == 30
        assert exc.value.limit == Config.setting("max_enumeration_bits")


class TestContractChecks:
    def test_unequal_messages(self):
        spec = GameSpec("ind", build_scheme("identity", 4), _UnequalPair(), "cpa")
        with pytest.raises(InvalidAdversaryOutput, match="unequal length"):
            run_ind_trial(spec, 0, 0)

    def test_non_bit_output(self):
        spec = GameSpec("ind", build_scheme("identity", 4), _NotABit(), "cpa")
        with pytest.raises(InvalidAdversaryOutput):
            run_ind_trial(spec, 0, 0)

    def test_claims_must_use_library_functions(self):
        spec = GameSpec("css", build_scheme("leaky_lsb", 4), _ForgedFunction(), "cpa", build_sampler())
        with pytest.raises(InvalidAdversaryOutput):
            run_css_trial(spec, 1, 0)

    def test_sampler_must_stay_inside_the_space(self):
        spec = GameSpec("css", build_scheme("leaky_lsb", 4), build_adversary("lsb"), "cpa", _OutsideSampler())
        with pytest.raises(ContractViolation):
            run_css_trial(spec, 0, 0)
