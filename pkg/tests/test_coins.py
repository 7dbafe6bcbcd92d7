import pytest
from hypothesis import given, strategies as st

from lab.coins import (SEED_LIMIT, CoinTape, Coins, TapeLayout, check_seed, derive_trial_seed, expand_tape)
from lab.exceptions import CoinBudgetExceeded, ConfigError


class TestCoins:
    def test_bits_come_out_most_significant_first(self):
        coins = Coins(0b1011, 4)
        assert coins.take(2) == 0b10
        assert coins.bit() == 1
        assert coins.bit() == 1
        assert coins.remaining == 0

    def test_reading_past_the_budget_fails(self):
        coins = Coins(0b101, 3, "encrypt")
        coins.take(2)
        with pytest.raises(CoinBudgetExceeded):
            coins.take(2)

    def test_reserve_hands_out_a_child_reader(self):
        coins = Coins(0b110101, 6)
        child = coins.reserve(4, "inner")
        assert child.budget == 4
        assert child.take(4) == 0b1101
        assert coins.take(2) == 0b01

    def test_empty_coins_only_give_zero_bits(self):
        coins = Coins.empty()
        assert coins.take(0) == 0
        with pytest.raises(CoinBudgetExceeded):
            coins.bit()

    def test_value_must_fit_budget(self):
        with pytest.raises(ValueError):
            Coins(8, 3)

    @given(width=st.integers(min_value=1, max_value=40), data=st.data())
    def test_splitting_reads_reassemble_the_value(self, width, data):
        value = data.draw(st.integers(min_value=0, max_value=(1 << width) - 1))
        cut = data.draw(st.integers(min_value=0, max_value=width))
        coins = Coins(value, width)
        high = coins.take(cut)
        low = coins.take(width - cut)
        assert (high << (width - cut)) | low == value


class TestTapeLayout:
    def test_total_and_segment_order(self):
        layout = TapeLayout(keygen=3, draw=4, encrypt=3, sample=4)
        assert layout.total == 14
        assert list(layout.to_dict()) == ["keygen", "phase1", "draw", "encrypt", "sample", "phase2"]

    def test_negative_width_is_rejected(self):
        with pytest.raises(ValueError):
            TapeLayout(keygen=-1)

    def test_tape_segments_are_disjoint_slices(self):
        layout = TapeLayout(keygen=2, encrypt=3, phase2=1)
        tape = CoinTape(0b10_110_1, layout)
        assert tape.segment("keygen").take(2) == 0b10
        assert tape.segment("encrypt").take(3) == 0b110
        assert tape.segment("phase2").bit() == 1
        assert tape.segment("draw").budget == 0


class TestSeedDerivation:
    @pytest.mark.parametrize("seed", [-1, SEED_LIMIT, True, 1.5])
    def test_invalid_seeds(self, seed):
        with pytest.raises(ConfigError):
            check_seed(seed)

    def test_derivation_is_deterministic(self):
        assert derive_trial_seed(7, 1, 3) == derive_trial_seed(7, 1, 3)
        assert 0 <= derive_trial_seed(7, 1, 3) < SEED_LIMIT

    def test_arms_use_disjoint_seed_streams(self):
        ones = {derive_trial_seed(11, 1, i) for i in range(500)}
        zeros = {derive_trial_seed(11, 0, i) for i in range(500)}
        assert len(ones) == 500
        assert not ones & zeros

    def test_arm_must_be_a_bit(self):
        with pytest.raises(ConfigError):
            derive_trial_seed(0, 2, 0)

    def test_short_tapes_are_prefixes_of_long_tapes(self):
        long_tape = expand_tape(42, 300)
        assert expand_tape(42, 10) == long_tape >> 290
        assert long_tape < 1 << 300

    def test_from_seed_matches_expand_tape(self):
        layout = TapeLayout(keygen=4, encrypt=4)
        assert CoinTape.from_seed(5, layout).value == expand_tape(5, 8)
