"""Source-device simulation: correlation structure, inference, decoys."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qba.errors import ConfigError
from qba.lists import Alphabet, is_q_correlated, property1_check
from qba.qsd import (
    CHANNEL_ADVERSARIES,
    DistributionConfig,
    IdentityChannel,
    InterceptResendComputational,
    InterceptResendRandomBasis,
    check_decoys,
    distribute,
    infer_correlated_positions,
    sample_correlated_position,
    sample_uncorrelated_position,
)


def make_outcome(n=4, w=4, length=80, seed=0, **kw):
    cfg = DistributionConfig(n=n, w=w, list_length=length, seed=seed, **kw)
    return cfg, distribute(cfg)


class TestConfig:
    def test_rejects_small_alphabet(self):
        with pytest.raises(ConfigError):
            DistributionConfig(n=5, w=4, list_length=8)

    def test_rejects_degenerate_probability(self):
        with pytest.raises(ConfigError):
            DistributionConfig(n=3, w=4, list_length=8, correlation_prob=1.0)

    def test_default_decoy_budget_tracks_length(self):
        cfg = DistributionConfig(n=3, w=4, list_length=17)
        assert cfg.decoys_per_channel == 17


class TestPositionSamplers:
    def test_correlated_position_all_distinct(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            symbols, pair = sample_correlated_position(4, Alphabet(5), rng)
            assert len(set(symbols)) == 4
            assert pair[0] == symbols[0]
            assert pair[1] != pair[0]
            assert pair[1] not in symbols

    def test_uncorrelated_pair_agrees(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            symbols, pair = sample_uncorrelated_position(4, Alphabet(5), rng)
            assert pair == (symbols[0], symbols[0])


class TestDistribution:
    def test_lists_are_q_correlated(self):
        cfg, out = make_outcome()
        assert not out.aborted
        assert is_q_correlated(out.lists, out.true_q, cfg.alphabet)

    def test_commander_inference_is_exact(self):
        _, out = make_outcome(seed=5)
        assert out.inferred_q == out.true_q

    def test_inference_helper(self):
        assert infer_correlated_positions([(1, 1), (0, 2), (3, 3), (4, 0)]) == (2, 4)

    def test_seed_determinism(self):
        _, a = make_outcome(seed=11)
        _, b = make_outcome(seed=11)
        assert a.lists == b.lists and a.true_q == b.true_q

    def test_identity_channel_never_aborts(self):
        for seed in range(20):
            _, out = make_outcome(seed=seed)
            assert not out.aborted

    @given(st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_generated_sets_satisfy_property1(self, seed):
        cfg, out = make_outcome(n=3, w=4, length=40, seed=seed, decoy_count=0)
        qset = out.as_qcorrelated(cfg.alphabet)
        assert qset.is_valid()
        value = out.lists[0][out.true_q[0] - 1] if out.true_q else None
        if value is not None:
            assert property1_check(qset, 0, value)


class TestDecoys:
    def test_records_written_and_clean(self):
        _, out = make_outcome(seed=2, decoy_count=5)
        assert out.decoys_checked == 5 * 4  # one stream per channel
        assert out.decoy_mismatches == 0
        assert check_decoys(out.decoy_records)

    def test_zero_tolerance_abort(self):
        # random-basis intercept on every channel: detection is near-certain
        cfg = DistributionConfig(n=4, w=4, list_length=40, seed=7, decoy_count=20)
        out = distribute(cfg, InterceptResendRandomBasis())
        assert out.aborted and out.abort_reason == "decoy mismatch"
        assert out.lists is None and out.inferred_q is None
        assert out.decoy_mismatches > 0

    def test_computational_intercept_leaves_lists_untouched(self):
        # same rng draws with and without the adversary must give equal lists
        cfg = DistributionConfig(n=4, w=4, list_length=60, seed=9, decoy_count=0)
        clean = distribute(cfg)
        tapped = distribute(cfg, InterceptResendComputational())
        assert not tapped.aborted  # no decoys -> nothing can catch it
        assert tapped.lists == clean.lists

    def test_targeted_adversary_only_attacks_target(self):
        adv = InterceptResendComputational(targets=(2,))
        assert adv.attacks(2) and not adv.attacks(1)

    def test_catalog_names(self):
        assert set(CHANNEL_ADVERSARIES) == {
            "identity",
            "intercept-resend-computational",
            "intercept-resend-random-basis",
        }
        assert IdentityChannel().attacks(0) is False
