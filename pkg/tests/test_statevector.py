"""Exact statevector oracles: Born rule, phases, decoy match probabilities."""

import numpy as np
import pytest

from qba.errors import TooLarge
from qba.statevector import (
    QuditState,
    build_type3_statevector,
    decoy_match_probability,
    fourier_state,
    identical_pair_state,
    measurement_distribution,
    sample_type3_outcome,
    total_variation_distance,
    uniform_state,
)


class TestStates:
    def test_uniform_state_distribution(self):
        dist = measurement_distribution(uniform_state(5))
        assert len(dist) == 5
        for p in dist.values():
            assert p == pytest.approx(0.2, abs=1e-12)

    def test_identical_pair_always_agrees(self):
        dist = measurement_distribution(identical_pair_state(4))
        assert set(dist) == {(a, a) for a in range(4)}
        for p in dist.values():
            assert p == pytest.approx(0.25, abs=1e-12)

    def test_type3_offsets_shift_outcomes(self):
        dist = measurement_distribution(build_type3_statevector(3, 3, (1, 2)))
        assert set(dist) == {(j, (j + 1) % 3, (j + 2) % 3) for j in range(3)}

    def test_normalization_enforced(self):
        bad = np.zeros(4, dtype=np.complex128)
        bad[0] = 0.5
        with pytest.raises(ValueError):
            QuditState(2, 2, bad)

    def test_offset_count_checked(self):
        with pytest.raises(ValueError):
            build_type3_statevector(3, 3, (1,))

    def test_dense_bound(self):
        with pytest.raises(TooLarge):
            build_type3_statevector(50, 4, (1, 2, 3))


class TestPhases:
    @pytest.mark.parametrize("s", [0, 1, 2])
    def test_phase_invisible_in_computational_basis(self, s):
        base = measurement_distribution(build_type3_statevector(4, 2, (2,), 0))
        phased = measurement_distribution(build_type3_statevector(4, 2, (2,), s))
        assert total_variation_distance(base, phased) < 1e-12

    def test_phased_states_are_orthogonal(self):
        # distinct phase parameters give orthogonal states for full-cycle offsets
        a = build_type3_statevector(3, 2, (1,), 0).amplitudes
        b = build_type3_statevector(3, 2, (1,), 1).amplitudes
        assert abs(np.vdot(a, b)) < 1e-12


class TestFourier:
    def test_fourier_state_unbiased(self):
        for symbol in range(4):
            probs = np.abs(fourier_state(4, symbol)) ** 2
            np.testing.assert_allclose(probs, 0.25, atol=1e-12)

    def test_match_probability_same_basis(self):
        assert decoy_match_probability(5, "computational", "computational") == pytest.approx(1.0)
        assert decoy_match_probability(5, "fourier", "fourier") == pytest.approx(1.0)

    @pytest.mark.parametrize("d", [2, 3, 5])
    def test_match_probability_cross_basis_is_one_over_d(self, d):
        # wrong-basis intercept-resend survives the check with probability 1/d
        assert decoy_match_probability(d, "fourier", "computational") == pytest.approx(
            1.0 / d, abs=1e-12
        )
        assert decoy_match_probability(d, "computational", "fourier") == pytest.approx(
            1.0 / d, abs=1e-12
        )


class TestSampler:
    def test_single_sample_obeys_offsets(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            out = sample_type3_outcome(5, (2, 4), rng)
            assert out[1] == (out[0] + 2) % 5
            assert out[2] == (out[0] + 4) % 5

    def test_batch_matches_oracle_support(self):
        rng = np.random.default_rng(1)
        batch = sample_type3_outcome(3, (1, 2), rng, size=2000)
        seen = {tuple(int(x) for x in row) for row in batch}
        oracle = set(measurement_distribution(build_type3_statevector(3, 3, (1, 2))))
        assert seen == oracle


class TestTotalVariation:
    def test_zero_for_identical(self):
        d = {(0,): 0.5, (1,): 0.5}
        assert total_variation_distance(d, dict(d)) == 0.0

    def test_disjoint_is_one(self):
        assert total_variation_distance({(0,): 1.0}, {(1,): 1.0}) == pytest.approx(1.0)
