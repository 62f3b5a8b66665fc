"""Forgery model vs. an independent exact enumeration.

The reference oracle below recomputes the optimal-forgery success
probability from first principles with Fractions and itertools; no code is
shared with qba.forgery beyond the problem statement.
"""

import itertools
from fractions import Fraction

import numpy as np
import pytest

from qba.errors import TooLarge
from qba.forgery import (
    best_forgery,
    forgery_oracle,
    per_position_pass_probability,
    posterior_tables,
)
from qba.lists import Alphabet


def _falling(d, n):
    out = 1
    for k in range(n):
        out *= d - k
    return out


def naive_forgery_probability(n, w, list_length, support_size, cp=Fraction(1, 2)):
    """Exact optimal-forgery success probability by brute force.

    Position model: with probability cp the n symbols at a position are a
    uniform ordered injection into {0..w}; otherwise i.i.d. uniform.  The
    adversary sees n-1 symbols per position and plays the best (P, v).
    """
    d = w + 1
    inj = _falling(d, n)

    def joint(view, hidden):
        # P(view symbols, hidden symbol) at one position
        corr = Fraction(0)
        if len(set(view)) == n - 1 and hidden not in view:
            corr = cp / inj
        return corr + (1 - cp) * Fraction(1, d**n)

    views = list(itertools.product(range(d), repeat=n - 1))
    view_prob = {}
    avoid = {}  # avoid[(view, v)] = P(hidden != v | view)
    for u in views:
        marg = sum(joint(u, x) for x in range(d))
        view_prob[u] = marg
        for v in range(d):
            avoid[u, v] = 1 - joint(u, v) / marg

    total = Fraction(0)
    for combo in itertools.product(views, repeat=list_length):
        weight = Fraction(1)
        for u in combo:
            weight *= view_prob[u]
        best = Fraction(0)
        for v in range(d):
            qs = sorted((avoid[u, v] for u in combo), reverse=True)
            score = Fraction(1)
            for q in qs[:support_size]:
                score *= q
            best = max(best, score)
        total += weight * best
    return total


AL3 = Alphabet(3)


class TestOracleAgainstNaive:
    def test_single_position(self):
        exact = naive_forgery_probability(3, 3, 1, 1)
        assert exact == Fraction(7, 8)
        assert forgery_oracle(3, AL3, 1, 1) == pytest.approx(float(exact), abs=1e-12)

    def test_two_positions_full_support(self):
        exact = naive_forgery_probability(3, 3, 2, 2)
        assert forgery_oracle(3, AL3, 2, 2) == pytest.approx(float(exact), abs=1e-12)
        assert forgery_oracle(3, AL3, 2, 2) == pytest.approx(0.7330729166666663)

    def test_three_positions_best_of(self):
        exact = naive_forgery_probability(3, 3, 3, 1)
        assert forgery_oracle(3, AL3, 3, 1) == pytest.approx(float(exact), abs=1e-12)
        assert forgery_oracle(3, AL3, 3, 1) == pytest.approx(0.8925781249999993)

    def test_four_party_single_position(self):
        exact = naive_forgery_probability(4, 4, 1, 1)
        assert forgery_oracle(4, Alphabet(4), 1, 1) == pytest.approx(
            float(exact), abs=1e-12
        )

    def test_uncorrelated_limit(self):
        # cp = 0: the hidden symbol is uniform, best avoid prob is 1 - 1/d
        exact = naive_forgery_probability(3, 3, 1, 1, cp=Fraction(0))
        assert exact == Fraction(3, 4)
        assert forgery_oracle(3, AL3, 1, 1, correlation_prob=0.0) == pytest.approx(
            0.75, abs=1e-12
        )


class TestPosteriorTables:
    def test_rows_normalize(self):
        views = np.indices((4, 4)).reshape(2, -1).T  # all views for n=3, d=4
        view_prob, post = posterior_tables(views, 3, 4)
        assert view_prob.sum() == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(post.sum(axis=-1), 1.0, atol=1e-12)

    def test_distinct_view_sharpens_posterior(self):
        # seen symbols are less likely underneath when the view is distinct
        _, post = posterior_tables(np.array([[0, 1]]), 3, 4)
        assert post[0, 0] < post[0, 2]
        assert post[0, 2] == post[0, 3]


class TestBestForgery:
    def test_decision_is_deterministic(self):
        view = ((0, 1, 2), (1, 2, 3))
        a = best_forgery(view, 3, 4, 2)
        b = best_forgery(view, 3, 4, 2)
        assert a == b
        assert len(a.positions) == 2
        assert 0.0 < a.predicted_success <= 1.0

    def test_degenerate_support(self):
        assert best_forgery(((0,),), 2, 4, 0).predicted_success == 0.0
        assert best_forgery(((0,),), 2, 4, 5).predicted_success == 0.0


class TestBounds:
    def test_support_larger_than_length_is_zero(self):
        assert forgery_oracle(3, AL3, 2, 3) == 0.0

    def test_enumeration_bound_raises(self):
        with pytest.raises(TooLarge):
            forgery_oracle(5, Alphabet(7), 12, 6)

    def test_per_position_helper(self):
        assert per_position_pass_probability(3, AL3) == pytest.approx(7 / 8)
