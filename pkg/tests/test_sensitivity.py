import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpvote import (
    VoteHistogram,
    argmax,
    brute_force_local,
    brute_force_smooth,
    enumerate_neighbors,
    gap,
    global_sensitivity,
    is_distance_n,
    local_sensitivity,
    smooth_sensitivity,
)

histograms = st.lists(st.integers(0, 30), min_size=2, max_size=8).filter(lambda c: sum(c) >= 1)
boost_values = st.sampled_from([0.0, 1.0, 9.0, 100.0])


class TestGlobalSensitivity:
    @pytest.mark.parametrize("c,expected", [(0.0, 1.0), (10.0, 11.0), (1e100, 1e100)])
    def test_examples(self, c, expected):
        assert global_sensitivity(c) == expected

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            global_sensitivity(-0.5)


class TestLocalSensitivity:
    def test_wide_margin(self):
        est = local_sensitivity(VoteHistogram([10, 2, 2]), 5.0)
        assert est.value == 1.0
        assert est.kind == "local"
        assert est.distance_class == 2

    def test_narrow_margin(self):
        est = local_sensitivity(VoteHistogram([5, 4, 0]), 5.0)
        assert est.value == 6.0
        assert est.distance_class == 0

    def test_zero_boost_collapses_branches(self):
        assert local_sensitivity(VoteHistogram([7, 5, 0]), 0.0).value == 1.0

    def test_margin_two_protected_by_tie_rule(self):
        # moving a vote from the winner only creates a tie, which the
        # lowest-index rule resolves back to the winner
        assert local_sensitivity(VoteHistogram([5, 3]), 3.0).value == 1.0
        assert brute_force_local(VoteHistogram([5, 3]), 3.0) == 1.0

    def test_margin_two_flippable_when_runner_up_precedes(self):
        assert local_sensitivity(VoteHistogram([3, 5]), 3.0).value == 4.0
        assert brute_force_local(VoteHistogram([3, 5]), 3.0) == 4.0


class TestSmoothSensitivity:
    def test_strong_consensus_small_branch(self):
        est = smooth_sensitivity(VoteHistogram([10, 2, 2]), 1e100, 1.0)
        assert est.value == pytest.approx(math.exp(-1), rel=1e-12)
        assert est.distance_class == 3

    def test_weak_consensus_large_branch(self):
        est = smooth_sensitivity(VoteHistogram([5, 4, 0]), 9.0, 1.0)
        assert est.value == pytest.approx(10 * math.exp(-1), rel=1e-12)

    def test_gap_three_boundary_takes_large_branch(self):
        est = smooth_sensitivity(VoteHistogram([6, 3, 0]), 9.0, 1.0)
        assert est.value == pytest.approx(10 * math.exp(-1), rel=1e-12)
        assert est.distance_class == 0

    def test_gap_four_with_flippable_neighbor(self):
        # [2,6] clears the distance-3 threshold, but its neighbor [3,5] can be
        # flipped by a further move, so the radius-1 scan keeps the big branch
        est = smooth_sensitivity(VoteHistogram([2, 6]), 9.0, 1.0)
        assert est.distance_class == 3
        assert est.value == pytest.approx(10 * math.exp(-1), rel=1e-12)
        assert est.value == brute_force_smooth(VoteHistogram([2, 6]), 9.0, 1.0)

    def test_monotone_in_beta(self):
        v = VoteHistogram([5, 4, 0])
        values = [smooth_sensitivity(v, 9.0, b).value for b in (0.5, 1.0, 2.0, 4.0)]
        assert values == sorted(values, reverse=True)

    def test_rejects_non_positive_beta(self):
        with pytest.raises(ValueError):
            smooth_sensitivity(VoteHistogram([5, 4]), 1.0, 0.0)


class TestEnumerateNeighbors:
    def test_two_bins_one_empty(self):
        got = {h.counts for h in enumerate_neighbors(VoteHistogram([2, 0]))}
        assert got == {(2, 0), (1, 1)}

    def test_two_bins_balanced(self):
        got = {h.counts for h in enumerate_neighbors(VoteHistogram([1, 1]))}
        assert got == {(1, 1), (2, 0), (0, 2)}

    def test_count_formula(self):
        # one move per ordered pair of (nonempty source, other destination), plus itself
        neighbors = enumerate_neighbors(VoteHistogram([3, 2, 1]))
        assert len(neighbors) == 7

    @given(histograms)
    def test_every_neighbor_preserves_total(self, counts):
        v = VoteHistogram(counts)
        for w in enumerate_neighbors(v):
            assert w.teacher_count == v.teacher_count
            assert max(abs(a - b) for a, b in zip(w.counts, v.counts)) <= 1


class TestBruteForceLocal:
    @pytest.mark.parametrize("counts,c,expected", [
        ([10, 2, 2], 5.0, 1.0),
        ([5, 4, 0], 5.0, 6.0),
        ([2, 2], 3.0, 4.0),  # tied winner relocates the boost under one move
    ])
    def test_examples(self, counts, c, expected):
        assert brute_force_local(VoteHistogram(counts), c) == expected


class TestOracleAgreement:
    @settings(max_examples=300, deadline=None)
    @given(histograms, boost_values)
    def test_local_matches_brute_force(self, counts, c):
        v = VoteHistogram(counts)
        assert local_sensitivity(v, c).value == brute_force_local(v, c)

    @settings(max_examples=200, deadline=None)
    @given(histograms, boost_values, st.sampled_from([0.5, 1.0, 2.0]))
    def test_smooth_matches_brute_force(self, counts, c, beta):
        v = VoteHistogram(counts)
        assert smooth_sensitivity(v, c, beta).value == brute_force_smooth(v, c, beta)

    def test_seeded_sweep(self):
        gen = np.random.default_rng(20240817)
        for i in range(500):
            num_classes = int(gen.integers(2, 9))
            teachers = int(gen.integers(1, 65))
            v = VoteHistogram(gen.multinomial(teachers, gen.dirichlet(np.ones(num_classes))))
            c = (0.0, 1.0, 9.0, 100.0)[i % 4]
            beta = (0.5, 1.0, 2.0)[i % 3]
            assert local_sensitivity(v, c).value == brute_force_local(v, c)
            assert smooth_sensitivity(v, c, beta).value == brute_force_smooth(v, c, beta)


class TestDominance:
    @settings(max_examples=200, deadline=None)
    @given(histograms, boost_values, st.sampled_from([0.5, 1.0, 2.0]))
    def test_local_below_global_and_smooth_below_worst_neighbor(self, counts, c, beta):
        v = VoteHistogram(counts)
        assert local_sensitivity(v, c).value <= global_sensitivity(c)
        assert smooth_sensitivity(v, c, beta).value * math.exp(beta) <= 1.0 + c + 1e-9


class TestNeighborhoodStructure:
    def test_distance_four_neighbors_are_all_distance_two(self):
        gen = np.random.default_rng(66)
        checked = 0
        while checked < 100:
            counts = gen.multinomial(40, gen.dirichlet(np.ones(5)))
            counts[int(np.argmax(counts))] += 5
            v = VoteHistogram(counts)
            if not is_distance_n(v, 4):
                continue
            checked += 1
            for w in enumerate_neighbors(v):
                assert is_distance_n(w, 2)

    def test_distance_three_neighbors_keep_argmax_and_margin(self):
        gen = np.random.default_rng(67)
        checked = 0
        while checked < 100:
            counts = gen.multinomial(40, gen.dirichlet(np.ones(5)))
            counts[int(np.argmax(counts))] += 4
            v = VoteHistogram(counts)
            if not is_distance_n(v, 3):
                continue
            checked += 1
            for w in enumerate_neighbors(v):
                assert argmax(w) == argmax(v)
                assert gap(w) >= 2
