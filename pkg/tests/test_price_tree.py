"""Bins, parameter solving, and tree structure, against worked examples."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from auctionlab.errors import DomainError, InvariantViolationError
from auctionlab.price_tree import (
    EVEN,
    ODD,
    Bins,
    Params,
    belongs,
    build_bins,
    build_modified_tree,
    build_price_tree,
    canonical_vectors,
    ceil_log,
    solve_parameters,
    strongly_belongs,
    validate_parameter_equations,
)


class TestSolveParameters:
    def test_psi_ratio_million(self):
        params = solve_parameters(1, 10**6)
        assert (params.alpha, params.beta, params.gamma) == (2, 2, 80)
        assert params.bin_count == 4

    def test_degenerate_range(self):
        params = solve_parameters(5, 5)
        assert (params.alpha, params.beta, params.gamma) == (2, 1, 40)
        assert params.bin_count == 1

    def test_psi_ratio_thousand(self):
        params = solve_parameters(1, 1000)
        assert (params.alpha, params.beta, params.gamma) == (2, 1, 40)
        assert params.bin_count == 2

    def test_nonpositive_floor_rejected(self):
        with pytest.raises(DomainError):
            solve_parameters(0, 5)
        with pytest.raises(DomainError):
            solve_parameters(-1, 5)

    def test_inverted_range_rejected(self):
        with pytest.raises(DomainError):
            solve_parameters(7, 2)

    def test_solver_output_satisfies_coupled_bounds(self):
        rng = random.Random(5)
        for _ in range(50):
            lo = Fraction(rng.randint(1, 50), rng.randint(1, 10))
            ratio = Fraction(rng.randint(1, 10**9))
            params = solve_parameters(lo, lo * ratio)
            validate_parameter_equations(params)


def test_ceil_log_exact_boundaries():
    assert ceil_log(Fraction(4), Fraction(256)) == 4
    assert ceil_log(Fraction(4), Fraction(257)) == 5
    assert ceil_log(Fraction(4), Fraction(1)) == 0
    assert ceil_log(Fraction(40), Fraction(1600)) == 2


FOUR_BINS = Params(2, 2, Fraction(4), Fraction(1), Fraction(256))


class TestBins:
    def test_geometric_partition(self):
        bins = build_bins(FOUR_BINS)
        assert bins.count == 4
        assert [c.price for c in bins.cells] == [1, 4, 16, 64]
        assert [c.upper for c in bins.cells] == [4, 16, 64, 256]
        assert [c.closed for c in bins.cells] == [False, False, False, True]

    def test_single_point_bin(self):
        bins = build_bins(Params(2, 1, Fraction(40), Fraction(5), Fraction(5)))
        assert bins.count == 1
        assert bins.index_of(Fraction(5)) == 1
        assert bins.price(1) == 5

    def test_membership(self):
        bins = build_bins(FOUR_BINS)
        assert bins.index_of(Fraction(1)) == 1
        assert bins.index_of(Fraction(4)) == 2
        assert bins.index_of(Fraction(255)) == 4
        assert bins.index_of(Fraction(256)) == 4
        assert bins.index_of(Fraction(257)) is None
        assert bins.index_of(Fraction(1, 2)) is None

    def test_within_bin_spread_is_at_most_gamma(self):
        bins = build_bins(FOUR_BINS)
        for cell in bins.cells:
            assert cell.upper <= cell.price * FOUR_BINS.gamma


class TestModifiedTree:
    def test_odd_tree_of_four_bins(self):
        tree = build_modified_tree(build_bins(FOUR_BINS), ODD)
        leaf_prices = [n.price for n in tree.leaves if n.bin_indices]
        assert leaf_prices == [1, 16]
        assert tree.root.bin_indices == (1, 3)

    def test_even_tree_of_single_bin_is_dummy_backed(self):
        bins = build_bins(Params(2, 1, Fraction(40), Fraction(5), Fraction(5)))
        tree = build_modified_tree(bins, EVEN)
        assert tree.root.bin_indices == ()
        assert all(not n.belongs(Fraction(5)) for level in tree.levels for n in level)
        assert tree.root.price > bins.params.psi_max

    def test_figure_shape_alpha2_beta3_t8(self):
        # eight bins at gamma = 2; the odd tree keeps B1, B3, B5, B7 as leaves
        params = Params(2, 3, Fraction(2), Fraction(1), Fraction(200))
        bins = build_bins(params)
        assert bins.count == 8
        tree = build_modified_tree(bins, ODD)
        assert tree.depth == 4
        real_leaves = [n for n in tree.leaves if n.bin_indices]
        assert [n.bin_indices for n in real_leaves] == [(1,), (3,), (5,), (7,)]

    def test_plain_tree_has_one_real_bin_per_leaf(self):
        params = Params(2, 2, Fraction(4), Fraction(1), Fraction(256))
        tree = build_price_tree(build_bins(params))
        assert [n.bin_indices for n in tree.leaves] == [(1,), (2,), (3,), (4,)]

    def test_capacity_violation_rejected(self):
        params = Params(2, 1, Fraction(2), Fraction(1), Fraction(200))  # t = 8
        with pytest.raises(InvariantViolationError):
            build_price_tree(build_bins(params))

    def test_bad_parity(self):
        with pytest.raises(DomainError):
            build_modified_tree(build_bins(FOUR_BINS), "both")


class TestBelonging:
    def test_root_price_strongly_belongs(self):
        tree = build_modified_tree(build_bins(FOUR_BINS), ODD)
        assert strongly_belongs(1, tree.root)
        assert belongs(1, tree.root)

    def test_belongs_without_strongly(self):
        tree = build_modified_tree(build_bins(FOUR_BINS), ODD)
        assert belongs(16, tree.root)
        assert not strongly_belongs(16, tree.root)

    def test_above_range_belongs_nowhere(self):
        tree = build_modified_tree(build_bins(FOUR_BINS), ODD)
        assert all(
            not belongs(300, node) for level in tree.levels for node in level
        )

    def test_wrong_parity_belongs_nowhere(self):
        tree = build_modified_tree(build_bins(FOUR_BINS), ODD)
        assert all(
            not belongs(5, node) for level in tree.levels for node in level
        )  # 5 sits in B2


CANON = Params(2, 2, Fraction(2), Fraction(1), Fraction(200))  # t = 8


class TestCanonicalVectors:
    def test_root_vector_refines_to_child_prices(self):
        tree = build_modified_tree(build_bins(CANON), ODD)
        vecs = canonical_vectors(tree, (Fraction(1), Fraction(1)), 1)
        assert vecs == [(1, 1), (16, 16)]

    def test_empty_vector(self):
        tree = build_modified_tree(build_bins(CANON), ODD)
        assert canonical_vectors(tree, (), 1) == [(), ()]

    def test_mixed_vector_refines_per_coordinate(self):
        tree = build_modified_tree(build_bins(CANON), ODD)
        vecs = canonical_vectors(tree, (Fraction(1), Fraction(16)), 2)
        assert vecs == [(1, 16), (4, 64)]

    def test_price_outside_level_rejected(self):
        tree = build_modified_tree(build_bins(CANON), ODD)
        with pytest.raises(InvariantViolationError):
            canonical_vectors(tree, (Fraction(3),), 1)

    def test_leaf_level_rejected(self):
        tree = build_modified_tree(build_bins(CANON), ODD)
        with pytest.raises(InvariantViolationError):
            canonical_vectors(tree, (Fraction(1),), 3)


@settings(max_examples=60, deadline=None)
@given(
    lo_num=st.integers(min_value=1, max_value=1000),
    ratio=st.integers(min_value=1, max_value=10**9),
    parity=st.sampled_from([ODD, EVEN]),
)
def test_tree_invariants_hold_for_solved_parameters(lo_num, ratio, parity):
    psi_min = Fraction(lo_num, 7)
    params = solve_parameters(psi_min, psi_min * ratio)
    bins = build_bins(params)
    tree = build_modified_tree(bins, parity)

    assert tree.depth == params.beta + 1
    assert len(tree.leaves) == params.leaf_capacity

    # each level partitions the retained bins
    retained = tuple(c.index for c in bins.retained(parity))
    for level in tree.levels:
        spread = [i for node in level for i in node.bin_indices]
        assert tuple(spread) == retained

    # gap property: distinct same-level prices differ by at least gamma
    for level in tree.levels:
        prices = sorted(n.price for n in level)
        for a, b in zip(prices, prices[1:]):
            if a != b:
                assert b >= a * params.gamma

    # partition property: a retained price belongs to exactly one node per level
    rng = random.Random(lo_num * 31 + ratio)
    probes = [c.price for c in bins.retained(parity)]
    probes += [
        c.price + (c.upper - c.price) * Fraction(rng.randint(0, 7), 8)
        for c in bins.retained(parity)
    ]
    for price in probes:
        for level in tree.levels:
            assert sum(node.belongs(price) for node in level) == 1
