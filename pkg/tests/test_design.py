import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpopt.design import (
    design_to_unit,
    is_latin,
    min_distance,
    propagated_levels,
    random_lhs,
    scale_design,
    tplhd,
)
from gpopt.domain import Domain
from gpopt.errors import DimensionError


def brute_min_distance(levels):
    pts = np.asarray(levels, dtype=float)
    return min(np.linalg.norm(a - b) for a, b in itertools.combinations(pts, 2))


def test_single_point():
    np.testing.assert_array_equal(tplhd(1, 3), [[1, 1, 1]])


def test_nine_by_two_pattern():
    expected = [[1, 1], [2, 4], [3, 7], [4, 2], [5, 5], [6, 8], [7, 3], [8, 6], [9, 9]]
    np.testing.assert_array_equal(tplhd(9, 2), expected)


def test_five_by_two_shrink():
    np.testing.assert_array_equal(tplhd(5, 2), [[1, 3], [2, 5], [3, 1], [4, 4], [5, 2]])


@pytest.mark.parametrize("n,p", [(0, 2), (3, 0), (-1, 1)])
def test_argument_errors(n, p):
    with pytest.raises(ValueError):
        tplhd(n, p)
    with pytest.raises(ValueError):
        random_lhs(n, p, 0)


@pytest.mark.parametrize("n", range(1, 31))
@pytest.mark.parametrize("p", range(1, 6))
def test_latin_property(n, p):
    levels = tplhd(n, p)
    assert levels.shape == (n, p)
    assert is_latin(levels)


@pytest.mark.parametrize("nd,p", [(2, 1), (3, 2), (4, 3), (2, 5), (5, 2)])
def test_unshrunk_levels_are_bijections(nd, p):
    levels = propagated_levels(nd, p)
    N = nd**p
    for col in levels.T:
        np.testing.assert_array_equal(np.sort(col), np.arange(1, N + 1))


def test_deterministic():
    np.testing.assert_array_equal(tplhd(17, 4), tplhd(17, 4))


def test_min_distance_examples():
    assert min_distance(np.array([[1, 1], [2, 2]])) == pytest.approx(np.sqrt(2))
    # all-pairs brute force gives sqrt(8) for the 9x2 pattern (see decisions ledger)
    assert min_distance(tplhd(9, 2)) == pytest.approx(brute_min_distance(tplhd(9, 2)), abs=1e-12)
    assert min_distance(tplhd(9, 2)) == pytest.approx(np.sqrt(8), abs=1e-12)
    assert min_distance(tplhd(5, 2)) == pytest.approx(brute_min_distance(tplhd(5, 2)), abs=1e-12)


def test_min_distance_needs_two_points():
    with pytest.raises(ValueError):
        min_distance(np.array([[1, 1]]))


@given(st.integers(2, 25), st.integers(1, 5), st.integers(0, 2**31))
@settings(max_examples=50, deadline=None)
def test_min_distance_matches_brute_force(n, p, seed):
    levels = random_lhs(n, p, seed)
    assert min_distance(levels) == pytest.approx(brute_min_distance(levels), abs=1e-12)


def test_random_lhs_contracts():
    np.testing.assert_array_equal(random_lhs(1, 4, 0), [[1, 1, 1, 1]])
    np.testing.assert_array_equal(random_lhs(12, 3, 7), random_lhs(12, 3, 7))
    for seed in range(20):
        assert is_latin(random_lhs(15, 4, seed))


@pytest.mark.parametrize("n,p", [(5, 2), (10, 3), (20, 5), (50, 7)])
def test_maximin_beats_random_median(n, p):
    rng = np.random.default_rng(0)
    dists = [min_distance(random_lhs(n, p, rng)) for _ in range(1000)]
    assert min_distance(tplhd(n, p)) >= np.median(dists)


def test_scale_design_contracts():
    unit1 = Domain.unit(1)
    np.testing.assert_array_equal(scale_design(tplhd(1, 1), unit1), [[0.5]])
    box = Domain.from_bounds([(-5, 10), (0, 15)])
    np.testing.assert_array_equal(scale_design(tplhd(1, 2), box), [box.midpoint])
    X = scale_design(tplhd(9, 2), box)
    np.testing.assert_array_equal(X.min(axis=0), box.lower)
    np.testing.assert_array_equal(X.max(axis=0), box.upper)
    U = design_to_unit(tplhd(9, 1))
    assert U[4, 0] == 0.5


def test_scale_design_dimension_mismatch():
    with pytest.raises(DimensionError):
        scale_design(tplhd(4, 3), Domain.unit(2))
