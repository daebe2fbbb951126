from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_potential, clustered, groups_of
from hartigan_lab.geometry import (
    Clustering,
    InvariantError,
    PointSet,
    SingletonSourceError,
    center_of_mass,
    gain_with_centers,
    merge_delta,
    move_gain,
    potential,
    set_gain,
    set_potential,
)


def line(*xs):
    return PointSet.from_rows([[x] for x in xs])


def test_center_of_mass_is_exact():
    pts = line(0, 1, 1)
    c = Clustering.from_assignment(pts, [0, 0, 0], 1)
    assert center_of_mass(0, c, pts) == (Fraction(2, 3),)


def test_potential_simple():
    pts = line(0, 2, 10)
    c = Clustering.from_assignment(pts, [0, 0, 1], 2)
    assert potential(c, pts) == 2


def test_empty_cluster_rejected():
    pts = line(0, 1)
    with pytest.raises(InvariantError):
        Clustering.from_assignment(pts, [0, 0], 2)


def test_singleton_move_rejected():
    pts = line(0, 1, 5)
    c = Clustering.from_assignment(pts, [0, 0, 1], 2)
    with pytest.raises(SingletonSourceError):
        c.move(2, 0, pts[2])
    with pytest.raises(InvariantError):
        move_gain(2, 1, 0, c, pts)


def test_merge_delta_two_points():
    pts = line(0, 4)
    # 1*1/2 * 16
    assert merge_delta([0], [1], pts) == 8


def test_merge_delta_rejects_overlap():
    pts = line(0, 4, 5)
    with pytest.raises(InvariantError):
        merge_delta([0, 1], [1, 2], pts)


def test_move_gain_gadget_value():
    # q moves from {b, q} to {a, p} on the unit gadget
    pts = line(9, 6, 5, 13)  # a, b, p, q
    assert set_gain(3, [1, 3], [0, 2], pts) == Fraction(1, 2)
    before = set_potential(pts, [1, 3]) + set_potential(pts, [0, 2])
    after = set_potential(pts, [1]) + set_potential(pts, [0, 2, 3])
    assert before - after == Fraction(1, 2)


def test_gain_with_centers_sizes_checked():
    with pytest.raises(InvariantError):
        gain_with_centers((Fraction(0),), (Fraction(0),), (Fraction(1),), 1, 1)


@settings(max_examples=200, deadline=None)
@given(clustered(exact=True))
def test_move_gain_matches_recomputation(case):
    pts, k, assign = case
    c = Clustering.from_assignment(pts, assign, k)
    phi = brute_potential(pts, groups_of(assign, k))
    assert potential(c, pts) == phi
    for x, src in enumerate(assign):
        if c.size[src] < 2:
            continue
        for dst in range(k):
            if dst == src:
                continue
            new = list(assign)
            new[x] = dst
            assert move_gain(x, src, dst, c, pts) == phi - brute_potential(pts, groups_of(new, k))


@settings(max_examples=200, deadline=None)
@given(clustered(exact=True), st.data())
def test_incremental_sums_stay_consistent(case, data):
    pts, k, assign = case
    c = Clustering.from_assignment(pts, assign, k)
    for _ in range(10):
        movable = [x for x, s in enumerate(c.assign) if c.size[s] >= 2]
        if not movable or k < 2:
            break
        x = data.draw(st.sampled_from(movable))
        dst = data.draw(st.sampled_from([j for j in range(k) if j != c.assign[x]]))
        c.move(x, dst, pts[x])
        c.check_consistency(pts)
    assert c == Clustering.from_assignment(pts, c.assign, k)


@settings(max_examples=200, deadline=None)
@given(clustered(exact=True, max_k=1), st.integers(0, 11))
def test_merge_delta_equals_potential_increase(case, cut):
    pts, _, _ = case
    n = len(pts)
    cut = 1 + cut % (n - 1)
    S, T = list(range(cut)), list(range(cut, n))
    want = set_potential(pts, S + T) - set_potential(pts, S) - set_potential(pts, T)
    assert merge_delta(S, T, pts) == want
    assert want >= 0
