import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hartigan_lab.geometry import Clustering, PointSet
from hartigan_lab.lower_bound import build_instance
from hartigan_lab.smoothed import (
    CSV_HEADER,
    anticoncentration_mc,
    box_bound,
    check_approx_gain,
    gaussian_block,
    normalize_unit_box,
    perturb,
    smoothed_sweep,
    trial_seed,
    update_center_approx,
)


def test_gaussian_block_prefix_stable():
    a = gaussian_block(42, 5, 3)
    b = gaussian_block(42, 10, 3)
    assert np.array_equal(a, b[:5])
    assert not np.array_equal(a, gaussian_block(43, 5, 3))


def test_perturb_zero_sigma_identity():
    pts = PointSet.from_rows([[0.25, 0.5]], exact=False)
    assert perturb(pts, 0.0, 1).coords == ((0.25, 0.5),)


def test_perturb_rescales_large_sigma():
    pts = PointSet.from_rows([[0.5], [1.0]], exact=False)
    big = perturb(pts, 4.0, 9)
    noise = gaussian_block(9, 2, 1)[:, 0]
    assert big.coords[0][0] == pytest.approx(0.125 + noise[0])
    assert big.coords[1][0] == pytest.approx(0.25 + noise[1])


def test_normalize_unit_box():
    pts = normalize_unit_box(build_instance(3).points)
    xs = [p[0] for p in pts]
    assert min(xs) == 0.0 and max(xs) == 1.0


def test_box_bound_value():
    assert box_bound(20, 3, 2) == pytest.approx(math.sqrt(40 * math.log(120)))
    with pytest.raises(ValueError):
        box_bound(1, 1, 1)


def test_approx_gain_exact_centers_zero_error():
    pts = PointSet.from_rows([[0], [1], [4], [6]])
    c = Clustering.from_assignment(pts, [0, 0, 1, 1], 2)
    lhs, bound, ok = check_approx_gain(1, 0, 1, c, pts, c.center(0), c.center(1), 0.0, D=10.0)
    assert lhs == 0 and ok


def test_approx_gain_rejects_bad_radius():
    pts = PointSet.from_rows([[0], [1], [4], [6]])
    c = Clustering.from_assignment(pts, [0, 0, 1, 1], 2)
    with pytest.raises(ValueError):
        check_approx_gain(1, 0, 1, c, pts, (Fraction(5),), c.center(1), 0.1, D=10.0)


def test_update_center_trivial_cases():
    c = (Fraction(3, 2),)
    assert update_center_approx(c, 2, 2) == c
    with pytest.raises(ValueError):
        update_center_approx(c, 1, 0, lost=[(Fraction(1),)])


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.fractions(-10, 10, max_denominator=6), min_size=2, max_size=8),
    st.fractions(-1, 1, max_denominator=9).filter(lambda e: e != 0),
    st.integers(0, 2),
    st.integers(0, 1),
)
def test_update_error_ratio_exact(xs, offset, n_gain, n_lose):
    members = [(x,) for x in xs]
    gained = [(Fraction(7 + j),) for j in range(n_gain)]
    lost = members[:n_lose]
    s_old = len(members)
    s_new = s_old + n_gain - n_lose
    true_old = sum(x for (x,) in members) / s_old
    new_members = members[n_lose:] + gained
    true_new = sum(x for (x,) in new_members) / s_new
    c_new = update_center_approx((true_old + offset,), s_old, s_new, gained, lost)
    assert abs(c_new[0] - true_new) / abs(offset) == Fraction(s_old, s_new)


def test_anticoncentration_whole_support():
    assert anticoncentration_mc(1.0, [0.0], [0.0], 1.0, 1e9, -1.0) == 1.0
    with pytest.raises(ValueError):
        anticoncentration_mc(0.0, [0.0], [0.0], 1.0, 0.1, 0.0)


def test_anticoncentration_sqrt_scaling():
    # X^2 in [0, eps] has probability about sqrt(2 eps / pi)
    p1 = anticoncentration_mc(1.0, [0.0], [0.0], 1.0, 0.01, 0.0, trials=200_000)
    p2 = anticoncentration_mc(1.0, [0.0], [0.0], 1.0, 0.005, 0.0, trials=200_000)
    assert p1 == pytest.approx(math.sqrt(0.02 / math.pi), rel=0.05)
    assert p1 / p2 == pytest.approx(math.sqrt(2), rel=0.1)


def test_trial_seed_order_independent():
    assert trial_seed(1, 0.1, 3) == trial_seed(1, 0.1, 3)
    assert trial_seed(1, 0.1, 3) != trial_seed(1, 0.2, 3)


def test_sweep_deterministic_and_parallel_safe():
    inst = build_instance(4)
    a = smoothed_sweep(inst, None, [0.2, 0.05], trials=3, seed=11, workers=1)
    b = smoothed_sweep(inst, None, [0.05, 0.2], trials=3, seed=11, workers=2)
    assert a.to_csv() == b.to_csv()
    assert a.to_csv().splitlines()[0] == ",".join(CSV_HEADER)
    for r in a.rows:
        assert r.final_potential <= r.initial_potential


def test_sweep_scripted_control():
    res = smoothed_sweep(build_instance(5), None, [0.0], trials=1, rule="scripted")
    assert res.rows[0].iterations >= 2**4
    with pytest.raises(ValueError):
        smoothed_sweep(build_instance(5), None, [0.1], trials=1, rule="scripted")


def test_sweep_plain_points_needs_k():
    pts = PointSet.from_rows([[0.1], [0.2], [0.9]], exact=False)
    with pytest.raises(ValueError):
        smoothed_sweep(pts, None, [0.1], trials=1)
    res = smoothed_sweep(pts, 2, [0.1], trials=2)
    assert len(res.rows) == 2


def test_rescaled_sigma_matches_unit_run():
    # sigma > 1 on Y is the same computation as sigma = 1 on Y / sigma
    rng = np.random.default_rng(0)
    base = PointSet(tuple(tuple(r) for r in rng.random((12, 2)).tolist()), 2, False)
    shrunk = PointSet(tuple(tuple(v / 4.0 for v in r) for r in base.coords), 2, False)
    for seed in range(5):
        assert perturb(base, 4.0, seed).coords == perturb(shrunk, 1.0, seed).coords
