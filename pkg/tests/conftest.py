from __future__ import annotations

from fractions import Fraction

from hypothesis import strategies as st

from hartigan_lab.geometry import PointSet


def brute_potential(points, groups):
    """Phi from scratch: sum of squared distances to each group's mean."""
    total = points.zero
    for ids in groups:
        if not ids:
            continue
        n = len(ids)
        mean = [sum(points[x][j] for x in ids) / n for j in range(points.dim)]
        for x in ids:
            total += sum((points[x][j] - mean[j]) ** 2 for j in range(points.dim))
    return total


def groups_of(assign, k):
    out = [[] for _ in range(k)]
    for x, c in enumerate(assign):
        out[c].append(x)
    return out


small_frac = st.fractions(min_value=-20, max_value=20, max_denominator=8)


@st.composite
def point_sets(draw, min_n=2, max_n=12, max_d=3, exact=True):
    n = draw(st.integers(min_n, max_n))
    d = draw(st.integers(1, max_d))
    if exact:
        rows = draw(st.lists(st.tuples(*[small_frac] * d), min_size=n, max_size=n))
        return PointSet(tuple(tuple(Fraction(c) for c in r) for r in rows), d, True)
    coord = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
    rows = draw(st.lists(st.tuples(*[coord] * d), min_size=n, max_size=n))
    return PointSet(tuple(tuple(float(c) for c in r) for r in rows), d, False)


@st.composite
def clustered(draw, exact=True, max_n=12, max_d=3, max_k=4):
    """(points, k, assign) with every cluster nonempty."""
    pts = draw(point_sets(min_n=2, max_n=max_n, max_d=max_d, exact=exact))
    n = len(pts)
    k = draw(st.integers(1, min(max_k, n)))
    rest = draw(st.lists(st.integers(0, k - 1), min_size=n - k, max_size=n - k))
    assign = list(range(k)) + rest
    perm = draw(st.permutations(range(n)))
    return pts, k, [assign[perm[i]] for i in range(n)]
