"""k-means objective, centers of mass and closed-form potential changes.

Every routine works over two scalar fields: exact rationals
(:class:`fractions.Fraction`, always kept in lowest terms) and binary64
floats. A :class:`PointSet` fixes the field for everything computed from it.
Clusters cache per-cluster sizes and coordinate *sums* rather than means, so
incremental updates stay exact in rational mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

Scalar = Union[Fraction, float]
Vector = tuple

__all__ = [
    "AssignmentError",
    "Clustering",
    "InvariantError",
    "PointSet",
    "SingletonSourceError",
    "center_of_mass",
    "gain_with_centers",
    "merge_delta",
    "move_gain",
    "potential",
    "potential_of_cluster",
    "set_center",
    "set_gain",
    "set_potential",
    "sqdist",
]


class InvariantError(ValueError):
    """A clustering or point-set invariant was violated."""


class SingletonSourceError(InvariantError):
    """Attempt to move the only point out of a cluster."""


class AssignmentError(InvariantError):
    """A point is not in the cluster it was claimed to be in."""


def to_scalar(value, exact: bool) -> Scalar:
    if exact:
        if isinstance(value, Fraction):
            return value
        if isinstance(value, str):
            return Fraction(value.strip())
        # Fraction(float) is the exact binary value, which is what we want
        return Fraction(value)
    return float(value)


def ratio(num: int, den: int, exact: bool) -> Scalar:
    return Fraction(num, den) if exact else num / den


@dataclass(frozen=True)
class PointSet:
    """Ordered points in d dimensions; point ids are positions."""

    coords: tuple
    dim: int
    exact: bool = True

    def __post_init__(self):
        if len(self.coords) < 1:
            raise InvariantError("a point set needs at least one point")
        if self.dim < 1:
            raise InvariantError("dimension must be positive")
        for i, p in enumerate(self.coords):
            if len(p) != self.dim:
                raise InvariantError(
                    f"point {i} has {len(p)} coordinates, expected {self.dim}"
                )

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable], exact: bool = True) -> "PointSet":
        coords = tuple(tuple(to_scalar(v, exact) for v in row) for row in rows)
        if not coords:
            raise InvariantError("a point set needs at least one point")
        return cls(coords, len(coords[0]), exact)

    def as_exact(self) -> "PointSet":
        return PointSet.from_rows(self.coords, exact=True)

    def as_float(self) -> "PointSet":
        return PointSet.from_rows(self.coords, exact=False)

    @property
    def zero(self) -> Scalar:
        return Fraction(0) if self.exact else 0.0

    def __len__(self) -> int:
        return len(self.coords)

    def __getitem__(self, i: int) -> Vector:
        return self.coords[i]

    def __iter__(self):
        return iter(self.coords)


def sqdist(x: Sequence[Scalar], y: Sequence[Scalar]) -> Scalar:
    return sum((a - b) * (a - b) for a, b in zip(x, y))


def _vsum(points: PointSet, ids: Iterable[int]) -> list:
    acc = [points.zero] * points.dim
    for i in ids:
        for c, v in enumerate(points[i]):
            acc[c] += v
    return acc


def _vdiv(v: Sequence[Scalar], n: int, exact: bool) -> Vector:
    if exact:
        return tuple(Fraction(c) / n for c in v)
    return tuple(c / n for c in v)


class Clustering:
    """Assignment of point ids to ``k`` clusters with cached sizes and sums.

    ``assign[x]`` is the cluster of point ``x``; ``size[i]`` and
    ``coordsum[i]`` are kept in sync by :meth:`move`.
    """

    __slots__ = ("k", "assign", "size", "coordsum", "exact")

    def __init__(self, k, assign, size, coordsum, exact):
        self.k = k
        self.assign = assign
        self.size = size
        self.coordsum = coordsum
        self.exact = exact

    @classmethod
    def from_assignment(
        cls, points: PointSet, assign: Sequence[int], k: int
    ) -> "Clustering":
        if len(assign) != len(points):
            raise InvariantError(
                f"assignment has {len(assign)} entries for {len(points)} points"
            )
        if k < 1:
            raise InvariantError("k must be positive")
        size = [0] * k
        coordsum = [[points.zero] * points.dim for _ in range(k)]
        for x, c in enumerate(assign):
            if not 0 <= c < k:
                raise InvariantError(f"point {x} assigned to cluster {c} outside 0..{k - 1}")
            size[c] += 1
            s = coordsum[c]
            for j, v in enumerate(points[x]):
                s[j] += v
        empty = [i for i, s in enumerate(size) if s == 0]
        if empty:
            raise InvariantError(f"empty clusters: {empty}")
        return cls(k, list(assign), size, coordsum, points.exact)

    def copy(self) -> "Clustering":
        return Clustering(
            self.k,
            list(self.assign),
            list(self.size),
            [list(s) for s in self.coordsum],
            self.exact,
        )

    def members(self, i: int) -> list:
        return [x for x, c in enumerate(self.assign) if c == i]

    def center(self, i: int) -> Vector:
        if self.size[i] < 1:
            raise InvariantError(f"cluster {i} is empty")
        return _vdiv(self.coordsum[i], self.size[i], self.exact)

    def centers(self) -> list:
        return [self.center(i) for i in range(self.k)]

    def move(self, x: int, dst: int, point: Sequence[Scalar]) -> None:
        """Reassign point ``x`` (coordinates ``point``) to cluster ``dst``."""
        src = self.assign[x]
        if src == dst:
            raise InvariantError(f"point {x} is already in cluster {dst}")
        if self.size[src] < 2:
            raise SingletonSourceError(f"moving point {x} would empty cluster {src}")
        self.assign[x] = dst
        self.size[src] -= 1
        self.size[dst] += 1
        ssrc, sdst = self.coordsum[src], self.coordsum[dst]
        for j, v in enumerate(point):
            ssrc[j] -= v
            sdst[j] += v

    def key(self) -> tuple:
        return tuple(self.assign)

    def check_consistency(self, points: PointSet, rel_tol: float = 1e-9) -> None:
        """Recompute sizes and sums from ``assign`` and compare with the cache."""
        fresh = Clustering.from_assignment(points, self.assign, self.k)
        if fresh.size != self.size:
            raise InvariantError(f"cached sizes {self.size} != recomputed {fresh.size}")
        for i in range(self.k):
            for a, b in zip(fresh.coordsum[i], self.coordsum[i]):
                if self.exact:
                    if a != b:
                        raise InvariantError(f"cluster {i}: cached sum drifted")
                elif abs(a - b) > rel_tol * max(1.0, abs(a)):
                    raise InvariantError(f"cluster {i}: cached sum drifted")

    def __eq__(self, other):
        return (
            isinstance(other, Clustering)
            and self.k == other.k
            and self.assign == other.assign
        )

    def __repr__(self):
        return f"Clustering(k={self.k}, size={self.size})"


def center_of_mass(cluster_id: int, clustering: Clustering, points: PointSet) -> Vector:
    return clustering.center(cluster_id)


def set_center(points: PointSet, ids: Sequence[int]) -> Vector:
    if not ids:
        raise InvariantError("center of an empty set")
    return _vdiv(_vsum(points, ids), len(ids), points.exact)


def set_potential(points: PointSet, ids: Sequence[int]) -> Scalar:
    """Sum of squared distances of ``ids`` to their own center of mass."""
    if not ids:
        return points.zero
    c = set_center(points, ids)
    return sum((sqdist(points[x], c) for x in ids), points.zero)


def potential_of_cluster(i: int, clustering: Clustering, points: PointSet) -> Scalar:
    return set_potential(points, clustering.members(i))


def potential(clustering: Clustering, points: PointSet) -> Scalar:
    groups = [[] for _ in range(clustering.k)]
    for x, c in enumerate(clustering.assign):
        groups[c].append(x)
    return sum((set_potential(points, g) for g in groups), points.zero)


def merge_delta(S: Sequence[int], T: Sequence[int], points: PointSet) -> Scalar:
    """Potential increase from merging disjoint multisets ``S`` and ``T``.

    Closed form ``|S||T|/(|S|+|T|) * ||cm(S) - cm(T)||^2``; ids may repeat
    coordinates but not each other.
    """
    if not S or not T:
        raise InvariantError("merge_delta needs two nonempty sets")
    if set(S) & set(T):
        raise InvariantError("merge_delta sets must be disjoint")
    s, t = len(S), len(T)
    return ratio(s * t, s + t, points.exact) * sqdist(
        set_center(points, S), set_center(points, T)
    )


def gain_with_centers(x, a, b, size_src: int, size_dst: int) -> Scalar:
    """Gain of moving ``x`` when the two clusters' centers are taken to be ``a`` and ``b``.

    Sizes are the cluster sizes *before* the move.
    """
    if size_src < 2:
        raise SingletonSourceError(f"source size {size_src} < 2")
    if size_dst < 1:
        raise InvariantError(f"target size {size_dst} < 1")
    exact = isinstance(x[0], Fraction)
    return ratio(size_src, size_src - 1, exact) * sqdist(x, a) - ratio(
        size_dst, size_dst + 1, exact
    ) * sqdist(x, b)


def move_gain(x: int, src: int, dst: int, clustering: Clustering, points: PointSet) -> Scalar:
    """Potential decrease from moving point ``x`` from ``src`` to ``dst``.

    Positive means the move improves the clustering.
    """
    if clustering.assign[x] != src:
        raise AssignmentError(f"point {x} is in cluster {clustering.assign[x]}, not {src}")
    if src == dst:
        raise InvariantError("source and target cluster coincide")
    if clustering.size[src] < 2:
        raise SingletonSourceError(f"cluster {src} is a singleton")
    return gain_with_centers(
        points[x],
        clustering.center(src),
        clustering.center(dst),
        clustering.size[src],
        clustering.size[dst],
    )


def set_gain(x: int, S: Sequence[int], T: Sequence[int], points: PointSet) -> Scalar:
    """Gain of moving ``x`` from the explicit set ``S`` to ``T`` (x in S, not in T)."""
    if x not in S:
        raise AssignmentError(f"point {x} is not in the source set")
    if x in T:
        raise AssignmentError(f"point {x} is already in the target set")
    return gain_with_centers(
        points[x], set_center(points, S), set_center(points, T), len(S), len(T)
    )
