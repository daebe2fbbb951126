"""Hartigan-Wong local search under pluggable pivot rules, plus Lloyd's method.

A Hartigan-Wong iteration moves a single point to another cluster whenever
that strictly lowers the k-means potential. Which improving move is taken
is decided by a pivot rule. Lloyd's method is provided as a baseline and
for the local-optimality dominance check.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from hartigan_lab.geometry import (
    Clustering,
    InvariantError,
    PointSet,
    Scalar,
    gain_with_centers,
    potential,
    sqdist,
)

FLOAT_REL_THRESHOLD = 1e-12
MAX_ITERS_CAP = 10**7


class Termination(str, enum.Enum):
    LOCAL_OPT = "LOCAL_OPT"
    MAX_ITERS = "MAX_ITERS"
    SCRIPT_EXHAUSTED = "SCRIPT_EXHAUSTED"


@dataclass(frozen=True)
class Move:
    point: int
    src: int
    dst: int
    gain: Scalar


class ScriptInvalidError(ValueError):
    """A scripted move is not an improving Hartigan-Wong iteration.

    ``gain`` is the exact gain of the offending move, or ``None`` when the
    move does not even match the current clustering.
    """

    def __init__(self, index: int, move, gain=None, reason: str = "non-improving move"):
        self.index = index
        self.move = move
        self.gain = gain
        self.reason = reason
        detail = f"gain={gain}" if gain is not None else reason
        super().__init__(f"scripted move #{index} {tuple(move)} is invalid: {detail}")


def improvement_threshold(exact: bool, current_potential) -> Scalar:
    """Smallest gain that still counts as an improvement.

    Exact mode demands strictly positive gain; float mode needs a margin
    relative to the current potential so rounding cannot cause cycling.
    """
    if exact:
        return 0
    return FLOAT_REL_THRESHOLD * max(1.0, float(current_potential))


def default_max_iters(k: int, d: int) -> int:
    # k ** (4kd) explodes quickly, so cap before exponentiating
    e = 4 * k * d
    if k > 1 and e * (k.bit_length() - 1) > 64:
        return MAX_ITERS_CAP
    return min(MAX_ITERS_CAP, 10 * k**e)


def _candidates(clustering: Clustering, points: PointSet, threshold):
    """Yield improving ``Move``s in (point id, target cluster) order."""
    centers = clustering.centers()
    size = clustering.size
    for x, src in enumerate(clustering.assign):
        if size[src] < 2:
            continue
        p = points[x]
        for dst in range(clustering.k):
            if dst == src:
                continue
            g = gain_with_centers(p, centers[src], centers[dst], size[src], size[dst])
            if g > threshold:
                yield Move(x, src, dst, g)


class PivotRule:
    """Chooses the next move among the improving ones, or ``None``."""

    name = "rule"

    def select(self, clustering: Clustering, points: PointSet, threshold) -> Optional[Move]:
        raise NotImplementedError

    @property
    def exhausted(self) -> bool:
        return False


class FirstImprovement(PivotRule):
    name = "first"

    def select(self, clustering, points, threshold):
        return next(_candidates(clustering, points, threshold), None)


class BestImprovement(PivotRule):
    name = "best"

    def select(self, clustering, points, threshold):
        best = None
        for mv in _candidates(clustering, points, threshold):
            # strict > keeps the lexicographically first among equal gains
            if best is None or mv.gain > best.gain:
                best = mv
        return best


class RandomImprovement(PivotRule):
    """Uniform choice among improving moves.

    The choice depends only on ``seed`` and the current assignment, so the
    same clustering always yields the same move.
    """

    name = "random"

    def __init__(self, seed: int = 0):
        self.seed = seed

    def select(self, clustering, points, threshold):
        moves = list(_candidates(clustering, points, threshold))
        if not moves:
            return None
        rng = random.Random(f"{self.seed}:{','.join(map(str, clustering.assign))}")
        return moves[rng.randrange(len(moves))]


class Scripted(PivotRule):
    """Replays a fixed list of ``(point, src, dst)`` moves in order."""

    name = "scripted"

    def __init__(self, moves: Sequence):
        self.moves = [tuple(m[:3]) if isinstance(m, (tuple, list)) else (m.point, m.src, m.dst) for m in moves]
        self.cursor = 0

    @property
    def exhausted(self) -> bool:
        return self.cursor >= len(self.moves)

    def select(self, clustering, points, threshold):
        if self.exhausted:
            return None
        idx = self.cursor
        x, src, dst = self.moves[idx]
        if not 0 <= x < len(points) or not 0 <= dst < clustering.k or src == dst:
            raise ScriptInvalidError(idx, (x, src, dst), reason="malformed move")
        if clustering.assign[x] != src:
            raise ScriptInvalidError(
                idx, (x, src, dst), reason=f"point is in cluster {clustering.assign[x]}"
            )
        if clustering.size[src] < 2:
            raise ScriptInvalidError(idx, (x, src, dst), reason="source is a singleton")
        g = gain_with_centers(
            points[x],
            clustering.center(src),
            clustering.center(dst),
            clustering.size[src],
            clustering.size[dst],
        )
        if not g > threshold:
            raise ScriptInvalidError(idx, (x, src, dst), gain=g)
        self.cursor += 1
        return Move(x, src, dst, g)


def make_rule(name: str, seed: int = 0, script=None) -> PivotRule:
    name = name.lower().replace("-", "_")
    if name in ("first", "first_improvement"):
        return FirstImprovement()
    if name in ("best", "best_improvement"):
        return BestImprovement()
    if name in ("random", "random_improvement"):
        return RandomImprovement(seed)
    if name == "scripted":
        if script is None:
            raise ValueError("the scripted rule needs a move list")
        return Scripted(script)
    raise ValueError(f"unknown pivot rule {name!r}")


def init_clustering(
    points: PointSet,
    k: int,
    strategy: str = "balanced_random",
    seed: int = 0,
    assignment: Optional[Sequence[int]] = None,
) -> Clustering:
    """Starting clustering.

    ``balanced_random`` deals a seeded shuffle of the point ids round-robin
    onto the ``k`` clusters; ``given`` validates and uses ``assignment``.
    """
    n = len(points)
    if not 1 <= k <= n:
        raise InvariantError(f"need 1 <= k <= n, got k={k}, n={n}")
    strategy = strategy.lower()
    if strategy == "given":
        if assignment is None:
            raise InvariantError("the given strategy needs an assignment")
        return Clustering.from_assignment(points, assignment, k)
    if strategy != "balanced_random":
        raise ValueError(f"unknown init strategy {strategy!r}")
    order = list(range(n))
    random.Random(seed).shuffle(order)
    assign = [0] * n
    for j, x in enumerate(order):
        assign[x] = j % k
    return Clustering.from_assignment(points, assign, k)


def hw_step(
    clustering: Clustering,
    points: PointSet,
    rule: PivotRule,
    current_potential=None,
) -> Optional[Move]:
    """Apply one improving move chosen by ``rule``; return it, or ``None``."""
    if current_potential is None and not points.exact:
        current_potential = potential(clustering, points)
    threshold = improvement_threshold(points.exact, current_potential)
    mv = rule.select(clustering, points, threshold)
    if mv is not None:
        clustering.move(mv.point, mv.dst, points[mv.point])
    return mv


@dataclass
class Trace:
    moves: list
    initial_potential: Scalar
    final_potential: Scalar
    iterations: int
    terminated: Termination
    clustering: Optional[Clustering] = field(default=None, repr=False)

    @property
    def total_gain(self):
        return sum((m.gain for m in self.moves), 0)


def hw_run(
    points: PointSet,
    init: Clustering,
    rule: PivotRule,
    max_iters: Optional[int] = None,
    callback: Optional[Callable[[int, Move, Clustering], None]] = None,
) -> Trace:
    """Run Hartigan-Wong iterations until no improving move remains.

    ``init`` is not modified; the final clustering is returned on the trace.
    ``callback(index, move, clustering)`` is called after each applied move.
    """
    if max_iters is None:
        max_iters = default_max_iters(init.k, points.dim)
    clustering = init.copy()
    phi0 = potential(clustering, points)
    phi = phi0
    moves = []
    terminated = Termination.LOCAL_OPT
    while True:
        if len(moves) >= max_iters:
            terminated = Termination.MAX_ITERS
            break
        mv = hw_step(clustering, points, rule, phi)
        if mv is None:
            if rule.exhausted:
                terminated = Termination.SCRIPT_EXHAUSTED
            break
        phi = phi - mv.gain
        moves.append(mv)
        if callback is not None:
            callback(len(moves) - 1, mv, clustering)
    return Trace(
        moves=moves,
        initial_potential=phi0,
        final_potential=potential(clustering, points),
        iterations=len(moves),
        terminated=terminated,
        clustering=clustering,
    )


def is_hw_local_opt(clustering: Clustering, points: PointSet, threshold=None) -> bool:
    """True iff no single-point move has gain above the improvement threshold."""
    if threshold is None:
        current = None if points.exact else potential(clustering, points)
        threshold = improvement_threshold(points.exact, current)
    return next(_candidates(clustering, points, threshold), None) is None


def is_lloyd_local_opt(clustering: Clustering, points: PointSet) -> bool:
    """True iff every point is (one of) closest to its own cluster's center."""
    centers = clustering.centers()
    for x, c in enumerate(clustering.assign):
        own = sqdist(points[x], centers[c])
        if any(sqdist(points[x], centers[j]) < own for j in range(clustering.k)):
            return False
    return True


@dataclass
class LloydTrace:
    rounds: list  # (assignment tuple, centers) after each round that changed something
    assign: list
    centers: list
    iterations: int
    converged: bool


def _lloyd_centers(points: PointSet, assign, k, old_centers):
    sums = [[points.zero] * points.dim for _ in range(k)]
    counts = [0] * k
    for x, c in enumerate(assign):
        counts[c] += 1
        for j, v in enumerate(points[x]):
            sums[c][j] += v
    out = []
    for i in range(k):
        if counts[i] == 0:
            out.append(old_centers[i])  # stale center, never reseeded
        else:
            out.append(tuple(s / counts[i] for s in sums[i]))
    return out


def lloyd_run(points: PointSet, init, max_iters: int = 10_000) -> LloydTrace:
    """Lloyd's method from ``init`` (a Clustering or an assignment list).

    Each round reassigns every point to its nearest center, keeping the
    current cluster on ties, then moves centers to centroids. Stops when a
    round changes nothing.
    """
    if isinstance(init, Clustering):
        k, assign = init.k, list(init.assign)
        centers = init.centers()
    else:
        assign = list(init)
        k = max(assign) + 1
        centers = _lloyd_centers(points, assign, k, [None] * k)
    rounds = []
    converged = False
    while len(rounds) < max_iters:
        new = []
        for x, c in enumerate(assign):
            p = points[x]
            dists = [sqdist(p, ctr) for ctr in centers]
            best = min(dists)
            new.append(c if dists[c] == best else dists.index(best))
        if new == assign:
            converged = True
            break
        assign = new
        centers = _lloyd_centers(points, assign, k, centers)
        rounds.append((tuple(assign), list(centers)))
    return LloydTrace(rounds, assign, centers, len(rounds), converged)


def lloyd_potential(points: PointSet, assign, centers) -> Scalar:
    return sum((sqdist(points[x], centers[c]) for x, c in enumerate(assign)), points.zero)

