"""Exponential-length Hartigan-Wong runs on the line.

The instance is built from ``m`` gadgets. Gadget ``G_0`` (the leaf) is the
single point ``f`` with one cluster; every other gadget ``G_i`` is a scaled
and translated copy of the four-point unit gadget ``{a, b, p, q}`` with two
clusters ``C0(G_i)`` and ``C1(G_i)``. Gadgets wake each other up in a
binary-counter fashion, giving an improving sequence of at least
``2**(m-1)`` moves. Everything here is exact rational arithmetic.

Point ids: ``f`` is 0, and role ``r`` of gadget ``i`` is
``1 + 4*(i-1) + "abpq".index(r)``. Cluster ids: the leaf cluster is 0,
``C0(G_i)`` is ``2i-1`` and ``C1(G_i)`` is ``2i``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from hartigan_lab.geometry import Clustering, PointSet, set_gain
from hartigan_lab.local_search import Scripted, hw_run, is_hw_local_opt

UNIT = {"a": 9, "b": 6, "p": 5, "q": 13}
LEAF = 0
SHIFT = 8  # translation between consecutive gadgets at unit scale
SCALE = 5
ROLES = "abpq"
MAX_M = 32


def gadget_point(i: int, role: str) -> Fraction:
    """Coordinate of ``role`` in gadget ``G_i``.

    ``G_1`` is the unit gadget itself and ``x_{i+1} = 5 x_i + 8``, i.e.
    ``x_i = 5**(i-1) * unit + 2 * (5**(i-1) - 1)``.
    """
    if i < 1:
        raise ValueError(f"gadget index must be >= 1, got {i}")
    if role not in UNIT:
        raise ValueError(f"unknown role {role!r}")
    s = SCALE ** (i - 1)
    # sum_{j<i-1} 8 * 5**j == 2 * (5**(i-1) - 1)
    return Fraction(s * UNIT[role] + 2 * (s - 1))


def point_id(role: str, i: int = 0) -> int:
    if role == "f":
        return 0
    return 1 + 4 * (i - 1) + ROLES.index(role)


def c0(i: int) -> int:
    return 0 if i == 0 else 2 * i - 1


def c1(i: int) -> int:
    if i == 0:
        raise ValueError("the leaf gadget has a single cluster")
    return 2 * i


def _parking(i: int) -> int:
    """Cluster that houses ``p_i`` while ``G_i`` is asleep."""
    return c0(0) if i == 1 else c1(i - 1)


class GadgetState(str, enum.Enum):
    ASLEEP = "ASLEEP"
    MORNING = "MORNING"
    AFTERNOON = "AFTERNOON"
    AWAKE = "AWAKE"  # leaf only


@dataclass
class GadgetInstance:
    m: int
    points: PointSet
    roles: list
    k: int
    initial: Clustering

    @property
    def n(self) -> int:
        return len(self.points)

    def role(self, x: int) -> str:
        return self.roles[x]


def build_instance(m: int, max_m: int = MAX_M) -> GadgetInstance:
    """Points and starting clustering for ``m`` gadgets (n = 4m-3, k = 2m-1).

    ``G_{m-1}`` starts in the morning state and every other gadget is
    asleep. An asleep ``G_i`` parks ``p_i`` in ``C1(G_{i-1})`` (``p_1`` in
    the leaf cluster).
    """
    if m < 2:
        raise ValueError("m must be ≥ 2")
    if m > max_m:
        raise ValueError(f"m must be ≤ {max_m}")
    coords = [(Fraction(0),)]
    roles = ["f"]
    for i in range(1, m):
        for r in ROLES:
            coords.append((gadget_point(i, r),))
            roles.append(f"{r}{i}")
    n, k = len(coords), 2 * m - 1
    assign = [0] * n
    top = m - 1
    for i in range(1, m):
        assign[point_id("a", i)] = c1(i)
        assign[point_id("b", i)] = c0(i)
        if i == top:
            assign[point_id("p", i)] = c0(i)
            assign[point_id("q", i)] = c0(i)
        else:
            assign[point_id("p", i)] = _parking(i)
            assign[point_id("q", i)] = c1(i)
    points = PointSet(tuple(coords), 1, True)
    return GadgetInstance(m, points, roles, k, Clustering.from_assignment(points, assign, k))


class Phase(str, enum.Enum):
    """Fine-grained per-gadget phases driving the script generator."""

    ASLEEP = "ASLEEP"
    MORNING = "MORNING"
    MORNING_WAIT = "MORNING_WAIT"  # p_i lent to G_{i-1}, waiting for it back
    RETURNED = "RETURNED"  # p_i is back in C1(G_i); q_i moves next
    AFTERNOON = "AFTERNOON"
    WAKE_PULL = "WAKE_PULL"  # p_i comes home to C0(G_i)
    WAKE_Q = "WAKE_Q"  # q_i moves C1 -> C0
    WAKE_RETURN = "WAKE_RETURN"  # p_{i+1} goes back to C1(G_{i+1})
    HOLDING = "HOLDING"  # morning contents but still holding p_{i+1}
    LEAF_WAKE = "LEAF_WAKE"



@dataclass(frozen=True)
class ScriptMove:
    point: int
    src: int
    dst: int
    role: str
    events: tuple = ()  # (gadget, Phase) entered as a result of this move

    def __iter__(self):
        return iter((self.point, self.src, self.dst))


def scripted_sequence(m: int) -> list:
    """The improving move sequence, ending when ``G_{m-1}`` falls asleep.

    Driver: a wakeup in progress always runs to completion first; otherwise
    the awake gadget with the smallest index whose watched neighbour is
    asleep wakes it up.
    """
    if m < 2:
        raise ValueError("m must be ≥ 2")
    top = m - 1
    phase = {i: Phase.ASLEEP for i in range(m)}
    phase[top] = Phase.MORNING
    if m > 2:
        phase[LEAF] = Phase.HOLDING  # p_1 is parked in the leaf cluster
    waker_morning = {}
    where = {}  # current cluster of every p_i
    for i in range(1, m):
        where[i] = c0(i) if i == top else _parking(i)
    moves = []

    def emit(role, i, dst, events):
        x = point_id(role, i)
        if role == "p":
            src = where[i]
            where[i] = dst
        elif role == "q":
            src = c1(i) if dst == c0(i) else c0(i)
        else:  # pragma: no cover - only p and q ever move
            raise AssertionError(role)
        for g, ph in events:
            phase[g] = ph
        moves.append(ScriptMove(x, src, dst, f"{role}{i}", tuple(events)))

    def step():
        for i in range(m):
            ph = phase[i]
            if ph == Phase.LEAF_WAKE:
                if waker_morning[0]:
                    emit("p", 1, c1(1), [(0, Phase.ASLEEP), (1, Phase.RETURNED)])
                else:
                    phase[0] = Phase.HOLDING
                return
            if ph == Phase.WAKE_PULL:
                ev = [(i, Phase.WAKE_Q)]
                if i == 1:
                    ev.append((0, Phase.ASLEEP))
                elif phase[i - 1] == Phase.HOLDING:
                    ev.append((i - 1, Phase.MORNING))
                emit("p", i, c0(i), ev)
                return
            if ph == Phase.WAKE_Q:
                nxt = Phase.WAKE_RETURN if waker_morning[i] else Phase.HOLDING
                emit("q", i, c0(i), [(i, nxt)])
                return
            if ph == Phase.WAKE_RETURN:
                emit("p", i + 1, c1(i + 1), [(i, Phase.MORNING), (i + 1, Phase.RETURNED)])
                return
            if ph == Phase.RETURNED:
                emit("q", i, c1(i), [(i, Phase.AFTERNOON)])
                return
        for i in range(1, m):
            ph = phase[i]
            if ph not in (Phase.MORNING, Phase.AFTERNOON) or phase[i - 1] != Phase.ASLEEP:
                continue
            w = i - 1
            morning = ph == Phase.MORNING
            waker_morning[w] = morning
            wake = Phase.LEAF_WAKE if w == LEAF else Phase.WAKE_PULL
            own = Phase.MORNING_WAIT if morning else Phase.ASLEEP
            emit("p", i, c0(w) if w == LEAF else c1(w), [(w, wake), (i, own)])
            return
        raise RuntimeError(f"gadget script stuck in phases {phase}")

    while phase[top] != Phase.ASLEEP:
        step()
    return moves


def expected_contents(inst: GadgetInstance, i: int, ph: Phase):
    """Exact (C0, C1) point-id sets a gadget must hold on entering ``ph``.

    Returns ``None`` for phases that are not checked.
    """
    if i == LEAF:
        f = point_id("f")
        if ph == Phase.ASLEEP:
            return ({f},)
        if ph == Phase.HOLDING:
            return ({f, point_id("p", 1)},)
        return None
    a, b, p, q = (point_id(r, i) for r in ROLES)
    if ph == Phase.ASLEEP:
        return {b}, {a, q}
    if ph == Phase.MORNING:
        return {p, q, b}, {a}
    if ph == Phase.AFTERNOON:
        return {b}, {p, q, a}
    if ph == Phase.HOLDING:
        return {p, q, b}, {a, point_id("p", i + 1)}
    return None


def gadget_state(inst: GadgetInstance, clustering: Clustering, i: int) -> Optional[GadgetState]:
    """Classify a gadget's clusters as asleep/morning/afternoon (leaf: asleep/awake)."""
    if i == LEAF:
        return GadgetState.ASLEEP if clustering.members(0) == [0] else GadgetState.AWAKE
    # only the gadget's own points count; a parked neighbour point is ignored
    own = {point_id(r, i) for r in ROLES}
    got = (own & set(clustering.members(c0(i))), own & set(clustering.members(c1(i))))
    for state, ph in (
        (GadgetState.ASLEEP, Phase.ASLEEP),
        (GadgetState.MORNING, Phase.MORNING),
        (GadgetState.AFTERNOON, Phase.AFTERNOON),
    ):
        if got == expected_contents(inst, i, ph):
            return state
    return None


class PhaseMismatchError(AssertionError):
    pass


@dataclass
class VerificationReport:
    m: int
    n: int
    k: int
    moves: int
    gains: list
    min_gain: Optional[Fraction]
    initial_potential: Fraction
    final_potential: Fraction
    final_is_local_opt: Optional[bool]
    phase_checks: int
    terminated: str
    min_cluster_size: int = 1
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(g > 0 for g in self.gains) and self.min_cluster_size >= 1

    def to_dict(self) -> dict:
        def frac(v):
            return None if v is None else f"{v.numerator}/{v.denominator}"

        return {
            "m": self.m,
            "n": self.n,
            "k": self.k,
            "moves": self.moves,
            "all_gains_positive": self.ok,
            "min_gain": frac(self.min_gain),
            "initial_potential": frac(self.initial_potential),
            "final_potential": frac(self.final_potential),
            "final_is_local_opt": self.final_is_local_opt,
            "phase_checks": self.phase_checks,
            "terminated": self.terminated,
            "min_cluster_size": self.min_cluster_size,
        }


def verify_sequence(
    inst: GadgetInstance,
    moves: Optional[list] = None,
    check_phases: bool = True,
    check_local_opt: bool = True,
    on_move=None,
) -> VerificationReport:
    """Replay ``moves`` exactly from the instance's start and certify every gain.

    Raises :class:`ScriptInvalidError` at the first move whose exact gain is
    not positive, or that does not match the current clustering. When the
    moves carry phase events, gadget contents are checked at each phase
    boundary. ``on_move(index, move)`` sees every certified move as it is
    replayed, which lets callers stream the trace.
    """
    if moves is None:
        moves = scripted_sequence(inst.m)
    checks = 0
    min_size = min(inst.initial.size)

    def replayed(idx, mv, clustering):
        nonlocal checks, min_size
        min_size = min(min_size, min(clustering.size))
        if on_move is not None:
            on_move(idx, mv)
        if not check_phases:
            return
        for g, ph in getattr(moves[idx], "events", ()):
            want = expected_contents(inst, g, ph)
            if want is None:
                continue
            got = (set(clustering.members(0)),) if g == LEAF else (
                set(clustering.members(c0(g))),
                set(clustering.members(c1(g))),
            )
            if got != want:
                raise PhaseMismatchError(
                    f"after move #{idx}: gadget {g} entering {ph.value} holds {got}, expected {want}"
                )
            checks += 1

    trace = hw_run(inst.points, inst.initial, Scripted(moves), max_iters=len(moves) + 1, callback=replayed)
    gains = [mv.gain for mv in trace.moves]
    local_opt = is_hw_local_opt(trace.clustering, inst.points) if check_local_opt else None
    return VerificationReport(
        m=inst.m,
        n=inst.n,
        k=inst.k,
        moves=len(gains),
        gains=gains,
        min_gain=min(gains) if gains else None,
        initial_potential=trace.initial_potential,
        final_potential=trace.final_potential,
        final_is_local_opt=local_opt,
        phase_checks=checks,
        terminated=trace.terminated.value,
        min_cluster_size=min_size,
    )


def appendix_inequalities() -> list:
    """The ten distinct gain inequalities the gadget construction relies on.

    Evaluated at unit scale: ``G_i`` is the unit gadget, its left neighbour
    has coordinates ``(x - 8) / 5`` and its right neighbour ``5x + 8``;
    the leaf point sits at 0. Returns ``(name, exact gain)`` pairs.
    """
    vals = {r: Fraction(v) for r, v in UNIT.items()}
    labels = ["a", "b", "p", "q", "a-", "q-", "p+", "f"]
    coords = [
        vals["a"],
        vals["b"],
        vals["p"],
        vals["q"],
        (vals["a"] - SHIFT) / SCALE,
        (vals["q"] - SHIFT) / SCALE,
        SCALE * vals["p"] + SHIFT,
        Fraction(0),
    ]
    pts = PointSet(tuple((c,) for c in coords), 1, True)
    ix = {lab: j for j, lab in enumerate(labels)}

    def gain(x, src, dst):
        S = [ix[s] for s in src]
        T = [ix[t] for t in dst]
        name = f"D_{x}({{{','.join(src)}}},{{{','.join(dst)}}})"
        return name, set_gain(ix[x], S, T, pts)

    return [
        gain("p", ["p", "q", "b"], ["a-", "q-"]),
        gain("p", ["a-", "p"], ["a"]),
        gain("q", ["b", "q"], ["a", "p"]),
        gain("p", ["a", "p", "q"], ["a-", "q-"]),
        gain("p", ["a-", "p"], ["b"]),
        gain("q", ["a", "q", "p+"], ["p", "b"]),
        gain("p", ["p", "q", "b"], ["f"]),
        gain("p", ["f", "p"], ["a"]),
        gain("p", ["a", "p", "q"], ["f"]),
        gain("p", ["f", "p"], ["b"]),
    ]
