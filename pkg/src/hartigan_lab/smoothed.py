"""Gaussian perturbation, smoothed running-time sweeps and numeric checks of
the approximation lemmas used in the smoothed analysis.

Sampling is counter-based (Philox keyed by a per-trial seed), so every
trial is reproducible on its own and trials can run in any order or in
parallel without shared generator state.
"""

from __future__ import annotations

import csv
import io
import math
import os
import struct
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from hartigan_lab.geometry import Clustering, PointSet, gain_with_centers, move_gain
from hartigan_lab.local_search import hw_run, init_clustering, make_rule

CSV_HEADER = [
    "sigma",
    "trial",
    "seed",
    "iterations",
    "initial_potential",
    "final_potential",
    "terminated",
    "wall_time_ms",
]
THREADS_ENV = "HARTIGAN_LAB_THREADS"


@dataclass(frozen=True)
class PerturbationConfig:
    sigma: float
    seed: int = 0
    trials: int = 1
    rescale: bool = True

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


def gaussian_block(seed: int, n: int, d: int) -> np.ndarray:
    """Standard normals for ``n`` points in ``d`` dims from a Philox stream.

    Entry ``[i, j]`` is always the ``(i*d + j)``-th draw of the stream keyed
    by ``seed``, whatever ``n`` is.
    """
    gen = np.random.Generator(np.random.Philox(key=seed % 2**64))
    return gen.standard_normal((n, d))


def perturb(points: PointSet, sigma: float, seed: int, rescale: bool = True) -> PointSet:
    """Add independent ``N(0, sigma^2 I)`` noise to every point (float mode).

    With ``rescale`` and ``sigma > 1`` the input is scaled by ``1/sigma`` and
    perturbed with ``sigma = 1`` instead, which leaves iteration counts of
    scale-invariant algorithms unchanged.
    """
    base = np.array([[float(c) for c in p] for p in points], dtype=float)
    if rescale and sigma > 1:
        base = base / sigma
        sigma = 1.0
    if sigma == 0:
        out = base
    else:
        out = base + sigma * gaussian_block(seed, *base.shape)
    return PointSet(tuple(tuple(float(v) for v in row) for row in out), points.dim, False)


def normalize_unit_box(points: PointSet) -> PointSet:
    """Translate and uniformly scale so the points fit in ``[0, 1]^d``."""
    arr = np.array([[float(c) for c in p] for p in points], dtype=float)
    lo = arr.min(axis=0)
    span = float((arr.max(axis=0) - lo).max())
    arr = arr - lo
    if span > 0:
        arr = arr / span
    return PointSet(tuple(tuple(float(v) for v in row) for row in arr), points.dim, False)


def box_bound(n: int, k: int, d: int) -> float:
    """Side length ``D = sqrt(2 n ln(nkd))`` of the box perturbed points stay in w.h.p."""
    if min(n, k, d) < 1:
        raise ValueError("n, k, d must be positive")
    if n * k * d < 3:
        raise ValueError("need n*k*d >= 3 so that ln(nkd) > 0")
    return math.sqrt(2 * n * math.log(n * k * d))


def _norm(v) -> float:
    return math.sqrt(float(sum(c * c for c in v)))


def check_approx_gain(
    x: int,
    src: int,
    dst: int,
    clustering: Clustering,
    points: PointSet,
    c_src,
    c_dst,
    eps: float,
    D: Optional[float] = None,
):
    """Compare the true gain with the gain computed from approximate centers.

    Returns ``(lhs, bound, ok)`` with ``lhs = |gain - approx gain|`` and
    ``bound = 9 sqrt(d) D eps``.
    """
    d = points.dim
    if D is None:
        D = box_bound(len(points), clustering.k, d)
    if eps < 0 or eps > math.sqrt(d) * D:
        raise ValueError(f"eps={eps} outside [0, sqrt(d)*D]")
    slack = 0 if points.exact else 1e-12 * max(1.0, eps)
    for name, approx, i in (("source", c_src, src), ("target", c_dst, dst)):
        err = _norm([a - b for a, b in zip(approx, clustering.center(i))])
        if err > eps + slack:
            raise ValueError(f"{name} center approximation is {err} away, more than eps={eps}")
    exact_gain = move_gain(x, src, dst, clustering, points)
    approx_gain = gain_with_centers(
        points[x], c_src, c_dst, clustering.size[src], clustering.size[dst]
    )
    lhs = abs(float(exact_gain - approx_gain))
    bound = 9 * math.sqrt(d) * D * eps
    return lhs, bound, lhs <= bound


def update_center_approx(c_old, size_old: int, size_new: int, gained=(), lost=()):
    """Move an approximate center along with the points a cluster gains and loses.

    ``c_new = (size_old/size_new) c_old + (sum(gained) - sum(lost)) / size_new``;
    the approximation error shrinks or grows by exactly ``size_old/size_new``.
    """
    if size_new < 1:
        raise ValueError(f"cluster would have size {size_new}")
    if size_new != size_old + len(gained) - len(lost):
        raise ValueError("size_new does not match the gained and lost points")
    exact = isinstance(c_old[0], Fraction)
    scale = Fraction(size_old, size_new) if exact else size_old / size_new
    out = []
    for j, c in enumerate(c_old):
        delta = sum(p[j] for p in gained) - sum(p[j] for p in lost)
        out.append(scale * c + (Fraction(delta) / size_new if exact else delta / size_new))
    return tuple(out)


def anticoncentration_mc(
    a: float,
    v: Sequence[float],
    mu: Sequence[float],
    sigma: float,
    eps: float,
    interval_center: float,
    trials: int = 10**4,
    seed: int = 0,
) -> float:
    """Monte Carlo estimate of ``P(Z in [c, c+eps])`` for ``Z = a|X|^2 + <v, X>``,
    ``X ~ N(mu, sigma^2 I)``."""
    if a == 0:
        raise ValueError("a must be nonzero")
    if trials < 10**4:
        raise ValueError("use at least 10^4 trials")
    v = np.asarray(v, dtype=float)
    mu = np.asarray(mu, dtype=float)
    X = mu + sigma * gaussian_block(seed, trials, len(mu))
    Z = a * np.einsum("ij,ij->i", X, X) + X @ v
    hits = (Z >= interval_center) & (Z <= interval_center + eps)
    return float(hits.mean())


@dataclass
class SweepRow:
    sigma: float
    trial: int
    seed: int
    iterations: int
    initial_potential: float
    final_potential: float
    terminated: str
    wall_time_ms: float


@dataclass
class SweepResult:
    rows: list
    config: dict = field(default_factory=dict)

    def to_csv(self, timing: bool = False) -> str:
        """CSV text. Without ``timing`` the wall-time column is left blank so
        that seeded runs produce identical bytes."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow(
                [
                    repr(r.sigma),
                    r.trial,
                    r.seed,
                    r.iterations,
                    repr(r.initial_potential),
                    repr(r.final_potential),
                    r.terminated,
                    f"{r.wall_time_ms:.3f}" if timing else "",
                ]
            )
        return buf.getvalue()

    def iterations(self, sigma: float) -> list:
        return [r.iterations for r in self.rows if r.sigma == sigma]


def trial_seed(seed: int, sigma: float, trial: int) -> int:
    """Per-trial 64-bit seed, independent of the order sigmas are listed in."""
    sigma_bits = struct.unpack("<Q", struct.pack("<d", float(sigma)))[0]
    ss = np.random.SeedSequence([seed % 2**64, sigma_bits, trial])
    return int(ss.generate_state(1, np.uint64)[0])


def _default_workers() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _run_trial(job):
    (sigma, trial, seed, coords, dim, k, rule, init, assignment, script, max_iters, rescale) = job
    base = PointSet(coords, dim, False)
    pts = base if sigma == 0 else perturb(base, sigma, seed, rescale)
    if init == "given":
        start = init_clustering(pts, k, "given", assignment=assignment)
    else:
        start = init_clustering(pts, k, "balanced_random", seed=seed)
    t0 = time.perf_counter()
    trace = hw_run(pts, start, make_rule(rule, seed=seed, script=script), max_iters=max_iters)
    wall = (time.perf_counter() - t0) * 1000.0
    return SweepRow(
        sigma=float(sigma),
        trial=trial,
        seed=seed,
        iterations=trace.iterations,
        initial_potential=float(trace.initial_potential),
        final_potential=float(trace.final_potential),
        terminated=trace.terminated.value,
        wall_time_ms=wall,
    )


def smoothed_sweep(
    base,
    k: Optional[int],
    sigmas: Sequence[float],
    trials: int = 20,
    seed: int = 0,
    rule: str = "first",
    init: Optional[str] = None,
    max_iters: Optional[int] = None,
    workers: Optional[int] = None,
    rescale: bool = True,
) -> SweepResult:
    """Perturb ``base`` and run Hartigan-Wong for every sigma and trial.

    ``base`` is a PointSet in ``[0,1]^d`` or a gadget instance. A gadget is
    first normalised to the unit box and started from its scripted initial
    clustering. ``sigma == 0`` is an unperturbed control row; only there may
    ``rule == "scripted"`` replay the gadget script.
    """
    from hartigan_lab.lower_bound import GadgetInstance, scripted_sequence

    script = None
    assignment = None
    if isinstance(base, GadgetInstance):
        inst = base
        points = normalize_unit_box(inst.points)
        k = inst.k
        assignment = list(inst.initial.assign)
        init = init or "given"
        if rule == "scripted":
            script = [tuple(mv) for mv in scripted_sequence(inst.m)]
    else:
        points = base if not base.exact else base.as_float()
        init = init or "balanced_random"
        if rule == "scripted":
            raise ValueError("the scripted rule needs a gadget instance")
        if k is None:
            raise ValueError("k is required for a plain point set")
    if rule == "scripted" and any(s != 0 for s in sigmas):
        raise ValueError("scripted replay is only defined for the unperturbed control (sigma=0)")
    if any(s < 0 for s in sigmas):
        raise ValueError("sigmas must be non-negative")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    jobs = []
    for sigma in sigmas:
        for t in range(trials):
            s = trial_seed(seed, sigma, t)
            jobs.append(
                (float(sigma), t, s, points.coords, points.dim, k, rule, init, assignment, script, max_iters, rescale)
            )
    workers = workers or _default_workers()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_run_trial, jobs))
    else:
        rows = [_run_trial(j) for j in jobs]
    rows.sort(key=lambda r: (r.sigma, r.trial))
    config = {
        "k": k,
        "sigmas": [float(s) for s in sigmas],
        "trials": trials,
        "seed": seed,
        "rule": rule,
        "init": init,
        "max_iters": max_iters,
        "rescale": rescale,
    }
    return SweepResult(rows, config)


def rows_as_dicts(result: SweepResult) -> list:
    return [asdict(r) for r in result.rows]
