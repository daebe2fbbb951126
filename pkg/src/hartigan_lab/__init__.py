"""Hartigan-Wong k-means local search laboratory.

Exact/float k-means geometry, Hartigan-Wong and Lloyd local search, the
exponential gadget instance on the line with an exact verifier, and a
smoothed-analysis experiment harness.
"""

from hartigan_lab.geometry import (
    Clustering,
    InvariantError,
    PointSet,
    center_of_mass,
    gain_with_centers,
    merge_delta,
    move_gain,
    potential,
    set_gain,
)
from hartigan_lab.local_search import (
    BestImprovement,
    FirstImprovement,
    Move,
    RandomImprovement,
    Scripted,
    ScriptInvalidError,
    Trace,
    hw_run,
    hw_step,
    init_clustering,
    is_hw_local_opt,
    is_lloyd_local_opt,
    lloyd_run,
)

__version__ = "0.1.0"

__all__ = [
    "BestImprovement",
    "Clustering",
    "FirstImprovement",
    "InvariantError",
    "Move",
    "PointSet",
    "RandomImprovement",
    "ScriptInvalidError",
    "Scripted",
    "Trace",
    "center_of_mass",
    "gain_with_centers",
    "hw_run",
    "hw_step",
    "init_clustering",
    "is_hw_local_opt",
    "is_lloyd_local_opt",
    "lloyd_run",
    "merge_delta",
    "move_gain",
    "potential",
    "set_gain",
]
