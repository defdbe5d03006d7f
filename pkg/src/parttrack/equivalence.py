"""Random frame problems and the branch-and-bound vs. enumeration check."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .core import TRACKED_PARTS, Detection
from .ilp import AssignmentProblem, branch_and_bound, build_problem, check_feasible, exhaustive_oracle


def random_problem(rng: np.random.Generator, max_targets: int = 3, max_detections: int = 5,
                   beta: float = 0.1 / (480 * 640)) -> AssignmentProblem:
    """A random frame with up to ``max_targets`` targets and ``max_detections``
    detections per part type, and costs on the scale a real frame produces."""
    target_types, detections = [], []
    for part in TRACKED_PARTS:
        target_types += [part] * int(rng.integers(0, max_targets + 1))
        for _ in range(int(rng.integers(0, max_detections + 1))):
            cx, cy = rng.uniform(20, 200, size=2)
            detections.append(Detection.from_center(len(detections), 0, part, cx, cy, 20, 18,
                                                    rng.uniform(0.05, 1.0)))
    N, M = len(target_types), len(detections)
    motion = rng.normal(-8.0, 4.0, size=(N, M))
    geo = np.where(rng.random(M) < 0.3, math.log(1e-4), rng.normal(-4.0, 1.5, size=M))
    aff = np.exp(rng.uniform(math.log(1e-4), math.log(1e4), size=(M, M)))
    aff = np.sqrt(aff * aff.T)
    return build_problem(target_types, detections, geo, motion, aff, math.log(beta))


@dataclass
class EquivalenceReport:
    instances: int
    mismatches: int
    infeasible: int
    max_abs_diff: float
    bound_violations: int
    seconds: float

    @property
    def passed(self) -> bool:
        return self.mismatches == 0 and self.infeasible == 0 and self.bound_violations == 0


def trace_is_monotone(trace, tol: float = 1e-9) -> bool:
    lows = [lo for lo, _ in trace]
    ups = [up for _, up in trace]
    ok = all(b >= a - tol for a, b in zip(lows, lows[1:]))
    ok &= all(b <= a + tol for a, b in zip(ups, ups[1:]))
    return ok and abs(ups[-1] - lows[-1]) <= tol


def run_equivalence(n_instances: int = 200, seed: int = 0, max_targets: int = 3,
                    max_detections: int = 5) -> EquivalenceReport:
    rng = np.random.default_rng(seed)
    problems = [random_problem(rng, max_targets, max_detections) for _ in range(n_instances)]
    mismatches = infeasible = bound_bad = 0
    worst = 0.0
    elapsed = 0.0
    for problem in problems:
        start = time.perf_counter()
        sol = branch_and_bound(problem)
        ok, _ = check_feasible(sol, problem)
        elapsed += time.perf_counter() - start
        ref = exhaustive_oracle(problem)
        diff = abs(sol.objective - ref.objective)
        worst = max(worst, diff)
        mismatches += diff > 1e-9
        infeasible += not ok
        bound_bad += not trace_is_monotone(sol.bound_trace)
    return EquivalenceReport(n_instances, mismatches, infeasible, worst, bound_bad, elapsed)
