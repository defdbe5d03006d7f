"""Joint target-assignment / part-association 0-1 program.

The binary vector is ``[theta, gamma]`` laid out by :class:`VariableLayout`.
Constraints:

(a) every real detection goes to at most one target,
(b) every target takes exactly one candidate, the fake one included,
(c) targets only take detections of their own part type,
(d) an association ``gamma(m, m2)`` needs both ``m`` and ``m2`` assigned.

(c) and the meaningless self-associations are encoded as zero upper bounds
rather than rows.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import Detection, PartType, VariableLayout
from .simplex import solve_lp

INTEGRALITY_TOL = 1e-6
GAP_TOL = 1e-9


class InfeasibleProblem(ValueError):
    """The 0-1 program (or a branch-and-bound subproblem) has no solution."""


@dataclass(frozen=True)
class AssignmentProblem:
    layout: VariableLayout
    cost: np.ndarray
    upper: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    target_types: tuple[PartType, ...]
    detection_types: tuple[PartType, ...]
    row_names: tuple[str, ...] = ()

    def __post_init__(self):
        if not np.all(np.isfinite(self.cost)):
            raise ValueError("cost vector must be finite")
        for arr in (self.cost, self.upper, self.A_ub, self.b_ub, self.A_eq, self.b_eq):
            arr.setflags(write=False)

    @property
    def size(self) -> int:
        return self.layout.size

    def all_fake(self) -> np.ndarray:
        x = np.zeros(self.size, dtype=int)
        for n in range(self.layout.n_targets):
            x[self.layout.theta(n, 0)] = 1
        return x


@dataclass
class Solution:
    assignment: np.ndarray
    objective: float
    node_count: int = 0
    bound_trace: list[tuple[float, float]] = field(default_factory=list)

    def assigned(self, layout: VariableLayout) -> list[int]:
        """Detection index ``m`` (1-based, 0 for fake) chosen by each target."""
        out = []
        for n in range(layout.n_targets):
            row = [self.assignment[layout.theta(n, m)] for m in range(layout.n_detections + 1)]
            out.append(int(np.argmax(row)))
        return out

    def gamma_pairs(self, layout: VariableLayout) -> list[tuple[int, int]]:
        M = layout.n_detections
        return [(m, m2) for m in range(1, M + 1) for m2 in range(1, M + 1)
                if self.assignment[layout.gamma(m, m2)]]


def _types_of(items) -> tuple[PartType, ...]:
    return tuple(t if isinstance(t, PartType) else t.part_type for t in items)


def build_problem(
    targets: Sequence,
    detections: Sequence[Detection],
    geo_scores,
    motion_loglik,
    affinities,
    log_beta: float,
) -> AssignmentProblem:
    """Assemble costs and constraints for one frame.

    ``targets`` are target states (or bare part types); ``geo_scores`` and
    ``motion_loglik`` are ``(N, M)`` arrays of log values (``geo_scores`` may
    be ``(M,)``); ``affinities`` is an ``(M, M)`` array of association scores
    whose diagonal is ignored. ``log_beta`` is the log clutter density.
    """
    if not math.isfinite(log_beta):
        raise ValueError("log clutter density must be finite (beta > 0)")
    target_types = _types_of(targets)
    det_types = _types_of(detections)
    if any(t.is_body for t in det_types):
        raise ValueError("body detections do not enter the assignment problem")
    N, M = len(target_types), len(det_types)
    lay = VariableLayout(N, M)
    geo = np.broadcast_to(np.asarray(geo_scores, dtype=float).reshape(-1, M) if M else np.zeros((1, 0)), (N, M))
    mot = np.asarray(motion_loglik, dtype=float).reshape(N, M)
    aff = np.asarray(affinities, dtype=float).reshape(M, M)
    conf = np.array([d.confidence for d in detections], dtype=float) if M else np.zeros(0)

    cost = np.zeros(lay.size)
    upper = np.ones(lay.size)
    for n, tt in enumerate(target_types):
        cost[lay.theta(n, 0)] = -log_beta
        for m in range(1, M + 1):
            j = lay.theta(n, m)
            if det_types[m - 1] != tt:
                upper[j] = 0.0
                continue
            if conf[m - 1] <= 0:
                raise ValueError("assignable detections need positive confidence")
            value = -(geo[n, m - 1] + math.log(conf[m - 1]) + mot[n, m - 1])
            if not math.isfinite(value):
                raise ValueError(f"non-finite assignment cost for target {n}, detection {m}")
            cost[j] = value
    for m in range(1, M + 1):
        for m2 in range(1, M + 1):
            j = lay.gamma(m, m2)
            if m == m2:
                upper[j] = 0.0
                continue
            p = aff[m - 1, m2 - 1]
            if not p > 0 or not math.isfinite(p):
                raise ValueError(f"association score for ({m}, {m2}) must be positive and finite")
            cost[j] = -math.log(p)

    rows_ub, rhs_ub, names = [], [], []
    for m in range(1, M + 1):
        row = np.zeros(lay.size)
        for n in range(N):
            row[lay.theta(n, m)] = 1.0
        rows_ub.append(row)
        rhs_ub.append(1.0)
        names.append(f"a_det{m}")
    for m in range(1, M + 1):
        for m2 in range(1, M + 1):
            if m == m2:
                continue
            for end in (m, m2):
                row = np.zeros(lay.size)
                row[lay.gamma(m, m2)] = 1.0
                for n in range(N):
                    row[lay.theta(n, end)] = -1.0
                rows_ub.append(row)
                rhs_ub.append(0.0)
                names.append(f"d_s{m}_{m2}_det{end}")
    rows_eq, rhs_eq = [], []
    for n in range(N):
        row = np.zeros(lay.size)
        for m in range(M + 1):
            row[lay.theta(n, m)] = 1.0
        rows_eq.append(row)
        rhs_eq.append(1.0)
        names.append(f"b_tgt{n}")

    def stack(rows):
        return np.array(rows, dtype=float).reshape(len(rows), lay.size)

    return AssignmentProblem(
        layout=lay,
        cost=cost,
        upper=upper,
        A_ub=stack(rows_ub),
        b_ub=np.array(rhs_ub, dtype=float),
        A_eq=stack(rows_eq),
        b_eq=np.array(rhs_eq, dtype=float),
        target_types=target_types,
        detection_types=det_types,
        row_names=tuple(names),
    )


def check_feasible(solution, problem: AssignmentProblem) -> tuple[bool, list[str]]:
    """Check constraints (a)-(d) on a binary vector; returns ``(ok, violations)``."""
    x = solution.assignment if isinstance(solution, Solution) else np.asarray(solution)
    lay = problem.layout
    N, M = lay.n_targets, lay.n_detections
    problems = []
    if x.shape != (lay.size,):
        return False, [f"assignment has shape {x.shape}, expected ({lay.size},)"]
    if not np.all((x == 0) | (x == 1)):
        problems.append("assignment is not binary")
        return False, problems
    assigned = np.zeros(M + 1, dtype=int)
    for n in range(N):
        for m in range(M + 1):
            assigned[m] += x[lay.theta(n, m)]
    for m in range(1, M + 1):
        if assigned[m] > 1:
            problems.append(f"(a) detection {m} assigned to {assigned[m]} targets")
    for n in range(N):
        total = sum(x[lay.theta(n, m)] for m in range(M + 1))
        if total != 1:
            problems.append(f"(b) target {n} takes {total} candidates")
        for m in range(1, M + 1):
            if x[lay.theta(n, m)] and problem.detection_types[m - 1] != problem.target_types[n]:
                problems.append(f"(c) target {n} ({problem.target_types[n].value}) takes detection {m} "
                                f"({problem.detection_types[m - 1].value})")
    for m in range(1, M + 1):
        for m2 in range(1, M + 1):
            if not x[lay.gamma(m, m2)]:
                continue
            if m == m2:
                problems.append(f"self-association s_{m}^{m} is set")
            if not assigned[m] or not assigned[m2]:
                problems.append(f"(d) association ({m}, {m2}) links an unassigned detection")
    return not problems, problems


def lp_relax_solve(problem: AssignmentProblem, fixings: Mapping[int, int] | None = None) -> tuple[np.ndarray, float]:
    """Optimum of the box-relaxed program under ``fixings``.

    Raises :class:`InfeasibleProblem` when the restricted relaxation is empty.
    """
    lower = np.zeros(problem.size)
    upper = np.array(problem.upper, dtype=float)
    for j, v in (fixings or {}).items():
        if v not in (0, 1):
            raise ValueError(f"fixing for variable {j} must be 0 or 1")
        if v > upper[j]:
            raise InfeasibleProblem(f"variable {j} cannot be fixed to 1")
        lower[j] = upper[j] = v
    res = solve_lp(problem.cost, problem.A_ub, problem.b_ub, problem.A_eq, problem.b_eq, lower, upper)
    if not res.success:
        raise InfeasibleProblem(f"relaxation is {res.status}")
    return res.x, res.fun


def _branch_variable(x: np.ndarray) -> int | None:
    frac = np.minimum(x - np.floor(x), np.ceil(x) - x)
    idx = np.flatnonzero(frac > INTEGRALITY_TOL)
    if idx.size == 0:
        return None
    # smallest distance from integrality, lowest index on ties
    return int(idx[np.argmin(frac[idx])])


def branch_and_bound(problem: AssignmentProblem) -> Solution:
    """Best-first branch-and-bound over LP relaxations.

    The incumbent starts at the all-fake solution. Each expansion branches
    on one fractional variable with an ``=0`` and an ``=1`` child; the open
    node with the smallest lower bound is expanded next until the bounds
    meet.
    """
    try:
        x_root, root_value = lp_relax_solve(problem)
    except InfeasibleProblem as exc:
        raise InfeasibleProblem(f"root relaxation infeasible: {exc}") from None
    cost = problem.cost
    incumbent = problem.all_fake()
    upper_bound = float(cost @ incumbent)
    nodes = 1
    counter = itertools.count()
    heap: list = []
    trace: list[tuple[float, float]] = []

    def offer(x, value, fixings):
        nonlocal incumbent, upper_bound
        if _branch_variable(x) is None:
            cand = np.rint(x).astype(int)
            obj = float(cost @ cand)
            if obj < upper_bound and check_feasible(cand, problem)[0]:
                incumbent, upper_bound = cand, obj
            return
        if value < upper_bound - GAP_TOL:
            heapq.heappush(heap, (value, next(counter), fixings, x))

    def record():
        trace.append((min(heap[0][0], upper_bound) if heap else upper_bound, upper_bound))

    offer(x_root, root_value, {})
    record()
    while heap and heap[0][0] < upper_bound - GAP_TOL:
        parent_value, _, fixings, x = heapq.heappop(heap)
        j = _branch_variable(x)
        for v in (0, 1):
            child = dict(fixings)
            child[j] = v
            try:
                xc, value = lp_relax_solve(problem, child)
            except InfeasibleProblem:
                continue
            nodes += 1
            offer(xc, max(value, parent_value), child)
        record()
    if not trace or trace[-1] != (upper_bound, upper_bound):
        trace.append((upper_bound, upper_bound))
    return Solution(incumbent, upper_bound, nodes, trace)


def _enumerate_theta(allowed: list[list[int]], limit: int) -> np.ndarray:
    """All choice vectors (one candidate per target) respecting (a)."""
    out: list[tuple[int, ...]] = []
    N = len(allowed)
    choice = [0] * N
    used: set[int] = set()

    def rec(n):
        if n == N:
            out.append(tuple(choice))
            if len(out) > limit:
                raise InfeasibleProblem("enumeration limit exceeded")
            return
        for m in allowed[n]:
            if m and m in used:
                continue
            choice[n] = m
            if m:
                used.add(m)
            rec(n + 1)
            if m:
                used.discard(m)

    rec(0)
    return np.array(out, dtype=int).reshape(len(out), N)


def exhaustive_oracle(problem: AssignmentProblem, max_assignments: int = 2_000_000) -> Solution:
    """Minimum-cost solution by enumerating every feasible target assignment.

    For each assignment the best association vector is read off directly:
    an allowed association is switched on exactly when both of its
    detections are assigned and its cost is negative.
    """
    lay = problem.layout
    N, M = lay.n_targets, lay.n_detections
    cost, upper = problem.cost, problem.upper
    allowed = [[m for m in range(M + 1) if m == 0 or
                (upper[lay.theta(n, m)] > 0 and problem.detection_types[m - 1] == problem.target_types[n])]
               for n in range(N)]
    try:
        choices = _enumerate_theta(allowed, max_assignments)
    except InfeasibleProblem:
        raise ValueError(f"more than {max_assignments} assignments; problem too large for enumeration") from None

    theta_cost = np.array([[cost[lay.theta(n, m)] for m in range(M + 1)] for n in range(N)]).reshape(N, M + 1)
    gain = np.zeros((M, M))
    for m in range(1, M + 1):
        for m2 in range(1, M + 1):
            j = lay.gamma(m, m2)
            if upper[j] > 0 and cost[j] < 0:
                gain[m - 1, m2 - 1] = cost[j]
    total = theta_cost[np.arange(N), choices].sum(axis=1) if N else np.zeros(len(choices))
    assigned = np.zeros((len(choices), M + 1))
    rows = np.repeat(np.arange(len(choices)), N)
    assigned[rows, choices.ravel()] = 1.0
    assigned = assigned[:, 1:]
    total = total + np.einsum("km,mn,kn->k", assigned, gain, assigned)

    best = int(np.argmin(total))
    x = np.zeros(lay.size, dtype=int)
    for n, m in enumerate(choices[best]):
        x[lay.theta(n, m)] = 1
    for m in range(1, M + 1):
        for m2 in range(1, M + 1):
            if gain[m - 1, m2 - 1] < 0 and assigned[best, m - 1] and assigned[best, m2 - 1]:
                x[lay.gamma(m, m2)] = 1
    return Solution(x, float(cost @ x), node_count=len(choices))


def dump_problem(problem: AssignmentProblem) -> str:
    """Line-oriented listing of variables, costs and constraint rows."""
    lay = problem.layout
    lines = [
        "# parttrack assignment problem",
        f"targets {lay.n_targets} " + " ".join(t.value for t in problem.target_types),
        f"detections {lay.n_detections} " + " ".join(t.value for t in problem.detection_types),
        f"variables {lay.size}",
    ]
    for j in range(lay.size):
        kind, a, b = lay.inverse(j)
        lines.append(f"var {j} {kind} {a} {b} cost {float(problem.cost[j])!r} ub {int(problem.upper[j])}")
    names = iter(problem.row_names) if problem.row_names else None

    def emit(A, b, sense):
        for i in range(A.shape[0]):
            name = next(names) if names else f"r{len(lines)}"
            terms = " ".join(f"{j}:{A[i, j]:g}" for j in np.flatnonzero(A[i]))
            lines.append(f"row {name} {sense} {b[i]:g} : {terms}")

    emit(problem.A_ub, problem.b_ub, "le")
    emit(problem.A_eq, problem.b_eq, "eq")
    return "\n".join(lines) + "\n"
