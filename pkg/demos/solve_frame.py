"""Build one frame's joint assignment program and solve it two ways."""

import math

import numpy as np

from parttrack.core import Detection, PartType, layout
from parttrack.ilp import branch_and_bound, build_problem, check_feasible, exhaustive_oracle

H, T = PartType.HEAD, PartType.TAIL_BASE

# two targets (a head and a tail base) and three detections
targets = [H, T]
dets = [
    Detection.from_center(0, 0, H, 100, 100, 12, 12, 0.95),
    Detection.from_center(1, 0, T, 150, 100, 12, 12, 0.90),
    Detection.from_center(2, 0, H, 400, 300, 12, 12, 0.40),  # stray head
]
lay = layout(len(targets), len(dets))
print(f"{lay.size} binary variables: {len(targets)}x{len(dets) + 1} assignments, {len(dets)}^2 association links")

geo = np.log([0.02, 0.02, 1e-4])  # geometric support per detection
motion = np.log([[0.01, 1.0, 1e-6],  # target rows, detection columns
                 [1.0, 0.01, 1.0]])
aff = np.ones((3, 3))
aff[0, 1] = aff[1, 0] = 5.0  # head 0 and tail 1 sit at a plausible body length
problem = build_problem(targets, dets, geo, motion, aff, log_beta=math.log(1e-5))

exact = branch_and_bound(problem)
brute = exhaustive_oracle(problem)
print("branch and bound:", exact.objective, "nodes", exact.node_count)
print("enumeration     :", brute.objective)
print("target -> detection (0 = missed):", exact.assigned(lay))
print("active links:", exact.gamma_pairs(lay))
print("feasible:", check_feasible(exact, problem)[0])
print("bound trace (lower, upper):", [(round(a, 3), round(b, 3)) for a, b in exact.bound_trace])
