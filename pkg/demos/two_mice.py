"""Simulate two mice, track their parts and score the result."""

import time

from parttrack.core import TrackerConfig
from parttrack.metrics import evaluate
from parttrack.simulate import ScenarioConfig, synthesize
from parttrack.tracker import run

scenario = synthesize(ScenarioConfig(mice_count=2, frames=150, seed=4))
print(f"{len(scenario.frames)} frames, {sum(map(len, scenario.frames))} detections, "
      f"{len(scenario.templates)} templates")

start = time.perf_counter()
tracks, results = run(scenario.frames, scenario.templates, TrackerConfig(targets_per_type=2))
nodes = sum(r.solution.node_count for r in results if r.solution is not None)
print(f"tracked in {time.perf_counter() - start:.2f} s, {nodes} branch-and-bound nodes in total")

for trk in tracks:
    hits = sum(p.detection_id is not None for p in trk.history)
    print(f"track {trk.target_id} {trk.part_type.name:9s} {hits}/{len(trk.history)} frames matched")

print(evaluate(scenario.ground_truth, tracks).to_text())
