"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

import math
import statistics
import time

import numpy as np

from parttrack.cli import main
from parttrack.core import Detection, MotionModel, PartType, TargetState, TrackerConfig
from parttrack.equivalence import random_problem, run_equivalence, trace_is_monotone
from parttrack.geometry import GeometricTemplate, fit_prior, geometric_score
from parttrack.ilp import branch_and_bound
from parttrack.metrics import GroundTruthTrack, evaluate
from parttrack.motion import predict, update
from parttrack.simulate import benchmark_config, synthesize
from parttrack.tracker import Track, TrackPoint, run

# tolerances and thresholds
EXACT_TOL = 1e-9
EQUIVALENCE_SECONDS = 10.0
KALMAN_TOL = 1e-8
GEOMETRY_TOL = 1e-6
MOTA_MEAN_2 = 0.90
ZERO_ID_SEED_SHARE = 0.90
MEDIAN_IDS_3 = 2
SCENARIO_SECONDS = 60.0
SEEDS_2 = range(20)
SEEDS_3 = range(10)


def test_solver_exactness(verdict):
    rep = run_equivalence(200, seed=0, max_targets=3, max_detections=5)
    ok = (rep.mismatches == 0 and rep.infeasible == 0 and rep.max_abs_diff <= EXACT_TOL
          and rep.seconds < EQUIVALENCE_SECONDS)
    verdict(1, ok, f"200 instances, {rep.mismatches} mismatches, max |diff| {rep.max_abs_diff:.1e}, "
                   f"{rep.infeasible} infeasible, {rep.seconds:.2f} s")
    assert ok


def test_bound_convergence(verdict):
    rng = np.random.default_rng(0)
    bad = 0
    gaps = []
    for _ in range(200):
        sol = branch_and_bound(random_problem(rng))
        trace = sol.bound_trace
        lows = [lo for lo, _ in trace]
        ups = [up for _, up in trace]
        monotone = (all(b >= a - EXACT_TOL for a, b in zip(lows, lows[1:]))
                    and all(b <= a + EXACT_TOL for a, b in zip(ups, ups[1:])))
        gap = ups[-1] - lows[-1]
        gaps.append(gap)
        bad += not (monotone and abs(gap) <= EXACT_TOL and trace_is_monotone(trace, EXACT_TOL))
    ok = bad == 0
    verdict(2, ok, f"200 traces, {bad} violations, max final gap {max(gaps):.1e}")
    assert ok


def _gain_form(state, d, model):
    A, Q, C, R = model.transition, model.process_noise, model.observation, model.observation_noise
    m = A @ state.mean
    P = A @ state.covariance @ A.T + Q
    K = P @ C.T @ np.linalg.inv(C @ P @ C.T + R)
    return m + K @ (d - C @ m), (np.eye(4) - K @ C) @ P


def test_kalman_equivalence(verdict):
    rng = np.random.default_rng(7)
    worst = 0.0
    not_dominated = 0
    for _ in range(1000):
        model = MotionModel(tau=rng.uniform(0.5, 2.0), q_d=rng.uniform(0.01, 2.0), r=rng.uniform(0.1, 20.0))
        a = rng.normal(size=(4, 4))
        cov = rng.uniform(0.1, 50.0) * a @ a.T / 4 + 1e-3 * np.eye(4)
        state = TargetState(0, PartType.HEAD, rng.uniform(-100, 100, 4), cov)
        d = rng.uniform(-100, 100, 2)
        post = update(state, Detection.from_center(0, 0, PartType.HEAD, *d, 10, 10, 0.9), model)
        mean, P_post = _gain_form(state, d, model)
        worst = max(worst, np.abs(post.mean - mean).max(), np.abs(post.covariance - P_post).max())
        P = predict(state, model).predicted_covariance
        not_dominated += np.linalg.eigvalsh(P - post.covariance).min() < -EXACT_TOL
    ok = worst <= KALMAN_TOL and not_dominated == 0
    verdict(3, ok, f"1000 instances, max |diff| {worst:.1e}, {not_dominated} posteriors not below prediction")
    assert ok


def test_geometric_aggregation(verdict):
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        k = int(rng.integers(1, 11))
        templates = [GeometricTemplate(i, {PartType.HEAD: tuple(rng.uniform(-0.4, 0.4, 2)),
                                           PartType.TAIL_BASE: tuple(rng.uniform(-0.4, 0.4, 2))},
                                       tuple(rng.uniform(20, 80, 2))) for i in range(k)]
        body = Detection.from_center(0, 0, PartType.BODY, *rng.uniform(100, 300, 2), *rng.uniform(30, 90, 2), 0.9)
        sigma = rng.uniform(4.0, 30.0)
        prior = fit_prior(templates, body, sigma)
        part = PartType.HEAD if rng.random() < 0.5 else PartType.TAIL_BASE
        x = np.array(body.center) + rng.normal(0, 12, 2)
        cand = Detection.from_center(1, 0, part, *x, 10, 10, 0.9)
        total = 0.0
        for t in templates:
            loc = np.array(body.center) + np.multiply(t.part_locations[part], (body.width, body.height))
            total += math.exp(-0.5 * float((x - loc) @ (x - loc)) / sigma) / (2 * math.pi * sigma)
        worst = max(worst, abs(geometric_score(cand, prior) - math.log(total)))
    ok = worst <= GEOMETRY_TOL
    verdict(4, ok, f"100 template sets (|O| <= 10), max log-domain |diff| {worst:.1e}")
    assert ok


def _benchmark(mice, seeds):
    rows = []
    for seed in seeds:
        scenario = synthesize(benchmark_config(mice, seed))
        start = time.perf_counter()
        tracks, _ = run(scenario.frames, scenario.templates, TrackerConfig(targets_per_type=mice))
        elapsed = time.perf_counter() - start
        rows.append((evaluate(scenario.ground_truth, tracks), elapsed))
    return rows


def test_synthetic_tracking_benchmark(verdict):
    two = _benchmark(2, SEEDS_2)
    three = _benchmark(3, SEEDS_3)
    mota = statistics.mean(r.MOTA for r, _ in two)
    zero_ids = sum(r.IDs == 0 for r, _ in two) / len(two)
    median_ids = statistics.median(r.IDs for r, _ in three)
    slowest = max(t for _, t in two + three)
    ok = (mota >= MOTA_MEAN_2 and zero_ids >= ZERO_ID_SEED_SHARE and median_ids <= MEDIAN_IDS_3
          and slowest < SCENARIO_SECONDS)
    verdict(5, ok, f"2 mice: mean MOTA {mota:.4f}, IDs=0 in {zero_ids:.0%} of {len(two)} seeds; "
                   f"3 mice: median IDs {median_ids} over {len(three)} seeds "
                   f"(mean MOTA {statistics.mean(r.MOTA for r, _ in three):.4f}); slowest run {slowest:.1f} s")
    assert ok


def _track(tid, positions):
    trk = Track(tid, PartType.HEAD)
    for f, (x, y) in sorted(positions.items()):
        trk.append(TrackPoint(f, TargetState(tid, PartType.HEAD, [x, 0, y, 0], np.eye(4)), None, (20, 20)))
    return trk


def test_metrics_correctness(verdict):
    a = {f: (10.0 * f, 0.0) for f in range(10)}
    b = {f: (10.0 * f, 200.0) for f in range(10)}
    gt = []
    for gid, pos in ((0, a), (1, b)):
        g = GroundTruthTrack(gid, PartType.HEAD)
        for f, xy in pos.items():
            g.add(f, xy)
        gt.append(g)
    hyp = [_track(1, {f: xy for f, xy in a.items() if f != 3}),  # one miss
           _track(2, {f: b[f] for f in range(5)}),
           _track(3, {f: b[f] for f in range(5, 10)}),  # identity switch
           _track(4, {0: (500.0, 500.0), 1: (500.0, 500.0)})]  # two false positives
    r = evaluate(gt, hyp)
    perfect = evaluate(gt, [_track(1, a), _track(2, b)])
    ok = ((r.FP, r.FN, r.IDs, r.num_gt) == (2, 1, 1, 20) and r.MOTA == 0.8
          and perfect.MOTA == 1.0 and perfect.IDF1 == 1.0 and perfect.MOTP == 0.0)
    verdict(6, ok, f"hand-built: FP={r.FP} FN={r.FN} IDs={r.IDs} MOTA={r.MOTA}; "
                   f"perfect: MOTA={perfect.MOTA} IDF1={perfect.IDF1} MOTP={perfect.MOTP}")
    assert ok


def _pipeline(root):
    root.mkdir()
    assert main(["simulate", "--out", str(root), "--mice", "3", "--frames", "120", "--seed", "11",
                 "--occlusion", "40:10:0.head+1.tail_base"]) == 0
    assert main(["track", "--detections", str(root / "detections.csv"), "--templates", str(root / "templates.csv"),
                 "--out", str(root / "tracks.csv"), "--targets-per-type", "3"]) == 0
    assert main(["evaluate", "--tracks", str(root / "tracks.csv"), "--ground-truth",
                 str(root / "ground_truth.csv"), "--out", str(root / "report.json")]) == 0
    return {p.name: p.read_bytes() for p in sorted(root.iterdir())}


def test_determinism(tmp_path, verdict):
    first = _pipeline(tmp_path / "one")
    second = _pipeline(tmp_path / "two")
    same = [name for name in first if first[name] == second.get(name)]
    ok = first.keys() == second.keys() and len(same) == len(first)
    verdict(7, ok, f"{len(same)}/{len(first)} output files byte-identical across two runs")
    assert ok
