"""CLEAR-MOT and identity metrics for part trajectories.

Matching uses centre distance with a pixel threshold and only pairs
ground truth and hypotheses of the same part type. A ground-truth entry
flagged as occluded is never a miss: it is either matched by a prediction
close to it or left alone. Predictions far from everything are false
positives as usual.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import PartType

MOSTLY_TRACKED = 0.8
MOSTLY_LOST = 0.2


@dataclass
class GroundTruthTrack:
    gt_id: int
    part_type: PartType
    frames: list[int] = field(default_factory=list)
    centers: list[tuple[float, float]] = field(default_factory=list)
    sizes: list[tuple[float, float]] = field(default_factory=list)
    occluded: list[bool] = field(default_factory=list)

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.frames, self.frames[1:])):
            raise ValueError(f"ground-truth track {self.gt_id}: frames must strictly increase")

    def add(self, frame: int, center, size=(1.0, 1.0), occluded: bool = False) -> None:
        if self.frames and frame <= self.frames[-1]:
            raise ValueError(f"ground-truth track {self.gt_id}: frames must strictly increase")
        self.frames.append(int(frame))
        self.centers.append((float(center[0]), float(center[1])))
        self.sizes.append((float(size[0]), float(size[1])))
        self.occluded.append(bool(occluded))


@dataclass
class MetricsReport:
    MOTA: float
    MOTP: float
    MT: int
    ML: int
    FP: int
    FN: int
    IDs: int
    IDF1: float
    num_gt: int
    num_matches: int
    num_gt_tracks: int
    frames: list[dict] = field(default_factory=list, repr=False)

    SUMMARY_KEYS = ("MOTA", "MOTP", "MT", "ML", "FP", "FN", "IDs", "IDF1", "num_gt", "num_matches", "num_gt_tracks")

    def summary(self) -> dict:
        return {k: getattr(self, k) for k in self.SUMMARY_KEYS}

    def to_text(self) -> str:
        lines = []
        for key, value in self.summary().items():
            if isinstance(value, float):
                lines.append(f"{key:<14}{value:.6f}")
            else:
                lines.append(f"{key:<14}{value}")
        return "\n".join(lines) + "\n"

    def to_records(self) -> dict:
        out = self.summary()
        out["frames"] = self.frames
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_records(), indent=1, sort_keys=True)


def _hyp_entries(hyp) -> dict[int, dict]:
    """``{frame: {hyp_id: (part_type, (x, y))}}`` for Track-like objects."""
    out: dict[int, dict] = {}
    for trk in hyp:
        for point in trk.history:
            x, y = float(point.state.mean[0]), float(point.state.mean[2])
            out.setdefault(point.frame, {})[trk.target_id] = (trk.part_type, (x, y))
    return out


def _gt_entries(gt: Sequence[GroundTruthTrack]) -> dict[int, dict]:
    out: dict[int, dict] = {}
    for trk in gt:
        for f, c, occ in zip(trk.frames, trk.centers, trk.occluded):
            out.setdefault(f, {})[trk.gt_id] = (trk.part_type, c, occ)
    return out


def evaluate(gt: Sequence[GroundTruthTrack], hyp, match_threshold: float = 15.0) -> MetricsReport:
    if not match_threshold > 0:
        raise ValueError("match_threshold must be positive")
    gt_by_frame = _gt_entries(gt)
    hyp_by_frame = _hyp_entries(hyp)
    if len({g.gt_id for g in gt}) != len(gt):
        raise ValueError("duplicate gt_id")

    last_match: dict[int, int] = {}
    prev_frame_match: dict[int, int] = {}
    fp = fn = ids = 0
    dist_sum = 0.0
    n_match = 0
    num_gt = 0
    matched_frames = {g.gt_id: 0 for g in gt}
    log = []
    # identity counts for IDF1: co-located (gt, hyp) frame pairs
    pair_hits: dict[tuple[int, int], int] = {}

    for frame in sorted(set(gt_by_frame) | set(hyp_by_frame)):
        g_now = gt_by_frame.get(frame, {})
        h_now = hyp_by_frame.get(frame, {})
        num_gt += len(g_now)

        def dist(g, h):
            gt_type, gc, _ = g_now[g]
            h_type, hc = h_now[h]
            if gt_type != h_type:
                return math.inf
            return math.hypot(gc[0] - hc[0], gc[1] - hc[1])

        for g in g_now:
            for h in h_now:
                if dist(g, h) <= match_threshold:
                    pair_hits[(g, h)] = pair_hits.get((g, h), 0) + 1

        matches: dict[int, int] = {}
        for g, h in sorted(prev_frame_match.items()):
            if g in g_now and h in h_now and dist(g, h) <= match_threshold:
                matches[g] = h
        free_g = sorted(g for g in g_now if g not in matches)
        used_h = set(matches.values())
        free_h = sorted(h for h in h_now if h not in used_h)
        if free_g and free_h:
            big = 1e9
            cost = np.array([[dist(g, h) if dist(g, h) <= match_threshold else big for h in free_h] for g in free_g])
            rows, cols = linear_sum_assignment(cost)
            for r, c in zip(rows, cols):
                if cost[r, c] < big:
                    matches[free_g[r]] = free_h[c]

        frame_ids = 0
        for g, h in matches.items():
            if g in last_match and last_match[g] != h:
                frame_ids += 1
            last_match[g] = h
            dist_sum += dist(g, h)
            matched_frames[g] += 1
        frame_fn = sum(1 for g in g_now if g not in matches and not g_now[g][2])
        frame_fp = len(h_now) - len(matches)
        fp += frame_fp
        fn += frame_fn
        ids += frame_ids
        n_match += len(matches)
        prev_frame_match = matches
        log.append({"frame": frame, "matches": sorted([g, h] for g, h in matches.items()),
                    "fp": frame_fp, "fn": frame_fn, "ids": frame_ids})

    mota = 1.0 - (fp + fn + ids) / num_gt if num_gt else (1.0 if fp == 0 else -math.inf)
    motp = dist_sum / n_match if n_match else 0.0
    mt = ml = 0
    for g in gt:
        if not g.frames:
            continue
        ratio = matched_frames[g.gt_id] / len(g.frames)
        mt += ratio >= MOSTLY_TRACKED
        ml += ratio < MOSTLY_LOST

    num_hyp = sum(len(v) for v in hyp_by_frame.values())
    idf1 = _idf1(gt, hyp, pair_hits, num_gt, num_hyp)
    return MetricsReport(mota, motp, mt, ml, fp, fn, ids, idf1, num_gt, n_match, len(gt), log)


def _idf1(gt, hyp, pair_hits, num_gt, num_hyp) -> float:
    if num_gt + num_hyp == 0:
        return 1.0
    g_ids = sorted(g.gt_id for g in gt)
    h_ids = sorted({t.target_id for t in hyp})
    if not g_ids or not h_ids:
        return 0.0
    gain = np.array([[pair_hits.get((g, h), 0) for h in h_ids] for g in g_ids], dtype=float)
    rows, cols = linear_sum_assignment(-gain)
    idtp = gain[rows, cols].sum()
    return float(2.0 * idtp / (num_gt + num_hyp))


def report_from_json(text: str) -> MetricsReport:
    data = json.loads(text)
    frames = data.pop("frames", [])
    return MetricsReport(**data, frames=frames)

