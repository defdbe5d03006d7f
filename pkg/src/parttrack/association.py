"""Pair-wise part association scores and merging of connected detections."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import Detection, PartType

VARIANCE_FLOOR = 1e-6


@dataclass(frozen=True)
class DistanceModel:
    """1-D Gaussian over the distance between two part types of one animal."""

    mean: float
    variance: float
    part_pair: frozenset

    def __post_init__(self):
        if self.variance <= 0:
            raise ValueError("variance must be positive")
        pair = frozenset(self.part_pair)
        if len(pair) != 2 or any(p.is_body for p in pair):
            raise ValueError("part_pair must hold two distinct non-body part types")
        object.__setattr__(self, "part_pair", pair)

    def density(self, distance: float) -> float:
        z = (distance - self.mean) ** 2 / self.variance
        return math.exp(-0.5 * z) / math.sqrt(2.0 * math.pi * self.variance)


def pair_key(a: PartType, b: PartType) -> frozenset:
    return frozenset((a, b))


def fit_distance_model(samples: Sequence[tuple], part_pair=(PartType.HEAD, PartType.TAIL_BASE)) -> DistanceModel:
    if len(samples) < 2:
        raise ValueError("need at least two location pairs to fit a distance model")
    d = np.array([np.hypot(*(np.asarray(a, float) - np.asarray(b, float))) for a, b in samples])
    var = max(float(d.var(ddof=1)), VARIANCE_FLOOR)
    return DistanceModel(float(d.mean()), var, frozenset(part_pair))


def iou(a: tuple, b: tuple) -> float:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    iw = min(ax + aw, bx + bw) - max(ax, bx)
    ih = min(ay + ah, by + bh) - max(ay, by)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (aw * ah + bw * bh - inter)


def _clamp(value: float, clamp: tuple[float, float]) -> float:
    lo, hi = clamp
    return min(max(value, lo), hi)


def same_type_affinity(
    m: Detection,
    m2: Detection,
    body_m: Detection | None,
    body_m2: Detection | None,
    clamp: tuple[float, float] = (1e-4, 1e4),
    iou_floor: float = 1e-3,
) -> float:
    """``(1 - IoU) / IoU`` of the two selected body boxes, clamped.

    Overlapping bodies suggest the same animal and give a low score; missing
    or disjoint bodies give ``p_max``.
    """
    if m.part_type != m2.part_type or m.part_type.is_body:
        raise ValueError("same_type_affinity needs two parts of the same non-body type")
    if body_m is None or body_m2 is None:
        return clamp[1]
    overlap = iou(body_m.box, body_m2.box)
    if overlap < iou_floor:
        return clamp[1]
    return _clamp((1.0 - overlap) / overlap, clamp)


def cross_type_affinity(
    m: Detection,
    m2: Detection,
    model: DistanceModel,
    clamp: tuple[float, float] = (1e-4, 1e4),
) -> float:
    """Distance-model density of the two centres, scaled so the mode scores 1."""
    if m.part_type == m2.part_type or m.part_type.is_body or m2.part_type.is_body:
        raise ValueError("cross_type_affinity needs two distinct non-body part types")
    if model.part_pair != pair_key(m.part_type, m2.part_type):
        raise KeyError(f"distance model is for {sorted(p.value for p in model.part_pair)}, "
                       f"not ({m.part_type.value}, {m2.part_type.value})")
    dist = math.hypot(m.center[0] - m2.center[0], m.center[1] - m2.center[1])
    ratio = math.exp(-0.5 * (dist - model.mean) ** 2 / model.variance)
    return _clamp(ratio, clamp)


def affinity_matrix(
    detections: Sequence[Detection],
    bodies: Sequence[Detection | None],
    models: Mapping[frozenset, DistanceModel],
    clamp: tuple[float, float] = (1e-4, 1e4),
    iou_floor: float = 1e-3,
    missing_model: float | None = None,
) -> np.ndarray:
    """Scores for every ordered pair of part detections; diagonal is NaN.

    Cross-type pairs without a distance model raise ``KeyError`` unless
    ``missing_model`` supplies a fixed score for them.
    """
    M = len(detections)
    out = np.full((M, M), np.nan)
    for i in range(M):
        for j in range(i + 1, M):
            a, b = detections[i], detections[j]
            if a.part_type == b.part_type:
                p = same_type_affinity(a, b, bodies[i], bodies[j], clamp, iou_floor)
            else:
                key = pair_key(a.part_type, b.part_type)
                if key not in models and missing_model is not None:
                    p = missing_model
                elif key not in models:
                    raise KeyError(f"no distance model for parts {sorted(t.value for t in key)}")
                else:
                    p = cross_type_affinity(a, b, models[key], clamp)
            out[i, j] = out[j, i] = p
    return out


def _components(n: int, pairs) -> list[list[int]]:
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def merge_same_type(detections: Sequence[Detection], connected_pairs: Sequence[tuple[int, int]]) -> list[Detection]:
    """Collapse connected same-type detections into confidence-weighted means.

    ``connected_pairs`` are list indices into ``detections``. A merged
    detection keeps the id of the first member and the component's highest
    confidence.
    """
    for a, b in connected_pairs:
        if detections[a].part_type != detections[b].part_type:
            raise ValueError("merge_same_type only joins detections of one part type")
    out = []
    for group in _components(len(detections), connected_pairs):
        if len(group) == 1:
            out.append(detections[group[0]])
            continue
        members = [detections[i] for i in group]
        w = np.array([d.confidence for d in members])
        if w.sum() <= 0:
            w = np.ones_like(w)
        w = w / w.sum()
        cx, cy = w @ np.array([d.center for d in members])
        bw = float(w @ np.array([d.width for d in members]))
        bh = float(w @ np.array([d.height for d in members]))
        first = members[0]
        out.append(Detection.from_center(first.id, first.frame, first.part_type, cx, cy, bw, bh,
                                         max(d.confidence for d in members)))
    return out
