"""Frame-by-frame part tracking loop.

Each frame: pick an enclosing body for every part candidate, score the
candidate against the nearest geometric templates, score it against every
target's motion prediction, build the joint assignment/association program,
solve it, then update or coast every target.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from . import association, geometry, motion
from .core import Detection, PartType, TargetState, TrackerConfig, log_beta
from .ilp import AssignmentProblem, Solution, branch_and_bound, build_problem, exhaustive_oracle

logger = logging.getLogger(__name__)


class TrackStatus(enum.Enum):
    ACTIVE = "active"
    COASTING = "coasting"
    TERMINATED = "terminated"


class TrackPoint(NamedTuple):
    frame: int
    state: TargetState
    detection_id: int | None
    size: tuple[float, float]


@dataclass
class Track:
    target_id: int
    part_type: PartType
    history: list[TrackPoint] = field(default_factory=list)
    status: TrackStatus = TrackStatus.ACTIVE
    coast_count: int = 0
    birth_frame: int = 0

    @property
    def state(self) -> TargetState:
        return self.history[-1].state

    @property
    def last_frame(self) -> int:
        return self.history[-1].frame

    @property
    def alive(self) -> bool:
        return self.status is not TrackStatus.TERMINATED

    def append(self, point: TrackPoint) -> None:
        if self.history and point.frame <= self.history[-1].frame:
            raise ValueError("track history frames must increase")
        self.history.append(point)


@dataclass
class FrameResult:
    frame: int
    assignments: dict[int, int | None]
    gamma_pairs: list[tuple[int, int]]
    merged_detections: list[Detection]
    objective: float
    problem: AssignmentProblem | None = None
    solution: Solution | None = None
    births: list[int] = field(default_factory=list)


def distance_models_from_templates(templates: Sequence[geometry.GeometricTemplate]) -> dict:
    """Fit one inter-part distance model per part pair from template geometry."""
    samples: dict[frozenset, list] = {}
    for t in templates:
        w, h = t.body_size
        parts = sorted(t.part_locations, key=lambda p: p.value)
        for i, a in enumerate(parts):
            for b in parts[i + 1:]:
                pa = np.multiply(t.part_locations[a], (w, h))
                pb = np.multiply(t.part_locations[b], (w, h))
                samples.setdefault(association.pair_key(a, b), []).append((pa, pb))
    return {key: association.fit_distance_model(s, tuple(key)) for key, s in samples.items() if len(s) >= 2}


def _new_state(target_id: int, det: Detection, config: TrackerConfig) -> TargetState:
    cx, cy = det.center
    return TargetState(target_id, det.part_type, [cx, 0.0, cy, 0.0], np.diag(config.initial_covariance))


def _suppress(candidates: list[Detection], radius: float) -> list[Detection]:
    kept: list[Detection] = []
    for d in sorted(candidates, key=lambda d: (-d.confidence, d.id)):
        if all(k.part_type != d.part_type or math.dist(k.center, d.center) > radius for k in kept):
            kept.append(d)
    return kept


def init_tracks(detections: Sequence[Detection], config: TrackerConfig, start_id: int = 0) -> list[Track]:
    """Tracks for the first frame's confident, non-duplicate part detections.

    In fixed mode at most ``targets_per_type`` tracks are created per part
    type, preferring detections that sit inside a body box.
    """
    bodies = [d for d in detections if d.part_type.is_body]
    parts = [d for d in detections if not d.part_type.is_body and d.confidence >= config.birth_confidence]
    kept = _suppress(parts, config.birth_radius)
    if config.mode == "fixed":
        chosen = []
        for part in sorted({d.part_type for d in kept}, key=lambda p: p.value):
            pool = [d for d in kept if d.part_type == part]
            pool.sort(key=lambda d: (geometry.select_body(d, bodies, config.upsilon) is None, -d.confidence, d.id))
            chosen += pool[:config.targets_per_type]
        kept = chosen
    kept.sort(key=lambda d: (d.part_type.value, d.id))
    tracks = []
    for i, det in enumerate(kept):
        tid = start_id + i
        state = _new_state(tid, det, config)
        tracks.append(Track(tid, det.part_type, [TrackPoint(det.frame, state, det.id, (det.width, det.height))],
                            birth_frame=det.frame))
    return tracks


@dataclass
class _BirthCandidate:
    detection: Detection
    count: int


class PartTracker:
    """Stateful wrapper around the per-frame step.

    ``templates`` is the geometric template library; ``distance_models``
    maps part pairs to :class:`~parttrack.association.DistanceModel` and is
    fitted from the templates when omitted.
    """

    def __init__(self, config: TrackerConfig | None = None, templates=(),
                 distance_models: Mapping | None = None):
        self.config = config or TrackerConfig()
        self.templates = list(templates)
        self.distance_models = (dict(distance_models) if distance_models is not None
                                else distance_models_from_templates(self.templates))
        self.model = self.config.motion_model
        self.tracks: list[Track] = []
        self.frame: int | None = None
        self._pending: list[_BirthCandidate] = []
        self._next_id = 0

    def initialize(self, detections: Sequence[Detection], frame: int | None = None) -> FrameResult:
        frame = self._check_frame(detections, frame)
        self.tracks = init_tracks(detections, self.config, self._next_id)
        self._next_id += len(self.tracks)
        self.frame = frame
        return FrameResult(frame, {t.target_id: t.history[-1].detection_id for t in self.tracks}, [],
                           [d for d in detections if not d.part_type.is_body], 0.0,
                           births=[t.target_id for t in self.tracks])

    def _check_frame(self, detections, frame):
        frames = {d.frame for d in detections}
        if len(frames) > 1:
            raise ValueError(f"detections span several frames: {sorted(frames)}")
        if frames:
            (only,) = frames
            if frame is not None and only != frame:
                raise ValueError(f"detections belong to frame {only}, expected {frame}")
            frame = only
        if frame is None:
            frame = 0 if self.frame is None else self.frame + 1
        if self.frame is not None and frame <= self.frame:
            raise ValueError(f"frame {frame} is not after frame {self.frame}")
        return frame

    def _geo_scores(self, parts, bodies):
        cfg = self.config
        selected, scores = [], []
        for det in parts:
            body = geometry.select_body(det, bodies, cfg.upsilon)
            prior = None
            if body is not None:
                nbrs = geometry.nearest_templates(body, self.templates, cfg.neighbor_count)
                if nbrs:
                    prior = geometry.fit_prior(nbrs, body, cfg.template_variance)
            selected.append(body)
            scores.append(geometry.geometric_score(det, prior, cfg.epsilon_geo))
        return selected, np.array(scores)

    def step(self, detections: Sequence[Detection], frame: int | None = None) -> FrameResult:
        if self.frame is None:
            return self.initialize(detections, frame)
        frame = self._check_frame(detections, frame)
        cfg = self.config
        parts = [d for d in detections if not d.part_type.is_body]
        bodies = [d for d in detections if d.part_type.is_body]
        live = [t for t in self.tracks if t.alive]

        selected, geo = self._geo_scores(parts, bodies)
        preds = [motion.predict(t.state, self.model) for t in live]
        mot = np.zeros((len(live), len(parts)))
        for n, (trk, pred) in enumerate(zip(live, preds)):
            for m, det in enumerate(parts):
                if det.part_type == trk.part_type:
                    mot[n, m] = motion.detection_log_likelihood(pred, det)
        aff = association.affinity_matrix(parts, selected, self.distance_models,
                                          cfg.affinity_clamp, cfg.iou_floor, missing_model=1.0)
        problem = build_problem([t.state for t in live], parts, geo, mot, aff, log_beta(cfg))
        solution = exhaustive_oracle(problem) if cfg.solver == "oracle" else branch_and_bound(problem)
        lay = problem.layout

        assignments: dict[int, int | None] = {}
        taken: set[int] = set()
        for trk, m in zip(live, solution.assigned(lay)):
            if m:
                det = parts[m - 1]
                taken.add(m - 1)
                state = motion.update(trk.state, det, self.model)
                trk.append(TrackPoint(frame, state, det.id, (det.width, det.height)))
                trk.status, trk.coast_count = TrackStatus.ACTIVE, 0
                assignments[trk.target_id] = det.id
            else:
                state = motion.coast(trk.state, self.model)
                trk.append(TrackPoint(frame, state, None, trk.history[-1].size))
                trk.coast_count += 1
                trk.status = TrackStatus.COASTING
                if cfg.mode == "open" and trk.coast_count > cfg.max_coast:
                    trk.status = TrackStatus.TERMINATED
                assignments[trk.target_id] = None

        pairs = solution.gamma_pairs(lay)
        same = [(m - 1, m2 - 1) for m, m2 in pairs if parts[m - 1].part_type == parts[m2 - 1].part_type]
        merged = association.merge_same_type(parts, same)
        births = self._births(frame, [d for i, d in enumerate(parts) if i not in taken])
        self.frame = frame
        return FrameResult(frame, assignments, [(parts[m - 1].id, parts[m2 - 1].id) for m, m2 in pairs],
                           merged, solution.objective, problem, solution, births)

    def _births(self, frame: int, unassigned: list[Detection]) -> list[int]:
        cfg = self.config
        cands = _suppress([d for d in unassigned if d.confidence >= cfg.birth_confidence], cfg.birth_radius)
        pending = []
        for det in cands:
            prev = [p for p in self._pending if p.detection.part_type == det.part_type
                    and math.dist(p.detection.center, det.center) <= cfg.birth_radius]
            count = 1 + max((p.count for p in prev), default=0)
            pending.append(_BirthCandidate(det, count))
        born = []
        remaining = []
        for cand in pending:
            det = cand.detection
            if cand.count < cfg.birth_persistence:
                remaining.append(cand)
                continue
            if cfg.mode == "fixed":
                n_live = sum(1 for t in self.tracks if t.alive and t.part_type == det.part_type)
                if n_live >= cfg.targets_per_type:
                    continue
            tid = self._next_id
            self._next_id += 1
            self.tracks.append(Track(tid, det.part_type,
                                     [TrackPoint(frame, _new_state(tid, det, cfg), det.id, (det.width, det.height))],
                                     birth_frame=frame))
            born.append(tid)
        self._pending = remaining
        return born


def run(sequence: Sequence[Sequence[Detection]], templates=(), config: TrackerConfig | None = None,
        distance_models: Mapping | None = None, first_frame: int = 0) -> tuple[list[Track], list[FrameResult]]:
    """Track a whole sequence; ``sequence[i]`` holds frame ``first_frame + i``."""
    tracker = PartTracker(config, templates, distance_models)
    results = []
    for i, dets in enumerate(sequence):
        frame = first_frame + i
        if any(d.frame != frame for d in dets):
            raise ValueError(f"frames out of order: position {i} holds detections not from frame {frame}")
        results.append(tracker.step(dets, frame))
    return sorted(tracker.tracks, key=lambda t: t.target_id), results
