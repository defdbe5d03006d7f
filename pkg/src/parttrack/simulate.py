"""Synthetic multi-mouse scenes.

Each mouse is a rigid head/tail-base segment whose midpoint follows the
constant-velocity model with white-noise acceleration. Speeds are capped,
mice bounce off the arena walls and off each other, and the segment turns
smoothly towards the direction of travel. Detections are noisy copies of
the true parts plus uniform clutter; the template library comes from an
independent draw of mouse poses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import TRACKED_PARTS, Detection, MotionModel, PartType
from .geometry import GeometricTemplate
from .metrics import GroundTruthTrack

HEAD_SIZE = (24.0, 21.0)
TAIL_SIZE = (22.0, 19.5)
PART_SIZE = {PartType.HEAD: HEAD_SIZE, PartType.TAIL_BASE: TAIL_SIZE}
BODY_PAD = 14.0


@dataclass(frozen=True)
class Occlusion:
    start: int
    duration: int
    parts: tuple[tuple[int, PartType], ...]

    def covers(self, frame: int, mouse: int, part: PartType) -> bool:
        return self.start <= frame < self.start + self.duration and (mouse, part) in self.parts


@dataclass(frozen=True)
class ScenarioConfig:
    mice_count: int = 2
    frames: int = 300
    arena_width: float = 640.0
    arena_height: float = 480.0
    q_d: float = 0.5
    sigma_det: float = 1.0
    miss_rate: float = 0.05
    f_false: float = 0.1
    occlusions: tuple[Occlusion, ...] = ()
    seed: int = 0
    max_speed: float = 4.0
    min_separation: float = 80.0
    max_turn: float = 0.06
    length_range: tuple[float, float] = (44.0, 56.0)
    n_templates: int = 200

    def __post_init__(self):
        for name in ("miss_rate", "f_false"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.mice_count < 1 or self.frames < 0:
            raise ValueError("need at least one mouse and a non-negative frame count")
        if self.sigma_det < 0 or self.q_d < 0:
            raise ValueError("noise levels must be non-negative")


@dataclass
class Scenario:
    ground_truth: list[GroundTruthTrack]
    frames: list[list[Detection]]
    templates: list[GeometricTemplate]
    bodies: list[list[tuple[float, float, float, float]]] = field(default_factory=list)


def gt_id(mouse: int, part: PartType) -> int:
    return 2 * mouse + TRACKED_PARTS.index(part)


def _parts(center, heading, length):
    d = 0.5 * length * np.array([math.cos(heading), math.sin(heading)])
    return {PartType.HEAD: center + d, PartType.TAIL_BASE: center - d}


def body_box(parts: dict) -> tuple[float, float, float, float]:
    pts = np.array(list(parts.values()))
    lo = pts.min(axis=0) - BODY_PAD
    hi = pts.max(axis=0) + BODY_PAD
    return (float(lo[0]), float(lo[1]), float(hi[0] - lo[0]), float(hi[1] - lo[1]))


def _wrap(angle: float) -> float:
    return (angle + math.pi) % (2.0 * math.pi) - math.pi


def sample_templates(rng: np.random.Generator, n: int, length_range=(44.0, 56.0)) -> list[GeometricTemplate]:
    out = []
    for k in range(n):
        length = rng.uniform(*length_range)
        parts = _parts(np.zeros(2), rng.uniform(-math.pi, math.pi), length)
        x, y, w, h = body_box(parts)
        cx, cy = x + w / 2.0, y + h / 2.0
        offsets = {p: ((v[0] - cx) / w, (v[1] - cy) / h) for p, v in parts.items()}
        out.append(GeometricTemplate(k, offsets, (w, h)))
    return out


def _initial_centers(rng, cfg: ScenarioConfig, margins):
    centers = []
    for i in range(cfg.mice_count):
        for _ in range(10_000):
            c = np.array([rng.uniform(margins[i], cfg.arena_width - margins[i]),
                          rng.uniform(margins[i], cfg.arena_height - margins[i])])
            if all(np.linalg.norm(c - o) >= cfg.min_separation for o in centers):
                centers.append(c)
                break
        else:
            raise ValueError("arena too small for the requested number of mice")
    return centers


def synthesize(cfg: ScenarioConfig) -> Scenario:
    root = np.random.SeedSequence(cfg.seed)
    rng_motion, rng_det, rng_tmpl = (np.random.default_rng(s) for s in root.spawn(3))
    model = MotionModel(tau=1.0, q_d=cfg.q_d)
    A, Q = model.transition, model.process_noise
    chol_q = np.linalg.cholesky(Q + 1e-12 * np.eye(4))

    lengths = rng_motion.uniform(*cfg.length_range, size=cfg.mice_count)
    margins = [0.5 * L + max(HEAD_SIZE) for L in lengths]
    centers = _initial_centers(rng_motion, cfg, margins)
    states = []
    headings = []
    for c in centers:
        v = rng_motion.uniform(-2.0, 2.0, size=2)
        states.append(np.array([c[0], v[0], c[1], v[1]]))
        headings.append(math.atan2(v[1], v[0]))

    gt = [GroundTruthTrack(gt_id(i, p), p) for i in range(cfg.mice_count) for p in TRACKED_PARTS]
    gt_by_id = {g.gt_id: g for g in gt}
    frames: list[list[Detection]] = []
    bodies_log = []
    for t in range(cfg.frames):
        if t > 0:
            for i in range(cfg.mice_count):
                s = A @ states[i] + chol_q @ rng_motion.standard_normal(4)
                speed = math.hypot(s[1], s[3])
                if speed > cfg.max_speed:
                    s[[1, 3]] *= cfg.max_speed / speed
                for pos, vel, hi in ((0, 1, cfg.arena_width), (2, 3, cfg.arena_height)):
                    lo_b, hi_b = margins[i], hi - margins[i]
                    if s[pos] < lo_b:
                        s[pos], s[vel] = 2 * lo_b - s[pos], abs(s[vel])
                    elif s[pos] > hi_b:
                        s[pos], s[vel] = 2 * hi_b - s[pos], -abs(s[vel])
                states[i] = s
            _separate(states, cfg.min_separation, margins, cfg)
            for i in range(cfg.mice_count):
                s = states[i]
                if math.hypot(s[1], s[3]) > 0.5:
                    target = math.atan2(s[3], s[1])
                    turn = _wrap(target - headings[i])
                    headings[i] = _wrap(headings[i] + max(-cfg.max_turn, min(cfg.max_turn, turn)))

        dets = []
        boxes = []
        for i in range(cfg.mice_count):
            center = states[i][[0, 2]]
            parts = _parts(center, headings[i], lengths[i])
            box = body_box(parts)
            boxes.append(box)
            for p in TRACKED_PARTS:
                occluded = any(o.covers(t, i, p) for o in cfg.occlusions)
                gt_by_id[gt_id(i, p)].add(t, parts[p], PART_SIZE[p], occluded)
            if rng_det.random() >= cfg.miss_rate:
                bx, by, bw, bh = box
                dets.append((PartType.BODY, bx + bw / 2, by + bh / 2, bw, bh, rng_det.uniform(0.8, 1.0)))
            for p in TRACKED_PARTS:
                missed = rng_det.random() < cfg.miss_rate
                noise = rng_det.normal(0.0, 1.0, size=2) * cfg.sigma_det
                conf = rng_det.uniform(0.7, 1.0)
                if missed or any(o.covers(t, i, p) for o in cfg.occlusions):
                    continue
                w, h = PART_SIZE[p]
                dets.append((p, *(parts[p] + noise), w, h, conf))
        if rng_det.random() < cfg.f_false:
            p = TRACKED_PARTS[int(rng_det.integers(len(TRACKED_PARTS)))]
            w, h = PART_SIZE[p]
            cx = rng_det.uniform(w / 2, cfg.arena_width - w / 2)
            cy = rng_det.uniform(h / 2, cfg.arena_height - h / 2)
            dets.append((p, cx, cy, w, h, rng_det.uniform(0.1, 0.6)))
        order = rng_det.permutation(len(dets))
        frames.append([Detection.from_center(k, t, *dets[j]) for k, j in enumerate(order)])
        bodies_log.append(boxes)

    templates = sample_templates(rng_tmpl, cfg.n_templates, cfg.length_range)
    return Scenario(gt, frames, templates, bodies_log)


def _separate(states, min_sep, margins, cfg):
    n = len(states)
    for i in range(n):
        for j in range(i + 1, n):
            ci, cj = states[i][[0, 2]], states[j][[0, 2]]
            diff = cj - ci
            dist = float(np.linalg.norm(diff))
            if dist >= min_sep:
                continue
            u = diff / dist if dist > 1e-9 else np.array([1.0, 0.0])
            push = min(0.5 * (min_sep - dist), 1.0)
            for k, sgn in ((i, -1.0), (j, 1.0)):
                s = states[k]
                s[0] += sgn * push * u[0]
                s[2] += sgn * push * u[1]
                v = s[[1, 3]]
                along = float(v @ u) * sgn
                if along < 0:
                    # moving towards the other mouse: reflect that component
                    v = v - 2.0 * along * sgn * u
                s[1], s[3] = v
                s[0] = min(max(s[0], margins[k]), cfg.arena_width - margins[k])
                s[2] = min(max(s[2], margins[k]), cfg.arena_height - margins[k])


def benchmark_config(mice: int, seed: int, frames: int = 300) -> ScenarioConfig:
    """Scenarios used by the synthetic tracking benchmark."""
    occlusions = ()
    if mice == 3:
        occlusions = (
            Occlusion(100, 12, ((0, PartType.HEAD), (1, PartType.TAIL_BASE))),
            Occlusion(200, 15, ((2, PartType.HEAD), (2, PartType.TAIL_BASE))),
        )
    return ScenarioConfig(mice_count=mice, frames=frames, sigma_det=1.0, miss_rate=0.05, f_false=0.1,
                          occlusions=occlusions, seed=seed)
