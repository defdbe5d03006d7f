"""Domain types, configuration and the ILP variable layout."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class PartType(enum.Enum):
    HEAD = "head"
    TAIL_BASE = "tail_base"
    BODY = "body"

    @classmethod
    def from_label(cls, label: str) -> "PartType":
        try:
            return cls(label.strip().lower())
        except ValueError:
            raise ValueError(f"unknown part type label {label!r}") from None

    @property
    def label(self) -> str:
        return self.value

    @property
    def is_body(self) -> bool:
        return self is PartType.BODY


TRACKED_PARTS = (PartType.HEAD, PartType.TAIL_BASE)


def _frozen_array(values, shape=None) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if shape is not None and arr.shape != shape:
        raise ValueError(f"expected shape {shape}, got {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Detection:
    """A part or body hypothesis in a single frame.

    ``box`` is ``(x, y, width, height)`` with ``(x, y)`` the top-left corner.
    """

    id: int
    frame: int
    part_type: PartType
    center: tuple[float, float]
    box: tuple[float, float, float, float]
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        x, y, w, h = self.box
        if w <= 0 or h <= 0:
            raise ValueError(f"box must have positive size, got {self.box}")
        cx, cy = self.center
        tol = 1e-9 * max(1.0, abs(x) + w, abs(y) + h)
        if not (x - tol <= cx <= x + w + tol and y - tol <= cy <= y + h + tol):
            raise ValueError(f"center {self.center} outside box {self.box}")

    @classmethod
    def from_center(cls, id, frame, part_type, cx, cy, w, h, confidence) -> "Detection":
        cx, cy, w, h = float(cx), float(cy), float(w), float(h)
        return cls(
            id=int(id),
            frame=int(frame),
            part_type=part_type,
            center=(cx, cy),
            box=(cx - w / 2.0, cy - h / 2.0, w, h),
            confidence=float(confidence),
        )

    @property
    def width(self) -> float:
        return self.box[2]

    @property
    def height(self) -> float:
        return self.box[3]

    @property
    def position(self) -> np.ndarray:
        return np.array(self.center, dtype=float)


@dataclass(frozen=True)
class TargetState:
    """Kinematic state of one tracked part.

    The mean is ordered ``(x, vx, y, vy)``: pixels and pixels per frame.
    """

    target_id: int
    part_type: PartType
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        if self.part_type.is_body:
            raise ValueError("body is not a trackable part type")
        object.__setattr__(self, "mean", _frozen_array(self.mean, (4,)))
        object.__setattr__(self, "covariance", _frozen_array(self.covariance, (4, 4)))

    @property
    def position(self) -> np.ndarray:
        return self.mean[[0, 2]]

    @property
    def velocity(self) -> np.ndarray:
        return self.mean[[1, 3]]

    def replace(self, mean=None, covariance=None) -> "TargetState":
        return TargetState(
            self.target_id,
            self.part_type,
            self.mean if mean is None else mean,
            self.covariance if covariance is None else covariance,
        )


@dataclass(frozen=True)
class MotionModel:
    """Constant-velocity model discretised with sampling period ``tau``.

    ``q_d`` scales the white-noise-acceleration process noise; the
    observation noise is isotropic with variance ``r`` (pixels squared).
    """

    tau: float = 1.0
    q_d: float = 0.5
    r: float = 4.0

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.q_d < 0 or self.r < 0:
            raise ValueError("noise parameters must be non-negative")

    @cached_property
    def transition(self) -> np.ndarray:
        a = np.array([[1.0, self.tau], [0.0, 1.0]])
        return _frozen_array(np.kron(np.eye(2), a))

    @cached_property
    def process_noise(self) -> np.ndarray:
        t = self.tau
        q = self.q_d * np.array([[t**3 / 3.0, t**2 / 2.0], [t**2 / 2.0, t]])
        return _frozen_array(np.kron(np.eye(2), q))

    @cached_property
    def observation(self) -> np.ndarray:
        return _frozen_array([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]])

    @cached_property
    def observation_noise(self) -> np.ndarray:
        return _frozen_array(self.r * np.eye(2))


DEFAULT_INITIAL_COVARIANCE = (25.0, 100.0, 25.0, 100.0)


@dataclass(frozen=True)
class TrackerConfig:
    """Tracker hyperparameters.

    The clutter density ``beta`` is derived from ``f_false`` and the image
    size unless given explicitly.
    """

    f_false: float = 0.1
    image_width: float = 480.0
    image_height: float = 640.0
    beta_override: float | None = None
    upsilon: float = 10.0
    epsilon_geo: float = 1e-4
    neighbor_count: int = 10
    template_variance: float = 16.0
    iou_floor: float = 1e-3
    affinity_clamp: tuple[float, float] = (1e-4, 1e4)
    birth_confidence: float = 0.5
    birth_persistence: int = 3
    birth_radius: float = 10.0
    max_coast: int = 30
    mode: str = "fixed"
    targets_per_type: int = 2
    tau: float = 1.0
    q_d: float = 0.5
    observation_variance: float = 4.0
    initial_covariance: tuple[float, float, float, float] = DEFAULT_INITIAL_COVARIANCE
    solver: str = "bnb"

    def __post_init__(self):
        if self.neighbor_count < 0:
            raise ValueError("neighbor_count must be >= 0")
        if self.epsilon_geo <= 0:
            raise ValueError("epsilon_geo must be positive")
        if self.template_variance <= 0:
            raise ValueError("template_variance must be positive")
        lo, hi = self.affinity_clamp
        if not 0 < lo <= hi:
            raise ValueError("affinity_clamp must satisfy 0 < p_min <= p_max")
        if not 0.0 <= self.birth_confidence <= 1.0:
            raise ValueError("birth_confidence must lie in [0, 1]")
        if self.birth_persistence < 1 or self.max_coast < 0:
            raise ValueError("birth_persistence >= 1 and max_coast >= 0 required")
        if self.mode not in ("fixed", "open"):
            raise ValueError(f"mode must be 'fixed' or 'open', got {self.mode!r}")
        if self.solver not in ("bnb", "oracle"):
            raise ValueError(f"solver must be 'bnb' or 'oracle', got {self.solver!r}")
        object.__setattr__(self, "affinity_clamp", (float(lo), float(hi)))
        object.__setattr__(self, "initial_covariance", tuple(float(v) for v in self.initial_covariance))

    @property
    def beta(self) -> float:
        if self.beta_override is not None:
            return self.beta_override
        return self.f_false / (self.image_width * self.image_height)

    @property
    def motion_model(self) -> MotionModel:
        return MotionModel(tau=self.tau, q_d=self.q_d, r=self.observation_variance)


@dataclass(frozen=True)
class VariableLayout:
    """Index conventions for the frame's binary vector ``[theta, gamma]``.

    Detections are numbered ``1..M``; ``m = 0`` is the fake detection.
    ``theta(n, m)`` is target ``n`` (0-based) taking detection ``m``;
    ``gamma(m, m2)`` is the association of detections ``m`` and ``m2``.
    """

    n_targets: int
    n_detections: int
    _inverse: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_targets < 0 or self.n_detections < 0:
            raise ValueError("counts must be non-negative")
        inverse = [("theta", n, m) for n in range(self.n_targets) for m in range(self.n_detections + 1)]
        inverse += [
            ("gamma", m, m2)
            for m in range(1, self.n_detections + 1)
            for m2 in range(1, self.n_detections + 1)
        ]
        object.__setattr__(self, "_inverse", tuple(inverse))

    @property
    def n_theta(self) -> int:
        return self.n_targets * (self.n_detections + 1)

    @property
    def n_gamma(self) -> int:
        return self.n_detections * self.n_detections

    @property
    def size(self) -> int:
        return self.n_theta + self.n_gamma

    def theta(self, n: int, m: int) -> int:
        if not (0 <= n < self.n_targets and 0 <= m <= self.n_detections):
            raise IndexError(f"theta({n}, {m}) out of range")
        return n * (self.n_detections + 1) + m

    def gamma(self, m: int, m2: int) -> int:
        M = self.n_detections
        if not (1 <= m <= M and 1 <= m2 <= M):
            raise IndexError(f"gamma({m}, {m2}) out of range")
        return self.n_theta + (m - 1) * M + (m2 - 1)

    def inverse(self, j: int) -> tuple[str, int, int]:
        return self._inverse[j]


def layout(n_targets: int, n_detections: int) -> VariableLayout:
    return VariableLayout(n_targets, n_detections)


def log_beta(config: TrackerConfig) -> float:
    beta = config.beta
    if not beta > 0:
        raise ValueError(f"clutter density beta must be positive, got {beta}")
    return math.log(beta)
