"""Geometric template prior.

Each template stores part positions relative to a body box, normalised by
the box size. For a part candidate the tracker picks the best enclosing body
detection, looks up the nearest templates by body shape, projects their part
positions into that body box and scores the candidate under the resulting
Gaussians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

from .core import Detection, PartType

DEFAULT_EPSILON = 1e-4


@dataclass(frozen=True)
class GeometricTemplate:
    template_id: int
    part_locations: Mapping[PartType, tuple[float, float]]
    body_size: tuple[float, float]

    def __post_init__(self):
        if any(p.is_body for p in self.part_locations):
            raise ValueError("templates hold part offsets only, not body entries")
        w, h = self.body_size
        if w <= 0 or h <= 0:
            raise ValueError("template body size must be positive")

    def descriptor(self) -> np.ndarray:
        return body_descriptor(*self.body_size)


def body_descriptor(width: float, height: float) -> np.ndarray:
    """Shape-and-scale descriptor: aspect ratio and diagonal length."""
    return np.array([width / height, math.hypot(width, height)])


@dataclass(frozen=True)
class PartGaussian:
    mean: np.ndarray
    covariance: np.ndarray
    # de-normalised per-template locations, kept for the exact mixture score
    locations: np.ndarray
    sigma: float


@dataclass(frozen=True)
class GeometricPrior:
    per_part: dict[PartType, PartGaussian] = field(default_factory=dict)
    support: int = 0


def _outside_by(inner: tuple, outer: tuple) -> float:
    """Largest distance by which box ``inner`` sticks out of box ``outer``."""
    ix, iy, iw, ih = inner
    ox, oy, ow, oh = outer
    return max(ox - ix, oy - iy, (ix + iw) - (ox + ow), (iy + ih) - (oy + oh), 0.0)


def select_body(candidate: Detection, bodies: Sequence[Detection], upsilon: float) -> Detection | None:
    """Highest-confidence body whose box holds the candidate within ``upsilon`` px."""
    if candidate.part_type.is_body:
        raise ValueError("candidate must be a part detection")
    best = None
    for body in bodies:
        if not body.part_type.is_body:
            raise ValueError("bodies must all have part_type BODY")
        if _outside_by(candidate.box, body.box) > upsilon:
            continue
        if body.confidence <= 0.0:
            continue
        if best is None or (body.confidence, -body.id) > (best.confidence, -best.id):
            best = body
    return best


def descriptor_distances(body: Detection, templates: Sequence[GeometricTemplate], standardize: bool = True) -> np.ndarray:
    if not templates:
        return np.zeros(0)
    lib = np.array([t.descriptor() for t in templates])
    query = body_descriptor(body.width, body.height)
    if standardize:
        scale = lib.std(axis=0)
        scale[scale <= 0] = 1.0
    else:
        scale = np.ones(lib.shape[1])
    return np.linalg.norm((lib - query) / scale, axis=1)


def nearest_templates(
    body: Detection,
    templates: Sequence[GeometricTemplate],
    O: int,
    standardize: bool = True,
) -> list[GeometricTemplate]:
    if O < 0:
        raise ValueError("O must be non-negative")
    if O == 0 or not templates:
        return []
    dist = descriptor_distances(body, templates, standardize)
    order = sorted(range(len(templates)), key=lambda i: (dist[i], templates[i].template_id))
    return [templates[i] for i in order[:O]]


def denormalize(offset: Sequence[float], body: Detection) -> np.ndarray:
    cx, cy = body.center
    return np.array([cx + offset[0] * body.width, cy + offset[1] * body.height])


def fit_prior(neighbors: Sequence[GeometricTemplate], body: Detection, sigma: float) -> GeometricPrior:
    if not neighbors:
        raise ValueError("fit_prior needs at least one neighbour template; use the epsilon score instead")
    parts = sorted({p for t in neighbors for p in t.part_locations}, key=lambda p: p.value)
    per_part = {}
    for part in parts:
        locs = np.array([denormalize(t.part_locations[part], body) for t in neighbors if part in t.part_locations])
        mean = locs.mean(axis=0)
        if len(locs) > 1:
            cov = np.cov(locs, rowvar=False, ddof=1)
        else:
            cov = np.zeros((2, 2))
        cov = cov + sigma * np.eye(2)
        per_part[part] = PartGaussian(mean, cov, locs, float(sigma))
    return GeometricPrior(per_part, len(neighbors))


def geometric_score(
    candidate: Detection,
    prior: GeometricPrior | None,
    epsilon: float = DEFAULT_EPSILON,
    aggregation: str = "sum",
) -> float:
    """Log geometric score of a candidate.

    ``aggregation="sum"`` returns the log of the summed per-template
    densities ``sum_k N(x; x_k, sigma I)``. ``"moment"`` replaces the sum by
    ``|O|`` times the density of the moment-matched Gaussian.
    """
    if prior is None or candidate.part_type not in prior.per_part:
        return math.log(epsilon)
    g = prior.per_part[candidate.part_type]
    x = np.asarray(candidate.center, dtype=float)
    if aggregation == "sum":
        sq = ((g.locations - x) ** 2).sum(axis=1)
        return float(logsumexp(-0.5 * sq / g.sigma) - math.log(2.0 * math.pi * g.sigma))
    if aggregation == "moment":
        return math.log(len(g.locations)) + _log_normal2(x, g.mean, g.covariance)
    raise ValueError(f"unknown aggregation {aggregation!r}")


def _log_normal2(x: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> float:
    diff = x - mean
    sign, logdet = np.linalg.slogdet(cov)
    if sign <= 0:
        raise np.linalg.LinAlgError("covariance is not positive definite")
    maha = diff @ np.linalg.solve(cov, diff)
    return float(-0.5 * maha - 0.5 * logdet - math.log(2.0 * math.pi))
