"""Line-oriented text formats for detections, templates, ground truth,
tracks, reports and configuration.

Every table file starts with a mandatory header line. Lines beginning with
``#`` are metadata; ``# frames=T`` fixes the sequence length so trailing
empty frames survive a round trip. Frames are 0-based and must not
decrease down the file.
"""

from __future__ import annotations

import csv
import dataclasses
import io as _io
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .association import DistanceModel, pair_key
from .core import Detection, PartType, TargetState, TrackerConfig
from .geometry import GeometricTemplate
from .metrics import GroundTruthTrack, MetricsReport, report_from_json
from .tracker import Track, TrackPoint, TrackStatus

DETECTION_HEADER = ["frame", "part_type", "cx", "cy", "w", "h", "score"]
TEMPLATE_HEADER = ["template_id", "body_w", "body_h", "part_type", "off_x", "off_y"]
GT_HEADER = ["frame", "gt_id", "part_type", "cx", "cy", "w", "h", "occluded"]
COV_KEYS = [f"c{i}{j}" for i in range(4) for j in range(i, 4)]
TRACK_HEADER = (["frame", "track_id", "part_type", "x", "vx", "y", "vy"] + COV_KEYS
                + ["detection_id", "w", "h", "status"])


class FormatError(ValueError):
    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.line = line


def _num(x: float) -> str:
    return repr(float(x))


def _read_table(path, header: list[str]):
    """Yield ``(line_number, row_dict)``; also returns metadata via the first item."""
    path = Path(path)
    meta: dict[str, str] = {}
    rows = []
    seen_header = False
    with path.open(newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    k, v = body.split("=", 1)
                    meta[k.strip()] = v.strip()
                continue
            fields = next(csv.reader([line]))
            fields = [f.strip() for f in fields]
            if not seen_header:
                if fields != header:
                    raise FormatError(path, lineno, f"expected header {','.join(header)}")
                seen_header = True
                continue
            if len(fields) != len(header):
                raise FormatError(path, lineno, f"expected {len(header)} fields, got {len(fields)}")
            rows.append((lineno, dict(zip(header, fields))))
    if not seen_header:
        raise FormatError(path, 1, "missing header line")
    return meta, rows


def _parse(path, lineno, func, value, what):
    try:
        return func(value)
    except ValueError as exc:
        raise FormatError(path, lineno, f"bad {what} {value!r}: {exc}") from None


def _part(path, lineno, label) -> PartType:
    try:
        return PartType.from_label(label)
    except ValueError as exc:
        raise FormatError(path, lineno, str(exc)) from None


def _check_order(path, lineno, frame, last):
    if frame < 0:
        raise FormatError(path, lineno, f"negative frame index {frame}")
    if last is not None and frame < last:
        raise FormatError(path, lineno, f"frame {frame} out of order (after frame {last})")


def _write_table(path, header, rows, meta: Mapping[str, object] | None = None) -> None:
    buf = _io.StringIO()
    for k, v in (meta or {}).items():
        buf.write(f"# {k}={v}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(str(v) for v in row) + "\n")
    Path(path).write_text(buf.getvalue())


# detections

def load_detections(path, n_frames: int | None = None) -> list[list[Detection]]:
    meta, rows = _read_table(path, DETECTION_HEADER)
    frames: dict[int, list[Detection]] = {}
    last = None
    for lineno, r in rows:
        frame = _parse(path, lineno, int, r["frame"], "frame")
        _check_order(path, lineno, frame, last)
        last = frame
        part = _part(path, lineno, r["part_type"])
        vals = [_parse(path, lineno, float, r[k], k) for k in ("cx", "cy", "w", "h", "score")]
        try:
            # ids count up from 0 within each frame, in file order
            det = Detection.from_center(len(frames.get(frame, [])), frame, part, *vals)
        except ValueError as exc:
            raise FormatError(path, lineno, str(exc)) from None
        frames.setdefault(frame, []).append(det)
    if n_frames is None and "frames" in meta:
        n_frames = int(meta["frames"])
    total = max(frames) + 1 if frames else 0
    if n_frames is not None:
        if n_frames < total:
            raise FormatError(path, 1, f"frames={n_frames} but detections reach frame {total - 1}")
        total = n_frames
    return [frames.get(f, []) for f in range(total)]


def save_detections(path, frames: Sequence[Sequence[Detection]]) -> None:
    rows = []
    for f, dets in enumerate(frames):
        for d in dets:
            if d.frame != f:
                raise ValueError(f"detection of frame {d.frame} stored at position {f}")
            rows.append([f, d.part_type.label, _num(d.center[0]), _num(d.center[1]),
                         _num(d.width), _num(d.height), _num(d.confidence)])
    _write_table(path, DETECTION_HEADER, rows, {"frames": len(frames)})


# templates

def load_templates(path) -> list[GeometricTemplate]:
    _, rows = _read_table(path, TEMPLATE_HEADER)
    grouped: dict[int, dict] = {}
    for lineno, r in rows:
        tid = _parse(path, lineno, int, r["template_id"], "template_id")
        w = _parse(path, lineno, float, r["body_w"], "body_w")
        h = _parse(path, lineno, float, r["body_h"], "body_h")
        part = _part(path, lineno, r["part_type"])
        if part.is_body:
            raise FormatError(path, lineno, "template rows describe parts, not bodies")
        off = (_parse(path, lineno, float, r["off_x"], "off_x"), _parse(path, lineno, float, r["off_y"], "off_y"))
        entry = grouped.setdefault(tid, {"size": (w, h), "parts": {}, "line": lineno})
        if entry["size"] != (w, h):
            raise FormatError(path, lineno, f"template {tid} has inconsistent body size")
        if part in entry["parts"]:
            raise FormatError(path, lineno, f"template {tid} repeats part {part.label}")
        entry["parts"][part] = off
    out = []
    for tid in sorted(grouped):
        e = grouped[tid]
        try:
            out.append(GeometricTemplate(tid, e["parts"], e["size"]))
        except ValueError as exc:
            raise FormatError(path, e["line"], str(exc)) from None
    return out


def save_templates(path, templates: Iterable[GeometricTemplate]) -> None:
    rows = []
    for t in sorted(templates, key=lambda t: t.template_id):
        for part in sorted(t.part_locations, key=lambda p: p.value):
            ox, oy = t.part_locations[part]
            rows.append([t.template_id, _num(t.body_size[0]), _num(t.body_size[1]), part.label, _num(ox), _num(oy)])
    _write_table(path, TEMPLATE_HEADER, rows)


# ground truth

def load_ground_truth(path) -> list[GroundTruthTrack]:
    _, rows = _read_table(path, GT_HEADER)
    tracks: dict[int, GroundTruthTrack] = {}
    last = None
    for lineno, r in rows:
        frame = _parse(path, lineno, int, r["frame"], "frame")
        _check_order(path, lineno, frame, last)
        last = frame
        gid = _parse(path, lineno, int, r["gt_id"], "gt_id")
        part = _part(path, lineno, r["part_type"])
        vals = [_parse(path, lineno, float, r[k], k) for k in ("cx", "cy", "w", "h")]
        occ = r["occluded"]
        if occ not in ("0", "1"):
            raise FormatError(path, lineno, f"occluded must be 0 or 1, got {occ!r}")
        trk = tracks.setdefault(gid, GroundTruthTrack(gid, part))
        if trk.part_type != part:
            raise FormatError(path, lineno, f"gt track {gid} changes part type")
        try:
            trk.add(frame, vals[:2], vals[2:], occ == "1")
        except ValueError as exc:
            raise FormatError(path, lineno, str(exc)) from None
    return [tracks[g] for g in sorted(tracks)]


def save_ground_truth(path, tracks: Sequence[GroundTruthTrack]) -> None:
    rows = []
    for trk in tracks:
        for f, c, s, o in zip(trk.frames, trk.centers, trk.sizes, trk.occluded):
            rows.append((f, trk.gt_id, [f, trk.gt_id, trk.part_type.label, _num(c[0]), _num(c[1]),
                                         _num(s[0]), _num(s[1]), int(o)]))
    rows.sort(key=lambda r: (r[0], r[1]))
    _write_table(path, GT_HEADER, [r[2] for r in rows])


# tracks

def save_tracks(path, tracks: Sequence[Track]) -> None:
    rows = []
    for trk in tracks:
        for i, p in enumerate(trk.history):
            cov = p.state.covariance
            status = trk.status.value if i == len(trk.history) - 1 else ""
            rows.append((p.frame, trk.target_id, [
                p.frame, trk.target_id, trk.part_type.label, *(_num(v) for v in p.state.mean),
                *(_num(cov[a, b]) for a in range(4) for b in range(a, 4)),
                "" if p.detection_id is None else p.detection_id, _num(p.size[0]), _num(p.size[1]), status]))
    rows.sort(key=lambda r: (r[0], r[1]))
    _write_table(path, TRACK_HEADER, [r[2] for r in rows])


def load_tracks(path) -> list[Track]:
    _, rows = _read_table(path, TRACK_HEADER)
    tracks: dict[int, Track] = {}
    last = None
    for lineno, r in rows:
        frame = _parse(path, lineno, int, r["frame"], "frame")
        _check_order(path, lineno, frame, last)
        last = frame
        tid = _parse(path, lineno, int, r["track_id"], "track_id")
        part = _part(path, lineno, r["part_type"])
        mean = [_parse(path, lineno, float, r[k], k) for k in ("x", "vx", "y", "vy")]
        upper = [_parse(path, lineno, float, r[k], k) for k in COV_KEYS]
        cov = np.zeros((4, 4))
        cov[np.triu_indices(4)] = upper
        cov = cov + np.triu(cov, 1).T
        det_id = None if r["detection_id"] == "" else _parse(path, lineno, int, r["detection_id"], "detection_id")
        size = (_parse(path, lineno, float, r["w"], "w"), _parse(path, lineno, float, r["h"], "h"))
        try:
            state = TargetState(tid, part, mean, cov)
            trk = tracks.setdefault(tid, Track(tid, part, birth_frame=frame))
            if trk.part_type != part:
                raise ValueError(f"track {tid} changes part type")
            trk.append(TrackPoint(frame, state, det_id, size))
        except ValueError as exc:
            raise FormatError(path, lineno, str(exc)) from None
        if r["status"]:
            try:
                trk.status = TrackStatus(r["status"])
            except ValueError:
                raise FormatError(path, lineno, f"unknown status {r['status']!r}") from None
    for trk in tracks.values():
        coasting = 0
        for p in reversed(trk.history):
            if p.detection_id is not None:
                break
            coasting += 1
        trk.coast_count = coasting
    return [tracks[t] for t in sorted(tracks)]


# reports

def save_report(path, report: MetricsReport) -> None:
    path = Path(path)
    if path.suffix == ".json":
        path.write_text(report.to_json() + "\n")
    else:
        path.write_text(report.to_text())


def load_report(path) -> MetricsReport:
    return report_from_json(Path(path).read_text())


# configuration

def read_key_values(path) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(path, lineno, "expected key = value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _coerce(field: dataclasses.Field, value: str):
    default = field.default
    if field.name in ("affinity_clamp", "initial_covariance"):
        return tuple(float(v) for v in value.split(","))
    if field.name == "beta_override":
        return None if value.lower() in ("", "none") else float(value)
    if isinstance(default, bool):
        return value.lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    return value


def config_from_mapping(values: Mapping[str, str], base: TrackerConfig | None = None):
    """TrackerConfig plus distance models from ``key = value`` pairs.

    Distance models use keys ``distance.<part>.<part> = mean,variance``.
    """
    base = base or TrackerConfig()
    fields = {f.name: f for f in dataclasses.fields(TrackerConfig)}
    changes = {}
    models = {}
    for key, value in values.items():
        if key.startswith("distance."):
            _, a, b = key.split(".")
            mean, var = (float(v) for v in value.split(","))
            pa, pb = PartType.from_label(a), PartType.from_label(b)
            models[pair_key(pa, pb)] = DistanceModel(mean, var, pair_key(pa, pb))
        elif key in fields:
            changes[key] = _coerce(fields[key], value)
        else:
            raise KeyError(f"unknown configuration key {key!r}")
    return dataclasses.replace(base, **changes), models


def config_to_text(config: TrackerConfig, models: Mapping | None = None) -> str:
    lines = []
    for f in dataclasses.fields(config):
        v = getattr(config, f.name)
        if isinstance(v, tuple):
            v = ",".join(repr(x) for x in v)
        lines.append(f"{f.name} = {v}")
    for key in sorted(models or {}, key=lambda k: sorted(p.value for p in k)):
        m = models[key]
        a, b = sorted(p.value for p in key)
        lines.append(f"distance.{a}.{b} = {m.mean!r},{m.variance!r}")
    return "\n".join(lines) + "\n"

