"""Command-line entry point: ``parttrack {simulate,track,evaluate,oracle}``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import io
from .core import PartType, TrackerConfig
from .equivalence import run_equivalence
from .ilp import dump_problem
from .metrics import evaluate
from .simulate import Occlusion, ScenarioConfig, synthesize
from .tracker import run

log = logging.getLogger("parttrack")


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _add_tracker_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("tracker parameters (override --config)")
    for f in dataclasses.fields(TrackerConfig):
        group.add_argument(_flag(f.name), dest=f"cfg_{f.name}", default=None, metavar="VALUE",
                           help=f"default: {f.default}")


def _tracker_config(args):
    values = io.read_key_values(args.config) if args.config else {}
    for f in dataclasses.fields(TrackerConfig):
        v = getattr(args, f"cfg_{f.name}")
        if v is not None:
            values[f.name] = v
    return io.config_from_mapping(values)


def parse_occlusion(text: str) -> Occlusion:
    """``START:DURATION:MOUSE.PART[+MOUSE.PART...]``, e.g. ``100:12:0.head+1.tail_base``."""
    try:
        start, duration, parts = text.split(":")
        items = []
        for item in parts.split("+"):
            mouse, label = item.split(".", 1)
            items.append((int(mouse), PartType.from_label(label)))
        return Occlusion(int(start), int(duration), tuple(items))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad occlusion {text!r}: {exc}") from None


SCENARIO_KEYS = {
    "mice_count": int, "frames": int, "arena_width": float, "arena_height": float, "q_d": float,
    "sigma_det": float, "miss_rate": float, "f_false": float, "seed": int, "max_speed": float,
    "min_separation": float, "max_turn": float, "n_templates": int,
}


def _scenario_config(args) -> ScenarioConfig:
    values: dict = {}
    occlusions = []
    if args.scenario:
        for k, v in io.read_key_values(args.scenario).items():
            if k == "occlusion":
                occlusions += [parse_occlusion(x) for x in v.split()]
            elif k in SCENARIO_KEYS:
                values[k] = SCENARIO_KEYS[k](v)
            else:
                raise KeyError(f"unknown scenario key {k!r}")
    for k, conv in SCENARIO_KEYS.items():
        v = getattr(args, k, None)
        if v is not None:
            values[k] = conv(v)
    if args.occlusion:
        occlusions = list(args.occlusion)
    return ScenarioConfig(occlusions=tuple(occlusions), **values)


def cmd_simulate(args) -> int:
    cfg = _scenario_config(args)
    scenario = synthesize(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.save_detections(out / "detections.csv", scenario.frames)
    io.save_templates(out / "templates.csv", scenario.templates)
    io.save_ground_truth(out / "ground_truth.csv", scenario.ground_truth)
    log.info("wrote %d frames to %s", len(scenario.frames), out)
    return 0


def cmd_track(args) -> int:
    config, models = _tracker_config(args)
    frames = io.load_detections(args.detections)
    templates = io.load_templates(args.templates) if args.templates else []
    tracks, results = run(frames, templates, config, models or None)
    io.save_tracks(args.out, tracks)
    if args.dump_dir:
        dump = Path(args.dump_dir)
        dump.mkdir(parents=True, exist_ok=True)
        for res in results:
            if res.problem is not None:
                (dump / f"frame_{res.frame:06d}.lp.txt").write_text(dump_problem(res.problem))
    log.info("tracked %d frames, %d tracks", len(results), len(tracks))
    return 0


def cmd_evaluate(args) -> int:
    gt = io.load_ground_truth(args.ground_truth)
    tracks = io.load_tracks(args.tracks)
    report = evaluate(gt, tracks, args.threshold)
    if args.out:
        io.save_report(args.out, report)
    else:
        sys.stdout.write(report.to_text())
    return 0


def cmd_oracle(args) -> int:
    rep = run_equivalence(args.instances, args.seed, args.max_targets, args.max_detections)
    print(f"instances {rep.instances}")
    print(f"mismatches {rep.mismatches}")
    print(f"infeasible {rep.infeasible}")
    print(f"bound_trace_violations {rep.bound_violations}")
    print(f"max_abs_diff {rep.max_abs_diff:.3e}")
    print(f"bnb_seconds {rep.seconds:.3f}")
    return 0 if rep.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="parttrack", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a synthetic scenario (detections, templates, ground truth)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--scenario", help="key = value scenario file")
    p.add_argument("--occlusion", action="append", type=parse_occlusion,
                   help="START:DURATION:MOUSE.PART[+MOUSE.PART]; repeatable")
    p.add_argument("--mice", dest="mice_count")
    for key in SCENARIO_KEYS:
        if key != "mice_count":
            p.add_argument(_flag(key), dest=key)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("track", help="track detections into part trajectories")
    p.add_argument("--detections", required=True)
    p.add_argument("--templates")
    p.add_argument("--out", required=True, help="tracks file")
    p.add_argument("--config", help="key = value tracker configuration file")
    p.add_argument("--dump-dir", help="write each frame's assignment problem listing here")
    _add_tracker_flags(p)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("evaluate", help="score tracks against ground truth")
    p.add_argument("--tracks", required=True)
    p.add_argument("--ground-truth", required=True)
    p.add_argument("--threshold", type=float, default=15.0, help="match distance in pixels")
    p.add_argument("--out", help="report file (.json for records, otherwise a text table)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("oracle", help="compare branch-and-bound against exhaustive enumeration")
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-targets", type=int, default=3)
    p.add_argument("--max-detections", type=int, default=5)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"parttrack {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
