import json
import subprocess
import sys

import pytest

from parttrack import io
from parttrack.cli import main, parse_occlusion
from parttrack.core import PartType


def simulate(out, *extra):
    return main(["simulate", "--out", str(out), "--frames", "25", "--seed", "3", *extra])


def test_simulate_track_evaluate(tmp_path):
    assert simulate(tmp_path, "--mice", "3", "--occlusion", "5:4:0.head+1.tail_base") == 0
    for name in ("detections.csv", "templates.csv", "ground_truth.csv"):
        assert (tmp_path / name).exists()
    gt = io.load_ground_truth(tmp_path / "ground_truth.csv")
    assert sum(sum(g.occluded) for g in gt) == 8

    args = ["track", "--detections", str(tmp_path / "detections.csv"), "--templates",
            str(tmp_path / "templates.csv"), "--out", str(tmp_path / "tracks.csv"),
            "--targets-per-type", "3", "--dump-dir", str(tmp_path / "dump")]
    assert main(args) == 0
    assert len(list((tmp_path / "dump").iterdir())) == 24
    tracks = io.load_tracks(tmp_path / "tracks.csv")
    assert len(tracks) == 6

    assert main(["evaluate", "--tracks", str(tmp_path / "tracks.csv"), "--ground-truth",
                 str(tmp_path / "ground_truth.csv"), "--out", str(tmp_path / "report.json")]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["num_gt"] == 25 * 6
    assert report["MOTA"] > 0.9


def test_config_file_and_override(tmp_path, capsys):
    simulate(tmp_path)
    cfg = tmp_path / "tracker.cfg"
    cfg.write_text("mode = open\nbirth_persistence = 100\n")
    base = ["track", "--detections", str(tmp_path / "detections.csv"), "--templates", str(tmp_path / "templates.csv"),
            "--config", str(cfg)]
    assert main(base + ["--out", str(tmp_path / "a.csv")]) == 0
    assert main(base + ["--out", str(tmp_path / "b.csv"), "--mode", "fixed", "--targets-per-type", "1"]) == 0
    a = io.load_tracks(tmp_path / "a.csv")
    b = io.load_tracks(tmp_path / "b.csv")
    assert len(b) == 2 and len(a) >= len(b)


def test_scenario_file(tmp_path):
    sc = tmp_path / "scenario.cfg"
    sc.write_text("mice_count = 3\nframes = 12\nocclusion = 2:3:1.head\n")
    assert main(["simulate", "--out", str(tmp_path), "--scenario", str(sc)]) == 0
    gt = io.load_ground_truth(tmp_path / "ground_truth.csv")
    assert len(gt) == 6 and sum(sum(g.occluded) for g in gt) == 3


def test_oracle_command(capsys):
    assert main(["oracle", "--instances", "15", "--seed", "1"]) == 0
    out = capsys.readouterr().out
    assert "mismatches 0" in out and "instances 15" in out


def test_errors_exit_nonzero(tmp_path, capsys):
    assert main(["track", "--detections", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "x.csv")]) != 0
    assert "error" in capsys.readouterr().err
    bad = tmp_path / "bad.csv"
    bad.write_text("frame,part_type,cx,cy,w,h,score\n0,wing,1,1,2,2,0.5\n")
    assert main(["track", "--detections", str(bad), "--out", str(tmp_path / "x.csv")]) != 0
    assert "bad.csv:2" in capsys.readouterr().err
    simulate(tmp_path)
    assert main(["track", "--detections", str(tmp_path / "detections.csv"), "--out", str(tmp_path / "x.csv"),
                 "--mode", "sideways"]) != 0
    with pytest.raises(SystemExit):
        main(["simulate", "--out", str(tmp_path), "--occlusion", "nonsense"])


def test_parse_occlusion():
    occ = parse_occlusion("100:12:0.head+1.tail_base")
    assert (occ.start, occ.duration) == (100, 12)
    assert occ.parts == ((0, PartType.HEAD), (1, PartType.TAIL_BASE))


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "parttrack", "oracle", "--instances", "3"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "mismatches 0" in proc.stdout
