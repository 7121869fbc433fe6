import math

import numpy as np
import pytest

from floorsurvey import fileio
from floorsurvey.geometry import parse_floorplan
from floorsurvey.loopclosure import RejectedMatch, StepLoopClosure
from floorsurvey.pipeline import EvalReport, SurveyPoint
from floorsurvey.sensors import (
    MagSample,
    Pose2D,
    StepEvent,
    SurveyLog,
    WifiObservation,
    parse_survey_log,
)
from floorsurvey.signalmap import SignalMap
from floorsurvey.simulate import office_floorplan


def test_fmt_six_decimals():
    assert fileio.fmt(1.0) == "1.000000"
    assert fileio.fmt(-0.1234567) == "-0.123457"
    assert fileio.fmt(float("nan")) == "nan"


def test_trajectory_roundtrip(tmp_path):
    f = tmp_path / "traj.csv"
    times = np.array([0.0, 0.5, 1.0])
    poses = np.array([[1.234567891, 2.0, 0.1], [2.0, 3.0, -0.2], [3.0, 4.0, 3.1]])
    fileio.write_trajectory(f, times, poses)
    rt, rp = fileio.read_trajectory(f)
    assert np.allclose(rt, times, atol=1e-6)
    assert np.allclose(rp, poses, atol=1e-6)
    # 6-decimal quantisation is the only loss
    assert rp[0, 0] == 1.234568


def test_trajectory_read_errors(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("# header\n0,0.0,1.0,2.0\n")
    with pytest.raises(ValueError, match="line 2"):
        fileio.read_trajectory(f)
    f.write_text("0,0.0,1.0,x,0.0\n")
    with pytest.raises(ValueError, match="line 1"):
        fileio.read_trajectory(f)


def test_empty_trajectory_roundtrip(tmp_path):
    f = tmp_path / "empty.csv"
    fileio.write_trajectory(f, np.zeros(0), np.zeros((0, 3)))
    rt, rp = fileio.read_trajectory(f)
    assert rt.shape == (0,) and rp.shape == (0, 3)


def test_flags_roundtrip(tmp_path):
    f = tmp_path / "flags.csv"
    flags = np.array([True, False, True, True])
    fileio.write_straight_flags(f, flags)
    assert np.array_equal(fileio.read_straight_flags(f), flags)


def test_closures_roundtrip(tmp_path):
    f = tmp_path / "closures.csv"
    cl = [StepLoopClosure(2, 9), StepLoopClosure(4, 7)]
    fileio.write_closures(f, cl)
    assert fileio.read_closures(f) == cl
    f.write_text("1,notanint\n")
    with pytest.raises(ValueError, match="line 1"):
        fileio.read_closures(f)


def test_rejected_roundtrip(tmp_path):
    f = tmp_path / "rej.csv"
    rej = [RejectedMatch(1, 5, "ratio"), RejectedMatch(2, 6, "min_length")]
    fileio.write_rejected(f, rej)
    assert fileio.read_rejected(f) == rej


def test_signal_map_roundtrip(tmp_path):
    f = tmp_path / "map.csv"
    rng = np.random.default_rng(0)
    sm = SignalMap("ap3", 1.0, 2.0, 0.5, 4, 3,
                   rng.uniform(-80, -40, 12), rng.uniform(0.5, 6, 12))
    fileio.write_signal_map(f, sm)
    back = fileio.read_signal_map(f)
    assert back.ap_id == "ap3"
    assert (back.x0, back.y0, back.cell, back.nx, back.ny) == (1.0, 2.0, 0.5, 4, 3)
    assert np.allclose(back.mu, sm.mu, atol=1e-6)
    assert np.allclose(back.sigma, sm.sigma, atol=1e-6)


def test_signal_map_read_errors(tmp_path):
    f = tmp_path / "m.csv"
    f.write_text("source,a\ncell,0,0,1.0,1.0\n")
    with pytest.raises(ValueError, match="before grid"):
        fileio.read_signal_map(f)
    f.write_text("source,a\ngrid,0,0,1.0,2,1\ncell,0,0,-50.0,1.0\n")
    with pytest.raises(ValueError, match="every cell"):
        fileio.read_signal_map(f)
    f.write_text("grid,0,0,1.0,1,1\ncell,0,0,-50.0,1.0\n")
    with pytest.raises(ValueError, match="source"):
        fileio.read_signal_map(f)


def test_signal_map_cell_order_irrelevant(tmp_path):
    f = tmp_path / "m.csv"
    f.write_text("source,a\ngrid,0,0,1.0,2,1\n"
                 "cell,1,0,-60.0,2.0\ncell,0,0,-50.0,1.0\n")
    back = fileio.read_signal_map(f)
    assert np.allclose(back.mu, [-50.0, -60.0])


def test_survey_points_roundtrip(tmp_path):
    f = tmp_path / "points.csv"
    pts = [
        SurveyPoint(0, 0.0, 1.0, 2.0, 0.5, 3, 51.25, {"ap0": -50.0, "ap1": -61.5}),
        SurveyPoint(1, 0.5, 1.5, 2.5, 0.5, None, None, {}),
    ]
    fileio.write_survey_points(f, pts)
    back = fileio.read_survey_points(f)
    assert len(back) == 2
    assert back[0].room == 3 and back[0].mag == 51.25
    assert back[0].wifi == pts[0].wifi
    assert back[1].room is None and back[1].mag is None and back[1].wifi == {}
    f.write_text("sig,0,ap0,-50.0\n")
    with pytest.raises(ValueError, match="before its point"):
        fileio.read_survey_points(f)


def test_positions_format(tmp_path):
    f = tmp_path / "pos.csv"
    fileio.write_positions(f, [(1.0, 2.0, 3.0, -4.5)])
    lines = f.read_text().splitlines()
    assert lines[0].startswith("#")
    assert lines[1] == "1.000000,2.000000,3.000000,-4.500000"


def test_floorplan_roundtrip(tmp_path):
    f = tmp_path / "plan.csv"
    fp = office_floorplan()
    fileio.write_floorplan(f, fp)
    back = parse_floorplan(f.read_text())
    assert np.allclose(back.walls, fp.walls, atol=1e-6)
    assert len(back.rooms) == len(fp.rooms)
    for a, b in zip(back.rooms, fp.rooms):
        assert a.room_id == b.room_id and a.name == b.name
        assert np.allclose(a.vertices, b.vertices, atol=1e-6)


def test_survey_log_roundtrip(tmp_path):
    f = tmp_path / "log.csv"
    log = SurveyLog(
        steps=[StepEvent(0.6, 0.75, 0.01), StepEvent(1.2, 0.74, -0.02)],
        mags=[MagSample(0.55, (50.0, 0.0, 0.0)), MagSample(0.6, (51.0, 1.0, -1.0))],
        wifi=[WifiObservation(0.6, "ap0", -55.0)],
    )
    log.start_pose = Pose2D(1.0, 2.0, 0.5)
    fileio.write_survey_log(f, log)
    back = parse_survey_log(f.read_text())
    assert len(back.steps) == 2 and len(back.mags) == 2 and len(back.wifi) == 1
    assert math.isclose(back.steps[0].length, 0.75, abs_tol=1e-6)
    assert math.isclose(back.mags[1].b[2], -1.0, abs_tol=1e-6)
    assert back.wifi[0].ap_id == "ap0"
    assert back.start_pose is not None
    assert math.isclose(back.start_pose.theta, 0.5, abs_tol=1e-6)
    # records interleave by time with steps before coincident samples
    tags = [ln.split(",")[0] for ln in f.read_text().splitlines()[2:]]
    assert tags == ["mag", "step", "mag", "wifi", "step"]


def test_survey_log_roundtrip_room_start(tmp_path):
    f = tmp_path / "log2.csv"
    log = SurveyLog(steps=[StepEvent(0.5, 0.75, 0.0)])
    log.start_room = 7
    fileio.write_survey_log(f, log)
    back = parse_survey_log(f.read_text())
    assert back.start_room == 7 and back.start_pose is None


def test_eval_report_write(tmp_path):
    f = tmp_path / "eval.csv"
    rep = EvalReport(5, 1.0, 0.9, 1.6, 2.0, 0.4, 0.8, 1)
    fileio.write_eval_report(f, rep)
    text = f.read_text()
    assert "epochs,5" in text
    assert "p90_error,1.600000" in text
    assert "room_accuracy,0.800000" in text
    assert "room_mismatches,1" in text
    rep2 = EvalReport(5, 1.0, 0.9, 1.6, 2.0, 0.4, None, None)
    fileio.write_eval_report(f, rep2)
    assert "room_accuracy" not in f.read_text()


def test_overlap_write(tmp_path):
    f = tmp_path / "cmp.csv"
    sm = SignalMap("a", 0, 0, 1.0, 2, 1, np.zeros(2), np.ones(2))
    fileio.write_overlap(f, sm, np.array([0.25, 0.75]), 0.5)
    text = f.read_text()
    assert "median,0.500000" in text
    assert "cell,0,0,0.250000" in text
    assert "cell,1,0,0.750000" in text
