"""Plain-text readers and writers for every pipeline artifact.

All numbers are written with six fixed decimals so repeated runs with
the same seed produce byte-identical files.  Every format is line
oriented with comma-separated fields and # comments.
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import Floorplan
from .loopclosure import RejectedMatch, StepLoopClosure
from .pipeline import EvalReport, SurveyPoint
from .sensors import MagSample, StepEvent, SurveyLog, WifiObservation
from .signalmap import SignalMap


def fmt(x: float) -> str:
    return f"{float(x):.6f}"


def _numbered(lineno: int, exc: Exception) -> ValueError:
    return ValueError(f"line {lineno}: {exc}")


def _data_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, [p.strip() for p in line.split(",")]


def write_trajectory(path, times: np.ndarray, poses: np.ndarray) -> None:
    """Rows of epoch,t,x,y,theta."""
    lines = ["# epoch,t,x,y,theta"]
    for e, (t, pose) in enumerate(zip(times, poses)):
        lines.append(f"{e},{fmt(t)},{fmt(pose[0])},{fmt(pose[1])},{fmt(pose[2])}")
    _write(path, lines)


def read_trajectory(path) -> tuple[np.ndarray, np.ndarray]:
    times, poses = [], []
    for lineno, parts in _data_lines(_read(path)):
        try:
            if len(parts) != 5:
                raise ValueError("expected epoch,t,x,y,theta")
            times.append(float(parts[1]))
            poses.append([float(parts[2]), float(parts[3]), float(parts[4])])
        except ValueError as exc:
            raise _numbered(lineno, exc) from None
    return np.asarray(times), np.asarray(poses).reshape(-1, 3)


def write_straight_flags(path, flags: np.ndarray) -> None:
    lines = ["# step_index,straight"]
    lines += [f"{i},{int(v)}" for i, v in enumerate(flags)]
    _write(path, lines)


def read_straight_flags(path) -> np.ndarray:
    vals = []
    for lineno, parts in _data_lines(_read(path)):
        try:
            vals.append(bool(int(parts[1])))
        except (ValueError, IndexError) as exc:
            raise _numbered(lineno, exc) from None
    return np.asarray(vals, dtype=bool)


def write_closures(path, closures: list[StepLoopClosure]) -> None:
    lines = ["# epoch_a,epoch_b"]
    lines += [f"{c.epoch_a},{c.epoch_b}" for c in closures]
    _write(path, lines)


def read_closures(path) -> list[StepLoopClosure]:
    out = []
    for lineno, parts in _data_lines(_read(path)):
        try:
            out.append(StepLoopClosure(int(parts[0]), int(parts[1])))
        except (ValueError, IndexError) as exc:
            raise _numbered(lineno, exc) from None
    return out


def write_rejected(path, rejected: list[RejectedMatch]) -> None:
    lines = ["# epoch_a,epoch_b,reason"]
    lines += [f"{r.epoch_a},{r.epoch_b},{r.reason}" for r in rejected]
    _write(path, lines)


def read_rejected(path) -> list[RejectedMatch]:
    out = []
    for lineno, parts in _data_lines(_read(path)):
        try:
            out.append(RejectedMatch(int(parts[0]), int(parts[1]), parts[2]))
        except (ValueError, IndexError) as exc:
            raise _numbered(lineno, exc) from None
    return out


def write_signal_map(path, sm: SignalMap) -> None:
    """Header meta row, then one row per cell in index order."""
    lines = [
        "# signal map",
        f"source,{sm.ap_id}",
        f"grid,{fmt(sm.x0)},{fmt(sm.y0)},{fmt(sm.cell)},{sm.nx},{sm.ny}",
        "# cell,ix,iy,mu,sigma",
    ]
    for c in range(sm.nx * sm.ny):
        ix, iy = c % sm.nx, c // sm.nx
        lines.append(f"cell,{ix},{iy},{fmt(sm.mu[c])},{fmt(sm.sigma[c])}")
    _write(path, lines)


def read_signal_map(path) -> SignalMap:
    source = None
    grid = None
    mu = sigma = None
    for lineno, parts in _data_lines(_read(path)):
        try:
            if parts[0] == "source":
                source = parts[1]
            elif parts[0] == "grid":
                grid = (float(parts[1]), float(parts[2]), float(parts[3]),
                        int(parts[4]), int(parts[5]))
                mu = np.full(grid[3] * grid[4], np.nan)
                sigma = np.full(grid[3] * grid[4], np.nan)
            elif parts[0] == "cell":
                if grid is None:
                    raise ValueError("cell row before grid row")
                ix, iy = int(parts[1]), int(parts[2])
                c = iy * grid[3] + ix
                mu[c] = float(parts[3])
                sigma[c] = float(parts[4])
            else:
                raise ValueError(f"unknown record {parts[0]!r}")
        except (ValueError, IndexError) as exc:
            raise _numbered(lineno, exc) from None
    if source is None or grid is None:
        raise ValueError("missing source or grid record")
    if np.isnan(mu).any():
        raise ValueError("map file does not cover every cell")
    return SignalMap(source, grid[0], grid[1], grid[2], grid[3], grid[4], mu, sigma)


def write_overlap(path, sm: SignalMap, scores: np.ndarray, median: float) -> None:
    """Per-cell interval overlap plus the summary median."""
    lines = ["# map comparison", f"median,{fmt(median)}", "# cell,ix,iy,score"]
    for c in range(sm.nx * sm.ny):
        lines.append(f"cell,{c % sm.nx},{c // sm.nx},{fmt(scores[c])}")
    _write(path, lines)


def write_survey_points(path, points: list[SurveyPoint]) -> None:
    """point rows carry the pose and mag summary; sig rows carry the
    per-source RSS means keyed by epoch."""
    lines = ["# point,epoch,t,x,y,theta,room,mag"]
    for p in points:
        room = -1 if p.room is None else p.room
        mag = "nan" if p.mag is None else fmt(p.mag)
        lines.append(f"point,{p.epoch},{fmt(p.t)},{fmt(p.x)},{fmt(p.y)},"
                     f"{fmt(p.theta)},{room},{mag}")
        for ap, rssi in p.wifi.items():
            lines.append(f"sig,{p.epoch},{ap},{fmt(rssi)}")
    _write(path, lines)


def read_survey_points(path) -> list[SurveyPoint]:
    points: dict[int, SurveyPoint] = {}
    for lineno, parts in _data_lines(_read(path)):
        try:
            if parts[0] == "point":
                epoch = int(parts[1])
                room = int(parts[6])
                mag = float(parts[7])
                points[epoch] = SurveyPoint(
                    epoch, float(parts[2]), float(parts[3]), float(parts[4]),
                    float(parts[5]), None if room < 0 else room,
                    None if math.isnan(mag) else mag, {})
            elif parts[0] == "sig":
                epoch = int(parts[1])
                if epoch not in points:
                    raise ValueError("sig row before its point row")
                points[epoch].wifi[parts[2]] = float(parts[3])
            else:
                raise ValueError(f"unknown record {parts[0]!r}")
        except (ValueError, IndexError) as exc:
            raise _numbered(lineno, exc) from None
    return [points[e] for e in sorted(points)]


def write_eval_report(path, report: EvalReport) -> None:
    lines = ["# trajectory evaluation", f"epochs,{report.n_epochs}"]
    for name in ("mean_error", "median_error", "p90_error", "max_error", "final_error"):
        lines.append(f"{name},{fmt(getattr(report, name))}")
    if report.room_accuracy is not None:
        lines.append(f"room_accuracy,{fmt(report.room_accuracy)}")
        lines.append(f"room_mismatches,{report.room_mismatches}")
    _write(path, lines)


def write_positions(path, rows: list[tuple[float, float, float, float]]) -> None:
    """Rows of t,x,y,loglik for one-shot position fixes."""
    lines = ["# t,x,y,loglik"]
    lines += [f"{fmt(t)},{fmt(x)},{fmt(y)},{fmt(ll)}" for t, x, y, ll in rows]
    _write(path, lines)


def write_floorplan(path, fp: Floorplan) -> None:
    lines = ["# floorplan"]
    for x0, y0, x1, y1 in fp.walls:
        lines.append(f"wall,{fmt(x0)},{fmt(y0)},{fmt(x1)},{fmt(y1)}")
    for room in fp.rooms:
        coords = ",".join(f"{fmt(v[0])},{fmt(v[1])}" for v in room.vertices)
        lines.append(f"room,{room.room_id},{room.name},{coords}")
    _write(path, lines)


def write_survey_log(path, log: SurveyLog) -> None:
    """Same record grammar the log parser accepts."""
    lines = ["# survey log"]
    if log.start_pose is not None:
        p = log.start_pose
        lines.append(f"start,{fmt(p.x)},{fmt(p.y)},{fmt(p.theta)}")
    elif log.start_room is not None:
        lines.append(f"start,{log.start_room}")
    events: list[tuple[float, int, str]] = []
    for s in log.steps:
        events.append((s.t, 0, f"step,{fmt(s.t)},{fmt(s.length)},{fmt(s.dtheta)}"))
    for m in log.mags:
        events.append((m.t, 1, f"mag,{fmt(m.t)},{fmt(m.b[0])},{fmt(m.b[1])},{fmt(m.b[2])}"))
    for w in log.wifi:
        events.append((w.t, 2, f"wifi,{fmt(w.t)},{w.ap_id},{fmt(w.rssi)}"))
    events.sort(key=lambda e: (e[0], e[1]))
    lines += [e[2] for e in events]
    _write(path, lines)


def _write(path, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _read(path) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()
