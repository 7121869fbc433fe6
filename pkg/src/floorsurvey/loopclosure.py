"""Loop-closure detection from a first-pass trajectory and magnetometer data.

Revisited stretches of the walk are proposed geometrically (maximal
segment pairs of trajectory indices that stay within a link radius),
then matched sample-by-sample with an open-begin/open-end dynamic
time warp over magnetic field magnitude, split where the warp degenerates,
validated on shape criteria, and finally thinned to step-level closure
pairs the second filter pass can consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .sensors import MagSample


@dataclass(frozen=True)
class StepLoopClosure:
    """The walk revisited epoch_a's position at epoch_b (epoch_a < epoch_b)."""

    epoch_a: int
    epoch_b: int

    def __post_init__(self):
        if not 0 <= self.epoch_a < self.epoch_b:
            raise ValueError(f"need 0 <= epoch_a < epoch_b, got ({self.epoch_a}, {self.epoch_b})")


@dataclass(frozen=True)
class MagLoopClosure:
    """One matched magnetometer sample pair with trajectory positions."""

    t_a: float
    t_b: float
    pos_a: tuple[float, float]
    pos_b: tuple[float, float]


@dataclass(frozen=True)
class SegmentPair:
    """Aligned trajectory index ranges; side b may run backwards."""

    a_start: int
    a_end: int
    b_start: int
    b_end: int

    @property
    def decreasing(self) -> bool:
        return self.b_end < self.b_start


@dataclass
class MspParams:
    radius: float = 3.0       # metres; link indices whose positions are this close
    min_separation: int = 15  # steps; closer indices are never linked


@dataclass
class ValidationParams:
    min_length: float = 2.5     # metres; longer matched side must exceed this
    max_ratio: float = 2.0      # longer/shorter matched length, strict
    max_mean_dist: float = 3.0  # metres; mean matched-point separation, inclusive
    max_dist_var: float = 1.0   # metres^2; separation variance, inclusive
    max_flat: int = 3           # warp-path points sharing one reference sample


@dataclass
class RejectedMatch:
    epoch_a: int
    epoch_b: int
    reason: str


@dataclass
class LoopClosureResult:
    closures: list[StepLoopClosure]
    rejected: list[RejectedMatch]
    msps: list[SegmentPair]
    mag_closures: list[MagLoopClosure]


def find_msps(positions: np.ndarray, params: MspParams | None = None) -> list[SegmentPair]:
    """Maximal segment pairs of a trajectory's position sequence.

    Each index links to every other index within the link radius whose
    separation exceeds the temporal guard; a linear pass then grows
    aligned pairs while the linked counter-indices continue in sequence
    (advancing preferred, repeating allowed).  Mirrored duplicates and
    pairs contained in a longer pair are dropped.
    """
    p = params or MspParams()
    pos = np.asarray(positions, dtype=float)[:, :2]
    n = len(pos)
    if n < 2:
        return []
    d = cdist(pos, pos)
    sep = np.abs(np.arange(n)[:, None] - np.arange(n)[None, :])
    link = (d <= p.radius) & (sep > p.min_separation)

    found: dict[tuple[int, int, int, int], None] = {}
    for i0 in range(n):
        js = np.nonzero(link[i0])[0]
        for j0 in js:
            for dr in (1, -1):
                back = j0 - dr
                if i0 > 0 and (link[i0 - 1, j0] or (0 <= back < n and link[i0 - 1, back])):
                    continue  # reachable from an earlier start; that pair contains this one
                i, j = i0, int(j0)
                while i + 1 < n:
                    nj = j + dr
                    if 0 <= nj < n and link[i + 1, nj]:
                        i, j = i + 1, nj
                    elif link[i + 1, j]:
                        i += 1
                    else:
                        break
                if i == i0:
                    continue
                if i0 <= j0:
                    key = (i0, i, int(j0), j)
                else:
                    key = (j, int(j0), i, i0)
                found[key] = None

    keys = list(found)

    def contained(a, b) -> bool:
        # both index ranges of a lie inside those of b
        alo, ahi = a[0], a[1]
        blo, bhi = min(a[2], a[3]), max(a[2], a[3])
        olo, ohi = b[0], b[1]
        plo, phi = min(b[2], b[3]), max(b[2], b[3])
        return olo <= alo and ahi <= ohi and plo <= blo and bhi <= phi

    out = []
    for key in keys:
        if any(other != key and contained(key, other) for other in keys):
            continue
        out.append(SegmentPair(*key))
    out.sort(key=lambda s: (s.a_start, s.a_end, s.b_start, s.b_end))
    return out


def obe_dtw(q: np.ndarray, r: np.ndarray) -> tuple[float, list[tuple[int, int]]]:
    """Open-begin/open-end dynamic time warp of query q onto reference r.

    Asymmetric step pattern: (i, j) is reached from (i-1, j), (i-1, j-1)
    or (i-1, j-2), so every query sample matches exactly one reference
    sample and the reference index never decreases.  The match may start
    and end anywhere on r.  Returns the per-sample-normalised absolute
    distance and the warp path as (i, j) pairs.
    """
    q = np.asarray(q, dtype=float)
    r = np.asarray(r, dtype=float)
    if q.size == 0 or r.size == 0:
        raise ValueError("empty input sequence")
    n, m = len(q), len(r)
    cost = np.abs(q[:, None] - r[None, :])
    dist = np.empty((n, m))
    back = np.zeros((n, m), dtype=np.uint8)
    dist[0] = cost[0]
    inf = np.inf
    for i in range(1, n):
        prev = dist[i - 1]
        stay = prev
        diag = np.full(m, inf)
        diag[1:] = prev[:-1]
        skip = np.full(m, inf)
        skip[2:] = prev[:-2]
        stacked = np.stack([stay, diag, skip])
        choice = np.argmin(stacked, axis=0)  # ties prefer the smaller jump
        dist[i] = cost[i] + stacked[choice, np.arange(m)]
        back[i] = choice
    j = int(np.argmin(dist[n - 1]))
    total = float(dist[n - 1, j])
    path = [(n - 1, j)]
    for i in range(n - 1, 0, -1):
        j -= int(back[i, j])
        path.append((i - 1, j))
    path.reverse()
    return total / n, path


def split_warping_path(path: list[tuple[int, int]], max_flat: int = 3) -> list[list[tuple[int, int]]]:
    """Split a warp path at degenerate flat stretches.

    Maximal runs of at least max_flat consecutive points sharing one
    reference index are removed; the surviving contiguous fragments are
    returned as separate sub-matchings.
    """
    if max_flat < 2:
        raise ValueError(f"max_flat must be >= 2, got {max_flat}")
    n = len(path)
    removed = np.zeros(n, dtype=bool)
    s = 0
    while s < n:
        e = s
        while e < n and path[e][1] == path[s][1]:
            e += 1
        if e - s >= max_flat:
            removed[s:e] = True
        s = e
    subs: list[list[tuple[int, int]]] = []
    current: list[tuple[int, int]] = []
    for k in range(n):
        if removed[k]:
            if current:
                subs.append(current)
                current = []
        else:
            current.append(path[k])
    if current:
        subs.append(current)
    return subs


@dataclass
class SubMatching:
    """A contiguous matched stretch with positions along the trajectory."""

    t_a: np.ndarray
    t_b: np.ndarray
    pos_a: np.ndarray  # (M, 2)
    pos_b: np.ndarray  # (M, 2)
    length_a: float    # metres along the trajectory
    length_b: float


def validate_closure(sub: SubMatching, params: ValidationParams | None = None) -> tuple[bool, str]:
    """Accept or reject a sub-matching; the reason names the first
    failing criterion (min_length, ratio, mean_dist, dist_var)."""
    p = params or ValidationParams()
    longer = max(sub.length_a, sub.length_b)
    shorter = min(sub.length_a, sub.length_b)
    if not longer > p.min_length:
        return False, "min_length"
    ratio = longer / shorter if shorter > 0 else math.inf
    if not ratio < p.max_ratio:
        return False, "ratio"
    d = np.hypot(sub.pos_a[:, 0] - sub.pos_b[:, 0], sub.pos_a[:, 1] - sub.pos_b[:, 1])
    if d.mean() > p.max_mean_dist:
        return False, "mean_dist"
    if d.var() > p.max_dist_var:
        return False, "dist_var"
    return True, ""


def _match_times(m) -> tuple[float, float]:
    if hasattr(m, "t_a"):
        return float(m.t_a), float(m.t_b)
    a, b = m
    return float(a), float(b)


def thin_to_steps(matches, step_times: np.ndarray) -> list[StepLoopClosure]:
    """Thin dense matched sample pairs to step-level closures.

    For every step epoch whose time falls inside the matched interval on
    side a, the matched time on side b is interpolated and snapped to
    the nearest step epoch; duplicates collapse and pairs are ordered
    epoch_a < epoch_b.
    """
    if not len(matches):
        return []
    step_times = np.asarray(step_times, dtype=float)
    ta, tb = zip(*(_match_times(m) for m in matches))
    order = np.argsort(ta)
    ta = np.asarray(ta, dtype=float)[order]
    tb = np.asarray(tb, dtype=float)[order]
    pairs = set()
    inside = np.nonzero((step_times >= ta[0]) & (step_times <= ta[-1]))[0]
    for e in inside:
        matched_t = np.interp(step_times[e], ta, tb)
        eb = int(np.argmin(np.abs(step_times - matched_t)))
        if eb == e:
            continue
        pairs.add((min(e, eb), max(e, eb)))
    return [StepLoopClosure(a, b) for a, b in sorted(pairs)]


def _magnitude_series(mags: list[MagSample]) -> tuple[np.ndarray, np.ndarray]:
    t = np.array([m.t for m in mags], dtype=float)
    v = np.array([m.magnitude for m in mags], dtype=float)
    order = np.argsort(t, kind="stable")
    return t[order], v[order]


def _resample_window(t: np.ndarray, v: np.ndarray, t0: float, t1: float,
                     hz: float) -> tuple[np.ndarray, np.ndarray] | None:
    t0 = max(t0, float(t[0]))
    t1 = min(t1, float(t[-1]))
    count = int(math.floor((t1 - t0) * hz)) + 1
    if count < 2:
        return None
    grid = t0 + np.arange(count) / hz
    return grid, np.interp(grid, t, v)


def _arc_lengths(traj) -> np.ndarray:
    pos = traj.positions
    seg = np.hypot(np.diff(pos[:, 0]), np.diff(pos[:, 1]))
    return np.concatenate(([0.0], np.cumsum(seg)))


def detect_loop_closures(traj, mags: list[MagSample], msp_params: MspParams | None = None,
                         validation: ValidationParams | None = None, validate: bool = True,
                         resample_hz: float = 10.0) -> LoopClosureResult:
    """Full detection pipeline over a trajectory and its magnetometer log.

    traj needs .positions and .times (first-pass filter output or a
    dead-reckoned trajectory).  Magnitudes are resampled to a uniform
    rate per matched window before warping; a decreasing counter-segment
    is matched against its reversal.  With validate=False every
    sub-matching is accepted (diagnostic mode).
    """
    mp = msp_params or MspParams()
    vp = validation or ValidationParams()
    if len(mags) < 2:
        return LoopClosureResult([], [], [], [])
    mt, mv = _magnitude_series(mags)
    times = np.asarray(traj.times, dtype=float)
    arcs = _arc_lengths(traj)
    pairs = find_msps(traj.positions, mp)
    accepted: set[tuple[int, int]] = set()
    mag_closures: list[MagLoopClosure] = []
    rejected: list[RejectedMatch] = []

    def positions_at(ts: np.ndarray) -> np.ndarray:
        return np.stack([np.interp(ts, times, traj.positions[:, 0]),
                         np.interp(ts, times, traj.positions[:, 1])], axis=1)

    for pair in pairs:
        qa = _resample_window(mt, mv, times[pair.a_start], times[pair.a_end], resample_hz)
        blo = min(pair.b_start, pair.b_end)
        bhi = max(pair.b_start, pair.b_end)
        rb = _resample_window(mt, mv, times[blo], times[bhi], resample_hz)
        if qa is None or rb is None:
            continue
        grid_a, vals_a = qa
        grid_b, vals_b = rb
        if pair.decreasing:
            grid_b = grid_b[::-1]
            vals_b = vals_b[::-1]
        _, path = obe_dtw(vals_a, vals_b)
        for sub in split_warping_path(path, vp.max_flat):
            ia = np.array([i for i, _ in sub])
            jb = np.array([j for _, j in sub])
            t_a = grid_a[ia]
            t_b = grid_b[jb]
            pos_a = positions_at(t_a)
            pos_b = positions_at(t_b)
            len_a = abs(float(np.interp(t_a.max(), times, arcs) - np.interp(t_a.min(), times, arcs)))
            len_b = abs(float(np.interp(t_b.max(), times, arcs) - np.interp(t_b.min(), times, arcs)))
            sm = SubMatching(t_a, t_b, pos_a, pos_b, len_a, len_b)
            ok, reason = (True, "") if not validate else validate_closure(sm, vp)
            if ok:
                mag_closures.extend(
                    MagLoopClosure(float(t_a[k]), float(t_b[k]),
                                   (float(pos_a[k, 0]), float(pos_a[k, 1])),
                                   (float(pos_b[k, 0]), float(pos_b[k, 1])))
                    for k in range(len(sub))
                )
                for c in thin_to_steps(list(zip(t_a, t_b)), times):
                    accepted.add((c.epoch_a, c.epoch_b))
            else:
                mid = len(sub) // 2
                ea = int(np.argmin(np.abs(times - t_a[mid])))
                eb = int(np.argmin(np.abs(times - t_b[mid])))
                if ea != eb:
                    rejected.append(RejectedMatch(min(ea, eb), max(ea, eb), reason))

    closures = [StepLoopClosure(a, b) for a, b in sorted(accepted)]
    return LoopClosureResult(closures, rejected, pairs, mag_closures)
