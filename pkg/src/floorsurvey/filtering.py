"""Constraint-weighted particle filtering with KLD-adaptive resampling.

One filter core serves both passes of the survey pipeline: the first
pass weights particles with wall crossings only, the second adds
straight-line and loop-closure constraints.  Particle histories form an
ancestor tree; the smoother prunes lineages that leave no descendants
and averages what remains per epoch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    Floorplan,
    Pose2D,
    acute_angles_to_room_walls,
    containing_room,
    containing_rooms,
    points_in_polygon,
    segments_cross_walls,
    wrap_angle,
)
from .sensors import StepEvent, StepNoiseModel, step_epoch_times

TAU = 2.0 * math.pi


class FilterLostError(RuntimeError):
    """All particle weights collapsed to zero at some epoch."""

    def __init__(self, epoch: int, label: str = "filter"):
        super().__init__(f"{label}: particle weights collapsed to zero at epoch {epoch}")
        self.epoch = epoch
        self.label = label


@dataclass
class KldConfig:
    """Histogram bin sizes and stopping parameters for KLD resampling."""

    bin_x: float = 2.0
    bin_y: float = 2.0
    bin_theta: float = math.radians(30.0)
    delta: float = 0.01
    epsilon: float = 0.0109238
    n_min: int = 504
    cap_factor: int = 10

    @property
    def n_max(self) -> int:
        return self.cap_factor * self.n_min


def pf1_kld_config() -> KldConfig:
    """Coarse-bin configuration for the wall-constraint pass."""
    return KldConfig()


def pf2_kld_config() -> KldConfig:
    """Fine-bin configuration for the fully constrained pass."""
    return KldConfig(bin_x=0.5, bin_y=0.5, bin_theta=math.radians(1.0), n_min=16433)


def kld_required_particles(k: int, epsilon: float, delta: float) -> int:
    """Draws needed before a cloud occupying k histogram bins is sampled
    within KL divergence epsilon of the underlying distribution.

    First-order form of the sample-size bound, rounded up.  The
    confidence level delta is validated for interface completeness; the
    calibrated epsilon already encodes it (the two larger reference
    counts in use, 504 and 16433, follow from exactly this form).
    Returns 0 for k < 2, where the bound is undefined and callers fall
    back to their configured floor.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if k < 2:
        return 0
    return math.ceil((k - 1) / (2.0 * epsilon))


def folded_normal_density(x, sigma: float):
    """Density of |N(0, sigma^2)| at x; peaks at sqrt(2)/(sigma*sqrt(pi))."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    x = np.abs(np.asarray(x, dtype=float))
    out = math.sqrt(2.0) / (sigma * math.sqrt(math.pi)) * np.exp(-(x * x) / (2.0 * sigma * sigma))
    if out.ndim == 0:
        return float(out)
    return out


def propagate(poses, step: StepEvent, noise: StepNoiseModel, rng: np.random.Generator) -> np.ndarray:
    """Turn-then-stride motion update with sampled step noise.

    poses is (N, 3); heading noise and stride noise are drawn even when
    their sigmas are zero so the random stream stays aligned across
    configurations.
    """
    poses = np.atleast_2d(np.asarray(poses, dtype=float))
    n = len(poses)
    e_theta = rng.normal(0.0, noise.sigma_dtheta, n)
    e_len = rng.normal(0.0, noise.sigma_length(step.length), n)
    theta = poses[:, 2] + step.dtheta + e_theta
    length = step.length + e_len
    out = np.empty_like(poses)
    out[:, 0] = poses[:, 0] + length * np.cos(theta)
    out[:, 1] = poses[:, 1] + length * np.sin(theta)
    out[:, 2] = wrap_angle(theta)
    return out


def _closure_pair(c) -> tuple[int, int]:
    if hasattr(c, "epoch_a"):
        return int(c.epoch_a), int(c.epoch_b)
    a, b = c
    return int(a), int(b)


@dataclass
class ConstraintSet:
    """Which constraint classes apply during reweighting, and their scales.

    Straight-line weighting applies only to steps flagged in
    straight_flags; loop closures apply at their epoch_b.  pf1_positions
    provides fallback closure anchors when no per-particle ancestor
    position is available.
    """

    floorplan: Floorplan
    use_walls: bool = True
    straight_flags: np.ndarray | None = None
    closures: list = field(default_factory=list)
    pf1_positions: np.ndarray | None = None
    sigma_alpha: float = math.radians(2.5)
    sigma_closure: float = 1.0

    def closures_at(self, epoch_b: int) -> list[int]:
        """Anchor epochs of all closures that constrain the given epoch."""
        if not hasattr(self, "_by_b"):
            by_b: dict[int, list[int]] = {}
            for c in self.closures:
                a, b = _closure_pair(c)
                by_b.setdefault(b, []).append(a)
            self._by_b = by_b
        return self._by_b.get(epoch_b, [])

    def anchor_epochs(self) -> set[int]:
        return {_closure_pair(c)[0] for c in self.closures}


def reweight(prev_pos, new_pose, step_index: int, constraints: ConstraintSet,
             counterpart=None) -> float:
    """Constraint weight of one particle's move at the given step.

    Order: start at 1; a wall crossing returns 0 immediately; a
    straight-line step multiplies by the folded-normal density of the
    acute angle to the most parallel wall of the containing room (no
    factor when the particle is in no room); each loop closure ending at
    this step multiplies by the folded-normal density of the distance to
    the closure counterpart.  counterpart maps an anchor epoch to an
    (x, y) position; without it the fallback pf1_positions row is used.
    """
    new_pose = np.asarray(new_pose, dtype=float)
    prev_pos = np.asarray(prev_pos, dtype=float)[:2]
    fp = constraints.floorplan
    new_xy = new_pose[:2]
    w = 1.0
    if constraints.use_walls:
        if segments_cross_walls(prev_pos[None, :], new_xy[None, :], fp.walls)[0]:
            return 0.0
    flags = constraints.straight_flags
    if flags is not None and 0 <= step_index < len(flags) and flags[step_index]:
        alphas = acute_angles_to_room_walls(fp, new_xy[None, :], np.array([new_pose[2]]))
        if not math.isnan(alphas[0]):
            w *= folded_normal_density(float(alphas[0]), constraints.sigma_alpha)
    for epoch_a in constraints.closures_at(step_index + 1):
        anchor = None
        if counterpart is not None:
            anchor = counterpart(epoch_a)
        if anchor is None and constraints.pf1_positions is not None:
            anchor = constraints.pf1_positions[epoch_a]
        if anchor is None:
            continue
        d = float(np.hypot(new_xy[0] - anchor[0], new_xy[1] - anchor[1]))
        w *= folded_normal_density(d, constraints.sigma_closure)
    return float(w)


def _reweight_batch(prev_xy: np.ndarray, new_poses: np.ndarray, step_index: int,
                    constraints: ConstraintSet, anchors: dict[int, np.ndarray] | None) -> np.ndarray:
    """Vectorised reweight over a whole cloud; anchors maps an anchor
    epoch to per-particle counterpart positions aligned with the cloud."""
    fp = constraints.floorplan
    n = len(new_poses)
    w = np.ones(n)
    new_xy = new_poses[:, :2]
    if constraints.use_walls and len(fp.walls):
        lo = np.minimum(prev_xy.min(axis=0), new_xy.min(axis=0))
        hi = np.maximum(prev_xy.max(axis=0), new_xy.max(axis=0))
        near = fp.walls_near(lo, hi)
        if len(near):
            crossed = segments_cross_walls(prev_xy, new_xy, fp.walls[near])
            w[crossed] = 0.0
    flags = constraints.straight_flags
    if flags is not None and 0 <= step_index < len(flags) and flags[step_index]:
        live = w > 0
        if live.any():
            alphas = acute_angles_to_room_walls(fp, new_xy[live], new_poses[live, 2])
            factor = np.ones(live.sum())
            ok = ~np.isnan(alphas)
            factor[ok] = folded_normal_density(alphas[ok], constraints.sigma_alpha)
            w[live] *= factor
    for epoch_a in constraints.closures_at(step_index + 1):
        anchor = anchors.get(epoch_a) if anchors else None
        if anchor is None:
            if constraints.pf1_positions is None:
                continue
            anchor = np.broadcast_to(constraints.pf1_positions[epoch_a], (n, 2))
        d = np.hypot(new_xy[:, 0] - anchor[:, 0], new_xy[:, 1] - anchor[:, 1])
        w *= folded_normal_density(d, constraints.sigma_closure)
    return w


_BOFF = 1 << 20  # supports |bin index| up to ~10^6


def _bin_ids(poses: np.ndarray, cfg: KldConfig) -> np.ndarray:
    """Histogram bin id per pose; x/y bins anchored at the origin, theta
    binned modulo 2*pi."""
    bx = np.floor(poses[:, 0] / cfg.bin_x).astype(np.int64)
    by = np.floor(poses[:, 1] / cfg.bin_y).astype(np.int64)
    n_theta = max(1, int(math.ceil(TAU / cfg.bin_theta)))
    bt = np.floor((poses[:, 2] % TAU) / cfg.bin_theta).astype(np.int64)
    np.clip(bt, 0, n_theta - 1, out=bt)
    return ((bx + _BOFF) * (2 * _BOFF) + (by + _BOFF)) * (n_theta + 1) + bt


def kld_resample(poses: np.ndarray, weights: np.ndarray, cfg: KldConfig,
                 rng: np.random.Generator) -> np.ndarray:
    """Weighted resampling until the KLD bound for the bins occupied so
    far is met.

    Returns draw indices into the input cloud; the resampled cloud is
    poses[draws] with uniform weights and the draws double as parent
    pointers.  Draw count never drops below n_min and is capped at
    n_max; zero-weight particles are never drawn.
    """
    poses = np.asarray(poses, dtype=float)
    weights = np.asarray(weights, dtype=float)
    total = weights.sum()
    if not total > 0:
        raise ValueError("total particle weight is zero")
    cum = np.cumsum(weights / total)
    cum[-1] = 1.0
    bins = _bin_ids(poses, cfg)
    target = cfg.n_min
    cap = cfg.n_max
    parts: list[np.ndarray] = []
    drawn = 0
    while True:
        u = rng.random(target - drawn)
        idx = np.searchsorted(cum, u, side="right")
        np.clip(idx, 0, len(cum) - 1, out=idx)
        parts.append(idx)
        drawn = target
        k = np.unique(bins[np.concatenate(parts)]).size
        need = max(cfg.n_min, kld_required_particles(k, cfg.epsilon, cfg.delta))
        target = min(cap, need)
        if drawn >= target:
            return np.concatenate(parts)


@dataclass
class EpochCloud:
    poses: np.ndarray     # (n, 3)
    weights: np.ndarray   # (n,), sums to 1
    parents: np.ndarray   # (n,) indices into the previous epoch; -1 at epoch 0


class AncestorTree:
    """Per-epoch particle clouds linked by parent indices."""

    def __init__(self):
        self.epochs: list[EpochCloud] = []

    def __len__(self):
        return len(self.epochs)

    def __getitem__(self, e: int) -> EpochCloud:
        return self.epochs[e]

    def append(self, poses, weights, parents):
        self.epochs.append(EpochCloud(
            np.asarray(poses, dtype=float),
            np.asarray(weights, dtype=float),
            np.asarray(parents, dtype=np.int64),
        ))

    def surviving(self) -> list[np.ndarray]:
        """Per-epoch sorted indices of particles with a descendant in the
        final epoch (every final particle counts)."""
        last = len(self.epochs) - 1
        keep: list[np.ndarray] = [np.zeros(0, dtype=np.int64)] * len(self.epochs)
        keep[last] = np.arange(len(self.epochs[last].poses), dtype=np.int64)
        for e in range(last - 1, -1, -1):
            keep[e] = np.unique(self.epochs[e + 1].parents[keep[e + 1]])
        return keep

    def compact(self):
        """Drop particles with no surviving descendants and remap parent
        indices.  The final epoch is left untouched, so any external
        arrays aligned with it stay valid."""
        if len(self.epochs) < 2:
            return
        keep = self.surviving()
        for e, cloud in enumerate(self.epochs):
            idx = keep[e]
            if len(idx) == len(cloud.poses):
                continue
            self.epochs[e] = EpochCloud(cloud.poses[idx], cloud.weights[idx], cloud.parents[idx])
        for e in range(1, len(self.epochs)):
            self.epochs[e].parents = np.searchsorted(keep[e - 1], self.epochs[e].parents)


@dataclass
class SmoothResult:
    mean_poses: np.ndarray       # (T+1, 3) smoothed weighted mean
    map_poses: np.ndarray        # (T+1, 3) highest-weight surviving lineage
    survivor_counts: np.ndarray  # (T+1,)
    survivors: list              # per-epoch index arrays into the tree
    mass: list                   # per-epoch smoothing weights, each sums to 1


def prune_smooth(tree: AncestorTree) -> SmoothResult:
    """Smooth a filter run by pruning extinct lineages.

    A particle's smoothing mass is the summed final-epoch weight of its
    descendants, so extinct lineages weigh nothing and each epoch's pose
    is the mass-weighted mean (headings via unit vectors).  The map
    trajectory is the surviving lineage with the highest product of
    stored epoch weights along its ancestry.
    """
    if len(tree) == 0:
        raise ValueError("empty ancestor tree")
    keep = tree.surviving()
    t1 = len(tree)
    mass: list[np.ndarray] = [np.empty(0)] * t1
    mass[t1 - 1] = tree[t1 - 1].weights.copy()
    for e in range(t1 - 1, 0, -1):
        acc = np.zeros(len(tree[e - 1].weights))
        np.add.at(acc, tree[e].parents, mass[e])
        mass[e - 1] = acc
    mean_poses = np.empty((t1, 3))
    counts = np.empty(t1, dtype=np.int64)
    for e in range(t1):
        if len(keep[e]) == 0:
            raise ValueError(f"no surviving particles at epoch {e}")
        total = mass[e].sum()
        if not total > 0:
            raise ValueError(f"surviving mass is zero at epoch {e}")
        w = mass[e] / total
        poses = tree[e].poses
        mean_poses[e, 0] = w @ poses[:, 0]
        mean_poses[e, 1] = w @ poses[:, 1]
        mean_poses[e, 2] = math.atan2(w @ np.sin(poses[:, 2]), w @ np.cos(poses[:, 2]))
        counts[e] = len(keep[e])
        mass[e] = w
    with np.errstate(divide="ignore"):
        score = np.log(tree[0].weights)
        for e in range(1, t1):
            score = score[tree[e].parents] + np.log(tree[e].weights)
    map_poses = np.empty((t1, 3))
    i = int(np.argmax(score))
    for e in range(t1 - 1, -1, -1):
        map_poses[e] = tree[e].poses[i]
        i = int(tree[e].parents[i])
    return SmoothResult(mean_poses, map_poses, counts, keep, mass)


def seed_particles(fp: Floorplan, n: int, rng: np.random.Generator,
                   start_room: int | None = None, start_pose: Pose2D | None = None,
                   pos_sigma: float = 0.3, theta_sigma: float = math.radians(5.0)) -> np.ndarray:
    """Initial cloud from a start hint.

    Room hint: uniform rejection sampling over the room polygon, heading
    uniform.  Pose hint: Gaussian ball around the pose.
    """
    if start_pose is not None:
        poses = np.empty((n, 3))
        poses[:, 0] = start_pose.x + rng.normal(0.0, pos_sigma, n)
        poses[:, 1] = start_pose.y + rng.normal(0.0, pos_sigma, n)
        poses[:, 2] = wrap_angle(start_pose.theta + rng.normal(0.0, theta_sigma, n))
        return poses
    if start_room is None:
        raise ValueError("a start hint (room id or pose) is required")
    if not 0 <= start_room < len(fp.rooms):
        raise ValueError(f"unknown room id {start_room}")
    vs = fp.rooms[start_room].vertices
    lo = vs.min(axis=0)
    hi = vs.max(axis=0)
    pts: list[np.ndarray] = []
    got = 0
    while got < n:
        batch = rng.random((max(2 * (n - got), 64), 2)) * (hi - lo) + lo
        ok = points_in_polygon(vs, batch)
        accepted = batch[ok]
        pts.append(accepted)
        got += len(accepted)
    xy = np.concatenate(pts)[:n]
    poses = np.empty((n, 3))
    poses[:, :2] = xy
    poses[:, 2] = rng.random(n) * TAU - math.pi
    return poses


@dataclass
class FilterResult:
    poses: np.ndarray            # (T+1, 3) smoothed weighted-mean poses
    map_poses: np.ndarray        # (T+1, 3) highest-weight surviving lineage
    times: np.ndarray            # (T+1,)
    rooms: list                  # per-epoch room id or None
    counts: np.ndarray           # particles per epoch as generated
    survivor_counts: np.ndarray  # particles per epoch after pruning
    tree: AncestorTree

    @property
    def positions(self) -> np.ndarray:
        return self.poses[:, :2]


def run_filter(steps: list[StepEvent], fp: Floorplan, kld: KldConfig,
               noise: StepNoiseModel, constraints: ConstraintSet,
               start_room: int | None = None, start_pose: Pose2D | None = None,
               seed: int = 0, rng: np.random.Generator | None = None,
               n_seed: int | None = None, compact_every: int = 64,
               label: str = "filter") -> FilterResult:
    """Run the constraint-weighted filter over a step sequence.

    Per epoch: resample the previous weighted cloud under the KLD bound,
    propagate each draw through the step with noise, reweight under the
    constraint set.  Raises FilterLostError when every weight hits zero.
    Per-particle positions at closure anchor epochs are snapshotted and
    re-indexed through each resampling so loop-closure distances use the
    particle's own ancestor.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    n0 = n_seed if n_seed is not None else kld.n_min
    poses0 = seed_particles(fp, n0, rng, start_room=start_room, start_pose=start_pose)
    tree = AncestorTree()
    tree.append(poses0, np.full(n0, 1.0 / n0), np.full(n0, -1, dtype=np.int64))
    counts = [n0]
    anchors_wanted = constraints.anchor_epochs()
    snapshots: dict[int, np.ndarray] = {}
    if 0 in anchors_wanted:
        snapshots[0] = poses0[:, :2].copy()
    for i, step in enumerate(steps):
        epoch = i + 1
        prev = tree[len(tree) - 1]
        draws = kld_resample(prev.poses, prev.weights, kld, rng)
        for ea in snapshots:
            snapshots[ea] = snapshots[ea][draws]
        selected = prev.poses[draws]
        new_poses = propagate(selected, step, noise, rng)
        w = _reweight_batch(selected[:, :2], new_poses, i, constraints, snapshots)
        total = w.sum()
        if not total > 0:
            raise FilterLostError(epoch, label)
        tree.append(new_poses, w / total, draws)
        counts.append(len(new_poses))
        if epoch in anchors_wanted:
            snapshots[epoch] = new_poses[:, :2].copy()
        if compact_every and epoch % compact_every == 0:
            tree.compact()
    smooth = prune_smooth(tree)
    # room per epoch: the weighted-mean pose's room, unless the cloud's
    # modal room disagrees, in which case the map lineage arbitrates
    rooms = []
    for e in range(len(smooth.mean_poses)):
        idx = smooth.survivors[e]
        cloud = tree[e]
        votes = containing_rooms(fp, cloud.poses[idx][:, :2])
        mass = np.bincount(votes + 1, weights=smooth.mass[e][idx],
                           minlength=len(fp.rooms) + 1)
        mode = int(np.argmax(mass)) - 1
        mode_room = None if mode < 0 else mode
        mean_room = containing_room(fp, smooth.mean_poses[e, :2])
        if mean_room == mode_room:
            rooms.append(mean_room)
        else:
            rooms.append(containing_room(fp, smooth.map_poses[e, :2]))
    return FilterResult(
        poses=smooth.mean_poses,
        map_poses=smooth.map_poses,
        times=step_epoch_times(steps),
        rooms=rooms,
        counts=np.asarray(counts, dtype=np.int64),
        survivor_counts=smooth.survivor_counts,
        tree=tree,
    )
