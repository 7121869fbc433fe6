"""Using survey maps for one-shot positioning.

Builds RSS maps from one corridor survey, then pretends a second
device walks the floor taking single WiFi scans, and localises each
scan by maximum likelihood over the map grid.  Test points near the
surveyed path localise well; points in rooms the surveyor never
entered fall back toward the prior and do poorly.
"""

import sys
from pathlib import Path

import numpy as np

from floorsurvey.pipeline import build_signal_maps, run_survey
from floorsurvey.signalmap import bucket_fractions, position_one_shot
from floorsurvey.simulate import (
    corridor_scenario,
    grid_survey,
    office_floorplan,
    rss_at,
    simulate_scenario,
)

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demos/out")
out.mkdir(parents=True, exist_ok=True)

fp = office_floorplan()
sc = corridor_scenario()
log, truth = simulate_scenario(sc, fp, seed=4)
res = run_survey(log, fp, seed=4)
maps = build_signal_maps(res.points, fp.bounds)
ap_maps = [maps[ap.ap_id] for ap in sc.aps]

# test points on a 1 m grid, one noisy scan each
pts, _, _ = grid_survey(sc, fp, spacing=1.0, seed=404)
rng = np.random.default_rng(99)
scans = {ap.ap_id: rss_at(ap, pts) + rng.normal(0.0, sc.shadow_sigma, len(pts))
         for ap in sc.aps}

err = np.empty(len(pts))
for i, p in enumerate(pts):
    x, y, _ = position_one_shot(ap_maps, {a: float(v[i]) for a, v in scans.items()})
    err[i] = np.hypot(x - p[0], y - p[1])

d_path = np.sqrt(((pts[:, None, :] - res.final.positions[None, :, :]) ** 2)
                 .sum(-1)).min(axis=1)
for name, sel in (("near path (<= 2 m)", d_path <= 2.0),
                  ("far from path     ", d_path > 2.0)):
    e = err[sel]
    lo, mid, hi = bucket_fractions(e)
    print(f"{name}  n={sel.sum():4d}  median {np.median(e):5.2f} m   "
          f"<1m {100 * lo:4.1f}%   1-2m {100 * mid:4.1f}%   >2m {100 * hi:4.1f}%")

np.savetxt(out / "positioning_errors.csv",
           np.column_stack([pts, err, d_path]), fmt="%.6f",
           header="x,y,error,dist_to_path", delimiter=",", comments="# ")
print(f"wrote {out / 'positioning_errors.csv'}")
