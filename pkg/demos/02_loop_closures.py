"""Mining loop closures from the magnetic signature of a walk.

A floor loop passes the same corridor twice.  The magnetometer sees the
same anomaly pattern on both passes, so aligning the two magnitude
sequences recovers "you were here before" constraints.  This script
shows the candidate pairs, what the validator throws away and why, and
how close the survivors are to the truth.
"""

import sys
from collections import Counter
from pathlib import Path

import numpy as np

from floorsurvey.loopclosure import MspParams, ValidationParams, detect_loop_closures
from floorsurvey.pipeline import run_survey
from floorsurvey.plotsvg import render_scene
from floorsurvey.simulate import floor_loop_scenario, office_floorplan, simulate_scenario

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demos/out")
out.mkdir(parents=True, exist_ok=True)

fp = office_floorplan()
sc = floor_loop_scenario()  # sparse anomaly field: some stretches are flat
log, truth = simulate_scenario(sc, fp, seed=11)

# closures are mined from the first-pass trajectory, which is already
# roughly right (walls alone fix the overall shape)
res = run_survey(log, fp, seed=11, mode="pf1")

raw = detect_loop_closures(res.pf1, log.mags, MspParams(), ValidationParams(),
                           validate=False)
kept = detect_loop_closures(res.pf1, log.mags, MspParams(), ValidationParams())
print(f"matched segment pairs: {len(kept.msps)}")
print(f"candidate step pairs:  {len(raw.closures)}")
print(f"validated step pairs:  {len(kept.closures)}")

reasons = Counter(r.reason for r in kept.rejected)
for reason, n in sorted(reasons.items()):
    print(f"  rejected {n:3d} for {reason}")

# distance between the true positions of each kept pair; a good pair
# links epochs that really were near each other
d = np.array([np.hypot(*(truth.positions[c.epoch_a] - truth.positions[c.epoch_b]))
              for c in kept.closures])
print(f"truth separation of kept pairs: median {np.median(d):.2f} m, "
      f"worst {d.max():.2f} m")

svg = render_scene(fp, [(res.pf1.positions, "green")], kept.closures)
(out / "loop_closures.svg").write_text(svg)
print(f"wrote {out / 'loop_closures.svg'} (closure links in brown)")
