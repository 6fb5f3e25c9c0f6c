"""
Shadows and the epsilon knob
============================

Every detected object hides a wedge of the table from the camera. The
planner treats a shrunken copy of each wedge as occupied. Epsilon sets how
much of the wedge is kept: 0 keeps nothing and 1 keeps all of it.
"""

import numpy as np

from tamper2d.belief import fuse, occupied
from tamper2d.bench.scenario import load, shipped_dir
from tamper2d.geometry import polygon_area
from tamper2d.world import Simulator

sc = load(shipped_dir() / "horizontal" / "horizontal-01.yaml")
sim = Simulator(sc.world(0), 0)
obs = sim.sense()
print("detected:", sorted(obs.detected))

rng = np.random.default_rng(0)
lo, hi = np.array(sc.workspace.bounds[:2]), np.array(sc.workspace.bounds[2:])
points = rng.uniform(lo, hi, size=(2000, 2))

# area and share of random table points marked occupied, per epsilon
for eps in (0.0, 0.3, 0.6, 1.0):
    b = fuse(sc.belief(eps), obs)
    area = sum(polygon_area(p) for _, p in b.occlusion_regions())
    share = np.mean([occupied(b, p) for p in points])
    print(f"eps {eps:.1f}: shadow area {area:.4f}  occupied share {share:.3f}")
