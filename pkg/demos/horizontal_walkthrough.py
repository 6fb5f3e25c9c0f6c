"""
Gaps versus a plan-everything baseline on a stacking channel
============================================================

Three blocks have to go into a narrow channel in a fixed order. One block
starts hidden behind another, so a fully grounded plan has to move the
occluder out of the way first. The gapped planner leaves that pick as a gap
and lets a behavior handle it once the block is in sight.
"""

from tamper2d.bench.replay import render_text
from tamper2d.bench.runner import run_episode
from tamper2d.bench.scenario import load, shipped_dir

sc = load(shipped_dir() / "horizontal" / "horizontal-01.yaml")
seed = sc.seeds[0]

# the same scenario and seed under both methods
tamper = run_episode(sc, "tamper", seed)
baseline = run_episode(sc, "baseline", seed)

for name, out in (("tamper", tamper), ("baseline", baseline)):
    m = out.metrics
    print(f"{name:9s} {out.status:8s} actions {m.actions:2d}  behaviors {m.behaviors}  grasps {m.grasps}")

# gapped steps carry a star in each plan line
print()
for line in render_text(tamper.trace):
    print(line)
