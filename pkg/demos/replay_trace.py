"""
Writing and replaying a trace
=============================

Episodes record every plan, constraint, behavior and fault. The trace file
is plain JSON lines, and replay turns it back into readable steps (or
images, with matplotlib installed).
"""

import sys
import tempfile
from pathlib import Path

from tamper2d.bench.replay import replay
from tamper2d.bench.runner import run_episode
from tamper2d.bench.scenario import load, shipped_dir

sc = load(shipped_dir() / "kitchen" / "kitchen-02.yaml")
out = run_episode(sc, "tamper", sc.seeds[0])

path = Path(tempfile.mkdtemp()) / "kitchen-02.jsonl"
out.trace.write(path)

plots = sys.argv[1] if len(sys.argv) > 1 else None
trace, lines = replay(path, plot_dir=plots)
print("\n".join(lines))
