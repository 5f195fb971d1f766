"""Mini comparison sweep plus rendered figures.

Runs the full strategy/cohort grid for one seed with a shortened
25-observation protocol (about half a minute), then renders the four
standard figure kinds for the center flow.

Run:  python3 demos/06_sweep_and_figures.py [output-dir]
Requires the glider-figs package (pip install -e ./figures).
"""

import sys
import time
from pathlib import Path

from glider_assim.cli import main as assim_main
from glider_figs import render

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("scratch/demo_sweep")
print(f"Sweeping 48 short runs into {out} (once; rerun reuses nothing)...")
t0 = time.time()
code = assim_main(["sweep", "--seeds", "1", "--obs", "25", "--out", str(out)])
assert code == 0, "sweep failed"
print(f"...done in {time.time() - t0:.0f}s\n")

summary = (out / "summary.csv").read_text().strip().split("\n")
print(f"{len(summary) - 1} runs summarized; first lines:")
for line in summary[:4]:
    print("   " + line)

print("\nRendering center-flow figures:")
for kind in ("trace-curves", "rms-curves", "path-plot", "path-zoom"):
    target = out / f"center_{kind}.png"
    n = render(out, kind, "center", target)
    print(f"   {target}  ({n} curves)")
print("\nSolid/dashed/dotted lines are optimal/none/random control;")
print("blue/red/yellow/purple are 1/2/5/10-glider cohorts.")
