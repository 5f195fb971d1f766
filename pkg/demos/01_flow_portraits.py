"""The four benchmark flow fields and their exact drifter motion.

Run:  python3 demos/01_flow_portraits.py
"""

import numpy as np

from glider_assim import FLOW_CASE_TAGS, flow_case

print("Benchmark fields share v0 = (1/2, -1/2); the Jacobian sets the character.\n")

for tag in FLOW_CASE_TAGS:
    field = flow_case(tag)
    fp = field.fixed_point()
    eigs = np.linalg.eigvals(field.A)
    print(f"{tag:14s} fixed point {np.round(fp, 3)}   eigenvalues {np.round(eigs, 3)}")

print("\nUncontrolled drift from the point one unit right of each fixed point:")
for tag in FLOW_CASE_TAGS:
    field = flow_case(tag)
    z0 = field.fixed_point() + [1.0, 0.0]
    marks = [np.round(field.drift(z0, t), 3) for t in (0.5, 1.0, 2.0)]
    print(f"{tag:14s} t=0.5 -> {marks[0]}, t=1 -> {marks[1]}, t=2 -> {marks[2]}")

print("\nThe center preserves distance to its fixed point exactly:")
field = flow_case("center")
fp = field.fixed_point()
z0 = fp + [0.8, 0.0]
for t in (1.0, 5.0, 25.0):
    r = np.linalg.norm(field.drift(z0, t) - fp)
    print(f"  t={t:5.1f}  radius {r:.12f}")

print("\nThe stable node pulls everything in at rate e^-t:")
field = flow_case("stable-node")
fp = field.fixed_point()
for t in (1.0, 3.0):
    z = field.drift(fp + [1.0, 0.0], t)
    print(f"  t={t}  offset {np.linalg.norm(z - fp):.6f}  (e^-t = {np.exp(-t):.6f})")
