"""Where should a glider measure next?  The expected posterior trace as a
function of observation position, and its gradient.

Run:  python3 demos/03_sampling_objective.py
"""

import numpy as np

from glider_assim import (
    FilterState,
    posterior_trace,
    posterior_trace_gradient,
    posterior_trace_hessian_norm,
)

state = FilterState(mean=np.zeros(6), cov=2.0 * np.eye(6))

print("Isotropic prior, one glider: expected trace falls with radius")
print("radius   expected posterior trace")
for r in (0.0, 0.5, 1.0, 2.0, 4.0):
    val = posterior_trace(state, [[r, 0.0]], 1.0)
    print(f"{r:5.1f}    {val:.6f}")

print("\nGradient points inward (larger radius = more informative):")
for z in ([1.0, 0.0], [0.0, 2.0], [1.0, 1.0]):
    g = posterior_trace_gradient(state, [z], 1.0)
    print(f"  at {z}: gradient {np.round(g, 4)}")

print("\nTwo gliders interact through the shared estimate:")
solo = posterior_trace(state, [[1.5, 0.0]], 1.0)
together = posterior_trace(state, [[1.5, 0.0], [1.5, 0.01]], 1.0)
spread = posterior_trace(state, [[1.5, 0.0], [-1.5, 0.0]], 1.0)
print(f"  one glider at (1.5,0):          {solo:.4f}")
print(f"  two gliders almost coincident:  {together:.4f}")
print(f"  two gliders on opposite sides:  {spread:.4f}  (spreading out wins)")

norm = posterior_trace_hessian_norm(state, [[1.0, 0.0]], 1.0)
print(f"\nHessian Frobenius norm at (1,0): {norm:.4f}"
      "  (sets the auto regularization threshold)")
