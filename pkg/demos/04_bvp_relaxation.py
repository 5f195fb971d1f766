"""Relaxation solve of the steering boundary value problem, on cases with
known closed-form answers.

Run:  python3 demos/04_bvp_relaxation.py
"""

import numpy as np

from glider_assim import LinearFlowField, SolverSettings, flow_case, solve_cohort
from glider_assim.control import path_velocity

still = LinearFlowField(v0=[0.0, 0.0], A=np.zeros((2, 2)))
settings = SolverSettings()
toward_origin = lambda z: -np.asarray(z, dtype=float)

print("Still water, objective peaked at the origin, one time unit at speed 1.")
plan = solve_cohort(np.array([[2.0, 0.0]]), (0.0, 1.0), None, still, 1.0, 1.0,
                    settings, objective_gradient=toward_origin)
print(f"  start (2,0) -> terminal {np.round(plan.paths[0].points[-1], 6)}  (exact: (1,0))")
print(f"  heading along the path: {plan.headings[0].theta[0]:.6f} rad everywhere"
      f"  (pi = {np.pi:.6f})")

print("\nStart inside reach of the peak: no classical solution, the gradient")
print("threshold keeps the end condition solvable.")
plan = solve_cohort(np.array([[0.2, 0.0]]), (0.0, 1.0), None, still, 1.0, 1.0,
                    SolverSettings(max_relax_steps=5000), objective_gradient=toward_origin)
gamma = plan.reg_used[0]
exact = gamma / (gamma + 1.0) * 0.2
print(f"  auto threshold {gamma:.5f}; terminal x {plan.paths[0].points[-1][0]:.6f}"
      f"  (closed form: {exact:.6f})")

print("\nRotational flow: the optimal heading itself rotates at unit rate.")
plan = solve_cohort(np.array([[2.0, 0.0]]), (0.0, 0.5), None, flow_case("center"),
                    1.0, 1.0, settings, objective_gradient=toward_origin)
path, headings = plan.paths[0], plan.headings[0]
th = np.unwrap(headings.theta)
rate = (th[2:] - th[:-2]) / (2 * path.h)
rel = path_velocity(path.points, path.h) - flow_case("center").velocity(path.points)
speed = np.linalg.norm(rel, axis=1)
print(f"  heading rate along path: {rate.mean():.4f} (theory: -1)")
print(f"  speed relative to flow:  {speed[1:-1].mean():.6f} (constraint: 1)")
