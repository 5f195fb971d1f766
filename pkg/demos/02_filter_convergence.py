"""Sequential assimilation of noisy glider velocities, checked against the
one-shot information-form posterior.

Run:  python3 demos/02_filter_convergence.py
"""

import numpy as np

from glider_assim import (
    batch_posterior,
    flow_case,
    initial_state,
    kalman_update,
    observation_matrix,
    observe,
    pack_parameters,
    stream_rng,
)

truth = flow_case("saddle")
theta_true = pack_parameters(truth)
rng = np.random.default_rng(42)
noise_gen = stream_rng(42, 0)

state = initial_state(1e6)
Hs, ys = [], []
print("obs   trace            rms")
for i in range(1, 51):
    positions = rng.uniform(-2, 2, (3, 2))
    H = observation_matrix(positions)
    y = observe(truth, positions, 1.0, noise_gen)
    state = kalman_update(state, H, y, 1.0)
    Hs.append(H)
    ys.append(y)
    if i in (1, 2, 5, 10, 20, 50):
        rms = np.sqrt(np.mean((state.mean - theta_true) ** 2))
        print(f"{i:3d}   {np.trace(state.cov):12.6g}   {rms:.6f}")

mean_b, cov_b = batch_posterior(np.zeros(6), 1e6 * np.eye(6),
                                np.vstack(Hs), np.concatenate(ys), 1.0)
print("\n50 sequential updates vs one batch solve:")
print(f"  mean difference  {np.abs(state.mean - mean_b).max():.3e}")
print(f"  cov  difference  {np.abs(state.cov - cov_b).max():.3e}")
print(f"\nestimated parameters {np.round(state.mean, 3)}")
print(f"true parameters      {np.round(theta_true, 3)}")
