"""Velocity observations of the 6-parameter flow state.

The flow is summarized by theta = (v0x, v0y, a11, a12, a21, a22).  K
gliders at positions z_k observe their local fluid velocity, which is
linear in theta: row pairs [1, 0, x, y, 0, 0] / [0, 1, 0, 0, x, y].
"""

import numpy as np

from .errors import EmptyCohortError
from .flow import LinearFlowField

N_PARAMS = 6


def pack_parameters(flow):
    """Flatten a LinearFlowField into the 6-vector theta."""
    return np.concatenate([flow.v0, flow.A.reshape(4)])


def unpack_parameters(theta):
    """Inverse of pack_parameters."""
    theta = np.asarray(theta, dtype=float).reshape(N_PARAMS)
    return LinearFlowField(v0=theta[:2], A=theta[2:].reshape(2, 2))


def observation_matrix(positions):
    """2K x 6 operator mapping theta to the stacked glider velocities."""
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    K = positions.shape[0]
    if K == 0:
        raise EmptyCohortError("observation matrix needs at least one glider")
    H = np.zeros((2 * K, N_PARAMS))
    x = positions[:, 0]
    y = positions[:, 1]
    H[0::2, 0] = 1.0
    H[0::2, 2] = x
    H[0::2, 3] = y
    H[1::2, 1] = 1.0
    H[1::2, 4] = x
    H[1::2, 5] = y
    return H


def observe(truth, positions, noise_var, rng):
    """Stacked true velocities plus iid Gaussian noise of given variance."""
    if noise_var < 0:
        raise ValueError("noise_var must be >= 0")
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    clean = truth.velocity(positions).reshape(-1)
    if noise_var == 0:
        return clean
    return clean + np.sqrt(noise_var) * rng.standard_normal(clean.shape)
