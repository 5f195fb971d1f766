"""Gaussian inference over the 6 flow parameters.

Holds the sequential update (Kalman form), an information-form batch
solve used as its independent cross-check, and the sampling objective:
the trace of the covariance that the next update would produce as a
function of where the gliders take that observation.  The trace only
depends on the observation positions, never on the measured values, so
it can be optimized before the data exist.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InnovationSingularError, SingularPriorError
from .observation import N_PARAMS, observation_matrix

FD_GRADIENT_STEP = 1e-5
FD_HESSIAN_STEP = 1e-4


@dataclass(frozen=True)
class FilterState:
    """Mean and covariance of the flow-parameter estimate."""

    mean: np.ndarray
    cov: np.ndarray
    obs_count: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float).reshape(N_PARAMS))
        object.__setattr__(self, "cov", np.asarray(self.cov, dtype=float).reshape(N_PARAMS, N_PARAMS))


def initial_state(prior_var):
    """Zero-mean isotropic prior with the given variance."""
    return FilterState(mean=np.zeros(N_PARAMS), cov=prior_var * np.eye(N_PARAMS), obs_count=0)


def _innovation_cholesky(H, P, noise_var):
    # lower Cholesky factor of H P H^T + noise_var I
    with np.errstate(over="ignore", invalid="ignore"):
        S = H @ P @ H.T
    S[np.diag_indices_from(S)] += noise_var
    if not np.all(np.isfinite(S)):
        raise InnovationSingularError(
            "innovation matrix overflowed (degenerate glider configuration)")
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise InnovationSingularError(
            "innovation matrix is numerically singular (degenerate glider configuration)"
        ) from exc


def kalman_update(state, H, y, noise_var):
    """Condition the estimate on observation y taken through H.

    The gain solve goes through the Cholesky factor of the innovation
    matrix, and the covariance decrement is assembled as a Gram matrix
    X^T X, which keeps the posterior symmetric and its trace reduction
    nonnegative in floating point.
    """
    if noise_var <= 0:
        raise ValueError("noise_var must be > 0")
    H = np.asarray(H, dtype=float)
    y = np.asarray(y, dtype=float).reshape(H.shape[0])
    P = state.cov
    L = _innovation_cholesky(H, P, noise_var)
    HP = H @ P
    # one triangular solve covers the covariance columns and the innovation
    stacked = scipy.linalg.solve_triangular(
        L, np.column_stack([HP, y - H @ state.mean]), lower=True)
    X = stacked[:, :N_PARAMS]
    w = stacked[:, N_PARAMS]
    mean = state.mean + X.T @ w
    cov = P - X.T @ X
    cov = 0.5 * (cov + cov.T)
    return FilterState(mean=mean, cov=cov, obs_count=state.obs_count + 1)


def batch_posterior(prior_mean, prior_cov, H_all, y_all, noise_var):
    """Exact linear-Gaussian posterior in one information-form solve.

    cov = (P0^{-1} + H^T R^{-1} H)^{-1},
    mean = cov (P0^{-1} m0 + H^T R^{-1} y).

    Independent of the sequential route: no gains, no innovations.
    """
    prior_mean = np.asarray(prior_mean, dtype=float).reshape(N_PARAMS)
    prior_cov = np.asarray(prior_cov, dtype=float)
    H_all = np.asarray(H_all, dtype=float).reshape(-1, N_PARAMS)
    y_all = np.asarray(y_all, dtype=float).reshape(H_all.shape[0])
    try:
        prior_info = np.linalg.inv(prior_cov)
    except np.linalg.LinAlgError as exc:
        raise SingularPriorError("prior covariance is not invertible") from exc
    if not np.all(np.isfinite(prior_info)):
        raise SingularPriorError("prior covariance is not invertible")
    info = prior_info + (H_all.T @ H_all) / noise_var
    cov = np.linalg.inv(info)
    cov = 0.5 * (cov + cov.T)
    mean = cov @ (prior_info @ prior_mean + H_all.T @ y_all / noise_var)
    return mean, cov


def posterior_trace(state, positions, noise_var):
    """Trace of the covariance an observation at these positions would leave.

    This is the quantity the control planner drives down (A-optimality).
    """
    H = observation_matrix(positions)
    L = _innovation_cholesky(H, state.cov, noise_var)
    X = scipy.linalg.solve_triangular(L, H @ state.cov, lower=True)
    return float(np.trace(state.cov) - np.sum(X * X))


def posterior_trace_gradient(state, positions, noise_var):
    """Analytic gradient of posterior_trace w.r.t. the stacked positions.

    Differentiates through the observation matrix: with S the innovation
    matrix and P_post the posterior covariance, d(trace)/dH equals
    -2 S^{-1} H P P_post, and only four entries of H move with each
    glider coordinate.  Ordering of the result is (x1, y1, x2, y2, ...).
    """
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    K = positions.shape[0]
    P = state.cov
    H = observation_matrix(positions)
    L = _innovation_cholesky(H, P, noise_var)
    HP = H @ P
    X = scipy.linalg.solve_triangular(L, HP, lower=True)
    P_post = P - X.T @ X
    B = HP @ P_post
    Y = scipy.linalg.cho_solve((L, True), B)
    G_H = -2.0 * Y
    grad = np.empty(2 * K)
    grad[0::2] = G_H[0::2, 2] + G_H[1::2, 4]
    grad[1::2] = G_H[0::2, 3] + G_H[1::2, 5]
    return grad


@dataclass(frozen=True)
class ObjectiveEvaluation:
    """Sampling objective and its position gradient, evaluated together."""

    value: float
    gradient: np.ndarray


def evaluate_sampling_objective(state, positions, noise_var):
    """posterior_trace and posterior_trace_gradient bundled."""
    return ObjectiveEvaluation(
        value=posterior_trace(state, positions, noise_var),
        gradient=posterior_trace_gradient(state, positions, noise_var),
    )


def posterior_trace_gradient_fd(state, positions, noise_var, step=FD_GRADIENT_STEP):
    """Central-difference gradient; the trusted slow route."""
    z = np.atleast_2d(np.asarray(positions, dtype=float)).copy()
    flat = z.reshape(-1)
    grad = np.empty(flat.size)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        hi = posterior_trace(state, z, noise_var)
        flat[i] = orig - step
        lo = posterior_trace(state, z, noise_var)
        flat[i] = orig
        grad[i] = (hi - lo) / (2 * step)
    return grad


def hessian_norm_fd(grad_fn, positions_flat, step=FD_HESSIAN_STEP):
    """Frobenius norm of the position Hessian of any scalar objective.

    ``grad_fn`` maps a flat position vector to the objective gradient;
    central differences of it give the second-derivative matrix.
    """
    z = np.asarray(positions_flat, dtype=float).copy()
    n = z.size
    hess = np.empty((n, n))
    for i in range(n):
        orig = z[i]
        z[i] = orig + step
        hi = grad_fn(z)
        z[i] = orig - step
        lo = grad_fn(z)
        z[i] = orig
        hess[:, i] = (hi - lo) / (2 * step)
    return float(np.linalg.norm(hess, "fro"))


def posterior_trace_hessian_norm(state, positions, noise_var, step=FD_HESSIAN_STEP):
    """Frobenius norm of the posterior-trace Hessian at these positions."""
    z = np.atleast_2d(np.asarray(positions, dtype=float))
    K = z.shape[0]

    def grad_fn(flat):
        return posterior_trace_gradient(state, flat.reshape(K, 2), noise_var)

    return hessian_norm_fd(grad_fn, z.reshape(-1), step=step)
