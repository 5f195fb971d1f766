"""Locally optimal glider paths over one assimilation window.

The steering problem is a two-point boundary value problem: position is
pinned at the window start, and at the window end the path must arrive
with velocity equal to the estimated flow plus a full-speed push along
the direction that most reduces the expected posterior trace.  The BVP
is solved by relaxation: the path evolves in an artificial time until
the second-order interior equation is satisfied, with the curvature
term advanced implicitly (one tridiagonal solve per coordinate) and
everything else explicitly.

Near a maximum of the information gain the end condition loses
solutions (the glider would overshoot); a gradient-magnitude threshold
switches the push from unit-direction to linear-in-gradient there,
which restores existence.  Multiple gliders couple only through the end
condition, so a cohort is solved by Gauss-Seidel sweeps with the other
gliders' latest end positions frozen.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .assimilation import (hessian_norm_fd, posterior_trace_gradient,
                           posterior_trace_gradient_fd)

_DTAU_SAFETY = 0.25        # initial pseudo-step = _DTAU_SAFETY * h^2
_STREAK_FOR_GROWTH = 20    # adaptation window length in steps
_GROWTH = 1.5
_REJECT_SHRINK = 8.0       # pseudo-step cut after a non-finite step


@dataclass
class SolverSettings:
    """Numerical knobs for the relaxation solve."""

    interior_points: int = 50       # nodes strictly inside the window
    pseudo_dt: float = 0.0          # artificial-time step; 0 = 0.25 h^2
    residual_tol: float = 1e-6
    max_relax_steps: int = 200_000
    reg_threshold: float = 0.0      # gradient norm below which steering is linear; 0 = off
    max_sweeps: int = 12
    path_init: str = "uniform"      # "uniform" or "line"
    fd_gradient: bool = False       # steer from finite-difference gradients (slow, trusted)


@dataclass
class PathGrid:
    """Discretized path on a uniform time grid including both endpoints."""

    t_start: float
    t_end: float
    points: np.ndarray              # (M+2, 2)

    @property
    def h(self):
        return (self.t_end - self.t_start) / (self.points.shape[0] - 1)

    @property
    def times(self):
        return np.linspace(self.t_start, self.t_end, self.points.shape[0])


@dataclass
class HeadingPath:
    """Control angles on the same grid as the path they were cut from."""

    times: np.ndarray
    theta: np.ndarray

    def interpolator(self):
        """Piecewise-linear theta(t); interpolation happens on the
        unwrapped angles so branch jumps do not corrupt it."""
        unwrapped = np.unwrap(self.theta)
        t0, t1 = self.times[0], self.times[-1]

        def angle(t):
            return float(np.interp(np.clip(t, t0, t1), self.times, unwrapped))

        return angle


@dataclass
class CohortPlan:
    paths: list
    headings: list
    converged: bool
    glider_converged: list
    retried: list                   # glider indices redone with the auto threshold
    init_retried: list              # glider indices rescued by the line initialization
    reg_used: list                  # threshold actually applied per glider
    final_residuals: list           # interior residual each glider converged (or gave up) at


def steering_velocity(g, u_max, reg_threshold):
    """Steering contribution for one glider given its ascent gradient g.

    Full speed along g when the gradient is strong; below the threshold
    the magnitude scales linearly so the push vanishes smoothly at a
    gain maximum instead of becoming directionless.
    """
    g = np.asarray(g, dtype=float)
    ng = float(np.hypot(g[0], g[1]))
    if reg_threshold > 0.0 and ng <= reg_threshold:
        return (u_max / reg_threshold) * g
    if ng == 0.0:
        return np.zeros(2)
    return (u_max / ng) * g


def terminal_boundary_velocity(end_positions, state, flow_estimate, u_max, reg_threshold, noise_var):
    """Required end-of-window velocity for the whole cohort, stacked.

    Flow at each end position plus the (possibly regularized) steering
    along the descent direction of the expected posterior trace.
    """
    pos = np.atleast_2d(np.asarray(end_positions, dtype=float).reshape(-1, 2))
    K = pos.shape[0]
    ascent = -posterior_trace_gradient(state, pos, noise_var)
    out = flow_estimate.velocity(pos)
    for k in range(K):
        out[k] += steering_velocity(ascent[2 * k:2 * k + 2], u_max, reg_threshold)
    return out.reshape(-1)


@lru_cache(maxsize=64)
def _implicit_inverse(m, alpha):
    # inverse of the (I - alpha * second-difference) interior operator with
    # the terminal node eliminated through the one-sided end condition:
    # z_end = (4 z_M - z_{M-1} + 2h b)/3 folded into the last row
    mat = (1.0 + 2.0 * alpha) * np.eye(m)
    idx = np.arange(m - 1)
    mat[idx, idx + 1] = -alpha
    mat[idx + 1, idx] = -alpha
    mat[m - 1, m - 1] = 1.0 + 2.0 * alpha / 3.0
    mat[m - 1, m - 2] = -2.0 * alpha / 3.0
    return np.linalg.inv(mat)


def _explicit_terms(pts, h, A, v0, u_max):
    # non-curvature right-hand side of the relaxation PDE at interior nodes
    v = pts @ A.T + v0
    zdot = (pts[2:] - pts[:-2]) / (2.0 * h)
    w = zdot - v[1:-1]
    aw = w @ A                       # rows are (A^T w)^T
    jw = np.empty_like(w)
    jw[:, 0] = -w[:, 1]
    jw[:, 1] = w[:, 0]
    s = (jw * aw).sum(axis=1) / (u_max * u_max)
    return -(zdot @ A.T) + s[:, None] * jw


def interior_residual(path, flow, u_max):
    """Max-norm residual of the second-order interior equation."""
    pts = path.points
    h = path.h
    zdd = (pts[2:] - 2.0 * pts[1:-1] + pts[:-2]) / (h * h)
    res = zdd + _explicit_terms(pts, h, flow.A, flow.v0, u_max)
    return float(np.abs(res).max())


def equation_scale(path, flow_estimate):
    """Magnitude of the dominant interior term along the path.

    Residual tolerances are taken relative to this, so convergence stays
    meaningful when an expanding flow carries gliders to coordinates many
    orders of magnitude above unity (where an absolute threshold would
    sit below floating-point noise).  Equals 1 for constant flows.
    """
    v = flow_estimate.velocity(path.points)
    anorm = np.abs(flow_estimate.A).sum(axis=1).max()
    return 1.0 + anorm * float(np.abs(v).max())


def relaxation_step(path, end_velocity, flow_estimate, u_max, settings, dtau=None):
    """Advance the path one artificial-time step.

    Curvature is treated implicitly, the remaining terms explicitly at
    the current iterate; the terminal node is then moved to satisfy the
    one-sided second-order discretization of the end velocity condition
    (with the condition's nonlinearity lagged one step).  Returns the
    advanced path and the interior residual of the advanced path, so a
    zero residual really means a fixed point.
    """
    pts = path.points
    h = path.h
    m = pts.shape[0] - 2
    if dtau is None:
        dtau = settings.pseudo_dt if settings.pseudo_dt > 0 else _DTAU_SAFETY * h * h
    A, v0 = flow_estimate.A, flow_estimate.v0
    alpha = dtau / (h * h)

    b = np.asarray(end_velocity(pts[-1]), dtype=float)
    rhs = pts[1:-1] + dtau * _explicit_terms(pts, h, A, v0, u_max)
    rhs[0] += alpha * pts[0]
    rhs[-1] += (2.0 * h * alpha / 3.0) * b

    new = pts.copy()
    new[1:-1] = _implicit_inverse(m, alpha) @ rhs
    new[-1] = (4.0 * new[-2] - new[-3] + 2.0 * h * b) / 3.0

    advanced = PathGrid(path.t_start, path.t_end, new)
    return advanced, interior_residual(advanced, flow_estimate, u_max)


def _relax_to_steady_state(path, end_velocity, flow_estimate, u_max, settings, dtau0):
    """Drive relaxation_step until the residual drops below tolerance.

    Pseudo-step control works on 20-step windows so the oscillatory
    (but converging) residual of the semi-implicit split does not get
    mistaken for instability: the step grows 1.5x when a window ends
    below its starting residual and halves otherwise, never below the
    explicit-term-stable floor 0.25 h^2.  Large finite spikes cut the
    step immediately; a non-finite step is rejected outright, and at
    the floor that means giving up (the caller retries regularized).
    """
    floor = settings.pseudo_dt if settings.pseudo_dt > 0 else _DTAU_SAFETY * path.h ** 2
    dtau = max(dtau0, floor)
    res_checkpoint = np.inf
    best_res = np.inf
    steps_since_check = 0
    res = np.inf
    for _ in range(settings.max_relax_steps):
        candidate, res = relaxation_step(path, end_velocity, flow_estimate, u_max, settings, dtau)
        if not np.isfinite(res):
            if dtau <= floor:
                return path, False, res, dtau
            dtau = max(dtau / _REJECT_SHRINK, floor)
            res_checkpoint = np.inf
            steps_since_check = 0
            continue
        path = candidate
        if res < settings.residual_tol * equation_scale(path, flow_estimate):
            return path, True, res, dtau
        if res > 1e10 * best_res:
            # the relaxation dynamics themselves are diverging (finite-time
            # blowup off the constraint manifold); no step size saves this
            return path, False, res, dtau
        best_res = min(best_res, res)
        if res > 1e6 * res_checkpoint:
            dtau = max(dtau / _REJECT_SHRINK, floor)
            res_checkpoint = res
            steps_since_check = 0
            continue
        steps_since_check += 1
        if steps_since_check >= _STREAK_FOR_GROWTH:
            if res <= res_checkpoint:
                dtau *= _GROWTH
            else:
                dtau = max(dtau * 0.5, floor)
            res_checkpoint = res
            steps_since_check = 0
    return path, False, res, dtau


def initial_path(z_start, window, settings, direction=None, kind=None):
    """Fresh path iterate: the uniform state, or a straight reach along
    ``direction`` when the (settings- or argument-selected) kind is "line"."""
    t0, t1 = window
    n = settings.interior_points + 2
    pts = np.tile(np.asarray(z_start, dtype=float), (n, 1))
    if (kind or settings.path_init) == "line" and direction is not None:
        span = np.linspace(0.0, t1 - t0, n)
        pts = pts + span[:, None] * np.asarray(direction, dtype=float)
    return PathGrid(t0, t1, pts)


def path_velocity(points, h):
    """Time derivative on the grid: central inside, one-sided second
    order at both endpoints."""
    zdot = np.empty_like(points)
    zdot[1:-1] = (points[2:] - points[:-2]) / (2.0 * h)
    zdot[0] = (-3.0 * points[0] + 4.0 * points[1] - points[2]) / (2.0 * h)
    zdot[-1] = (3.0 * points[-1] - 4.0 * points[-2] + points[-3]) / (2.0 * h)
    return zdot


def extract_headings(path, flow_estimate):
    """Control angles implied by a path: direction of (zdot - flow)."""
    rel = path_velocity(path.points, path.h) - flow_estimate.velocity(path.points)
    return HeadingPath(times=path.times, theta=np.arctan2(rel[:, 1], rel[:, 0]))


def _cohort_ascent_gradient(state, noise_var, K, fd=False):
    if fd:
        # trusted slow route; deliberately unmarked so the compiled
        # fast path is bypassed as well
        def gradient(flat):
            return -posterior_trace_gradient_fd(state, flat.reshape(K, 2), noise_var)

        return gradient

    def gradient(flat):
        return -posterior_trace_gradient(state, flat.reshape(K, 2), noise_var)

    gradient._is_trace_objective = True
    return gradient


def _single_glider_bc(flow_estimate, cohort_gradient, frozen, k, u_max, reg_threshold):
    # frozen: (K,2) buffer whose row k tracks the moving terminal
    def end_velocity(z_end):
        frozen[k] = z_end
        g = cohort_gradient(frozen.reshape(-1))[2 * k:2 * k + 2]
        return flow_estimate.velocity(z_end) + steering_velocity(g, u_max, reg_threshold)

    return end_velocity


def solve_glider_path(z_start, window, state, flow_estimate, frozen_others, u_max,
                      noise_var, settings, objective_gradient=None, reg_threshold=None,
                      path0=None, dtau0=None):
    """Relax one glider's path with the other gliders' ends frozen.

    ``objective_gradient`` (flat cohort positions -> ascent gradient)
    replaces the posterior-trace objective when given, which is how the
    analytic constant-flow cases and tests drive the solver.  Returns
    (path, headings, converged); non-convergence is a flag for the
    caller's regularization retry, not an error.
    """
    z_start = np.asarray(z_start, dtype=float).reshape(2)
    others = np.asarray(frozen_others, dtype=float).reshape(-1, 2)
    cohort = np.vstack([z_start[None, :], others])
    K = cohort.shape[0]
    if objective_gradient is None:
        objective_gradient = _cohort_ascent_gradient(state, noise_var, K,
                                                     fd=settings.fd_gradient)
    if reg_threshold is None:
        reg_threshold = settings.reg_threshold

    path = path0 if path0 is not None else initial_path(z_start, window, settings)
    path.points[0] = z_start
    if dtau0 is None:
        h = path.h
        dtau0 = settings.pseudo_dt if settings.pseudo_dt > 0 else _DTAU_SAFETY * h * h

    path, converged, _, _ = _sweep_solve(
        path, cohort, 0, state, flow_estimate, u_max, noise_var,
        settings, objective_gradient, reg_threshold, dtau0, _kernel_ok(objective_gradient))
    return path, extract_headings(path, flow_estimate), converged


def _auto_reg_threshold(objective_gradient, starts, window, u_max):
    # threshold rule: max speed times window length times Hessian norm
    return u_max * (window[1] - window[0]) * hessian_norm_fd(objective_gradient, starts.reshape(-1))


def solve_cohort(starts, window, state, flow_estimate, u_max, noise_var, settings,
                 objective_gradient=None):
    """Plan all K gliders by Gauss-Seidel over single-glider solves.

    Each inner solve sees the others' most recent end positions; sweeps
    stop when no end position moves more than residual_tol.  A glider
    that fails to converge is rescued in stages: first re-initialized
    on the straight line toward its steering direction (the uniform
    start can sit outside the relaxation's basin of attraction when the
    local flow speed is well above u_max), then redone with the
    regularization threshold from the auto rule.  Failure after all
    rescues marks the whole plan unconverged so the caller can fall
    back to zero control.
    """
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    K = starts.shape[0]
    if objective_gradient is None:
        objective_gradient = _cohort_ascent_gradient(state, noise_var, K,
                                                     fd=settings.fd_gradient)

    use_kernel = _kernel_ok(objective_gradient)
    terminals = starts.copy()
    reg_used = [settings.reg_threshold] * K
    glider_ok = [False] * K
    residuals = [np.inf] * K
    retried = []
    init_retried = []
    auto_threshold = None
    converged = False

    def fresh_path(k, kind, gamma):
        if kind == "line":
            pos = terminals.copy()
            pos[k] = starts[k]
            g = objective_gradient(pos.reshape(-1))[2 * k:2 * k + 2]
            direction = flow_estimate.velocity(starts[k]) + steering_velocity(g, u_max, gamma)
            return initial_path(starts[k], window, settings, direction=direction, kind="line")
        return initial_path(starts[k], window, settings, kind="uniform")

    paths = [fresh_path(k, settings.path_init, reg_used[k]) for k in range(K)]
    h = paths[0].h
    dtau_init = settings.pseudo_dt if settings.pseudo_dt > 0 else _DTAU_SAFETY * h * h
    dtaus = [dtau_init] * K

    for _ in range(settings.max_sweeps):
        max_move = 0.0
        for k in range(K):
            cohort = terminals.copy()
            cohort[k] = paths[k].points[0]
            old_end = terminals[k].copy()
            paths[k], ok, dtaus[k], residuals[k] = _sweep_solve(
                paths[k], cohort, k, state, flow_estimate, u_max, noise_var,
                settings, objective_gradient, reg_used[k], dtaus[k], use_kernel)
            if not ok:
                rescues = []
                if settings.path_init != "line":
                    rescues.append(("line", reg_used[k]))
                if reg_used[k] == 0.0:
                    rescues.append((settings.path_init, None))
                    if settings.path_init != "line":
                        rescues.append(("line", None))
                for kind, gamma in rescues:
                    if gamma is None:
                        if auto_threshold is None:
                            auto_threshold = _auto_reg_threshold(
                                objective_gradient, starts, window, u_max)
                        gamma = auto_threshold
                        if k not in retried:
                            retried.append(k)
                    elif k not in init_retried:
                        init_retried.append(k)
                    paths[k] = fresh_path(k, kind, gamma)
                    dtaus[k] = dtau_init
                    paths[k], ok, dtaus[k], residuals[k] = _sweep_solve(
                        paths[k], cohort, k, state, flow_estimate, u_max, noise_var,
                        settings, objective_gradient, gamma, dtaus[k], use_kernel)
                    if ok:
                        reg_used[k] = gamma
                        break
                if not ok:
                    # all rescues failed; the caller will zero-control this
                    # glider, so its coupling terminal must be the drift
                    # prediction, not wherever the diverged iterate stopped
                    t_nodes = np.linspace(0.0, window[1] - window[0],
                                          settings.interior_points + 2)
                    pts = np.stack([flow_estimate.drift(starts[k], float(t))
                                    for t in t_nodes])
                    paths[k] = PathGrid(window[0], window[1], pts)
                    residuals[k] = np.inf
            glider_ok[k] = ok
            terminals[k] = paths[k].points[-1]
            max_move = max(max_move, float(np.abs(terminals[k] - old_end).max()))
        if not all(glider_ok):
            break
        move_scale = 1.0 + float(np.abs(terminals).max())
        if max_move <= settings.residual_tol * move_scale:
            converged = True
            break

    headings = [extract_headings(paths[k], flow_estimate) for k in range(K)]
    return CohortPlan(paths=paths, headings=headings, converged=converged and all(glider_ok),
                      glider_converged=glider_ok, retried=retried, init_retried=init_retried,
                      reg_used=reg_used, final_residuals=residuals)


def _sweep_solve(path, cohort, k, state, flow_estimate, u_max, noise_var, settings,
                 objective_gradient, reg_threshold, dtau0, use_kernel):
    if use_kernel:
        from . import _kernel

        floor = settings.pseudo_dt if settings.pseudo_dt > 0 else _DTAU_SAFETY * path.h ** 2
        converged, dtau, res = _kernel.relax_trace_objective(
            path.points, path.h, u_max, flow_estimate.A, flow_estimate.v0,
            state.cov, noise_var, cohort, k, reg_threshold, dtau0, floor,
            settings.residual_tol, settings.max_relax_steps)
        if not np.all(np.isfinite(path.points)):
            raise FloatingPointError("relaxation produced non-finite path points")
        return path, bool(converged), float(dtau), float(res)

    bc = _single_glider_bc(flow_estimate, objective_gradient, cohort, k, u_max, reg_threshold)
    new_path, ok, res, dtau = _relax_to_steady_state(path, bc, flow_estimate, u_max, settings, dtau0)
    if not np.all(np.isfinite(new_path.points)):
        raise FloatingPointError("relaxation produced non-finite path points")
    return new_path, ok, dtau, res


def _kernel_ok(objective_gradient):
    # compiled fast path only covers the built-in posterior-trace objective
    if not getattr(objective_gradient, "_is_trace_objective", False):
        return False
    try:
        from . import _kernel
    except ImportError:
        return False
    return _kernel.AVAILABLE
