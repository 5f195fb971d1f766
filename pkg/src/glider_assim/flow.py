"""Stationary linear planar velocity fields.

A field is v(z) = v0 + A z with constant 2x2 Jacobian A.  The four
benchmark fields share v0 = (1/2, -1/2) and differ in A, which places a
center, an unstable node, a saddle, or a stable node in the plane.
Uncontrolled (drifter) motion under such a field has a closed-form
solution used as the oracle for every numerical integrator in the
package.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .errors import SingularFlowError

# relative eigenvalue gap below which the confluent exponential form is used
_EIG_SPLIT_TOL = 1e-6

FLOW_CASE_TAGS = ("center", "unstable-node", "saddle", "stable-node")

_CASE_JACOBIANS = {
    "center": [[0.0, 1.0], [-1.0, 0.0]],
    "unstable-node": [[1.0, 0.0], [0.0, 1.0]],
    "saddle": [[1.0, 0.0], [0.0, -1.0]],
    "stable-node": [[-1.0, 0.0], [0.0, -1.0]],
}
_CASE_V0 = [0.5, -0.5]


@dataclass(frozen=True)
class LinearFlowField:
    """Affine velocity field v(z) = v0 + A z."""

    v0: np.ndarray
    A: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "v0", np.asarray(self.v0, dtype=float).reshape(2))
        object.__setattr__(self, "A", np.asarray(self.A, dtype=float).reshape(2, 2))

    def velocity(self, z):
        """Velocity at one point (2,) or a batch of points (N, 2)."""
        z = np.asarray(z, dtype=float)
        return z @ self.A.T + self.v0

    def fixed_point(self):
        """Equilibrium -A^{-1} v0; requires invertible A."""
        det = self.A[0, 0] * self.A[1, 1] - self.A[0, 1] * self.A[1, 0]
        scale = np.abs(self.A).max()
        if abs(det) <= 1e-12 * max(scale * scale, 1e-300):
            raise SingularFlowError("flow Jacobian is singular; no isolated fixed point")
        return -np.linalg.solve(self.A, self.v0)

    def drift(self, z0, t):
        """Exact uncontrolled position at time t starting from z0.

        Solves zdot = v0 + A z in closed form via the 2x2 matrix
        exponential, so it is valid for any A (singular, defective,
        complex spectrum) and any t.
        """
        E, S = _expm_and_integral(self.A, float(t))
        return E @ np.asarray(z0, dtype=float) + S @ self.v0


def flow_case(tag):
    """One of the four benchmark fields by tag (see FLOW_CASE_TAGS)."""
    if tag not in _CASE_JACOBIANS:
        raise KeyError(f"unknown flow case {tag!r}; expected one of {FLOW_CASE_TAGS}")
    return LinearFlowField(v0=np.array(_CASE_V0), A=np.array(_CASE_JACOBIANS[tag]))


def _phi1(lam, t):
    # (e^{lam t} - 1)/lam, stable near lam = 0
    x = lam * t
    if abs(x) < 1e-4:
        return t * (1.0 + x / 2.0 + x * x / 6.0 + x * x * x / 24.0)
    return (cmath.exp(x) - 1.0) / lam


def _phi1_prime(lam, t):
    # d/dlam of _phi1, stable near lam = 0
    x = lam * t
    if abs(x) < 1e-4:
        return t * t * (0.5 + x / 3.0 + x * x / 8.0)
    return (t * cmath.exp(x) - _phi1(lam, t)) / lam


def _expm_and_integral(A, t):
    """e^{At} and int_0^t e^{As} ds for a real 2x2 A, in closed form.

    Uses the two-eigenvalue spectral formula when the eigenvalues are
    well separated and the confluent (repeated-root) formula otherwise;
    both are exact for 2x2 matrices by Cayley-Hamilton.
    """
    A = np.asarray(A, dtype=float)
    mean = 0.5 * (A[0, 0] + A[1, 1])
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    delta = cmath.sqrt(complex(mean * mean - det))
    lam1 = mean + delta
    lam2 = mean - delta

    eye = np.eye(2)
    norm = np.abs(A).max()
    if abs(lam1 - lam2) >= _EIG_SPLIT_TOL * max(norm, 1.0):
        inv_gap = 1.0 / (lam1 - lam2)
        B1 = A - lam2 * eye
        B2 = A - lam1 * eye
        E = (cmath.exp(lam1 * t) * B1 - cmath.exp(lam2 * t) * B2) * inv_gap
        S = (_phi1(lam1, t) * B1 - _phi1(lam2, t) * B2) * inv_gap
    else:
        N = A - mean * eye
        E = cmath.exp(mean * t) * eye + t * cmath.exp(mean * t) * N
        S = _phi1(mean, t) * eye + _phi1_prime(mean, t) * N
    return E.real, S.real
