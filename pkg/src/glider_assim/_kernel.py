"""Compiled fast path for the relaxation solve.

Mirrors the reference implementation in control.py step for step (same
discretization, same pseudo-step adaptation) for the built-in
posterior-trace objective, but runs the whole loop in one nopython
function so a full experiment sweep stays cheap.  Set the environment
variable GLIDER_ASSIM_NO_KERNEL=1 to force the pure-numpy route.
"""

import math
import os

import numpy as np

AVAILABLE = False
if os.environ.get("GLIDER_ASSIM_NO_KERNEL", "") != "1":
    try:
        from numba import njit
        AVAILABLE = True
    except ImportError:  # pragma: no cover - numba is a hard dependency
        pass

if AVAILABLE:

    @njit(cache=True)
    def _ascent_block(P, r, pos, k, H, HP, S, B, Y, Pp):
        """Ascent direction (negated posterior-trace gradient) for glider k."""
        K = pos.shape[0]
        m = 2 * K
        for j in range(K):
            for c in range(6):
                H[2 * j, c] = 0.0
                H[2 * j + 1, c] = 0.0
            H[2 * j, 0] = 1.0
            H[2 * j, 2] = pos[j, 0]
            H[2 * j, 3] = pos[j, 1]
            H[2 * j + 1, 1] = 1.0
            H[2 * j + 1, 4] = pos[j, 0]
            H[2 * j + 1, 5] = pos[j, 1]
        for i in range(m):
            for c in range(6):
                acc = 0.0
                for q in range(6):
                    acc += H[i, q] * P[q, c]
                HP[i, c] = acc
        for i in range(m):
            for j in range(i + 1):
                acc = 0.0
                for q in range(6):
                    acc += HP[i, q] * H[j, q]
                S[i, j] = acc
                S[j, i] = acc
            S[i, i] += r
        # lower Cholesky of S, stored in place of its lower triangle
        for i in range(m):
            for j in range(i + 1):
                acc = S[i, j]
                for q in range(j):
                    acc -= S[i, q] * S[j, q]
                if i == j:
                    if acc <= 0.0:
                        return np.nan, np.nan
                    S[i, i] = math.sqrt(acc)
                else:
                    S[i, j] = acc / S[j, j]
        # B := S^{-1} HP
        for c in range(6):
            for i in range(m):
                acc = HP[i, c]
                for q in range(i):
                    acc -= S[i, q] * B[q, c]
                B[i, c] = acc / S[i, i]
            for i in range(m - 1, -1, -1):
                acc = B[i, c]
                for q in range(i + 1, m):
                    acc -= S[q, i] * B[q, c]
                B[i, c] = acc / S[i, i]
        # posterior covariance Pp = P - HP^T B
        for a in range(6):
            for c in range(6):
                acc = P[a, c]
                for q in range(m):
                    acc -= HP[q, a] * B[q, c]
                Pp[a, c] = acc
        # Y := S^{-1} (HP Pp)
        for i in range(m):
            for c in range(6):
                acc = 0.0
                for q in range(6):
                    acc += HP[i, q] * Pp[q, c]
                Y[i, c] = acc
        for c in range(6):
            for i in range(m):
                acc = Y[i, c]
                for q in range(i):
                    acc -= S[i, q] * Y[q, c]
                Y[i, c] = acc / S[i, i]
            for i in range(m - 1, -1, -1):
                acc = Y[i, c]
                for q in range(i + 1, m):
                    acc -= S[q, i] * Y[q, c]
                Y[i, c] = acc / S[i, i]
        gx = 2.0 * (Y[2 * k, 2] + Y[2 * k + 1, 4])
        gy = 2.0 * (Y[2 * k, 3] + Y[2 * k + 1, 5])
        return gx, gy

    @njit(cache=True)
    def _relax(pts, h, u_max, A, v0, P, r, pos, k_idx, gamma, dtau0, floor, tol, max_steps):
        N = pts.shape[0]
        M = N - 2
        K = pos.shape[0]
        m = 2 * K
        prev = np.empty((N, 2))
        rhsx = np.empty(M)
        rhsy = np.empty(M)
        cp = np.empty(M)
        den = np.empty(M)
        H = np.empty((m, 6))
        HP = np.empty((m, 6))
        S = np.empty((m, m))
        B = np.empty((m, 6))
        Y = np.empty((m, 6))
        Pp = np.empty((6, 6))

        a00 = A[0, 0]
        a01 = A[0, 1]
        a10 = A[1, 0]
        a11 = A[1, 1]
        v0x = v0[0]
        v0y = v0[1]
        u2 = u_max * u_max
        two_h = 2.0 * h
        h2 = h * h
        # residual tolerance is relative to the dominant equation magnitude
        anorm = max(abs(a00) + abs(a01), abs(a10) + abs(a11))

        dtau = max(dtau0, floor)
        res_checkpoint = np.inf
        best_res = np.inf
        steps_since_check = 0
        thomas_dtau = -1.0

        for _ in range(max_steps):
            for i in range(N):
                prev[i, 0] = pts[i, 0]
                prev[i, 1] = pts[i, 1]
            alpha = dtau / h2
            if dtau != thomas_dtau:
                # last row absorbs the eliminated terminal node
                d = 1.0 + 2.0 * alpha
                o = -alpha
                den[0] = d
                cp[0] = o / d
                for i in range(1, M - 1):
                    den[i] = d - o * cp[i - 1]
                    cp[i] = o / den[i]
                den[M - 1] = (1.0 + 2.0 * alpha / 3.0) - (-2.0 * alpha / 3.0) * cp[M - 2]
                cp[M - 1] = 0.0
                thomas_dtau = dtau
            o = -alpha

            # lagged end condition: gradient and velocity at the old terminal
            pos[k_idx, 0] = pts[N - 1, 0]
            pos[k_idx, 1] = pts[N - 1, 1]
            gx, gy = _ascent_block(P, r, pos, k_idx, H, HP, S, B, Y, Pp)
            ng = math.hypot(gx, gy)
            if gamma > 0.0 and ng <= gamma:
                cx = u_max / gamma * gx
                cy = u_max / gamma * gy
            elif ng > 0.0:
                cx = u_max / ng * gx
                cy = u_max / ng * gy
            else:
                cx = 0.0
                cy = 0.0
            bx = v0x + a00 * pts[N - 1, 0] + a01 * pts[N - 1, 1] + cx
            by = v0y + a10 * pts[N - 1, 0] + a11 * pts[N - 1, 1] + cy

            for i in range(1, M + 1):
                zdx = (pts[i + 1, 0] - pts[i - 1, 0]) / two_h
                zdy = (pts[i + 1, 1] - pts[i - 1, 1]) / two_h
                vx = v0x + a00 * pts[i, 0] + a01 * pts[i, 1]
                vy = v0y + a10 * pts[i, 0] + a11 * pts[i, 1]
                wx = zdx - vx
                wy = zdy - vy
                awx = a00 * wx + a10 * wy
                awy = a01 * wx + a11 * wy
                s = (-wy) * awx + wx * awy
                ex = -(a00 * zdx + a01 * zdy) + s * (-wy) / u2
                ey = -(a10 * zdx + a11 * zdy) + s * wx / u2
                rx = pts[i, 0] + dtau * ex
                ry = pts[i, 1] + dtau * ey
                if i == 1:
                    rx += alpha * pts[0, 0]
                    ry += alpha * pts[0, 1]
                if i == M:
                    rx += (two_h * alpha / 3.0) * bx
                    ry += (two_h * alpha / 3.0) * by
                rhsx[i - 1] = rx
                rhsy[i - 1] = ry

            rhsx[0] = rhsx[0] / den[0]
            rhsy[0] = rhsy[0] / den[0]
            for i in range(1, M - 1):
                rhsx[i] = (rhsx[i] - o * rhsx[i - 1]) / den[i]
                rhsy[i] = (rhsy[i] - o * rhsy[i - 1]) / den[i]
            o_last = -2.0 * alpha / 3.0
            rhsx[M - 1] = (rhsx[M - 1] - o_last * rhsx[M - 2]) / den[M - 1]
            rhsy[M - 1] = (rhsy[M - 1] - o_last * rhsy[M - 2]) / den[M - 1]
            for i in range(M - 2, -1, -1):
                rhsx[i] = rhsx[i] - cp[i] * rhsx[i + 1]
                rhsy[i] = rhsy[i] - cp[i] * rhsy[i + 1]
            for i in range(M):
                pts[i + 1, 0] = rhsx[i]
                pts[i + 1, 1] = rhsy[i]
            pts[N - 1, 0] = (4.0 * pts[N - 2, 0] - pts[N - 3, 0] + two_h * bx) / 3.0
            pts[N - 1, 1] = (4.0 * pts[N - 2, 1] - pts[N - 3, 1] + two_h * by) / 3.0

            res = 0.0
            vmax = 0.0
            for i in range(N):
                vx = v0x + a00 * pts[i, 0] + a01 * pts[i, 1]
                vy = v0y + a10 * pts[i, 0] + a11 * pts[i, 1]
                if abs(vx) > vmax:
                    vmax = abs(vx)
                if abs(vy) > vmax:
                    vmax = abs(vy)
                if i == 0 or i == N - 1:
                    continue
                zdx = (pts[i + 1, 0] - pts[i - 1, 0]) / two_h
                zdy = (pts[i + 1, 1] - pts[i - 1, 1]) / two_h
                wx = zdx - vx
                wy = zdy - vy
                awx = a00 * wx + a10 * wy
                awy = a01 * wx + a11 * wy
                s = (-wy) * awx + wx * awy
                ex = -(a00 * zdx + a01 * zdy) + s * (-wy) / u2
                ey = -(a10 * zdx + a11 * zdy) + s * wx / u2
                zddx = (pts[i + 1, 0] - 2.0 * pts[i, 0] + pts[i - 1, 0]) / h2
                zddy = (pts[i + 1, 1] - 2.0 * pts[i, 1] + pts[i - 1, 1]) / h2
                rx = abs(zddx + ex)
                ry = abs(zddy + ey)
                if rx > res:
                    res = rx
                if ry > res:
                    res = ry

            if not math.isfinite(res):
                for i in range(N):
                    pts[i, 0] = prev[i, 0]
                    pts[i, 1] = prev[i, 1]
                if dtau <= floor:
                    return False, dtau, res
                dtau = max(dtau / 8.0, floor)
                res_checkpoint = np.inf
                steps_since_check = 0
                continue
            if res < tol * (1.0 + anorm * vmax):
                return True, dtau, res
            if res > 1e10 * best_res:
                return False, dtau, res
            if res < best_res:
                best_res = res
            if res > 1e6 * res_checkpoint:
                dtau = max(dtau / 8.0, floor)
                res_checkpoint = res
                steps_since_check = 0
                continue
            steps_since_check += 1
            if steps_since_check >= 20:
                if res <= res_checkpoint:
                    dtau *= 1.5
                else:
                    dtau = max(dtau * 0.5, floor)
                res_checkpoint = res
                steps_since_check = 0
        return False, dtau, res


def relax_trace_objective(points, h, u_max, A, v0, cov, noise_var, cohort, k_idx,
                          reg_threshold, dtau0, dtau_floor, residual_tol, max_steps):
    """Run the compiled relaxation loop in place on ``points``.

    ``cohort`` row ``k_idx`` is scratch space for the moving terminal.
    Returns (converged, final pseudo-step, final residual).
    """
    if not AVAILABLE:  # pragma: no cover
        raise ImportError("compiled kernel unavailable")
    if not points.flags.c_contiguous:
        raise ValueError("path points must be C-contiguous for in-place relaxation")
    return _relax(
        points, float(h), float(u_max),
        np.ascontiguousarray(A), np.ascontiguousarray(v0),
        np.ascontiguousarray(cov), float(noise_var),
        np.ascontiguousarray(cohort), int(k_idx), float(reg_threshold),
        float(dtau0), float(dtau_floor), float(residual_tol), int(max_steps))
