"""Stencil kernels for the explicit wave solvers.

Every kernel has a loop version compiled with numba and a vectorised numpy
version.  :mod:`fdppr._accel` decides which one the public wrappers call.
All operators return the *positive* Laplacian (``u_xx + u_yy + ...``) at
interior nodes and write zeros on the boundary.
"""
import numpy as np

from ._accel import USE_NUMBA, njit

# 1D fourth-order second-derivative stencil, offsets -2..2, times 12
C4 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0])


# ---------------------------------------------------------------------------
# numba loop kernels
# ---------------------------------------------------------------------------

@njit
def _lap2_2d_loop(u, out, s):
    n0, n1 = u.shape
    for i in range(n0):
        for j in range(n1):
            if i == 0 or j == 0 or i == n0 - 1 or j == n1 - 1:
                out[i, j] = 0.0
            else:
                out[i, j] = s * (u[i + 1, j] + u[i - 1, j] + u[i, j + 1]
                                 + u[i, j - 1] - 4.0 * u[i, j])


@njit
def _lap2_3d_loop(u, out, s):
    n0, n1, n2 = u.shape
    for i in range(n0):
        for j in range(n1):
            for k in range(n2):
                if (i == 0 or j == 0 or k == 0 or i == n0 - 1 or j == n1 - 1
                        or k == n2 - 1):
                    out[i, j, k] = 0.0
                else:
                    out[i, j, k] = s * (u[i + 1, j, k] + u[i - 1, j, k]
                                        + u[i, j + 1, k] + u[i, j - 1, k]
                                        + u[i, j, k + 1] + u[i, j, k - 1]
                                        - 6.0 * u[i, j, k])


@njit
def _flux2_2d_loop(u, fx, fy, out, s):
    n0, n1 = u.shape
    for i in range(n0):
        for j in range(n1):
            if i == 0 or j == 0 or i == n0 - 1 or j == n1 - 1:
                out[i, j] = 0.0
            else:
                c = u[i, j]
                out[i, j] = s * (fx[i, j] * (u[i + 1, j] - c) - fx[i - 1, j] * (c - u[i - 1, j])
                                 + fy[i, j] * (u[i, j + 1] - c) - fy[i, j - 1] * (c - u[i, j - 1]))


@njit
def _flux2_3d_loop(u, fx, fy, fz, out, s):
    n0, n1, n2 = u.shape
    for i in range(n0):
        for j in range(n1):
            for k in range(n2):
                if (i == 0 or j == 0 or k == 0 or i == n0 - 1 or j == n1 - 1
                        or k == n2 - 1):
                    out[i, j, k] = 0.0
                else:
                    c = u[i, j, k]
                    out[i, j, k] = s * (
                        fx[i, j, k] * (u[i + 1, j, k] - c) - fx[i - 1, j, k] * (c - u[i - 1, j, k])
                        + fy[i, j, k] * (u[i, j + 1, k] - c) - fy[i, j - 1, k] * (c - u[i, j - 1, k])
                        + fz[i, j, k] * (u[i, j, k + 1] - c) - fz[i, j, k - 1] * (c - u[i, j, k - 1]))


@njit
def _d4(um2, um1, u0, up1, up2):
    return -um2 + 16.0 * um1 - 30.0 * u0 + 16.0 * up1 - up2


@njit
def _shifted_lo(v0, v1, v2, v3, v4, v5):
    return 10.0 * v0 - 15.0 * v1 - 4.0 * v2 + 14.0 * v3 - 6.0 * v4 + v5


@njit
def _lap4s_2d_loop(u, out, s):
    n0, n1 = u.shape
    for i in range(n0):
        for j in range(n1):
            if i == 0 or j == 0 or i == n0 - 1 or j == n1 - 1:
                out[i, j] = 0.0
                continue
            if i == 1:
                ax = _shifted_lo(u[0, j], u[1, j], u[2, j], u[3, j], u[4, j], u[5, j])
            elif i == n0 - 2:
                ax = _shifted_lo(u[n0 - 1, j], u[n0 - 2, j], u[n0 - 3, j], u[n0 - 4, j], u[n0 - 5, j], u[n0 - 6, j])
            else:
                ax = _d4(u[i - 2, j], u[i - 1, j], u[i, j], u[i + 1, j], u[i + 2, j])
            if j == 1:
                ay = _shifted_lo(u[i, 0], u[i, 1], u[i, 2], u[i, 3], u[i, 4], u[i, 5])
            elif j == n1 - 2:
                ay = _shifted_lo(u[i, n1 - 1], u[i, n1 - 2], u[i, n1 - 3], u[i, n1 - 4], u[i, n1 - 5], u[i, n1 - 6])
            else:
                ay = _d4(u[i, j - 2], u[i, j - 1], u[i, j], u[i, j + 1], u[i, j + 2])
            out[i, j] = s * (ax + ay) / 12.0


@njit
def _lap4s_3d_loop(u, out, s):
    n0, n1, n2 = u.shape
    for i in range(n0):
        for j in range(n1):
            for k in range(n2):
                if (i == 0 or j == 0 or k == 0 or i == n0 - 1 or j == n1 - 1
                        or k == n2 - 1):
                    out[i, j, k] = 0.0
                    continue
                if i == 1:
                    ax = _shifted_lo(u[0, j, k], u[1, j, k], u[2, j, k], u[3, j, k], u[4, j, k], u[5, j, k])
                elif i == n0 - 2:
                    ax = _shifted_lo(u[n0 - 1, j, k], u[n0 - 2, j, k], u[n0 - 3, j, k], u[n0 - 4, j, k],
                                     u[n0 - 5, j, k], u[n0 - 6, j, k])
                else:
                    ax = _d4(u[i - 2, j, k], u[i - 1, j, k], u[i, j, k], u[i + 1, j, k], u[i + 2, j, k])
                if j == 1:
                    ay = _shifted_lo(u[i, 0, k], u[i, 1, k], u[i, 2, k], u[i, 3, k], u[i, 4, k], u[i, 5, k])
                elif j == n1 - 2:
                    ay = _shifted_lo(u[i, n1 - 1, k], u[i, n1 - 2, k], u[i, n1 - 3, k], u[i, n1 - 4, k],
                                     u[i, n1 - 5, k], u[i, n1 - 6, k])
                else:
                    ay = _d4(u[i, j - 2, k], u[i, j - 1, k], u[i, j, k], u[i, j + 1, k], u[i, j + 2, k])
                if k == 1:
                    az = _shifted_lo(u[i, j, 0], u[i, j, 1], u[i, j, 2], u[i, j, 3], u[i, j, 4], u[i, j, 5])
                elif k == n2 - 2:
                    az = _shifted_lo(u[i, j, n2 - 1], u[i, j, n2 - 2], u[i, j, n2 - 3], u[i, j, n2 - 4],
                                     u[i, j, n2 - 5], u[i, j, n2 - 6])
                else:
                    az = _d4(u[i, j, k - 2], u[i, j, k - 1], u[i, j, k], u[i, j, k + 1], u[i, j, k + 2])
                out[i, j, k] = s * (ax + ay + az) / 12.0


@njit
def _lap4_2d_loop(u, out, s):
    # odd reflection across the Dirichlet boundary: u[-1] = -u[1]
    n0, n1 = u.shape
    for i in range(n0):
        for j in range(n1):
            if i == 0 or j == 0 or i == n0 - 1 or j == n1 - 1:
                out[i, j] = 0.0
                continue
            im2 = -u[1, j] if i == 1 else u[i - 2, j]
            ip2 = -u[n0 - 2, j] if i == n0 - 2 else u[i + 2, j]
            jm2 = -u[i, 1] if j == 1 else u[i, j - 2]
            jp2 = -u[i, n1 - 2] if j == n1 - 2 else u[i, j + 2]
            out[i, j] = s * (_d4(im2, u[i - 1, j], u[i, j], u[i + 1, j], ip2)
                             + _d4(jm2, u[i, j - 1], u[i, j], u[i, j + 1], jp2)) / 12.0


@njit
def _lap4_3d_loop(u, out, s):
    n0, n1, n2 = u.shape
    for i in range(n0):
        for j in range(n1):
            for k in range(n2):
                if (i == 0 or j == 0 or k == 0 or i == n0 - 1 or j == n1 - 1
                        or k == n2 - 1):
                    out[i, j, k] = 0.0
                    continue
                im2 = -u[1, j, k] if i == 1 else u[i - 2, j, k]
                ip2 = -u[n0 - 2, j, k] if i == n0 - 2 else u[i + 2, j, k]
                jm2 = -u[i, 1, k] if j == 1 else u[i, j - 2, k]
                jp2 = -u[i, n1 - 2, k] if j == n1 - 2 else u[i, j + 2, k]
                km2 = -u[i, j, 1] if k == 1 else u[i, j, k - 2]
                kp2 = -u[i, j, n2 - 2] if k == n2 - 2 else u[i, j, k + 2]
                c = u[i, j, k]
                out[i, j, k] = s * (_d4(im2, u[i - 1, j, k], c, u[i + 1, j, k], ip2)
                                    + _d4(jm2, u[i, j - 1, k], c, u[i, j + 1, k], jp2)
                                    + _d4(km2, u[i, j, k - 1], c, u[i, j, k + 1], kp2)) / 12.0


@njit
def _leapfrog_loop(prev, cur, lu, llu, a, b, out):
    p = prev.ravel()
    c = cur.ravel()
    l1 = lu.ravel()
    l2 = llu.ravel()
    o = out.ravel()
    for i in range(o.size):
        o[i] = 2.0 * c[i] - p[i] + a * l1[i] + b * l2[i]


@njit
def _max_abs_loop(u):
    f = u.ravel()
    m = 0.0
    for i in range(f.size):
        v = abs(f[i])
        if v > m:
            m = v
    return m


# ---------------------------------------------------------------------------
# numpy kernels
# ---------------------------------------------------------------------------

def _interior(nd):
    return (slice(1, -1),) * nd


def _shift(nd, axis, k):
    idx = [slice(1, -1)] * nd
    idx[axis] = slice(1 + k, (-1 + k) or None)
    return tuple(idx)


def _lap2_np(u, out, s):
    nd = u.ndim
    out.fill(0.0)
    inner = out[_interior(nd)]
    inner -= 2.0 * nd * u[_interior(nd)]
    for a in range(nd):
        inner += u[_shift(nd, a, 1)] + u[_shift(nd, a, -1)]
    inner *= s


def _flux2_np(u, faces, out, s):
    nd = u.ndim
    out.fill(0.0)
    inner = out[_interior(nd)]
    c = u[_interior(nd)]
    for a, f in enumerate(faces):
        # f[i] sits between nodes i and i+1 along axis a
        hi = [slice(1, -1)] * nd
        lo = [slice(1, -1)] * nd
        hi[a] = slice(1, None)
        lo[a] = slice(0, -1)
        inner += f[tuple(hi)] * (u[_shift(nd, a, 1)] - c) - f[tuple(lo)] * (c - u[_shift(nd, a, -1)])
    inner *= s


def _lap4_np(u, out, s):
    nd = u.ndim
    pad = np.pad(u, 1)
    for a in range(nd):
        # ghost layer by odd reflection about the boundary node
        lo = [slice(None)] * nd
        hi = [slice(None)] * nd
        src_lo = [slice(None)] * nd
        src_hi = [slice(None)] * nd
        lo[a], src_lo[a] = 0, 2
        hi[a], src_hi[a] = -1, -3
        pad[tuple(lo)] = -pad[tuple(src_lo)]
        pad[tuple(hi)] = -pad[tuple(src_hi)]
    out.fill(0.0)
    inner = out[_interior(nd)]
    core = tuple(slice(2, -2) for _ in range(nd))
    for a in range(nd):
        for k, c in zip(range(-2, 3), C4):
            idx = list(core)
            n = pad.shape[a]
            idx[a] = slice(2 + k, n - 2 + k)
            inner += c * pad[tuple(idx)]
    inner *= s / 12.0


# +d^2 at the node next to the boundary from the six nearest nodes, times 12
SHIFTED = np.array([10.0, -15.0, -4.0, 14.0, -6.0, 1.0])


def _lap4s_np(u, out, s):
    nd = u.ndim
    out.fill(0.0)
    inner = out[_interior(nd)]
    for a in range(nd):
        v = np.moveaxis(u, a, 0)[(slice(None),) + (slice(1, -1),) * (nd - 1)]
        o = np.moveaxis(inner, a, 0)
        o[1:-1] += -v[:-4] + 16.0 * v[1:-3] - 30.0 * v[2:-2] + 16.0 * v[3:-1] - v[4:]
        o[0] += sum(c * v[k] for k, c in enumerate(SHIFTED))
        o[-1] += sum(c * v[-1 - k] for k, c in enumerate(SHIFTED))
    inner *= s / 12.0


def _leapfrog_np(prev, cur, lu, llu, a, b, out):
    np.multiply(cur, 2.0, out=out)
    out -= prev
    out += a * lu
    if b:
        out += b * llu


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def laplacian2(u, out, inv_dx2, use_numba=None):
    use_numba = USE_NUMBA if use_numba is None else use_numba
    if use_numba and u.ndim == 2:
        _lap2_2d_loop(u, out, inv_dx2)
    elif use_numba and u.ndim == 3:
        _lap2_3d_loop(u, out, inv_dx2)
    else:
        _lap2_np(u, out, inv_dx2)
    return out


def flux_laplacian2(u, faces, out, inv_dx2, use_numba=None):
    use_numba = USE_NUMBA if use_numba is None else use_numba
    if use_numba and u.ndim == 2:
        _flux2_2d_loop(u, faces[0], faces[1], out, inv_dx2)
    elif use_numba and u.ndim == 3:
        _flux2_3d_loop(u, faces[0], faces[1], faces[2], out, inv_dx2)
    else:
        _flux2_np(u, faces, out, inv_dx2)
    return out


def laplacian4(u, out, inv_dx2, use_numba=None, closure="odd"):
    """Fourth-order Laplacian; ``closure`` is "odd" (reflected ghosts) or "shifted"."""
    use_numba = USE_NUMBA if use_numba is None else use_numba
    if closure == "shifted":
        loops, fallback = {2: _lap4s_2d_loop, 3: _lap4s_3d_loop}, _lap4s_np
    else:
        loops, fallback = {2: _lap4_2d_loop, 3: _lap4_3d_loop}, _lap4_np
    if use_numba and u.ndim in loops:
        loops[u.ndim](u, out, inv_dx2)
    else:
        fallback(u, out, inv_dx2)
    return out


def leapfrog(prev, cur, lu, llu, a, b, out, use_numba=None):
    """out = 2 cur - prev + a*lu + b*llu (llu ignored when b == 0)."""
    use_numba = USE_NUMBA if use_numba is None else use_numba
    if use_numba:
        _leapfrog_loop(prev, cur, lu, lu if llu is None else llu, a, b if llu is not None else 0.0, out)
    else:
        _leapfrog_np(prev, cur, lu, llu, a, b if llu is not None else 0.0, out)
    return out


def max_abs(u, use_numba=None):
    use_numba = USE_NUMBA if use_numba is None else use_numba
    if use_numba:
        return float(_max_abs_loop(u))
    return float(np.abs(u).max())
