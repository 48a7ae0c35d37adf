"""Hot loops with a numba path and a pure-numpy path.

Both paths are always importable (``*_jit`` / ``*_numpy``); the unsuffixed
names dispatch on :data:`mflab._accel.USE_NUMBA`.
"""
import numpy as np

from ._accel import USE_NUMBA, njit

# rescale the radial state once |u| + |u'| passes this
_BIG = 1e100


# ---------------------------------------------------------------------------
# fixed-step RK4 for u'' = q(r) u with q piecewise constant on shells
# ---------------------------------------------------------------------------

@njit
def rk4_shells_jit(edges, q, nsteps, u0, up0):
    total = 1
    for s in range(q.shape[0]):
        total += nsteps[s]
    r = np.empty(total)
    u = np.empty(total)
    up = np.empty(total)
    ls = np.empty(total)
    r[0] = edges[0]
    u[0] = u0
    up[0] = up0
    ls[0] = 0.0
    cu = u0
    cv = up0
    lscale = 0.0
    i = 0
    for s in range(q.shape[0]):
        a = edges[s]
        n = nsteps[s]
        h = (edges[s + 1] - a) / n
        qs = q[s]
        mag = abs(cu) + abs(cv)
        if mag > _BIG:
            cu /= mag
            cv /= mag
            lscale += np.log(mag)
        for m in range(n):
            k1u = cv
            k1v = qs * cu
            k2u = cv + 0.5 * h * k1v
            k2v = qs * (cu + 0.5 * h * k1u)
            k3u = cv + 0.5 * h * k2v
            k3v = qs * (cu + 0.5 * h * k2u)
            k4u = cv + h * k3v
            k4v = qs * (cu + h * k3u)
            cu = cu + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
            cv = cv + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
            i += 1
            r[i] = a + (m + 1) * h
            u[i] = cu
            up[i] = cv
            ls[i] = lscale
    return r, u, up, ls


def _rk4_matrix(qs, h):
    """One RK4 step for (u, u') as a 2x2 matrix (the ODE is linear)."""
    out = np.empty((2, 2))
    for col, (cu, cv) in enumerate(((1.0, 0.0), (0.0, 1.0))):
        k1u = cv
        k1v = qs * cu
        k2u = cv + 0.5 * h * k1v
        k2v = qs * (cu + 0.5 * h * k1u)
        k3u = cv + 0.5 * h * k2v
        k3v = qs * (cu + 0.5 * h * k2u)
        k4u = cv + h * k3v
        k4v = qs * (cu + h * k3u)
        out[0, col] = cu + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        out[1, col] = cv + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return out


def rk4_shells_numpy(edges, q, nsteps, u0, up0):
    edges = np.asarray(edges, dtype=float)
    q = np.asarray(q, dtype=float)
    nsteps = np.asarray(nsteps, dtype=np.int64)
    rs, us, ups, lss = [np.array([edges[0]])], [np.array([u0], float)], [np.array([up0], float)], [np.zeros(1)]
    state = np.array([u0, up0], dtype=float)
    lscale = 0.0
    for s in range(q.shape[0]):
        a, n = edges[s], int(nsteps[s])
        h = (edges[s + 1] - a) / n
        mag = abs(state[0]) + abs(state[1])
        if mag > _BIG:
            state = state / mag
            lscale += np.log(mag)
        step = _rk4_matrix(q[s], h)
        # prefix doubling: states[k] = step^k @ state for k = 0..n
        states = state[None, :]
        power = step
        while states.shape[0] < n + 1:
            states = np.vstack([states, states @ power.T])
            power = power @ power
        states = states[1:n + 1]
        rs.append(a + np.arange(1, n + 1) * h)
        us.append(states[:, 0])
        ups.append(states[:, 1])
        lss.append(np.full(n, lscale))
        state = states[-1].copy()
    return np.concatenate(rs), np.concatenate(us), np.concatenate(ups), np.concatenate(lss)


rk4_shells = rk4_shells_jit if USE_NUMBA else rk4_shells_numpy


# ---------------------------------------------------------------------------
# descending weight recursion m^j(k) = m^{j+1}(k) + m^j(k+2)
# ---------------------------------------------------------------------------
# Arrays are indexed by k + 1 for k = -1 .. N + 2 (length N + 4).  The caller
# fills the seed row (j = 5); these kernels fill the rest.  For even N the
# k = -1 slot lies on the averaged sublattice and stays NaN.

@njit
def weight_recursion_jit(seed, N):
    out = np.full((6, N + 4), np.nan)
    out[5, :] = seed
    top = N + 1  # array index of k = N
    for j in range(4, -1, -1):
        out[j, top] = (N + 2.0) ** (-j)
        out[j, top + 2] = out[j, top] - out[j + 1, top]
        i = top - 2
        while i >= 0:
            out[j, i] = out[j + 1, i] + out[j, i + 2]
            i -= 2
        i = top + 1
        while i >= 1:
            out[j, i] = 0.5 * (out[j, i - 1] + out[j, i + 1])
            i -= 2
    return out


def weight_recursion_numpy(seed, N):
    out = np.full((6, N + 4), np.nan)
    out[5] = seed
    top = N + 1
    for j in range(4, -1, -1):
        row = out[j]
        row[top] = (N + 2.0) ** (-j)
        row[top + 2] = row[top] - out[j + 1, top]
        idx = np.arange(top - 2, -1, -2)
        # reverse cumulative sum down the same-parity sublattice
        row[idx] = row[top] + np.cumsum(out[j + 1, idx])
        odd = np.arange(top + 1, 0, -2)
        row[odd] = 0.5 * (row[odd - 1] + row[odd + 1])
    return out


weight_recursion = weight_recursion_jit if USE_NUMBA else weight_recursion_numpy
