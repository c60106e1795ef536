"""Compiled inner loops.

The coordinate solver spends almost all of its time in :func:`ardca_block`,
which performs a run of iterations for a pre-drawn list of coordinates.
Everything here works on the raw arrays of a :class:`~ardca.dual.DualModel`.
"""

import math

import numpy as np
from numba import njit

# keep in sync with ardca.prox
_ZERO, _NONNEG, _SQUARED, _ABSOLUTE, _HINGE = 0, 1, 2, 3, 4
_L1_PLUS_L2 = 1


@njit(cache=True)
def _bounds(code, param):
    if code == _NONNEG:
        return 0.0, np.inf
    if code == _ABSOLUTE:
        return -1.0, 1.0
    if code == _HINGE:
        if param > 0:
            return -1.0, 0.0
        return 0.0, 1.0
    return -np.inf, np.inf


@njit(cache=True)
def coord_update(code, param, scale, z, g, tau):
    """Minimize ``g (u - z) + (u - z)^2 / (2 tau) + h(u)`` over ``u``.

    ``tau = inf`` (a coordinate of zero weight) turns this into minimizing
    the linear model over the domain of ``h``, which the caller only allows
    for bounded terms or pinned multipliers.
    """
    lo, hi = _bounds(code, param)
    if code == _ZERO or code == _NONNEG:
        slope = g
    else:
        slope = g + scale * param
    if math.isinf(tau):
        if slope > 0:
            return lo
        if slope < 0:
            return hi
        return z
    if code == _SQUARED:
        ts = tau * scale
        return (z - tau * g - ts * param) / (1.0 + ts)
    v = z - tau * slope
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


@njit(cache=True, nogil=True)
def ardca_block(ST, p_vec, codes, params, scales, L, reg_code, mu, sigma,
                z, uh, sz, su, x, sum_x, acc, theta, accelerated, step_mult, idx):
    """Run one iteration per entry of ``idx``.

    Arrays ``z, uh, sz, su, x, sum_x, acc`` are updated in place; ``acc``
    holds ``[sum of 1/theta, theta used by the last iteration]``.  Returns
    the next theta and the position in ``idx`` of a non-finite iteration
    (-1 when the block completed).
    """
    n_hat, t = ST.shape
    for r in range(idx.shape[0]):
        i = idx[r]
        th2 = theta * theta
        inv = 1.0 / theta
        g = -p_vec[i]
        for j in range(t):
            w = -(th2 * su[j] + sz[j])
            if reg_code == _L1_PLUS_L2:
                if w > sigma:
                    w -= sigma
                elif w < -sigma:
                    w += sigma
                else:
                    w = 0.0
            xj = w / mu
            x[j] = xj
            sum_x[j] += xj * inv
            g -= ST[i, j] * xj
        acc[0] += inv
        acc[1] = theta
        Li = L[i]
        if Li > 0:
            tau = 1.0 / (step_mult * n_hat * theta * Li)
        else:
            tau = np.inf
        zi = z[i]
        znew = coord_update(codes[i], params[i], scales[i], zi, g, tau)
        if not (math.isfinite(g) and math.isfinite(znew)):
            return theta, r
        dz = znew - zi
        if dz != 0.0:
            z[i] = znew
            if accelerated:
                du = -(1.0 - n_hat * theta) / th2 * dz
            else:
                du = 0.0
            uh[i] += du
            for j in range(t):
                sz[j] += ST[i, j] * dz
            if du != 0.0:
                for j in range(t):
                    su[j] += ST[i, j] * du
        if accelerated:
            theta = (math.sqrt(th2 * th2 + 4.0 * th2) - th2) / 2.0
    return theta, -1
