"""McMurchie-Davidson kernels: Hermite expansion coefficients and Coulomb R integrals."""

import math
from functools import lru_cache

import numpy as np
from numba import njit

from .boys import boys_array


@njit(cache=True)
def hermite_e(imax, jmax, a, b, xab):
    """1-D Hermite coefficients ``E[i, j, t]`` for ``(x-A)^i (x-B)^j`` Gaussian products.

    ``xab = A - B``; the returned array has shape ``(imax+1, jmax+1, imax+jmax+2)``
    with a trailing zero slot so ``E[i, j, t+1]`` is always addressable.
    """
    p = a + b
    mu = a * b / p
    xpa = -b / p * xab
    xpb = a / p * xab
    tdim = imax + jmax + 2
    e = np.zeros((imax + 1, jmax + 1, tdim))
    e[0, 0, 0] = math.exp(-mu * xab * xab)
    inv2p = 0.5 / p
    for i in range(imax + 1):
        if i > 0:
            for t in range(i + 1):
                v = xpa * e[i - 1, 0, t] + (t + 1) * e[i - 1, 0, t + 1]
                if t > 0:
                    v += inv2p * e[i - 1, 0, t - 1]
                e[i, 0, t] = v
        for j in range(1, jmax + 1):
            for t in range(i + j + 1):
                v = xpb * e[i, j - 1, t] + (t + 1) * e[i, j - 1, t + 1]
                if t > 0:
                    v += inv2p * e[i, j - 1, t - 1]
                e[i, j, t] = v
    return e


@njit(cache=True)
def hermite_r(lmax, alpha, px, py, pz):
    """Hermite Coulomb integrals ``R_{tuv}`` (auxiliary order 0), ``t+u+v <= lmax``.

    Shape ``(lmax+1,)*3``; entries with ``t+u+v > lmax`` are left at zero.
    """
    d = lmax + 1
    fn = boys_array(lmax, alpha * (px * px + py * py + pz * pz))
    old = np.zeros((d, d, d))
    new = np.zeros((d, d, d))
    for n in range(lmax, -1, -1):
        top = lmax - n
        new[:, :, :] = 0.0
        new[0, 0, 0] = (-2.0 * alpha) ** n * fn[n]
        for t in range(top + 1):
            for u in range(top + 1 - t):
                for v in range(top + 1 - t - u):
                    if t == 0 and u == 0 and v == 0:
                        continue
                    if t > 0:
                        val = px * old[t - 1, u, v]
                        if t > 1:
                            val += (t - 1) * old[t - 2, u, v]
                    elif u > 0:
                        val = py * old[t, u - 1, v]
                        if u > 1:
                            val += (u - 1) * old[t, u - 2, v]
                    else:
                        val = pz * old[t, u, v - 1]
                        if v > 1:
                            val += (v - 1) * old[t, u, v - 2]
                    new[t, u, v] = val
        old, new = new, old
    return old


@lru_cache(maxsize=None)
def hermite_tuples(L: int) -> np.ndarray:
    """All ``(t, u, v)`` with ``t+u+v <= L`` as an ``(n, 3)`` int array."""
    return np.array([(t, u, v) for t in range(L + 1) for u in range(L + 1 - t)
                     for v in range(L + 1 - t - u)], dtype=np.int64)


@lru_cache(maxsize=None)
def coulomb_index(lab: int, lcd: int) -> tuple[np.ndarray, np.ndarray]:
    """Flat indices into an ``R`` array of order ``lab+lcd`` and the bra/ket sign vector."""
    d = lab + lcd + 1
    t1 = hermite_tuples(lab)
    t2 = hermite_tuples(lcd)
    s = t1[:, None, :] + t2[None, :, :]
    flat = (s[..., 0] * d + s[..., 1]) * d + s[..., 2]
    sign = np.where(t2.sum(axis=1) % 2, -1.0, 1.0)
    return flat.astype(np.int64), sign
