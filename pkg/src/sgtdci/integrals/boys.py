"""Boys function ``F_n(x) = int_0^1 t^(2n) exp(-x t^2) dt``.

The top order is summed from the positive series

    F_n(x) = exp(-x) * sum_k (2x)^k / ((2n+1)(2n+3)...(2n+2k+1))

and lower orders follow by the stable downward recursion
``F_n = (2x F_{n+1} + exp(-x)) / (2n+1)``. Beyond ``x > 50 + 3*n_max`` the
``exp(-x)`` terms are below double precision and the asymptotic form
``F_n = (2n-1)!! / 2^(n+1) * sqrt(pi / x^(2n+1))`` is exact to rounding.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def boys_array(nmax, x):
    """``F_0(x) .. F_nmax(x)`` as a float array; ``x >= 0`` is not checked here."""
    out = np.empty(nmax + 1)
    if x > 50.0 + 3.0 * nmax:
        out[0] = 0.5 * math.sqrt(math.pi / x)
        for n in range(nmax):
            out[n + 1] = out[n] * (2 * n + 1) / (2.0 * x)
        return out
    term = 1.0 / (2 * nmax + 1)
    total = term
    k = 1
    while True:
        term *= 2.0 * x / (2 * nmax + 2 * k + 1)
        total += term
        if term < 1e-17 * total:
            break
        k += 1
    ex = math.exp(-x)
    out[nmax] = ex * total
    for n in range(nmax - 1, -1, -1):
        out[n] = (2.0 * x * out[n + 1] + ex) / (2 * n + 1)
    return out


def boys(order: int, x: float) -> float:
    if order < 0 or int(order) != order:
        raise ValueError("Boys order must be a non-negative integer")
    if not x >= 0:
        raise ValueError(f"Boys argument must be non-negative, got {x}")
    return float(boys_array(int(order), float(x))[order])
