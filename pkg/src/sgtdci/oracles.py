"""Quadrature oracles for the analytic integral engine.

Nothing here touches the Hermite recursions or the Boys function:

* angular parts come from ``scipy.special.sph_harm_y`` fitted onto Cartesian
  monomials by least squares (not from the closed-form solid harmonics);
* Gaussian-polynomial integrals use tensor Gauss-Hermite rules, which are
  exact for the polynomial degrees involved;
* the Coulomb kernel is written as ``1/r = 2/sqrt(pi) int_0^inf exp(-t^2 r^2) dt``
  and the outer ``t`` integral is done by adaptive quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import mpmath
import numpy as np
from scipy import integrate, special

from .gto_basis import BasisFunction


@lru_cache(maxsize=None)
def _monomial_powers(l: int) -> np.ndarray:
    return np.array([(a, b, l - a - b) for a in range(l + 1) for b in range(l + 1 - a)])


def _scipy_real_sph(l: int, m: int, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    y = special.sph_harm_y(l, abs(m), theta, phi)
    if m == 0:
        return y.real
    # strip the Condon-Shortley phase that scipy includes
    sign = (-1) ** m
    return math.sqrt(2) * sign * (y.real if m > 0 else y.imag)


@lru_cache(maxsize=None)
def fitted_solid_harmonic(l: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    """``(powers, coefs)`` with ``r^l Y_lm = sum coefs * x^a y^b z^c`` (least-squares fit)."""
    pw = _monomial_powers(l)
    rng = np.random.default_rng(1234 + 31 * l + m)
    pts = rng.normal(size=(4 * len(pw) + 20, 3))
    r = np.linalg.norm(pts, axis=1)
    theta = np.arccos(pts[:, 2] / r)
    phi = np.arctan2(pts[:, 1], pts[:, 0])
    target = r**l * _scipy_real_sph(l, m, theta, phi)
    design = np.prod(pts[:, None, :] ** pw[None, :, :], axis=2)
    coefs, *_ = np.linalg.lstsq(design, target, rcond=None)
    coefs[np.abs(coefs) < 1e-12 * np.abs(coefs).max()] = 0.0
    keep = coefs != 0
    return pw[keep], coefs[keep]


@dataclass
class GaussianTerm:
    """``coef * (x-A)^a (y-A)^b (z-A)^c exp(-zeta |r-A|^2)``."""

    center: np.ndarray
    zeta: float
    powers: np.ndarray  # (n, 3)
    coefs: np.ndarray  # (n,)


def expand(f: BasisFunction) -> list[GaussianTerm]:
    pw, cf = fitted_solid_harmonic(f.l, f.m)
    return [GaussianTerm(np.array(f.shell.center), z, pw, f.norm_factor * c * cf)
            for c, z in f.shell.primitives]


@lru_cache(maxsize=None)
def _gh(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.hermite.hermgauss(n)


def _pow_table(x: np.ndarray, kmax: int) -> np.ndarray:
    return x[:, None] ** np.arange(kmax + 1)[None, :]


def _gauss_1d(terms: Sequence[tuple[float, float]], kmax: int, extra=None, n=16):
    """Shared 1-D helper: nodes/weights for prod exp(-z (x-A)^2) [* exp(-s (x-C)^2)]."""
    zs = [z for z, _ in terms]
    cs = [c for _, c in terms]
    if extra is not None:
        zs.append(extra[0])
        cs.append(extra[1])
    p = sum(zs)
    P = sum(z * c for z, c in zip(zs, cs)) / p
    const = sum(z * c * c for z, c in zip(zs, cs)) - p * P * P
    y, w = _gh(n)
    x = P + y / math.sqrt(p)
    return x, w * math.exp(-const) / math.sqrt(p)


def overlap_oracle(fa: BasisFunction, fb: BasisFunction) -> float:
    total = 0.0
    for ta in expand(fa):
        for tb in expand(fb):
            per_dim = []
            for k in range(3):
                x, w = _gauss_1d([(ta.zeta, ta.center[k]), (tb.zeta, tb.center[k])], 0)
                pa = _pow_table(x - ta.center[k], fa.l)
                pb = _pow_table(x - tb.center[k], fb.l)
                per_dim.append(np.einsum("n,ni,nj->ij", w, pa, pb))
            ix, iy, iz = per_dim
            val = (ix[ta.powers[:, None, 0], tb.powers[None, :, 0]]
                   * iy[ta.powers[:, None, 1], tb.powers[None, :, 1]]
                   * iz[ta.powers[:, None, 2], tb.powers[None, :, 2]])
            total += float(ta.coefs @ val @ tb.coefs)
    return total


def _deriv_table(x: np.ndarray, shift: float, zeta: float, kmax: int) -> np.ndarray:
    """d/dx of (x-A)^k exp(-zeta (x-A)^2), divided by the Gaussian, for k = 0..kmax."""
    d = x - shift
    k = np.arange(kmax + 1)
    lower = np.where(k > 0, k * d[:, None] ** np.maximum(k - 1, 0), 0.0)
    return lower - 2 * zeta * d[:, None] ** (k + 1)


def kinetic_oracle(fa: BasisFunction, fb: BasisFunction) -> float:
    """``1/2 <grad a, grad b>``."""
    total = 0.0
    for ta in expand(fa):
        for tb in expand(fb):
            s, d = [], []
            for k in range(3):
                x, w = _gauss_1d([(ta.zeta, ta.center[k]), (tb.zeta, tb.center[k])], 0)
                pa = _pow_table(x - ta.center[k], fa.l)
                pb = _pow_table(x - tb.center[k], fb.l)
                da = _deriv_table(x, ta.center[k], ta.zeta, fa.l)
                db = _deriv_table(x, tb.center[k], tb.zeta, fb.l)
                s.append(np.einsum("n,ni,nj->ij", w, pa, pb))
                d.append(np.einsum("n,ni,nj->ij", w, da, db))

            def g(tab, k):
                return tab[ta.powers[:, None, k], tb.powers[None, :, k]]

            val = (g(d[0], 0) * g(s[1], 1) * g(s[2], 2) + g(s[0], 0) * g(d[1], 1) * g(s[2], 2)
                   + g(s[0], 0) * g(s[1], 1) * g(d[2], 2))
            total += 0.5 * float(ta.coefs @ val @ tb.coefs)
    return total


def nuclear_oracle(fa: BasisFunction, fb: BasisFunction, nuclei) -> float:
    total = 0.0
    for nuc in nuclei:
        c = np.asarray(nuc.position, dtype=float)
        for ta in expand(fa):
            for tb in expand(fb):
                def integrand(t, ta=ta, tb=tb):
                    tabs = []
                    for k in range(3):
                        x, w = _gauss_1d([(ta.zeta, ta.center[k]), (tb.zeta, tb.center[k])], 0,
                                         extra=(t * t, c[k]))
                        pa = _pow_table(x - ta.center[k], fa.l)
                        pb = _pow_table(x - tb.center[k], fb.l)
                        tabs.append(np.einsum("n,ni,nj->ij", w, pa, pb))
                    val = (tabs[0][ta.powers[:, None, 0], tb.powers[None, :, 0]]
                           * tabs[1][ta.powers[:, None, 1], tb.powers[None, :, 1]]
                           * tabs[2][ta.powers[:, None, 2], tb.powers[None, :, 2]])
                    return float(ta.coefs @ val @ tb.coefs)

                val, _ = integrate.quad(integrand, 0, np.inf, epsabs=0, epsrel=1e-12, limit=400)
                total -= nuc.charge * 2 / math.sqrt(math.pi) * val
    return total


def _pair_gauss_2d(ta, tb, tc, td, k, t, n=14):
    """Nodes and weights in (x1, x2) for the 1-D factor of the Coulomb-transformed ERI."""
    p = ta.zeta + tb.zeta
    q = tc.zeta + td.zeta
    P = (ta.zeta * ta.center[k] + tb.zeta * tb.center[k]) / p
    Q = (tc.zeta * tc.center[k] + td.zeta * td.center[k]) / q
    pre = (ta.zeta * tb.zeta / p * (ta.center[k] - tb.center[k]) ** 2
           + tc.zeta * td.zeta / q * (tc.center[k] - td.center[k]) ** 2)
    t2 = t * t
    M = np.array([[p + t2, -t2], [-t2, q + t2]])
    rhs = np.array([p * P, q * Q])
    mid = np.linalg.solve(M, rhs)
    const = p * P * P + q * Q * Q - rhs @ mid + pre
    L = np.linalg.cholesky(M)
    y, w = _gh(n)
    yy = np.stack(np.meshgrid(y, y, indexing="ij"), -1).reshape(-1, 2)
    ww = np.outer(w, w).ravel()
    x = mid[None, :] + np.linalg.solve(L.T, yy.T).T
    return x, ww * math.exp(-const) / np.prod(np.diag(L))


def eri_oracle(fa: BasisFunction, fb: BasisFunction, fc: BasisFunction, fd: BasisFunction,
               epsrel: float = 1e-11) -> float:
    total = 0.0
    for ta in expand(fa):
        for tb in expand(fb):
            for tc in expand(fc):
                for td in expand(fd):
                    def integrand(t, ta=ta, tb=tb, tc=tc, td=td):
                        tabs = []
                        for k in range(3):
                            x, w = _pair_gauss_2d(ta, tb, tc, td, k, t)
                            pa = _pow_table(x[:, 0] - ta.center[k], fa.l)
                            pb = _pow_table(x[:, 0] - tb.center[k], fb.l)
                            pc = _pow_table(x[:, 1] - tc.center[k], fc.l)
                            pd = _pow_table(x[:, 1] - td.center[k], fd.l)
                            tabs.append(np.einsum("n,ni,nj,nk,nl->ijkl", w, pa, pb, pc, pd,
                                                  optimize=True))
                        idx = [np.ix_(ta.powers[:, k], tb.powers[:, k], tc.powers[:, k],
                                      td.powers[:, k]) for k in range(3)]
                        val = tabs[0][idx[0]] * tabs[1][idx[1]] * tabs[2][idx[2]]
                        return float(np.einsum("ijkl,i,j,k,l->", val, ta.coefs, tb.coefs,
                                               tc.coefs, td.coefs))

                    val, _ = integrate.quad(integrand, 0, np.inf, epsabs=0, epsrel=epsrel,
                                            limit=400)
                    total += 2 / math.sqrt(math.pi) * val
    return total


def boys_oracle(order: int, x: float, dps: int = 30) -> float:
    """Defining integral evaluated with arbitrary-precision adaptive quadrature."""
    with mpmath.workdps(dps):
        val = mpmath.quad(lambda t: t ** (2 * order) * mpmath.exp(-x * t * t), [0, 0.5, 1])
    return float(val)
