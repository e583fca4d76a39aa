"""One- and two-electron integrals over real solid-harmonic GTO shells.

Products of Cartesian Gaussians are expanded in Hermite Gaussians
(McMurchie-Davidson); the spherical transformation is applied to the
Hermite coefficients of each shell pair, so every shell quartet reduces to
``H_ab @ R @ H_cd.T`` with ``R`` the Hermite Coulomb matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..gto_basis import (BasisFunction, ContractedShell, MolecularSystem, Nucleus,
                         cartesian_powers, real_sph_coefficients)
from .hermite import coulomb_index, hermite_e, hermite_r, hermite_tuples

MAX_L = 7


class UnsupportedAngularMomentum(ValueError):
    pass


def _check_l(l: int) -> None:
    if l > MAX_L:
        raise UnsupportedAngularMomentum(f"l = {l} exceeds the supported maximum {MAX_L}")


@dataclass
class _PrimPair:
    p: float
    center: np.ndarray
    coef: float
    herm: np.ndarray  # (na*nb, n_tuples(la+lb)) spherical Hermite coefficients


@dataclass
class ShellPair:
    a: ContractedShell
    b: ContractedShell
    prims: list[_PrimPair]

    @property
    def L(self) -> int:
        return self.a.l + self.b.l


def _cart_index(l: int) -> np.ndarray:
    return np.array(cartesian_powers(l), dtype=np.int64)


def _e_tables(la, lb, a, b, A, B, extra=0):
    return [hermite_e(la, lb + extra, a, b, A[k] - B[k]) for k in range(3)]


def shell_pair(sa: ContractedShell, sb: ContractedShell) -> ShellPair:
    _check_l(sa.l)
    _check_l(sb.l)
    A, B = np.array(sa.center), np.array(sb.center)
    la, lb = sa.l, sb.l
    ca, cb = _cart_index(la), _cart_index(lb)
    tup = hermite_tuples(la + lb)
    ya, yb = real_sph_coefficients(la), real_sph_coefficients(lb)
    nf = sa.norm_factor * sb.norm_factor
    prims = []
    for c1, z1 in sa.primitives:
        for c2, z2 in sb.primitives:
            ex, ey, ez = _e_tables(la, lb, z1, z2, A, B)
            e3 = (ex[ca[:, None, None, 0], cb[None, :, None, 0], tup[None, None, :, 0]]
                  * ey[ca[:, None, None, 1], cb[None, :, None, 1], tup[None, None, :, 1]]
                  * ez[ca[:, None, None, 2], cb[None, :, None, 2], tup[None, None, :, 2]])
            herm = np.einsum("ia,jb,abh->ijh", ya, yb, e3).reshape(len(ya) * len(yb), len(tup))
            p = z1 + z2
            prims.append(_PrimPair(p, (z1 * A + z2 * B) / p, c1 * c2 * nf, herm))
    return ShellPair(sa, sb, prims)


def overlap_block(sa: ContractedShell, sb: ContractedShell) -> np.ndarray:
    pair = shell_pair(sa, sb)
    out = sum(pp.coef * (math.pi / pp.p) ** 1.5 * pp.herm[:, 0] for pp in pair.prims)
    return np.asarray(out).reshape(2 * sa.l + 1, 2 * sb.l + 1)


def kinetic_block(sa: ContractedShell, sb: ContractedShell) -> np.ndarray:
    _check_l(sa.l)
    _check_l(sb.l)
    A, B = np.array(sa.center), np.array(sb.center)
    la, lb = sa.l, sb.l
    ca, cb = _cart_index(la), _cart_index(lb)
    out = np.zeros((len(ca), len(cb)))
    for c1, z1 in sa.primitives:
        for c2, z2 in sb.primitives:
            p = z1 + z2
            s1 = [e[:, :, 0] * math.sqrt(math.pi / p) for e in _e_tables(la, lb, z1, z2, A, B, 2)]
            d1 = []
            for s in s1:
                j = np.arange(lb + 1)
                d = -2 * z2 * (2 * j + 1) * s[:, : lb + 1] + 4 * z2**2 * s[:, 2: lb + 3]
                d[:, 2:] += (j[2:] * (j[2:] - 1)) * s[:, : max(lb - 1, 0)]
                d1.append(d)
            sx, sy, sz = (s1[k][ca[:, None, k], cb[None, :, k]] for k in range(3))
            dx, dy, dz = (d1[k][ca[:, None, k], cb[None, :, k]] for k in range(3))
            out += c1 * c2 * -0.5 * (dx * sy * sz + sx * dy * sz + sx * sy * dz)
    nf = sa.norm_factor * sb.norm_factor
    return nf * real_sph_coefficients(la) @ out @ real_sph_coefficients(lb).T


def nuclear_block(sa: ContractedShell, sb: ContractedShell, nuclei: Sequence[Nucleus]) -> np.ndarray:
    pair = shell_pair(sa, sb)
    L = pair.L
    tup = hermite_tuples(L)
    out = np.zeros((2 * sa.l + 1) * (2 * sb.l + 1))
    for pp in pair.prims:
        for nuc in nuclei:
            pc = pp.center - np.array(nuc.position)
            r = hermite_r(L, pp.p, pc[0], pc[1], pc[2])
            rv = r[tup[:, 0], tup[:, 1], tup[:, 2]]
            out -= nuc.charge * pp.coef * (2 * math.pi / pp.p) * (pp.herm @ rv)
    return out.reshape(2 * sa.l + 1, 2 * sb.l + 1)


def eri_block(ab: ShellPair, cd: ShellPair) -> np.ndarray:
    """``(ab|cd)`` with shape ``(na*nb, nc*nd)`` (bra pair rows, ket pair columns)."""
    lab, lcd = ab.L, cd.L
    flat, sign = coulomb_index(lab, lcd)
    out = np.zeros((ab.prims[0].herm.shape[0], cd.prims[0].herm.shape[0]))
    for pp in ab.prims:
        for qq in cd.prims:
            p, q = pp.p, qq.p
            alpha = p * q / (p + q)
            pq = pp.center - qq.center
            r = hermite_r(lab + lcd, alpha, pq[0], pq[1], pq[2]).ravel()
            rmat = r[flat]
            pref = 2 * math.pi**2.5 / (p * q * math.sqrt(p + q)) * pp.coef * qq.coef
            out += pref * (pp.herm @ rmat) @ (qq.herm * sign).T
    return out


# --- matrices over a whole basis -------------------------------------------------

def _shell_matrix(shells, block_fn) -> np.ndarray:
    offs = np.cumsum([0] + [2 * s.l + 1 for s in shells])
    n = offs[-1]
    out = np.zeros((n, n))
    for i, si in enumerate(shells):
        for j in range(i + 1):
            blk = block_fn(si, shells[j])
            out[offs[i]:offs[i + 1], offs[j]:offs[j + 1]] = blk
            out[offs[j]:offs[j + 1], offs[i]:offs[i + 1]] = blk.T
    # diagonal shell blocks are symmetric only to rounding
    return 0.5 * (out + out.T)


def overlap_matrix(system: MolecularSystem) -> np.ndarray:
    return _shell_matrix(system.shells, overlap_block)


def kinetic_matrix(system: MolecularSystem) -> np.ndarray:
    return _shell_matrix(system.shells, kinetic_block)


def nuclear_matrix(system: MolecularSystem) -> np.ndarray:
    return _shell_matrix(system.shells, lambda a, b: nuclear_block(a, b, system.nuclei))


def cross_overlap(system: MolecularSystem, functions: Sequence[BasisFunction]) -> np.ndarray:
    """``<chi_i | f_k>`` between the system basis and arbitrary functions."""
    cols = []
    for f in functions:
        col = np.concatenate([overlap_block(sh, f.shell)[:, f.m + f.l] for sh in system.shells])
        cols.append(col * f.norm_factor / f.shell.norm_factor)
    return np.column_stack(cols)


@dataclass
class OneElectronMatrices:
    overlap: np.ndarray
    kinetic: np.ndarray
    nuclear: np.ndarray

    @property
    def core(self) -> np.ndarray:
        return self.kinetic + self.nuclear


def one_electron_matrices(system: MolecularSystem) -> OneElectronMatrices:
    return OneElectronMatrices(overlap_matrix(system), kinetic_matrix(system),
                               nuclear_matrix(system))


def pair_index(n: int) -> np.ndarray:
    """Symmetric ``n x n`` map from ``(i, j)`` to the packed index of ``{i, j}``."""
    iu = np.triu_indices(n)
    idx = np.empty((n, n), dtype=np.int64)
    idx[iu] = np.arange(len(iu[0]))
    idx[iu[1], iu[0]] = idx[iu]
    return idx


class ERITensor:
    """Two-electron integrals ``(ij|kl)`` stored as a symmetric packed-pair matrix.

    ``values[P(i,j), P(k,l)]`` with ``P`` the unordered-pair index, so the
    eight-fold permutation symmetry holds exactly by construction.
    """

    def __init__(self, values: np.ndarray, n: int):
        self.values = values
        self.n = n
        self.index = pair_index(n)

    def __getitem__(self, key) -> float:
        i, j, k, l = key
        return float(self.values[self.index[i, j], self.index[k, l]])

    def full(self) -> np.ndarray:
        """Unpacked ``(n, n, n, n)`` array; only sensible for small ``n``."""
        idx = self.index
        return self.values[idx[:, :, None, None], idx[None, None, :, :]]

    def transform(self, c: np.ndarray, chunk: int = 512) -> "ERITensor":
        """MO integrals for orbital coefficients ``c`` (``n_ao x n_mo``), two half-steps."""
        nmo = c.shape[1]
        iu = np.triu_indices(nmo)
        half = np.empty((self.values.shape[0], len(iu[0])))
        for start in range(0, half.shape[0], chunk):
            block = self.values[start:start + chunk][:, self.index]
            half[start:start + chunk] = np.einsum("ka,xkl,lb->xab", c, block, c,
                                                  optimize=True)[:, iu[0], iu[1]]
        half = np.ascontiguousarray(half.T)
        out = np.empty((len(iu[0]), len(iu[0])))
        for start in range(0, out.shape[0], chunk):
            block = half[start:start + chunk][:, self.index]
            out[start:start + chunk] = np.einsum("ka,xkl,lb->xab", c, block, c,
                                                 optimize=True)[:, iu[0], iu[1]]
        return ERITensor(0.5 * (out + out.T), nmo)


def eri_tensor(system: MolecularSystem) -> ERITensor:
    shells = system.shells
    n = system.n_basis
    offs = np.cumsum([0] + [2 * s.l + 1 for s in shells])
    pidx = pair_index(n)
    npair = n * (n + 1) // 2
    values = np.zeros((npair, npair))
    pairs = []
    for i in range(len(shells)):
        for j in range(i + 1):
            rows = pidx[offs[i]:offs[i + 1], offs[j]:offs[j + 1]].ravel()
            pairs.append((shell_pair(shells[i], shells[j]), rows))
    for x, (ab, rab) in enumerate(pairs):
        for cd, rcd in pairs[: x + 1]:
            blk = eri_block(ab, cd)
            values[np.ix_(rab, rcd)] = blk
            values[np.ix_(rcd, rab)] = blk.T
    return ERITensor(0.5 * (values + values.T), n)


# --- single-function entry points ---------------------------------------------------

def _pick(block: np.ndarray, a: BasisFunction, b: BasisFunction) -> float:
    scale = a.norm_factor * b.norm_factor / (a.shell.norm_factor * b.shell.norm_factor)
    return float(block[a.m + a.l, b.m + b.l] * scale)


def overlap(a: BasisFunction, b: BasisFunction) -> float:
    return _pick(overlap_block(a.shell, b.shell), a, b)


def kinetic(a: BasisFunction, b: BasisFunction) -> float:
    return _pick(kinetic_block(a.shell, b.shell), a, b)


def nuclear(a: BasisFunction, b: BasisFunction, nuclei: Sequence[Nucleus]) -> float:
    return _pick(nuclear_block(a.shell, b.shell, nuclei), a, b)


def _order_key(f: BasisFunction):
    sh = f.shell
    return (tuple(sh.center), sh.l, sh.primitives, f.m, f.norm_factor)


def eri(a: BasisFunction, b: BasisFunction, c: BasisFunction, d: BasisFunction) -> float:
    # canonical ordering so that all eight permutations share one evaluation path
    if _order_key(a) > _order_key(b):
        a, b = b, a
    if _order_key(c) > _order_key(d):
        c, d = d, c
    if (_order_key(a), _order_key(b)) > (_order_key(c), _order_key(d)):
        a, b, c, d = c, d, a, b
    blk = eri_block(shell_pair(a.shell, b.shell), shell_pair(c.shell, d.shell))
    row = (a.m + a.l) * (2 * b.l + 1) + b.m + b.l
    col = (c.m + c.l) * (2 * d.l + 1) + d.m + d.l
    scale = 1.0
    for f in (a, b, c, d):
        scale *= f.norm_factor / f.shell.norm_factor
    return float(blk[row, col] * scale)


def h1_gram(a: BasisFunction, b: BasisFunction) -> float:
    """``<a, b> + <grad a, grad b>``."""
    return overlap(a, b) + 2.0 * kinetic(a, b)


def radial_moment(shell: ContractedShell, power: int, deriv: bool = False) -> float:
    """``int_0^inf g(r)^2 r^power dr`` for the normalised radial factor ``g``.

    With ``deriv=True`` the integrand uses ``g'(r)^2`` instead.
    """
    l = shell.l
    total = 0.0
    for ci, zi in shell.primitives:
        for cj, zj in shell.primitives:
            a = zi + zj

            def m(k):
                # int_0^inf r^k exp(-a r^2) dr
                return math.gamma((k + 1) / 2) / (2 * a ** ((k + 1) / 2))

            if not deriv:
                total += ci * cj * m(2 * l + power)
            else:
                # g_i' = (l r^(l-1) - 2 z_i r^(l+1)) e^{-z_i r^2}
                terms = l * l * m(2 * l - 2 + power) if l > 0 else 0.0
                terms += -2 * l * (zi + zj) * m(2 * l + power)
                terms += 4 * zi * zj * m(2 * l + 2 + power)
                total += ci * cj * terms
    return shell.norm_factor**2 * total


def hardy_ratio(f: BasisFunction) -> tuple[float, float]:
    """``(||grad f||, || f / |r - a| ||)`` for a function centred at ``a``.

    Both reduce to radial Gaussian moments:
    ``||grad f||^2 = int (g'^2 + l(l+1) g^2 / r^2) r^2 dr`` and
    ``||f/r||^2 = int g^2 dr``.
    """
    sh, l = f.shell, f.l
    grad2 = radial_moment(sh, 2, deriv=True) + l * (l + 1) * radial_moment(sh, 0)
    weighted2 = radial_moment(sh, 0)
    if not math.isfinite(weighted2):
        raise ArithmeticError("divergent weighted norm")
    return math.sqrt(grad2), math.sqrt(weighted2)
