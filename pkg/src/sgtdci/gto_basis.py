"""Real spherical harmonics and Gaussian-type orbital basis sets.

Basis functions have the form ``N * sum_k c_k r^l exp(-zeta_k r^2) * Y_lm(omega)``
with ``r`` and ``omega`` measured from the shell centre.

Phase convention: real harmonics without the Condon-Shortley factor, i.e.
``r Y_{1,1} ~ x``, ``r Y_{1,-1} ~ y``, ``r Y_{1,0} ~ z`` with positive
prefactors. ``m > 0`` carries ``cos(m phi)``, ``m < 0`` carries ``sin(|m| phi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .hyperbolic_index import SpinPartition

DEFAULT_L_MAX = 7


@lru_cache(maxsize=None)
def cartesian_powers(l: int) -> tuple[tuple[int, int, int], ...]:
    """Monomial exponents ``(a, b, c)`` with ``a+b+c = l``, x-major order."""
    return tuple((a, b, l - a - b) for a in range(l, -1, -1) for b in range(l - a, -1, -1))


@lru_cache(maxsize=None)
def solid_harmonic_coefficients(l: int) -> np.ndarray:
    """Cartesian coefficients of the Racah-normalised real solid harmonics.

    Row ``m + l`` holds ``S_lm`` (``m = -l..l``) as a combination of the
    monomials in :func:`cartesian_powers`; ``S_l0(0, 0, 1) = 1``.
    """
    powers = {p: i for i, p in enumerate(cartesian_powers(l))}
    out = np.zeros((2 * l + 1, len(powers)))
    for m in range(-l, l + 1):
        am = abs(m)
        vm = 0.0 if m >= 0 else 0.5
        norm = math.sqrt(2 * math.factorial(l + am) * math.factorial(l - am)
                         / (2.0 if m == 0 else 1.0)) / (2**am * math.factorial(l))
        for t in range((l - am) // 2 + 1):
            for u in range(t + 1):
                v = vm
                while v <= math.floor(am / 2 - vm) + vm + 1e-9:
                    two_v = int(round(2 * v))
                    coef = ((-1) ** int(round(t + v - vm)) * 0.25**t * math.comb(l, t)
                            * math.comb(l - t, am + t) * math.comb(t, u) * math.comb(am, two_v))
                    a = 2 * t + am - 2 * u - two_v
                    b = 2 * u + two_v
                    c = l - 2 * t - am
                    out[m + l, powers[(a, b, c)]] += norm * coef
                    v += 1.0
    return out


@lru_cache(maxsize=None)
def real_sph_coefficients(l: int) -> np.ndarray:
    """Cartesian coefficients of ``r^l Y_lm`` (unit-normalised on the sphere)."""
    return math.sqrt((2 * l + 1) / (4 * math.pi)) * solid_harmonic_coefficients(l)


def _monomials(l: int, xyz: np.ndarray) -> np.ndarray:
    pw = np.array(cartesian_powers(l))
    return np.prod(xyz[..., None, :] ** pw, axis=-1)


def real_sph_values(l: int, directions: np.ndarray) -> np.ndarray:
    """All ``Y_lm`` (last axis, ``m = -l..l``) at the given direction vectors.

    Directions need not be normalised; zero vectors are not allowed for ``l > 0``.
    """
    d = np.asarray(directions, dtype=float)
    d = d / np.linalg.norm(d, axis=-1, keepdims=True)
    return _monomials(l, d) @ real_sph_coefficients(l).T


def eval_real_sph(l: int, m: int, direction: Sequence[float]) -> float:
    if l < 0 or abs(m) > l:
        raise ValueError(f"invalid (l, m) = ({l}, {m})")
    d = np.asarray(direction, dtype=float)
    if d.shape != (3,) or abs(np.linalg.norm(d) - 1.0) > 1e-12:
        raise ValueError("direction must be a unit 3-vector")
    return float(_monomials(l, d) @ real_sph_coefficients(l)[m + l])


@dataclass(frozen=True)
class RealSphericalHarmonic:
    l: int
    m: int

    def __post_init__(self):
        if self.l < 0 or abs(self.m) > self.l:
            raise ValueError(f"invalid (l, m) = ({self.l}, {self.m})")

    def __call__(self, direction) -> float:
        return eval_real_sph(self.l, self.m, direction)


@dataclass(frozen=True)
class ContractedShell:
    center: tuple[float, float, float]
    l: int
    radial_index: int
    primitives: tuple[tuple[float, float], ...]  # (coefficient, exponent)

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "primitives",
                           tuple((float(c), float(z)) for c, z in self.primitives))
        if len(self.center) != 3:
            raise ValueError("center must be a 3-vector")
        if self.l < 0:
            raise ValueError("l must be non-negative")
        if not self.primitives:
            raise ValueError("a shell needs at least one primitive")
        if any(z <= 0 for _, z in self.primitives):
            raise ValueError("exponents must be strictly positive")

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for c, _ in self.primitives])

    @property
    def exponents(self) -> np.ndarray:
        return np.array([z for _, z in self.primitives])

    @property
    def norm_factor(self) -> float:
        """Factor making every ``(l, m)`` member of the shell unit-normalised."""
        c, z = self.coefficients, self.exponents
        zz = z[:, None] + z[None, :]
        s = np.sum(np.outer(c, c) * math.gamma(self.l + 1.5) / (2 * zz ** (self.l + 1.5)))
        return 1.0 / math.sqrt(s)

    def functions(self) -> list["BasisFunction"]:
        nf = self.norm_factor
        return [BasisFunction(self, m, nf) for m in range(-self.l, self.l + 1)]


@dataclass(frozen=True)
class BasisFunction:
    shell: ContractedShell
    m: int
    norm_factor: float

    def __post_init__(self):
        if abs(self.m) > self.shell.l:
            raise ValueError("|m| must not exceed l")
        if not self.norm_factor > 0:
            raise ValueError("norm_factor must be positive")

    @property
    def l(self) -> int:
        return self.shell.l

    @property
    def center(self) -> np.ndarray:
        return np.array(self.shell.center)


@dataclass(frozen=True)
class Nucleus:
    charge: int
    position: tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(c) for c in self.position))
        if self.charge <= 0:
            raise ValueError("nuclear charge must be positive")


@dataclass
class MolecularSystem:
    nuclei: list[Nucleus]
    shells: list[ContractedShell]
    partition: SpinPartition = field(default_factory=lambda: SpinPartition.all_same_spin(2))
    name: str = ""
    basis: list[BasisFunction] = field(init=False)

    def __post_init__(self):
        if not self.nuclei or sum(n.charge for n in self.nuclei) <= 0:
            raise ValueError("a system needs positive total nuclear charge")
        self.basis = [f for sh in self.shells for f in sh.functions()]

    @property
    def n_basis(self) -> int:
        return len(self.basis)

    @property
    def total_charge(self) -> int:
        return sum(n.charge for n in self.nuclei)

    def shell_offsets(self) -> list[int]:
        offs, k = [], 0
        for sh in self.shells:
            offs.append(k)
            k += 2 * sh.l + 1
        return offs


def eval_basis_function(f: BasisFunction, point) -> float:
    return float(eval_basis_functions([f], np.asarray(point, dtype=float)[None, :])[0, 0])


def eval_basis_functions(functions: Sequence[BasisFunction], points: np.ndarray) -> np.ndarray:
    """Values with shape ``(n_points, n_functions)``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.empty((len(pts), len(functions)))
    for k, f in enumerate(functions):
        sh = f.shell
        d = pts - np.array(sh.center)
        r2 = np.sum(d * d, axis=1)
        radial = np.exp(-r2[:, None] * sh.exponents[None, :]) @ sh.coefficients
        # r^l Y_lm is a homogeneous polynomial, so no division by r is needed
        ang = _monomials(sh.l, d) @ real_sph_coefficients(sh.l)[f.m + sh.l]
        out[:, k] = f.norm_factor * radial * ang
    return out


def even_tempered_shells(center, l_max: int = DEFAULT_L_MAX, base: float = 0.25,
                         ratio: float = 2.0, extra_s: float | None = 0.5) -> list[ContractedShell]:
    """One uncontracted shell per ``l`` with exponent ``base * ratio**l``, plus an extra s."""
    shells = [ContractedShell(center, 0, 1, ((1.0, base),))]
    if extra_s is not None:
        shells.append(ContractedShell(center, 0, 2, ((1.0, extra_s),)))
    for l in range(1, l_max + 1):
        shells.append(ContractedShell(center, l, 1, ((1.0, base * ratio**l),)))
    return shells


def build_helium_basis(l_max: int = DEFAULT_L_MAX) -> MolecularSystem:
    return MolecularSystem([Nucleus(2, (0.0, 0.0, 0.0))],
                           even_tempered_shells((0.0, 0.0, 0.0), l_max), name="He")


def build_h2_basis(bond_length: float = 1.4, l_max: int = DEFAULT_L_MAX) -> MolecularSystem:
    if not bond_length > 0:
        raise ValueError("bond_length must be positive")
    a = (0.0, 0.0, -bond_length / 2)
    b = (0.0, 0.0, bond_length / 2)
    return MolecularSystem([Nucleus(1, a), Nucleus(1, b)],
                           even_tempered_shells(a, l_max) + even_tempered_shells(b, l_max),
                           name="H2")


def build_system(name: str, l_max: int = DEFAULT_L_MAX, bond_length: float = 1.4) -> MolecularSystem:
    key = name.strip().lower()
    if key == "he":
        return build_helium_basis(l_max)
    if key == "h2":
        return build_h2_basis(bond_length, l_max)
    raise ValueError(f"unknown system {name!r} (expected He or H2)")


class ProjectionError(RuntimeError):
    """A target orbital is not representable in the basis to the requested accuracy."""


@dataclass
class ProjectedOrbital:
    coefficients: np.ndarray  # AO coefficients of the least-squares fit
    residual: float  # L2 norm of target minus fit


def project_gaussian(system: MolecularSystem, center, exponent: float = 0.5) -> ProjectedOrbital:
    """Least-squares projection of a unit-normalised s Gaussian onto the basis."""
    from .integrals import overlap_matrix, cross_overlap

    target = ContractedShell(center, 0, 1, ((1.0, exponent),))
    s = overlap_matrix(system)
    b = cross_overlap(system, target.functions())[:, 0]
    x = np.linalg.solve(s, b)
    resid2 = max(1.0 - float(b @ x), 0.0)
    return ProjectedOrbital(x, math.sqrt(resid2))


def initial_orbitals(system: MolecularSystem, shift: float = 0.2, exponent: float = 0.5,
                     threshold: float = 1e-3) -> tuple[np.ndarray, np.ndarray]:
    """AO coefficient vectors of the two initial (spin-up) orbitals.

    He: ``exp(-exponent r^2)`` at the nucleus and a copy displaced by ``shift``
    along z. H2: one such Gaussian on each nucleus.
    """
    if system.name == "He" or len(system.nuclei) == 1:
        c0 = np.array(system.nuclei[0].position)
        centers = [c0, c0 + np.array([0.0, 0.0, shift])]
    else:
        centers = [np.array(n.position) for n in system.nuclei[:2]]
    out = []
    for c in centers:
        proj = project_gaussian(system, c, exponent)
        if proj.residual > threshold:
            raise ProjectionError(
                f"projection residual {proj.residual:.3e} exceeds {threshold:.1e} for the "
                f"Gaussian at {tuple(np.round(c, 6))}")
        out.append(proj.coefficients)
    return out[0], out[1]


def format_basis(system: MolecularSystem) -> str:
    lines = [f"# {system.name or 'basis'}: {len(system.shells)} shells, {system.n_basis} functions",
             "# x y z l (c zeta)..."]
    for sh in system.shells:
        prims = " ".join(f"{c:.12g} {z:.12g}" for c, z in sh.primitives)
        x, y, z = sh.center
        lines.append(f"{x:.12g} {y:.12g} {z:.12g} {sh.l} {prims}")
    return "\n".join(lines) + "\n"


def parse_basis(text: str) -> list[ContractedShell]:
    shells = []
    seen: dict[tuple, int] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if len(tok) < 6 or (len(tok) - 4) % 2:
            raise ValueError(f"line {lineno}: expected 'x y z l' followed by (c, zeta) pairs")
        center = tuple(float(t) for t in tok[:3])
        l = int(tok[3])
        vals = [float(t) for t in tok[4:]]
        prims = tuple(zip(vals[0::2], vals[1::2]))
        key = (center, l)
        seen[key] = seen.get(key, 0) + 1
        shells.append(ContractedShell(center, l, seen[key], prims))
    return shells
