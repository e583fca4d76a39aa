"""Two-particle 1-D Fourier-box model where the truncated dynamics can be checked exactly.

Particles live on a periodic interval of length ``length`` sampled at ``n``
points. Grid Fourier modes ``xi_k = k / length`` are grouped into cells of
``modes_per_cell`` consecutive modes, i.e. boxes of width ``1/L`` with
``L = length / modes_per_cell``. A hyperbolic-cross spec selects cell pairs
``(l1, l2)``, and the projector keeps exactly the modes in those cells.

Coefficients use ``numpy.fft`` with ``norm="ortho"`` and the grid origin at
index 0 (``x_i = i*h`` wrapped into ``[-length/2, length/2)``), so even
potentials give a real symmetric Hamiltonian in the Fourier basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hyperbolic_index import HyperbolicCrossSpec, SpinPartition, TruncationMode, enumerate_cells


class ResolutionError(ValueError):
    pass


@dataclass(frozen=True)
class FourierBoxBasis1D:
    n: int = 64
    length: float = 8.0
    modes_per_cell: int = 2

    def __post_init__(self):
        if self.n < 2 or self.n & (self.n - 1):
            raise ValueError("grid size must be a power of two")
        if self.modes_per_cell < 1 or self.n % self.modes_per_cell:
            raise ValueError("modes_per_cell must divide the grid size")
        if not self.length > 0:
            raise ValueError("length must be positive")

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def box_width_inv(self) -> float:
        """``L``: cells have width ``1/L`` in frequency."""
        return self.length / self.modes_per_cell

    @property
    def grid(self) -> np.ndarray:
        i = np.arange(self.n)
        return self.spacing * np.where(i < self.n // 2, i, i - self.n)

    @property
    def k(self) -> np.ndarray:
        return np.fft.fftfreq(self.n, d=1.0 / self.n).astype(int)

    @property
    def xi(self) -> np.ndarray:
        return self.k / self.length

    @property
    def cell_of_mode(self) -> np.ndarray:
        return np.floor_divide(self.k, self.modes_per_cell)

    @property
    def l_window(self) -> tuple[int, int]:
        c = self.cell_of_mode
        return int(c.min()), int(c.max())

    @property
    def j_range(self) -> range:
        m = self.modes_per_cell
        return range(-(m // 2), m - m // 2)

    def function(self, j: int, l: int) -> np.ndarray:
        """Grid samples of ``psi_{j,l}``, unit norm in the discrete inner product."""
        if j not in self.j_range:
            raise ValueError(f"j={j} outside {self.j_range}")
        modes = np.flatnonzero(self.cell_of_mode == l)
        if len(modes) == 0:
            raise ValueError(f"cell {l} outside the grid window")
        coef = np.zeros(self.n, dtype=complex)
        coef[modes] = np.exp(-2j * np.pi * j * self.k[modes] / self.modes_per_cell)
        coef /= math.sqrt(len(modes))
        return np.fft.ifft(coef, norm="ortho")

    def all_functions(self) -> tuple[np.ndarray, list[tuple[int, int]]]:
        lo, hi = self.l_window
        labels = [(j, l) for l in range(lo, hi + 1) for j in self.j_range]
        return np.array([self.function(j, l) for j, l in labels]), labels


def mixed_multiplier(xi1: np.ndarray, xi2: np.ndarray, partition: SpinPartition) -> np.ndarray:
    """Symbol of ``sum_l prod_{j in I_l} (1 - d_j^2)^{1/2}`` with ``2 pi`` frequency scaling."""
    per = [np.sqrt(1 + (2 * np.pi * xi1) ** 2), np.sqrt(1 + (2 * np.pi * xi2) ** 2)]
    total = 0.0
    for block in partition.blocks:
        term = np.ones(np.broadcast(xi1, xi2).shape)
        for j in block:
            term = term * per[j]
        total = total + term
    return total


@dataclass(frozen=True)
class Projector:
    """Coordinate selection on the ``(n, n)`` Fourier coefficient array."""

    mask: np.ndarray
    spec: HyperbolicCrossSpec | None = None

    @property
    def dof(self) -> int:
        return int(self.mask.sum())

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask.ravel())

    def __call__(self, coef: np.ndarray) -> np.ndarray:
        return np.where(self.mask, coef, 0)


def build_projector(basis: FourierBoxBasis1D, spec: HyperbolicCrossSpec | None) -> Projector:
    n = basis.n
    if spec is None:
        return Projector(np.ones((n, n), dtype=bool))
    if spec.partition.n_electrons != 2:
        raise ValueError("the analog carries two particles")
    cell = basis.cell_of_mode
    lo, hi = basis.l_window
    if spec.mode is TruncationMode.FULL:
        keep = np.abs(cell) <= spec.radius
        return Projector(keep[:, None] & keep[None, :], spec)
    selected = np.zeros((hi - lo + 1, hi - lo + 1), dtype=bool)
    for l1, l2 in enumerate_cells(basis.box_width_inv, spec, 1, (lo, hi)):
        selected[l1 - lo, l2 - lo] = True
    return Projector(selected[(cell - lo)[:, None], (cell - lo)[None, :]], spec)


@dataclass(frozen=True)
class AnalogModel:
    basis: FourierBoxBasis1D = FourierBoxBasis1D()
    depth: float = 1.0  # particle-centre attraction -depth / sqrt(x^2 + a^2)
    softening: float = 1.0
    repulsion: float = 1.0  # particle-particle +repulsion / sqrt(d^2 + b^2)
    repulsion_softening: float = 1.0
    width: float = 0.6  # initial orbitals exp(-x^2/2w^2) and x exp(-x^2/2w^2)
    centre: float = 0.0
    partition: SpinPartition = field(default_factory=lambda: SpinPartition.all_same_spin(2))

    def potential(self) -> np.ndarray:
        x = self.basis.grid
        return -self.depth / np.sqrt(x**2 + self.softening**2)

    def interaction(self) -> np.ndarray:
        """``W`` as a function of the periodic grid offset ``i1 - i2``."""
        return self.repulsion / np.sqrt(self.basis.grid**2 + self.repulsion_softening**2)

    def initial_grid(self) -> np.ndarray:
        x = self.basis.grid - self.centre
        g = np.exp(-x**2 / (2 * self.width**2))
        a, b = g, x * g
        u = np.outer(a, b) - np.outer(b, a)
        return u / np.linalg.norm(u)

    def initial_coefficients(self) -> np.ndarray:
        return np.fft.fft2(self.initial_grid(), norm="ortho")

    def resolution_tail(self) -> float:
        """Largest initial coefficient on the outermost ring of modes."""
        c = np.abs(self.initial_coefficients())
        edge = np.abs(self.basis.k) >= self.basis.n // 2 - 1
        return float(max(c[edge, :].max(), c[:, edge].max()))

    def check_resolution(self, tol: float = 1e-10) -> None:
        tail = self.resolution_tail()
        if tail > tol:
            raise ResolutionError(f"initial data not resolved: edge coefficient {tail:.2e} > {tol:.0e}")

    def kinetic_diagonal(self) -> np.ndarray:
        xi = self.basis.xi
        return (2 * np.pi**2 * (xi[:, None] ** 2 + xi[None, :] ** 2)).ravel()

    def hamiltonian(self, free: bool = False) -> np.ndarray:
        """Dense real symmetric ``H`` on the ``n^2`` Fourier coefficients (row-major ``(k1, k2)``)."""
        n = self.basis.n
        h = np.diag(self.kinetic_diagonal())
        if free:
            return h
        vhat = np.real(np.fft.fft(self.potential())) / n
        what = np.real(np.fft.fft(self.interaction())) / n
        idx = np.arange(n)
        q = (idx[:, None] - idx[None, :]) % n  # k - k'
        v1 = vhat[q]
        eye = np.eye(n)
        h4 = h.reshape(n, n, n, n)
        h4 += v1[:, None, :, None] * eye[None, :, None, :]
        h4 += eye[:, None, :, None] * v1[None, :, None, :]
        # W(x1 - x2) conserves k1 + k2 and couples through k1 - k1'
        cons = ((idx[:, None, None, None] + idx[None, :, None, None]
                 - idx[None, None, :, None] - idx[None, None, None, :]) % n) == 0
        h4 += np.where(cons, what[q][:, None, :, None], 0.0)
        return 0.5 * (h + h.T)


def swap(coef: np.ndarray) -> np.ndarray:
    """Exchange of the two particles (the coefficient array is transposed)."""
    return np.swapaxes(coef, -1, -2)


@dataclass
class AssumptionReport:
    idempotence_defect: float
    commutator_norm: float
    approximation_ratio: float
    contraction_violation: float  # max(||Pu|| - ||u||, 0) over the ensemble
    n_samples: int
    sharp_ratio: float = 0.0  # exact supremum: R / min of the multiplier over discarded modes

    def passed(self, defect_tol: float = 1e-10, ratio_tol: float = 1e-6) -> bool:
        return (self.idempotence_defect <= defect_tol and self.commutator_norm <= defect_tol
                and self.approximation_ratio <= 1 + ratio_tol and self.sharp_ratio <= 1 + ratio_tol
                and self.contraction_violation == 0)


def check_assumption(projector: Projector, basis: FourierBoxBasis1D, n_samples: int = 200,
                     seed: int = 0, partition: SpinPartition | None = None) -> AssumptionReport:
    """Projector, commutativity and approximation properties on a random ensemble.

    Laplacians act through their grid-spectral symbols; the ratio is
    ``R ||(1-P)u|| / ||sum_l L_{I_l} u||`` maximised over band-limited samples.
    """
    partition = partition or (projector.spec.partition if projector.spec
                              else SpinPartition.all_same_spin(2))
    rng = np.random.default_rng(seed)
    n = basis.n
    xi = basis.xi
    lap = [-(2 * np.pi * xi[:, None]) ** 2 * np.ones((1, n)),
           -(2 * np.pi * xi[None, :]) ** 2 * np.ones((n, 1))]
    mult = mixed_multiplier(xi[:, None], xi[None, :], partition)
    radius = projector.spec.radius if projector.spec is not None else math.inf
    idem = comm = ratio = contr = 0.0
    for _ in range(n_samples):
        u = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        pu = projector(u)
        idem = max(idem, float(np.linalg.norm(projector(pu) - pu)))
        for d in lap:
            c = projector(d * u) - d * pu
            comm = max(comm, float(np.linalg.norm(c) / np.linalg.norm(d * u)))
        contr = max(contr, float(np.linalg.norm(pu) - np.linalg.norm(u)))
        resid = np.linalg.norm(u - pu)
        if resid > 0:
            ratio = max(ratio, float(radius * resid / np.linalg.norm(mult * u)))
    dropped = ~projector.mask
    sharp = float(radius / mult[dropped].min()) if dropped.any() else 0.0
    return AssumptionReport(idem, comm, ratio, max(contr, 0.0), n_samples, sharp)


@dataclass
class AnalogTrajectory:
    times: np.ndarray
    states: np.ndarray  # (n_times, n, n) Fourier coefficients, zero outside the projector
    projector: Projector

    def swap_defect(self) -> float:
        return float(max(np.linalg.norm(s + swap(s)) for s in self.states))

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states.reshape(len(self.times), -1), axis=1)


def evolve_analog(model: AnalogModel, spec: HyperbolicCrossSpec | None = None,
                  t_final: float = 1.0, n_samples: int = 21, free: bool = False,
                  hamiltonian: np.ndarray | None = None) -> AnalogTrajectory:
    """Galerkin dynamics on the retained modes, ``u_R(0) = P u_0``, exact in time.

    With ``spec=None`` the whole grid is kept. The restricted Hamiltonian is
    diagonalised once, so sampled states carry no time-stepping error.
    """
    model.check_resolution()
    basis = model.basis
    proj = build_projector(basis, spec)
    h = hamiltonian if hamiltonian is not None else model.hamiltonian(free=free)
    idx = proj.indices
    w, v = np.linalg.eigh(h[np.ix_(idx, idx)])
    c0 = model.initial_coefficients().ravel()[idx]
    d0 = v.T @ c0.real + 1j * (v.T @ c0.imag)
    times = np.linspace(0.0, t_final, n_samples)
    states = np.zeros((n_samples, basis.n * basis.n), dtype=complex)
    for i, t in enumerate(times):
        d = np.exp(-1j * w * t) * d0
        states[i, idx] = v @ d.real + 1j * (v @ d.imag)
    return AnalogTrajectory(times, states.reshape(n_samples, basis.n, basis.n), proj)


@dataclass
class RateStudy:
    radii: np.ndarray
    dof: np.ndarray
    errors: np.ndarray  # sup over sample times of the L2 error
    slope: float
    fitted: np.ndarray  # mask of rows used in the fit
    swap_defect: float


def rate_study(model: AnalogModel, radii, t_final: float = 1.0, n_samples: int = 21,
               floor: float = 1e-12) -> RateStudy:
    """Sup-in-time L2 error of sparse-grid truncations against the untruncated run.

    The log-log slope is fitted over rows whose error exceeds ``floor``.
    """
    h = model.hamiltonian()
    ref = evolve_analog(model, None, t_final, n_samples, hamiltonian=h)
    radii = np.asarray(radii, dtype=float)
    errs, dofs = [], []
    swap_def = ref.swap_defect()
    for r in radii:
        spec = HyperbolicCrossSpec(TruncationMode.SPARSE, float(r), model.partition)
        tr = evolve_analog(model, spec, t_final, n_samples, hamiltonian=h)
        diff = (tr.states - ref.states).reshape(n_samples, -1)
        errs.append(float(np.linalg.norm(diff, axis=1).max()))
        dofs.append(tr.projector.dof)
        swap_def = max(swap_def, tr.swap_defect())
    errs = np.array(errs)
    fit = errs > floor
    slope = float("nan")
    if fit.sum() >= 2:
        slope = float(np.polyfit(np.log(radii[fit]), np.log(errs[fit]), 1)[0])
    return RateStudy(radii, np.array(dofs), errs, slope, fit, swap_def)


STANDARD_RADII = (2.5, 3.0, 3.5, 4.0, 5.0, 6.0, 7.0, 8.0, 10.0, 12.0)
