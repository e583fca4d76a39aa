"""Real-time propagation of CI coefficient vectors and trajectory comparison."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import LinearOperator, gmres

from .determinant_space import HamiltonianOperator, SpaceEmbedding

EXACT_EIGEN_MAX_DIM = 4096
SOLVERS = ("direct", "gmres", "spectral")


class Integrator(str, Enum):
    CRANK_NICOLSON = "CN"
    EXACT_EIGEN = "ExactEigen"

    @classmethod
    def parse(cls, value) -> "Integrator":
        if isinstance(value, cls):
            return value
        key = str(value).replace("-", "").replace("_", "").lower()
        for item, aliases in ((cls.CRANK_NICOLSON, ("cn", "cranknicolson")),
                              (cls.EXACT_EIGEN, ("exacteigen", "exact", "eigen"))):
            if key in aliases:
                return item
        raise ValueError(f"unknown integrator {value!r}")


class PropagationError(RuntimeError):
    pass


@dataclass(frozen=True)
class PropagationConfig:
    dt: float = 0.001
    n_steps: int = 1000
    integrator: Integrator = Integrator.CRANK_NICOLSON
    record_every: int = 10
    # CN solve: "direct" (LU), "gmres", or "spectral" (Cayley factors in the eigenbasis)
    solver: str = "direct"
    tol: float = 1e-12
    max_iter: int = 200

    def __post_init__(self):
        object.__setattr__(self, "integrator", Integrator.parse(self.integrator))
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.n_steps < 1 or self.record_every < 1:
            raise ValueError("n_steps and record_every must be at least 1")
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown CN solver {self.solver!r}")

    @property
    def final_time(self) -> float:
        return self.dt * self.n_steps


def _matrix(h) -> np.ndarray:
    return h.matrix if isinstance(h, HamiltonianOperator) else np.asarray(h)


def _apply(m: np.ndarray, c: np.ndarray) -> np.ndarray:
    """``m @ c`` without promoting a real ``m`` to complex."""
    if np.isrealobj(m) and np.iscomplexobj(c):
        return m @ c.real + 1j * (m @ c.imag)
    return m @ c


class Propagator:
    """Stepper for a fixed Hermitian ``H`` and time step; factorisations are cached."""

    def __init__(self, h, dt: float, integrator=Integrator.CRANK_NICOLSON, solver: str = "direct",
                 tol: float = 1e-12, max_iter: int = 200, allow_large: bool = False):
        self.h = _matrix(h)
        self.dt = dt
        self.integrator = Integrator.parse(integrator)
        self.solver = solver
        self.tol = tol
        self.max_iter = max_iter
        n = self.h.shape[0]
        self._v = None
        if self.integrator is Integrator.EXACT_EIGEN:
            if n > EXACT_EIGEN_MAX_DIM and not allow_large:
                raise ValueError(f"ExactEigen is limited to dimension {EXACT_EIGEN_MAX_DIM}")
            w, self._v = np.linalg.eigh(self.h)
            self._phase = np.exp(-1j * dt * w)
        elif solver == "spectral":
            w, self._v = np.linalg.eigh(self.h)
            self._phase = (1 - 0.5j * dt * w) / (1 + 0.5j * dt * w)
        elif solver == "direct":
            a = np.eye(n, dtype=complex) + 0.5j * dt * self.h
            self._lu = linalg.lu_factor(a, check_finite=False)
        else:
            self._op = LinearOperator((n, n), dtype=complex,
                                      matvec=lambda x: x + 0.5j * dt * _apply(self.h, x))

    def step(self, c: np.ndarray) -> np.ndarray:
        if self._v is not None:
            return _apply(self._v, self._phase * _apply(self._v.T, c))
        rhs = c - 0.5j * self.dt * _apply(self.h, c)
        if self.solver == "direct":
            return linalg.lu_solve(self._lu, rhs, check_finite=False)
        out, info = gmres(self._op, rhs, x0=c, rtol=self.tol, atol=0.0, restart=50,
                          maxiter=self.max_iter)
        if info != 0:
            raise PropagationError(f"GMRES did not converge (info={info})")
        return out


def step(h, c: np.ndarray, dt: float, integrator=Integrator.CRANK_NICOLSON) -> np.ndarray:
    """One propagation step (builds a fresh factorisation; use ``Propagator`` in loops)."""
    c = np.asarray(c, dtype=complex)
    if not np.all(np.isfinite(c)):
        raise ValueError("coefficient vector is not finite")
    return Propagator(h, dt, integrator, allow_large=True).step(c)


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    norms: np.ndarray
    energies: np.ndarray  # <c, H c>, not divided by the norm
    states: np.ndarray | None = None  # (n_records, dim)
    h1_error: np.ndarray | None = None
    energy_dev: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["time", "norm", "energy", "h1_error", "energy_dev"])
            for k, t in enumerate(self.times):
                he = "" if self.h1_error is None else f"{self.h1_error[k]:.12e}"
                ed = "" if self.energy_dev is None else f"{self.energy_dev[k]:.12e}"
                w.writerow([f"{t:.6f}", f"{self.norms[k]:.15e}", f"{self.energies[k]:.15e}", he, ed])

    @classmethod
    def from_csv(cls, path) -> "TrajectoryRecord":
        with open(path) as fh:
            rows = list(csv.DictReader(fh))

        def col(name):
            vals = [r[name] for r in rows]
            return None if any(v == "" for v in vals) else np.array(vals, dtype=float)

        return cls(col("time"), col("norm"), col("energy"), None, col("h1_error"),
                   col("energy_dev"))


def propagate(h, c0: np.ndarray, config: PropagationConfig = PropagationConfig(),
              keep_states: bool = True, check_norm: bool = True,
              propagator: Propagator | None = None) -> TrajectoryRecord:
    """Apply ``config.n_steps`` steps, recording at ``t = 0`` and every ``record_every`` steps.

    ``check_norm=False`` admits sub-normalised starting vectors such as projections
    of a unit state onto a truncated space.
    """
    mat = _matrix(h)
    c = np.array(c0, dtype=complex)
    nrm = np.linalg.norm(c)
    if check_norm and abs(nrm - 1.0) > 1e-10:
        raise ValueError(f"initial vector must have unit norm (got {nrm:.15f})")
    prop = propagator or Propagator(mat, config.dt, config.integrator, config.solver,
                                    config.tol, config.max_iter)
    rec_steps = list(range(0, config.n_steps + 1, config.record_every))
    if rec_steps[-1] != config.n_steps:
        rec_steps.append(config.n_steps)
    times, norms, energies, states = [], [], [], []

    def record(k):
        times.append(k * config.dt)
        norms.append(np.linalg.norm(c))
        energies.append(float(np.real(np.vdot(c, _apply(mat, c)))))
        if keep_states:
            states.append(c.copy())

    record(0)
    rec = set(rec_steps)
    if prop._v is not None:
        # diagonal stepper: stay in eigen-coordinates between records
        d = _apply(prop._v.T, c)
        for k in range(1, config.n_steps + 1):
            d = prop._phase * d
            if k in rec:
                c = _apply(prop._v, d)
                if not np.all(np.isfinite(c)):
                    raise PropagationError(f"non-finite coefficients at step {k}")
                record(k)
        return TrajectoryRecord(np.array(times), np.array(norms), np.array(energies),
                                np.array(states) if keep_states else None)
    for k in range(1, config.n_steps + 1):
        c = prop.step(c)
        if k in rec:
            if not np.all(np.isfinite(c)):
                raise PropagationError(f"non-finite coefficients at step {k}")
            record(k)
    return TrajectoryRecord(np.array(times), np.array(norms), np.array(energies),
                            np.array(states) if keep_states else None)


def compare_trajectories(truncated: TrajectoryRecord, reference: TrajectoryRecord,
                         gram: np.ndarray, embedding: SpaceEmbedding | None = None
                         ) -> tuple[float, float]:
    """Max over recorded times of the H1 error and of the energy deviation.

    Fills ``truncated.h1_error`` and ``truncated.energy_dev`` in place.
    """
    if truncated.states is None or reference.states is None:
        raise ValueError("both trajectories must keep their states")
    if len(truncated.times) != len(reference.times) or not np.allclose(
            truncated.times, reference.times, rtol=0, atol=1e-12):
        raise ValueError("trajectories are recorded on different time grids")
    sub = truncated.states if embedding is None else embedding.embed(truncated.states)
    diff = sub - reference.states
    gd = _apply(gram, diff.T).T
    h1 = np.sqrt(np.maximum(np.real(np.einsum("ti,ti->t", diff.conj(), gd)), 0.0))
    de = np.abs(truncated.energies - reference.energies)
    truncated.h1_error = h1
    truncated.energy_dev = de
    return float(h1.max()), float(de.max())


def write_trajectory(path, record: TrajectoryRecord) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    record.to_csv(path)


def global_error(h, c0, dt: float, n_steps: int) -> float:
    """Distance between CN and exact propagation after ``n_steps`` steps of size ``dt``."""
    cfg_cn = PropagationConfig(dt, n_steps, Integrator.CRANK_NICOLSON, n_steps)
    cfg_ex = PropagationConfig(dt, n_steps, Integrator.EXACT_EIGEN, n_steps)
    a = propagate(h, c0, cfg_cn, check_norm=False).states[-1]
    b = propagate(h, c0, cfg_ex, check_norm=False).states[-1]
    return float(np.linalg.norm(a - b))


def observed_order(errors, dts) -> float:
    slope, _ = np.polyfit(np.log(dts), np.log(errors), 1)
    return float(slope)


__all__ = ["Integrator", "PropagationConfig", "PropagationError", "Propagator", "TrajectoryRecord",
           "compare_trajectories", "global_error", "observed_order", "propagate", "step",
           "write_trajectory", "EXACT_EIGEN_MAX_DIM"]
