"""Experiment orchestration: configs, SG/FG sweeps and the oracle check suites."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import determinant_space as ds
from .gto_basis import ContractedShell, MolecularSystem, Nucleus, build_system, initial_orbitals
from .hyperbolic_index import HyperbolicCrossSpec, SpinPartition, TruncationMode
from .integrals import boys, eri_block, eri_tensor, hardy_ratio, one_electron_matrices, shell_pair
from .propagator import PropagationConfig, compare_trajectories, propagate
from .spectral_analog import (STANDARD_RADII, AnalogModel, FourierBoxBasis1D, build_projector,
                              check_assumption, rate_study)

log = logging.getLogger(__name__)

SYSTEMS = ("He", "H2", "Analog1D")

DEFAULT_SG_LADDER = (1.25, 2.25, 3.25, 4.25, 5.25, 7.25, 10.25, 13.25, 17.25, 21.25, 26.25, 31.25,
                     37.25, 43.25, 50.25, 57.25)
DEFAULT_FG_LADDER = tuple(float(r) for r in range(8))

SWEEP_HEADER = ["mode", "R", "dof", "max_h1_error", "max_energy_dev"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LadderPoint:
    mode: TruncationMode
    radius: float

    def spec(self, l_max: int = 7) -> HyperbolicCrossSpec:
        return HyperbolicCrossSpec(self.mode, self.radius, SpinPartition.all_same_spin(2), l_max)


def default_ladder() -> list[LadderPoint]:
    return ([LadderPoint(TruncationMode.SPARSE, r) for r in DEFAULT_SG_LADDER]
            + [LadderPoint(TruncationMode.FULL, r) for r in DEFAULT_FG_LADDER])


@dataclass
class ExperimentConfig:
    system: str = "He"
    ladder: list[LadderPoint] = field(default_factory=default_ladder)
    propagation: PropagationConfig = PropagationConfig(solver="spectral")
    output: str | None = None
    seed: int = 0
    l_max: int = 7
    bond_length: float = 1.4
    projection_threshold: float = 1e-2
    workers: int = 1
    analog: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise ConfigError(f"system must be one of {SYSTEMS}, got {self.system!r}")
        if not self.ladder:
            raise ConfigError("ladder must not be empty")
        for p in self.ladder:
            if not p.radius >= 0 or (p.mode is TruncationMode.SPARSE and p.radius == 0):
                raise ConfigError(f"invalid radius {p.radius} for mode {p.mode.value}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        known = {"system", "ladder", "propagation", "output", "seed", "l_max", "bond_length",
                 "projection_threshold", "workers", "analog"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            if "ladder" in data:
                data["ladder"] = _parse_ladder(data["ladder"])
            if "propagation" in data:
                prop = {"solver": "spectral", **data["propagation"]}
                data["propagation"] = PropagationConfig(**prop)
            return cls(**data)
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        prop = asdict(self.propagation)
        prop["integrator"] = self.propagation.integrator.value
        return {"system": self.system,
                "ladder": [{"mode": p.mode.value, "R": p.radius} for p in self.ladder],
                "propagation": prop, "output": self.output, "seed": self.seed,
                "l_max": self.l_max, "bond_length": self.bond_length,
                "projection_threshold": self.projection_threshold, "workers": self.workers,
                "analog": self.analog}


def _parse_ladder(raw) -> list[LadderPoint]:
    points = []
    if isinstance(raw, dict):
        for mode, radii in raw.items():
            points += [LadderPoint(TruncationMode.parse(mode), float(r)) for r in radii]
    else:
        for item in raw:
            points.append(LadderPoint(TruncationMode.parse(item["mode"]), float(item["R"])))
    return points


# --- system preparation ------------------------------------------------------------

@dataclass
class PreparedSystem:
    system: MolecularSystem
    overlap: np.ndarray
    orbitals: ds.OrthonormalOrbitals
    space: ds.DeterminantSpace
    mo: ds.MOIntegrals
    hamiltonian: ds.HamiltonianOperator
    gram: np.ndarray
    initial: np.ndarray


def prepare_system(name: str, l_max: int = 7, bond_length: float = 1.4,
                   projection_threshold: float = 1e-2) -> PreparedSystem:
    system = build_system(name, l_max, bond_length)
    one = one_electron_matrices(system)
    eri = eri_tensor(system)
    orb = ds.orthonormalize(system, one.overlap)
    space = ds.build_space(orb)
    mo = ds.mo_integrals(system, orb, one, eri)
    ham = ds.assemble_hamiltonian(mo, space)
    gram = ds.h1_gram_matrix(mo, space)
    a, b = initial_orbitals(system, threshold=projection_threshold)
    c0 = ds.initial_ci_vector(a, b, orb, one.overlap, space)
    return PreparedSystem(system, one.overlap, orb, space, mo, ham, gram, c0)


# --- sweeps ----------------------------------------------------------------------------

@dataclass
class SweepRow:
    mode: str
    radius: float
    dof: int
    max_h1_error: float
    max_energy_dev: float
    wall_time: float = 0.0


@dataclass
class SweepResult:
    rows: list[SweepRow]
    reference_dof: int
    header: list[str] = field(default_factory=lambda: list(SWEEP_HEADER))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for r in self.rows:
            w.writerow([r.mode, f"{r.radius:g}", r.dof, f"{r.max_h1_error:.10e}",
                        f"{r.max_energy_dev:.10e}"])
        return buf.getvalue()

    def timing_csv(self) -> str:
        lines = ["mode,R,dof,wall_time"]
        lines += [f"{r.mode},{r.radius:g},{r.dof},{r.wall_time:.3f}" for r in self.rows]
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        """CSV of the results plus a ``.timing.csv`` sidecar holding wall times.

        Keeping wall times out of the main file makes it byte-reproducible.
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv())
        path.with_suffix(".timing.csv").write_text(self.timing_csv())

    def rows_for(self, mode: str) -> list[SweepRow]:
        return [r for r in self.rows if r.mode == mode]


def _sweep_row(prep: PreparedSystem, ref, point: LadderPoint, cfg: ExperimentConfig) -> SweepRow:
    start = time.perf_counter()
    try:
        sub = ds.build_space(prep.orbitals, point.spec(cfg.l_max))
        if sub.dim == 0:
            raise ValueError("empty truncated space")
        emb = ds.truncation_projector(prep.space, sub)
        h_sub = prep.hamiltonian.restrict(emb.indices)
        traj = propagate(h_sub, emb.restrict(prep.initial), cfg.propagation, check_norm=False)
        e1, de = compare_trajectories(traj, ref, prep.gram, emb)
    except Exception as exc:
        raise RuntimeError(f"sweep row ({point.mode.value}, R={point.radius:g}) failed: {exc}") from exc
    return SweepRow(point.mode.value, point.radius, sub.dim, e1, de,
                    time.perf_counter() - start)


def run_sweep(config: ExperimentConfig, prepared: PreparedSystem | None = None) -> SweepResult:
    """Reference run once, then one truncated run per ladder point (rows in ladder order)."""
    if config.system == "Analog1D":
        raise ConfigError("use run_analog for the Analog1D system")
    prep = prepared or prepare_system(config.system, config.l_max, config.bond_length,
                                      config.projection_threshold)
    log.info("reference space dimension %d", prep.space.dim)
    ref_cfg = config.propagation
    if ref_cfg.solver == "spectral" and prep.space.dim > 4096:
        ref_cfg = PropagationConfig(ref_cfg.dt, ref_cfg.n_steps, ref_cfg.integrator,
                                    ref_cfg.record_every, "direct", 1e-13)
    ref = propagate(prep.hamiltonian, prep.initial, ref_cfg)
    if config.workers == 1:
        rows = [_sweep_row(prep, ref, p, config) for p in config.ladder]
    else:
        with ThreadPoolExecutor(config.workers) as pool:
            rows = list(pool.map(lambda p: _sweep_row(prep, ref, p, config), config.ladder))
    result = SweepResult(rows, prep.space.dim)
    if config.output:
        result.write(config.output)
    return result


def analog_model_from(params: dict) -> AnalogModel:
    params = dict(params)
    basis = FourierBoxBasis1D(**{k: params.pop(k) for k in ("n", "length", "modes_per_cell")
                                 if k in params})
    params.pop("radii", None)
    params.pop("t_final", None)
    params.pop("n_samples", None)
    try:
        return AnalogModel(basis=basis, **params)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def run_analog(params: dict | None = None, output=None):
    params = params or {}
    model = analog_model_from(params)
    radii = params.get("radii", STANDARD_RADII)
    study = rate_study(model, radii, params.get("t_final", 1.0), params.get("n_samples", 21))
    if output:
        lines = ["R,dof,sup_error,slope"]
        lines += [f"{r:g},{d},{e:.10e},{study.slope:.6f}"
                  for r, d, e in zip(study.radii, study.dof, study.errors)]
        Path(output).write_text("\n".join(lines) + "\n")
    return study


# --- check suites ------------------------------------------------------------------

@dataclass
class CheckResult:
    suite: str
    passed: bool
    detail: str


def _random_shell(rng: np.random.Generator, l_max: int = 2) -> ContractedShell:
    n_prim = int(rng.integers(1, 3))
    prims = tuple((float(rng.uniform(0.3, 1.0)), float(rng.uniform(0.2, 2.5)))
                  for _ in range(n_prim))
    return ContractedShell(tuple(rng.uniform(-0.8, 0.8, 3)), int(rng.integers(0, l_max + 1)), 1,
                           prims)


def check_boys(rng, n_samples: int = 60, fault: bool = False) -> CheckResult:
    from .oracles import boys_oracle

    worst = 0.0
    for _ in range(n_samples):
        n = int(rng.integers(0, 17))
        x = float(rng.uniform(0, 50))
        val = boys(n, x) * (1 + 1e-8 if fault else 1)
        ref = boys_oracle(n, x)
        worst = max(worst, abs(val - ref) / abs(ref))
    return CheckResult("boys", worst <= 1e-11, f"max rel err {worst:.2e} over {n_samples} (tol 1e-11)")


def check_eri(rng, n_samples: int = 50, fault: bool = False) -> CheckResult:
    """Random contracted shells with ``l <= 2``; compares individual integrals."""
    from .oracles import eri_oracle

    worst, count = 0.0, 0
    while count < n_samples:
        shells = [_random_shell(rng) for _ in range(4)]
        fs = [s.functions()[int(rng.integers(0, 2 * s.l + 1))] for s in shells]
        blk = eri_block(shell_pair(shells[0], shells[1]), shell_pair(shells[2], shells[3]))
        nb, nd = 2 * shells[1].l + 1, 2 * shells[3].l + 1
        row = (fs[0].m + shells[0].l) * nb + fs[1].m + shells[1].l
        col = (fs[2].m + shells[2].l) * nd + fs[3].m + shells[3].l
        val = blk[row, col] * (1 + 1e-4 if fault else 1)
        ref = eri_oracle(*fs)
        if abs(ref) < 1e-8:
            continue  # zero by symmetry; relative error undefined
        worst = max(worst, abs(val - ref) / abs(ref))
        count += 1
    return CheckResult("eri", bool(worst <= 1e-6), f"max rel err {worst:.2e} over {count} (tol 1e-6)")


def check_hardy(system_name: str = "He", l_max: int = 7) -> CheckResult:
    system = build_system(system_name, l_max)
    passed, worst = 0, math.inf
    for f in system.basis:
        grad, over_r = hardy_ratio(f)
        margin = grad - (f.l + 0.5) * over_r
        worst = min(worst, margin)
        passed += margin >= -1e-10
    n = system.n_basis
    return CheckResult("hardy", passed == n, f"{passed}/{n} functions satisfy the bound "
                       f"(smallest margin {worst:.3e})")


def check_assumption_suite(seed: int = 0, radii=(2.5, 4.0, 8.0, 12.0)) -> CheckResult:
    model = AnalogModel()
    worst = (0.0, 0.0, 0.0)
    ok = True
    for r in radii:
        rep = check_assumption(build_projector(model.basis, HyperbolicCrossSpec.sparse(r)),
                               model.basis, 200, seed)
        ok &= rep.passed()
        worst = (max(worst[0], rep.idempotence_defect), max(worst[1], rep.commutator_norm),
                 max(worst[2], rep.approximation_ratio, rep.sharp_ratio))
    return CheckResult("assumption", bool(ok), f"idempotence {worst[0]:.1e}, commutator {worst[1]:.1e}, "
                       f"ratio {worst[2]:.3f} (<= 1)")


def toy_system() -> MolecularSystem:
    """Three contracted functions on a charge-2 centre with an off-centre s function."""
    shells = [ContractedShell((0.0, 0.0, 0.0), 0, 1, ((0.6, 0.5), (0.4, 1.4))),
              ContractedShell((0.0, 0.0, 0.6), 0, 1, ((1.0, 0.9),)),
              ContractedShell((0.0, 0.0, -0.3), 0, 1, ((0.7, 0.35), (0.3, 1.1)))]
    return MolecularSystem((Nucleus(2.0, (0.0, 0.0, 0.0)),), tuple(shells),
                           SpinPartition.all_same_spin(2), "toy")


def brute_force_hamiltonian(system: MolecularSystem, coefficients: np.ndarray
                            ) -> tuple[np.ndarray, np.ndarray]:
    """Determinant-basis ``H`` from quadrature AO integrals, no Slater-Condon rules.

    Each determinant is expanded as ``(phi_p(1) phi_q(2) - phi_q(1) phi_p(2)) / sqrt(2)``
    and every product-state matrix element of ``h(1) + h(2) + 1/r12`` is summed
    term by term. Also returns the determinant overlap matrix.
    """
    from .oracles import eri_oracle, kinetic_oracle, nuclear_oracle, overlap_oracle

    fs = system.basis
    n = len(fs)
    s = np.array([[overlap_oracle(a, b) for b in fs] for a in fs])
    h = np.array([[kinetic_oracle(a, b) + nuclear_oracle(a, b, system.nuclei) for b in fs]
                  for a in fs])
    g = np.zeros((n,) * 4)  # chemists' (ij|kl)
    cache = {}
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    key = tuple(sorted([tuple(sorted((i, j))), tuple(sorted((k, l)))]))
                    if key not in cache:
                        cache[key] = eri_oracle(fs[i], fs[j], fs[k], fs[l])
                    g[i, j, k, l] = cache[key]
    c = coefficients
    s_mo = c.T @ s @ c
    h_mo = c.T @ h @ c
    g_mo = np.einsum("ai,bj,ck,dl,abcd->ijkl", c, c, c, c, g)

    def product_element(a, b, cc, d):
        # <phi_a(1) phi_b(2) | h1 + h2 + 1/r12 | phi_c(1) phi_d(2)> and its overlap
        return (h_mo[a, cc] * s_mo[b, d] + s_mo[a, cc] * h_mo[b, d] + g_mo[a, cc, b, d],
                s_mo[a, cc] * s_mo[b, d])

    nmo = c.shape[1]
    pairs = [(p, q) for p in range(nmo) for q in range(p + 1, nmo)]
    ham = np.zeros((len(pairs), len(pairs)))
    ovl = np.zeros_like(ham)
    for x, (p, q) in enumerate(pairs):
        for y, (r, t) in enumerate(pairs):
            terms = [((p, q), (r, t), 1), ((p, q), (t, r), -1), ((q, p), (r, t), -1),
                     ((q, p), (t, r), 1)]
            for (a, b), (cc, d), sign in terms:
                e, o = product_element(a, b, cc, d)
                ham[x, y] += 0.5 * sign * e
                ovl[x, y] += 0.5 * sign * o
    return ham, ovl


def check_hamiltonian(fault: bool = False) -> CheckResult:
    system = toy_system()
    one = one_electron_matrices(system)
    orb = ds.orthonormalize(system, one.overlap)
    space = ds.build_space(orb)
    mo = ds.mo_integrals(system, orb, one, eri_tensor(system))
    h = ds.assemble_hamiltonian(mo, space).matrix * (1 + 1e-3 if fault else 1)
    ref, ovl = brute_force_hamiltonian(system, orb.coefficients)
    err = float(np.abs(h - ref).max())
    ovl_err = float(np.abs(ovl - np.eye(len(ovl))).max())
    return CheckResult("hamiltonian", bool(err <= 1e-5 and ovl_err <= 1e-5),
                       f"max |H - H_quad| {err:.2e}, determinant overlap defect {ovl_err:.2e} "
                       f"(tol 1e-5, dim {space.dim})")


SUITES = ("boys", "eri", "hardy", "assumption", "hamiltonian")


def run_checks(selection=None, seed: int = 0, inject_fault: bool = False) -> list[CheckResult]:
    """Run the named suites (all by default). ``inject_fault`` perturbs the computed values."""
    selection = list(selection or SUITES)
    bad = [s for s in selection if s not in SUITES]
    if bad:
        raise ConfigError(f"unknown check suites {bad}; available: {SUITES}")
    rng = np.random.default_rng(seed)
    out = []
    for name in selection:
        if name == "boys":
            out.append(check_boys(rng, fault=inject_fault))
        elif name == "eri":
            out.append(check_eri(rng, fault=inject_fault))
        elif name == "hardy":
            out.append(check_hardy())
        elif name == "assumption":
            out.append(check_assumption_suite(seed))
        elif name == "hamiltonian":
            out.append(check_hamiltonian(fault=inject_fault))
    return out


__all__ = ["ConfigError", "ExperimentConfig", "LadderPoint", "PreparedSystem", "SweepResult",
           "SweepRow", "CheckResult", "prepare_system", "run_sweep", "run_analog", "run_checks",
           "brute_force_hamiltonian", "toy_system", "default_ladder"]
