"""Command-line entry point: ``sgtdci <subcommand> ...``.

Exit codes: 0 success, 1 failed checks, 2 invalid configuration or arguments.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import determinant_space as ds
from .gto_basis import build_system, format_basis
from .harness import (SUITES, ConfigError, ExperimentConfig, LadderPoint, prepare_system,
                      run_analog, run_checks, run_sweep)
from .hyperbolic_index import (HyperbolicCrossSpec, SpinPartition, TruncationMode, cardinality,
                               enumerate_angular, enumerate_cells, format_index_set)
from .integrals import eri_tensor, one_electron_matrices
from .propagator import PropagationConfig, propagate

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG = 0, 1, 2


def _add_system(p, systems=("He", "H2")):
    p.add_argument("--system", default="He", choices=systems)
    p.add_argument("--l-max", type=int, default=7)
    p.add_argument("--bond-length", type=float, default=1.4)


def _cmd_basis(args) -> int:
    system = build_system(args.system, args.l_max, args.bond_length)
    print(format_basis(system), end="")
    s = one_electron_matrices(system).overlap
    defect = float(np.abs(np.diag(s) - 1).max())
    print(f"# functions {system.n_basis}, max self-overlap defect {defect:.1e}, "
          f"min overlap eigenvalue {np.linalg.eigvalsh(s).min():.3e}")
    return EXIT_OK if defect < 1e-10 else EXIT_CHECK_FAILED


def _cmd_integrals(args) -> int:
    system = build_system(args.system, args.l_max, args.bond_length)
    one = one_electron_matrices(system)
    eri = eri_tensor(system)
    print(f"system {args.system}: {system.n_basis} functions")
    for name, mat in (("overlap", one.overlap), ("kinetic", one.kinetic),
                      ("nuclear", one.nuclear), ("eri_packed", eri.values)):
        print(f"{name:11s} trace {np.trace(mat): .12e}  sum {mat.sum(): .12e}  "
              f"frobenius {np.linalg.norm(mat):.12e}")
    return EXIT_OK


def _specs(args) -> list[LadderPoint]:
    return [LadderPoint(TruncationMode.parse(args.mode), r) for r in args.R]


def _cmd_space(args) -> int:
    system = build_system(args.system, args.l_max, args.bond_length)
    s = one_electron_matrices(system).overlap
    orb = ds.orthonormalize(system, s)
    full = ds.build_space(orb)
    print(f"reference dim {full.dim} (orbitals {orb.n_orbitals}, dropped {orb.n_dropped})")
    print("mode,R,dof")
    for p in _specs(args):
        print(f"{p.mode.value},{p.radius:g},{ds.build_space(orb, p.spec(args.l_max)).dim}")
    return EXIT_OK


def _cmd_propagate(args) -> int:
    prep = prepare_system(args.system, args.l_max, args.bond_length, args.projection_threshold)
    cfg = PropagationConfig(args.dt, args.steps, args.integrator, args.record_every, args.solver)
    h, c0 = prep.hamiltonian, prep.initial
    if args.mode is not None:
        if args.R is None:
            raise ConfigError("--mode needs --R")
        sub = ds.build_space(prep.orbitals, LadderPoint(TruncationMode.parse(args.mode),
                                                        args.R).spec(args.l_max))
        emb = ds.truncation_projector(prep.space, sub)
        h, c0 = h.restrict(emb.indices), emb.restrict(c0)
    traj = propagate(h, c0, cfg, check_norm=args.mode is None)
    if args.out:
        traj.to_csv(args.out)
    print(f"dim {h.dim}: norm drift {np.abs(traj.norms - traj.norms[0]).max():.2e}, "
          f"energy drift {np.abs(traj.energies - traj.energies[0]).max():.2e}, "
          f"E(0) {traj.energies[0]:.10f}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.out:
        cfg.output = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    if cfg.workers < 1:
        raise ConfigError("workers must be at least 1")
    if cfg.system == "Analog1D":
        study = run_analog(cfg.analog, cfg.output)
        print(f"slope {study.slope:.4f}")
        return EXIT_OK
    result = run_sweep(cfg)
    if not cfg.output:
        print(result.to_csv(), end="")
    return EXIT_OK


def _cmd_analog(args) -> int:
    params = {"n": args.n, "length": args.length, "modes_per_cell": args.modes_per_cell,
              "depth": args.depth, "softening": args.softening, "repulsion": args.repulsion,
              "repulsion_softening": args.repulsion_softening, "width": args.width,
              "t_final": args.t_final}
    if args.radii:
        params["radii"] = args.radii
    study = run_analog(params, args.out)
    print("R,dof,sup_error")
    for r, d, e in zip(study.radii, study.dof, study.errors):
        print(f"{r:g},{d},{e:.6e}")
    print(f"slope {study.slope:.4f}, swap defect {study.swap_defect:.1e}")
    return EXIT_OK


def _cmd_check(args) -> int:
    results = run_checks(args.suite, args.seed or 0, args.inject_fault)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.suite}: {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK_FAILED


def _cmd_index_set(args) -> int:
    mode = TruncationMode.parse(args.mode)
    spec = HyperbolicCrossSpec(mode, args.R, SpinPartition.all_same_spin(args.electrons), args.l_max)
    if args.L is None:
        print(format_index_set(enumerate_angular(spec)), end="")
        print(f"# cardinality with m-multiplicity {cardinality(spec)}")
    else:
        print(format_index_set(enumerate_cells(args.L, spec, args.dim)), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sgtdci",
                                     description="Sparse-grid truncated real-time CI for He and H2")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("basis", help="print and validate a basis set")
    _add_system(p)
    p.set_defaults(func=_cmd_basis)

    p = sub.add_parser("integrals", help="integral checksums")
    _add_system(p)
    p.set_defaults(func=_cmd_integrals)

    p = sub.add_parser("space", help="determinant-space dimensions per (mode, R)")
    _add_system(p)
    p.add_argument("--mode", default="SG")
    p.add_argument("--R", type=float, nargs="+", default=[1.25, 3.25, 7.25, 57.25])
    p.set_defaults(func=_cmd_space)

    p = sub.add_parser("propagate", help="propagate the initial state")
    _add_system(p)
    p.add_argument("--mode", default=None, help="truncate to SG or FG (needs --R)")
    p.add_argument("--R", type=float, default=None)
    p.add_argument("--dt", type=float, default=0.001)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--record-every", type=int, default=10)
    p.add_argument("--integrator", default="CN")
    p.add_argument("--solver", default="direct", choices=["direct", "gmres", "spectral"])
    p.add_argument("--projection-threshold", type=float, default=1e-2)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_propagate)

    p = sub.add_parser("sweep", help="SG vs FG sweep over an R ladder")
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("analog1d", help="1-D Fourier-box rate study")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--length", type=float, default=8.0)
    p.add_argument("--modes-per-cell", type=int, default=2)
    p.add_argument("--depth", type=float, default=1.0)
    p.add_argument("--softening", type=float, default=1.0)
    p.add_argument("--repulsion", type=float, default=1.0)
    p.add_argument("--repulsion-softening", type=float, default=1.0)
    p.add_argument("--width", type=float, default=0.6)
    p.add_argument("--t-final", type=float, default=1.0)
    p.add_argument("--radii", type=float, nargs="+", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_analog)

    p = sub.add_parser("check", help="run oracle check suites")
    p.add_argument("--suite", nargs="+", default=None, choices=SUITES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--inject-fault", action="store_true",
                   help="perturb computed values; the suites must then fail")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("index-set", help="print hyperbolic-cross index sets")
    p.add_argument("--mode", default="SG")
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--electrons", type=int, default=2)
    p.add_argument("--l-max", type=int, default=7)
    p.add_argument("--L", type=float, default=None, help="Fourier-box inverse width (cells mode)")
    p.add_argument("--dim", type=int, default=1)
    p.set_defaults(func=_cmd_index_set)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
