import math

import numpy as np
import pytest
from scipy.linalg import expm

from sgtdci import determinant_space as ds
from sgtdci.hyperbolic_index import HyperbolicCrossSpec
from sgtdci.propagator import (Integrator, PropagationConfig, PropagationError, Propagator,
                               TrajectoryRecord, compare_trajectories, global_error,
                               observed_order, propagate, step)


def random_hermitian(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n))
    return 0.5 * (a + a.T)


def random_unit(n, seed):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=n) + 1j * rng.normal(size=n)
    return c / np.linalg.norm(c)


def test_config_validation():
    assert PropagationConfig().final_time == pytest.approx(1.0)
    with pytest.raises(ValueError):
        PropagationConfig(dt=0)
    with pytest.raises(ValueError):
        PropagationConfig(n_steps=0)
    with pytest.raises(ValueError):
        PropagationConfig(solver="cg")
    assert Integrator.parse("exacteigen") is Integrator.EXACT_EIGEN


@pytest.mark.parametrize("integrator", ["CN", "ExactEigen"])
def test_zero_hamiltonian(integrator):
    c = random_unit(5, 0)
    assert np.array_equal(step(np.zeros((5, 5)), c, 0.1, integrator), c)


def test_two_level_exact_step():
    h = np.array([[0.0, 1.0], [1.0, 0.0]])
    dt = 0.37
    out = step(h, np.array([1.0, 0.0]), dt, "ExactEigen")
    assert np.abs(out - [math.cos(dt), -1j * math.sin(dt)]).max() < 1e-12


@pytest.mark.parametrize("solver", ["direct", "gmres", "spectral"])
def test_cn_solvers_agree_with_cayley_formula(solver):
    h = random_hermitian(40, 1)
    c = random_unit(40, 2)
    dt = 0.05
    ref = np.linalg.solve(np.eye(40) + 0.5j * dt * h, (np.eye(40) - 0.5j * dt * h) @ c)
    out = Propagator(h, dt, solver=solver).step(c)
    assert np.abs(out - ref).max() < 1e-11


def test_gmres_non_convergence_raises():
    h = random_hermitian(60, 3) * 1e4
    prop = Propagator(h, 1.0, solver="gmres", tol=1e-15, max_iter=1)
    with pytest.raises(PropagationError):
        prop.step(random_unit(60, 4))


def test_exact_eigen_size_cap():
    with pytest.raises(ValueError):
        Propagator(np.zeros((4097, 4097)), 0.1, "ExactEigen")


def test_crank_nicolson_is_second_order():
    h = random_hermitian(50, 5)
    c = random_unit(50, 6)
    dts = [4e-3, 2e-3, 1e-3, 5e-4]
    errs = [global_error(h, c, dt, round(0.4 / dt)) for dt in dts]
    assert observed_order(errs, dts) == pytest.approx(2.0, abs=0.1)


@pytest.mark.parametrize("solver", ["direct", "gmres", "spectral"])
def test_unitarity_per_step(solver):
    h = random_hermitian(30, 7)
    c = random_unit(30, 8)
    prop = Propagator(h, 0.01, solver=solver)
    for _ in range(50):
        new = prop.step(c)
        assert abs(np.linalg.norm(new) - np.linalg.norm(c)) < 1e-11
        c = new


def test_time_reversal():
    h = random_hermitian(30, 9)
    c = random_unit(30, 10)
    fwd, back = Propagator(h, 0.01), Propagator(h, -0.01)
    d = c
    for _ in range(100):
        d = fwd.step(d)
    for _ in range(100):
        d = back.step(d)
    assert np.abs(d - c).max() < 1e-10


def test_stationary_state_keeps_overlap():
    h = random_hermitian(20, 11)
    v = np.linalg.eigh(h)[1][:, 3].astype(complex)
    traj = propagate(h, v, PropagationConfig(0.01, 200, record_every=50))
    for s in traj.states:
        assert abs(abs(np.vdot(s, v)) - 1) < 1e-9


def test_recording_cadence_and_nan():
    h = random_hermitian(8, 12)
    traj = propagate(h, random_unit(8, 13), PropagationConfig(0.01, 25, record_every=10))
    assert np.allclose(traj.times, [0, 0.1, 0.2, 0.25])
    assert np.all(np.diff(traj.times) > 0)
    with pytest.raises(ValueError):
        propagate(h, 2 * random_unit(8, 13), PropagationConfig(0.01, 5))
    bad = h.copy()
    bad[0, 0] = np.nan
    with pytest.raises((PropagationError, ValueError)):
        propagate(bad, random_unit(8, 13), PropagationConfig(0.01, 5, record_every=1))


def test_exact_and_spectral_fast_path_match_stepping():
    h = random_hermitian(25, 14)
    c = random_unit(25, 15)
    cfg = PropagationConfig(0.02, 30, "ExactEigen", record_every=10)
    traj = propagate(h, c, cfg)
    assert np.abs(traj.states[-1] - expm(-1j * 0.6 * h) @ c).max() < 1e-12
    direct = propagate(h, c, PropagationConfig(0.02, 30, record_every=10))
    spectral = propagate(h, c, PropagationConfig(0.02, 30, record_every=10, solver="spectral"))
    assert np.abs(direct.states - spectral.states).max() < 1e-12


def test_full_truncation_gives_zero_error(he):
    cfg = PropagationConfig(0.001, 40, record_every=10, solver="spectral")
    ref = propagate(he.hamiltonian, he.initial, cfg)
    same = propagate(he.hamiltonian, he.initial, cfg)
    e, de = compare_trajectories(same, ref, he.gram)
    assert e < 1e-9 and de < 1e-9


def test_initial_error_is_projection_residual(he):
    sub = ds.build_space(he.orbitals, HyperbolicCrossSpec.sparse(5.25))
    emb = ds.truncation_projector(he.space, sub)
    cfg = PropagationConfig(0.001, 20, record_every=10, solver="spectral")
    ref = propagate(he.hamiltonian, he.initial, cfg)
    trunc = propagate(he.hamiltonian.restrict(emb.indices), emb.restrict(he.initial), cfg,
                      check_norm=False)
    compare_trajectories(trunc, ref, he.gram, emb)
    residual = he.initial - emb.project(he.initial)
    assert trunc.h1_error[0] == pytest.approx(ds.h1_norm(residual, he.gram), rel=1e-12, abs=1e-15)


def test_nested_ladder_errors_do_not_increase(he):
    cfg = PropagationConfig(0.01, 100, "ExactEigen", record_every=10)
    ref = propagate(he.hamiltonian, he.initial, cfg)
    maxima = []
    for radius in (2.25, 3.25, 5.25, 9.25, 17.25):
        sub = ds.build_space(he.orbitals, HyperbolicCrossSpec.sparse(radius))
        emb = ds.truncation_projector(he.space, sub)
        tr = propagate(he.hamiltonian.restrict(emb.indices), emb.restrict(he.initial), cfg,
                       check_norm=False)
        maxima.append(compare_trajectories(tr, ref, he.gram, emb)[0])
    assert all(b <= a + 1e-12 for a, b in zip(maxima, maxima[1:]))


def test_mismatched_grids_rejected():
    h = random_hermitian(4, 16)
    c = random_unit(4, 17)
    a = propagate(h, c, PropagationConfig(0.01, 10, record_every=5))
    b = propagate(h, c, PropagationConfig(0.01, 10, record_every=2))
    with pytest.raises(ValueError):
        compare_trajectories(a, b, np.eye(4))


def test_csv_round_trip(tmp_path):
    h = random_hermitian(6, 18)
    ref = propagate(h, random_unit(6, 19), PropagationConfig(0.01, 20, record_every=5))
    tr = propagate(h, random_unit(6, 20), PropagationConfig(0.01, 20, record_every=5))
    compare_trajectories(tr, ref, np.eye(6))
    tr.to_csv(tmp_path / "t.csv")
    back = TrajectoryRecord.from_csv(tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text().splitlines()[0] == "time,norm,energy,h1_error,energy_dev"
    assert np.allclose(back.times, tr.times)
    assert np.allclose(back.norms, tr.norms, rtol=1e-14)
    assert np.allclose(back.h1_error, tr.h1_error, rtol=1e-11)
    ref.to_csv(tmp_path / "r.csv")
    assert TrajectoryRecord.from_csv(tmp_path / "r.csv").h1_error is None
