import math

import numpy as np
import pytest

from sgtdci import determinant_space as ds
from sgtdci.gto_basis import ContractedShell, MolecularSystem, Nucleus, build_h2_basis
from sgtdci.hyperbolic_index import HyperbolicCrossSpec
from sgtdci.integrals import ERITensor, overlap_matrix, pair_index


def test_orthonormal_input_gives_identity():
    shells = [ContractedShell((0, 0, 0), 0, 1, ((1.0, 1.0),)),
              ContractedShell((0, 0, 0), 1, 1, ((1.0, 0.7),))]
    sys_ = MolecularSystem([Nucleus(1, (0, 0, 0))], shells)
    orb = ds.orthonormalize(sys_, overlap_matrix(sys_))
    assert np.abs(orb.coefficients - np.eye(4)).max() < 1e-12
    assert orb.n_dropped == 0
    assert orb.l.tolist() == [0, 1, 1, 1]


def test_duplicate_function_is_dropped():
    sh = ContractedShell((0, 0, 0), 0, 1, ((1.0, 1.0),))
    sys_ = MolecularSystem([Nucleus(1, (0, 0, 0))], [sh, sh,
                                                      ContractedShell((0, 0, 0), 0, 2, ((1.0, 3.0),))])
    s = overlap_matrix(sys_)
    orb = ds.orthonormalize(sys_, s)
    assert orb.n_dropped == 1 and orb.n_orbitals == 2
    c = orb.coefficients
    assert np.abs(c.T @ s @ c - np.eye(2)).max() < 1e-10


def test_degenerate_basis_raises():
    sys_ = MolecularSystem([Nucleus(1, (0, 0, 0))], [ContractedShell((0, 0, 0), 0, 1, ((1.0, 1.0),))])
    with pytest.raises(ds.DegenerateBasisError):
        ds.orthonormalize(sys_, np.zeros((1, 1)))


def test_he_orbitals_and_dimension(he):
    c = he.orbitals.coefficients
    assert np.abs(c.T @ he.overlap @ c - np.eye(c.shape[1])).max() < 1e-10
    assert he.orbitals.n_dropped <= 1
    assert he.space.dim == 2080 == math.comb(he.orbitals.n_orbitals, 2)
    assert ds.build_space(he.orbitals, HyperbolicCrossSpec.full(0)).dim == 1


def test_h2_orbitals_and_dimension():
    h2 = build_h2_basis()
    s = overlap_matrix(h2)
    orb = ds.orthonormalize(h2, s)
    c = orb.coefficients
    assert np.abs(c.T @ s @ c - np.eye(c.shape[1])).max() < 1e-10
    assert ds.build_space(orb).dim == 8385
    assert set(orb.tag) == {"g", "u"}
    # the axis keeps m sharp; l is the dominant component by overlap weight
    ao_l = np.array([f.l for f in h2.basis])
    ao_m = np.array([f.m for f in h2.basis])
    for k in range(orb.n_orbitals):
        support = np.abs(c[:, k]) > 1e-12
        assert set(ao_m[support]) == {orb.m[k]}
        weight = c[:, k] * (s @ c[:, k])
        per_l = np.bincount(ao_l, weights=weight, minlength=8)
        assert np.argmax(per_l) == orb.l[k]


@pytest.mark.parametrize("radius", [2.25, 7.25, 15.25])
def test_sparse_filter_matches_angular_set(he, radius):
    spec = HyperbolicCrossSpec.sparse(radius)
    sub = ds.build_space(he.orbitals, spec)
    ls = he.orbitals.l
    for p, q in sub.pairs:
        assert (ls[p] + 0.5) * (ls[q] + 0.5) + 1 <= radius
    n_missing = sum(1 for p, q in he.space.pairs if (ls[p] + 0.5) * (ls[q] + 0.5) + 1 <= radius)
    assert n_missing == sub.dim


def test_slater_condon_diagonal(he):
    h, g, idx = he.mo.core, he.mo.eri.values, he.mo.eri.index
    hm = he.hamiltonian.matrix
    for k in np.random.default_rng(0).integers(0, he.space.dim, 20):
        p, q = he.space.pairs[k]
        ref = h[p, p] + h[q, q] + g[idx[p, p], idx[q, q]] - g[idx[p, q], idx[q, p]]
        assert hm[k, k] == pytest.approx(ref, abs=1e-13)


def test_hamiltonian_is_exactly_symmetric(he):
    assert np.array_equal(he.hamiltonian.matrix, he.hamiltonian.matrix.T)


def _random_mo(n, rng):
    h = rng.normal(size=(n, n))
    h = h + h.T
    a = rng.normal(size=(n, n, n, n))
    g = a + a.transpose(1, 0, 2, 3)
    g = g + g.transpose(0, 1, 3, 2)
    g = g + g.transpose(2, 3, 0, 1)
    idx = pair_index(n)
    npair = n * (n + 1) // 2
    packed = np.zeros((npair, npair))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    packed[idx[i, j], idx[k, l]] = g[i, j, k, l]
    return h, g, ds.MOIntegrals(h, np.zeros((n, n)), ERITensor(packed, n))


def test_hamiltonian_against_first_quantised_product_space():
    """Two-particle operator built on the full tensor product, then antisymmetrised."""
    rng = np.random.default_rng(1)
    n = 4
    h, g, mo = _random_mo(n, rng)
    space = ds.DeterminantSpace(np.array(list(zip(*np.triu_indices(n, 1)))), n)
    eye = np.eye(n)
    # <ij|H|kl> on ordered products, two-body term (ik|jl)
    big = (np.einsum("ik,jl->ijkl", h, eye) + np.einsum("ik,jl->ijkl", eye, h)
           + np.einsum("ikjl->ijkl", g)).reshape(n * n, n * n)
    basis = np.zeros((n * n, space.dim))
    for k, (p, q) in enumerate(space.pairs):
        basis[p * n + q, k] = 1 / math.sqrt(2)
        basis[q * n + p, k] = -1 / math.sqrt(2)
    ref = basis.T @ big @ basis
    assert np.abs(ds.assemble_hamiltonian(mo, space).matrix - ref).max() < 1e-12


def test_two_orbital_hand_value():
    h = np.array([[-1.0, 0.2], [0.2, -0.5]])
    idx = pair_index(2)
    packed = np.zeros((3, 3))
    vals = {(0, 0, 1, 1): 0.6, (0, 1, 0, 1): 0.15, (0, 0, 0, 0): 1.0, (1, 1, 1, 1): 0.8,
            (0, 0, 0, 1): 0.05, (0, 1, 1, 1): 0.07}
    for (i, j, k, l), v in vals.items():
        packed[idx[i, j], idx[k, l]] = packed[idx[k, l], idx[i, j]] = v
    mo = ds.MOIntegrals(h, np.zeros((2, 2)), ERITensor(packed, 2))
    space = ds.DeterminantSpace(np.array([[0, 1]]), 2)
    # h00 + h11 + (00|11) - (01|10)
    assert ds.assemble_hamiltonian(mo, space).matrix[0, 0] == pytest.approx(-1.5 + 0.6 - 0.15)


def test_index_out_of_range():
    mo = ds.MOIntegrals(np.eye(2), np.zeros((2, 2)), ERITensor(np.zeros((3, 3)), 2))
    with pytest.raises(IndexError):
        ds.assemble_hamiltonian(mo, ds.DeterminantSpace(np.array([[0, 2]]), 2))


def test_projector_algebra(he):
    sub = ds.build_space(he.orbitals, HyperbolicCrossSpec.sparse(7.25))
    emb = ds.truncation_projector(he.space, sub)
    rng = np.random.default_rng(3)
    for _ in range(100):
        c = rng.normal(size=he.space.dim) + 1j * rng.normal(size=he.space.dim)
        pc = emb.project(c)
        assert np.array_equal(emb.project(pc), pc)
        assert np.linalg.norm(pc) <= np.linalg.norm(c)
    x = rng.normal(size=sub.dim)
    assert np.array_equal(emb.restrict(emb.embed(x)), x)
    same = ds.truncation_projector(he.space, he.space)
    assert np.array_equal(same.project(c), c)


def test_non_nested_spaces_rejected(he):
    a = ds.DeterminantSpace(np.array([[0, 1], [0, 2]]), he.orbitals.n_orbitals)
    b = ds.DeterminantSpace(np.array([[0, 1], [1, 2]]), he.orbitals.n_orbitals)
    with pytest.raises(ValueError):
        ds.truncation_projector(a, b)
    with pytest.raises(ValueError):
        ds.truncation_projector(a, ds.DeterminantSpace(np.array([[0, 1]]), 3))


def test_h1_norm_dominates_l2(he):
    rng = np.random.default_rng(5)
    for _ in range(20):
        c = rng.normal(size=he.space.dim) + 1j * rng.normal(size=he.space.dim)
        assert ds.h1_norm(c, he.gram) >= np.linalg.norm(c)
    assert np.linalg.eigvalsh(he.gram).min() >= 1.0 - 1e-10


def test_single_determinant_norm():
    rng = np.random.default_rng(7)
    q, _ = np.linalg.qr(rng.normal(size=(6, 2)))
    space = ds.DeterminantSpace(np.array(list(zip(*np.triu_indices(6, 1)))), 6)
    assert np.linalg.norm(ds.pair_state(q[:, 0], q[:, 1], space)) == pytest.approx(1.0, abs=1e-14)


def test_initial_state_and_energy(he):
    assert np.linalg.norm(he.initial) == pytest.approx(1.0, abs=1e-14)
    e = ds.energy(he.initial, he.hamiltonian)
    assert e == pytest.approx(ds.energy(3 * he.initial, he.hamiltonian), rel=1e-12)
    assert ds.energy(2 * he.initial, he.hamiltonian, normalize=False) == pytest.approx(4 * e, rel=1e-12)
    with pytest.raises(ValueError):
        ds.energy(np.zeros(he.space.dim), he.hamiltonian)


def test_variational_monotonicity(he):
    lows = []
    for radius in (2.25, 3.25, 7.25, 15.25, 57.25):
        sub = ds.build_space(he.orbitals, HyperbolicCrossSpec.sparse(radius))
        emb = ds.truncation_projector(he.space, sub)
        lows.append(np.linalg.eigvalsh(he.hamiltonian.restrict(emb.indices).matrix)[0])
    assert all(b <= a + 1e-12 for a, b in zip(lows, lows[1:]))


def test_serialisation_round_trip(he, tmp_path):
    sub = ds.build_space(he.orbitals, HyperbolicCrossSpec.sparse(5.25))
    back = ds.parse_space(ds.format_space(sub))
    assert np.array_equal(back.pairs, sub.pairs) and back.n_orbitals == sub.n_orbitals
    c = np.random.default_rng(0).normal(size=sub.dim) * (1 + 0.5j)
    ds.save_ci_vector(tmp_path / "c.txt", sub, c)
    space, loaded = ds.load_ci_vector(tmp_path / "c.txt")
    assert np.array_equal(space.pairs, sub.pairs)
    assert np.array_equal(loaded, c)
