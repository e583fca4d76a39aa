import math

import numpy as np
import pytest
from scipy import integrate
from scipy.spatial.transform import Rotation

from sgtdci.gto_basis import (BasisFunction, ContractedShell, MolecularSystem, Nucleus,
                              SpinPartition, build_helium_basis)
from sgtdci.integrals import (UnsupportedAngularMomentum, boys, eri, eri_tensor, h1_gram,
                              hardy_ratio, kinetic, kinetic_matrix, nuclear, nuclear_matrix,
                              one_electron_matrices, overlap, overlap_matrix)
from sgtdci.oracles import (boys_oracle, eri_oracle, kinetic_oracle, nuclear_oracle,
                            overlap_oracle)


def primitive_s(zeta=1.0, center=(0, 0, 0)):
    """Unnormalised ``exp(-zeta r^2)``: undo the Y_00 factor."""
    shell = ContractedShell(center, 0, 1, ((1.0, zeta),))
    return BasisFunction(shell, 0, math.sqrt(4 * math.pi))


def system_of(shells, nuclei=(Nucleus(1, (0, 0, 0)),)):
    return MolecularSystem(list(nuclei), list(shells), SpinPartition.all_same_spin(2), "test")


def random_shell(rng, l_max=2):
    l = int(rng.integers(0, l_max + 1))
    n = int(rng.integers(1, 3))
    prims = tuple((float(rng.uniform(0.3, 1.0)), float(rng.uniform(0.3, 1.5))) for _ in range(n))
    return ContractedShell(tuple(rng.uniform(-0.8, 0.8, 3)), l, 1, prims)


@pytest.mark.parametrize("n", [0, 1, 3, 8, 16])
def test_boys_at_zero(n):
    assert boys(n, 0.0) == pytest.approx(1 / (2 * n + 1), rel=1e-15)


def test_boys_examples():
    assert boys(0, 1.0) == pytest.approx(0.746824132812427, rel=1e-13)
    assert boys(0, 30.0) == pytest.approx(0.5 * math.sqrt(math.pi / 30), abs=1e-10)
    with pytest.raises(ValueError):
        boys(0, -1.0)
    with pytest.raises(ValueError):
        boys(-1, 1.0)


@pytest.mark.parametrize("n", [0, 2, 5, 11, 16])
@pytest.mark.parametrize("x", [1e-6, 0.3, 2.5, 9.0, 17.0, 33.0, 49.9, 50.0, 80.0])
def test_boys_against_quadrature(n, x):
    assert boys(n, x) == pytest.approx(boys_oracle(n, x), rel=1e-12)


def test_boys_against_scipy_quad():
    for n, x in [(0, 0.5), (4, 7.0), (12, 25.0)]:
        ref, _ = integrate.quad(lambda t: t ** (2 * n) * math.exp(-x * t * t), 0, 1,
                                epsabs=0, epsrel=1e-13)
        assert boys(n, x) == pytest.approx(ref, rel=1e-11)


def test_primitive_closed_forms():
    a = primitive_s()
    assert overlap(a, a) == pytest.approx((math.pi / 2) ** 1.5, rel=1e-13)
    assert eri(a, a, a, a) == pytest.approx(math.pi**2.5 / 4, rel=1e-13)
    # int exp(-2 r^2) / r = pi
    assert nuclear(a, a, [Nucleus(1, (0, 0, 0))]) == pytest.approx(-math.pi, rel=1e-13)
    assert nuclear(a, a, [Nucleus(1, (0, 0, 0))]) == pytest.approx(
        nuclear_oracle(a, a, [Nucleus(1, (0, 0, 0))]), rel=1e-8)


def test_normalised_self_overlap():
    for f in build_helium_basis().basis:
        assert overlap(f, f) == pytest.approx(1.0, abs=1e-12)


def test_h1_gram_example():
    f = ContractedShell((0, 0, 0), 0, 1, ((1.0, 0.5),)).functions()[0]
    assert h1_gram(f, f) == pytest.approx(2.5, rel=1e-13)
    assert kinetic(f, f) == pytest.approx(0.75, rel=1e-13)


def test_h1_gram_matrix_positive_definite():
    he = build_helium_basis()
    g = overlap_matrix(he) + 2 * kinetic_matrix(he)
    assert np.abs(g - g.T).max() == 0
    assert np.linalg.eigvalsh(g).min() > 0


def test_one_electron_invariants():
    he = build_helium_basis()
    m = one_electron_matrices(he)
    assert np.linalg.eigvalsh(m.overlap).min() > 0
    assert np.linalg.eigvalsh(m.kinetic).min() > -1e-12
    assert (np.diag(m.nuclear) < 0).all()
    for mat in (m.overlap, m.kinetic, m.nuclear):
        assert np.abs(mat - mat.T).max() == 0


def test_eri_permutation_symmetry():
    rng = np.random.default_rng(2)
    shells = [random_shell(rng) for _ in range(3)]
    sys_ = system_of(shells)
    g = eri_tensor(sys_).full()
    for perm in ("jikl", "ijlk", "klij", "lkji"):
        assert np.array_equal(g, np.einsum(f"ijkl->{perm}", g))
    assert (np.einsum("iiii->i", g) > 0).all()
    fs = sys_.basis
    assert eri(fs[0], fs[3], fs[1], fs[2]) == eri(fs[1], fs[2], fs[0], fs[3])


def test_point_charge_limit():
    a = ContractedShell((0, 0, 0), 0, 1, ((1.0, 0.8),)).functions()[0]
    b = ContractedShell((0, 0, 20.0), 0, 1, ((1.0, 1.1),)).functions()[0]
    assert eri(a, a, b, b) == pytest.approx(1 / 20, rel=1e-2)


@pytest.mark.parametrize("l", range(8))
def test_hardy_inequality_per_l(l):
    for zeta in (0.25, 1.0, 8.0):
        f = ContractedShell((0, 0, 0), l, 1, ((1.0, zeta),)).functions()[0]
        grad, weighted = hardy_ratio(f)
        assert grad >= (l + 0.5) * weighted - 1e-10


def test_hardy_examples_and_scale_invariance():
    ratios = {}
    for l in (0, 1):
        for zeta in (0.5, 3.0):
            f = ContractedShell((1, 2, 3), l, 1, ((1.0, zeta),)).functions()[0]
            g, w = hardy_ratio(f)
            ratios[l, zeta] = g / w
    assert ratios[0, 0.5] >= 0.5 and ratios[1, 0.5] >= 1.5
    assert ratios[0, 0.5] == pytest.approx(ratios[0, 3.0], rel=1e-12)
    assert ratios[1, 0.5] == pytest.approx(ratios[1, 3.0], rel=1e-12)
    # gradient norm squared of a normalised s Gaussian is 3 zeta
    f = ContractedShell((0, 0, 0), 0, 1, ((1.0, 0.5),)).functions()[0]
    assert hardy_ratio(f)[0] ** 2 == pytest.approx(1.5, rel=1e-13)


def test_translation_invariance():
    rng = np.random.default_rng(4)
    shells = [random_shell(rng) for _ in range(4)]
    shift = np.array([0.7, -1.3, 2.1])
    moved = [ContractedShell(tuple(np.asarray(s.center) + shift), s.l, s.radial_index, s.primitives)
             for s in shells]
    a, b = system_of(shells), system_of(moved, [Nucleus(1, tuple(shift))])
    for fn in (overlap_matrix, kinetic_matrix, nuclear_matrix):
        assert np.abs(fn(a) - fn(b)).max() < 1e-12
    assert np.abs(eri_tensor(a).values - eri_tensor(b).values).max() < 1e-12


def test_rotation_invariance():
    rng = np.random.default_rng(6)
    shells = [random_shell(rng) for _ in range(4)]
    rot = Rotation.from_euler("zyx", [0.4, 1.1, -0.7]).as_matrix()
    turned = [ContractedShell(tuple(rot @ np.asarray(s.center)), s.l, s.radial_index, s.primitives)
              for s in shells]
    a, b = system_of(shells), system_of(turned)
    for fn in (overlap_matrix, kinetic_matrix, nuclear_matrix):
        assert np.abs(np.linalg.eigvalsh(fn(a)) - np.linalg.eigvalsh(fn(b))).max() < 1e-10


def test_one_electron_against_oracles():
    rng = np.random.default_rng(8)
    nuclei = [Nucleus(2, (0.1, -0.2, 0.3)), Nucleus(1, (-0.5, 0.4, 0.0))]
    for _ in range(12):
        fa = rng.choice(random_shell(rng, 3).functions())
        fb = rng.choice(random_shell(rng, 3).functions())
        assert overlap(fa, fb) == pytest.approx(overlap_oracle(fa, fb), rel=1e-9, abs=1e-12)
        assert kinetic(fa, fb) == pytest.approx(kinetic_oracle(fa, fb), rel=1e-9, abs=1e-12)
        assert nuclear(fa, fb, nuclei) == pytest.approx(nuclear_oracle(fa, fb, nuclei),
                                                         rel=1e-8, abs=1e-10)


def test_eri_against_oracle():
    rng = np.random.default_rng(10)
    for _ in range(6):
        fs = [rng.choice(random_shell(rng).functions()) for _ in range(4)]
        ref = eri_oracle(*fs)
        if abs(ref) < 1e-8:
            continue
        assert eri(*fs) == pytest.approx(ref, rel=1e-6)


def test_unsupported_angular_momentum():
    f = ContractedShell((0, 0, 0), 8, 1, ((1.0, 1.0),)).functions()[0]
    with pytest.raises(UnsupportedAngularMomentum):
        overlap(f, f)
