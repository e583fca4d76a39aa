"""Two-electron same-spin determinant spaces, Hamiltonians and norms.

Orbitals are orthonormalised so that each keeps a sharp angular label
``l``; a determinant ``|pq>`` (``p < q``) then carries the angular pair
``(l_p, l_q)`` on which sparse-grid / full-grid truncation acts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import csgraph
from scipy.sparse.linalg import LinearOperator

from .gto_basis import MolecularSystem
from .hyperbolic_index import HyperbolicCrossSpec, enumerate_angular
from .integrals import ERITensor, eri_tensor, one_electron_matrices

LINEAR_DEPENDENCE_THRESHOLD = 1e-8


class DegenerateBasisError(ValueError):
    pass


@dataclass
class OrthonormalOrbitals:
    coefficients: np.ndarray  # (n_ao, n_mo)
    l: np.ndarray  # angular label per orbital
    m: np.ndarray
    tag: list[str]  # centre index, or "g"/"u" for inversion-adapted pairs
    threshold: float
    n_dropped: int

    @property
    def n_orbitals(self) -> int:
        return self.coefficients.shape[1]


def _inversion_partners(system: MolecularSystem) -> np.ndarray | None:
    """Index of each AO's image under r -> -r, or None if the molecule lacks that symmetry."""
    nuc = {(n.charge, tuple(np.round(n.position, 10))) for n in system.nuclei}
    if nuc != {(n.charge, tuple(np.round(-np.array(n.position), 10))) for n in system.nuclei}:
        return None
    key = {}
    for i, f in enumerate(system.basis):
        sh = f.shell
        key[(tuple(np.round(sh.center, 10)), sh.l, sh.radial_index, sh.primitives, f.m)] = i
    partner = np.empty(system.n_basis, dtype=int)
    for i, f in enumerate(system.basis):
        sh = f.shell
        img = tuple(np.round(-np.array(sh.center), 10) + 0.0)
        j = key.get((img, sh.l, sh.radial_index, sh.primitives, f.m))
        if j is None:
            return None
        partner[i] = j
    return partner


def symmetry_adapt(system: MolecularSystem) -> tuple[np.ndarray, list[str]]:
    """AO -> symmetry-adapted transformation and a tag per adapted function.

    With inversion symmetry, off-centre partners ``chi_A, chi_B`` become
    ``(chi_A +- (-1)^l chi_B) / sqrt(2)``; functions at the origin are untouched.
    """
    n = system.n_basis
    centres = [tuple(f.shell.center) for f in system.basis]
    centre_ids = {c: k for k, c in enumerate(dict.fromkeys(centres))}
    partner = _inversion_partners(system)
    u = np.eye(n)
    tags = [str(centre_ids[c]) for c in centres]
    if partner is None:
        return u, tags
    done = set()
    for i in range(n):
        j = partner[i]
        if j == i or i in done:
            continue
        sign = (-1) ** system.basis[i].l
        u[:, i] = 0.0
        u[:, j] = 0.0
        u[i, i], u[j, i] = 1 / math.sqrt(2), sign / math.sqrt(2)
        u[i, j], u[j, j] = 1 / math.sqrt(2), -sign / math.sqrt(2)
        tags[i], tags[j] = "g", "u"
        done.update((i, j))
    return u, tags


def orthonormalize(system: MolecularSystem, overlap: np.ndarray,
                   threshold: float = LINEAR_DEPENDENCE_THRESHOLD) -> OrthonormalOrbitals:
    """Symmetric orthogonalisation inside each overlap-coupled block.

    Blocks are the connected components of the (symmetry-adapted) overlap
    graph, so the result is globally orthonormal. Without linear dependence
    each orbital is the Loewdin partner of one adapted AO and inherits its
    ``(l, m)``; blocks with overlap eigenvalues below ``threshold`` fall back
    to canonical orthogonalisation and label each vector by its dominant AO.
    """
    u, tags = symmetry_adapt(system)
    s = u.T @ overlap @ u
    s = 0.5 * (s + s.T)
    ls = np.array([f.l for f in system.basis])
    ms = np.array([f.m for f in system.basis])
    graph = (np.abs(s) > 1e-13).astype(int)
    n_comp, comp = csgraph.connected_components(graph, directed=False)
    cols, sources, dropped = [], [], 0
    for k in range(n_comp):
        idx = np.flatnonzero(comp == k)
        blk = s[np.ix_(idx, idx)]
        w, v = np.linalg.eigh(blk)
        keep = w >= threshold
        if keep.all():
            x = (v / np.sqrt(w)) @ v.T
            src = idx
        else:
            dropped += int((~keep).sum())
            x = v[:, keep] / np.sqrt(w[keep])
            weights = x * (blk @ x)
            src = idx[np.argmax(np.abs(weights), axis=0)]
        full = np.zeros((len(s), x.shape[1]))
        full[idx] = x
        cols.append(u @ full)
        sources.extend(src.tolist())
    if not sources:
        raise DegenerateBasisError("no orbitals survive the linear-dependence threshold")
    c = np.hstack(cols)
    order = np.argsort(sources, kind="stable")
    src = np.array(sources)[order]
    return OrthonormalOrbitals(c[:, order], ls[src], ms[src], [tags[i] for i in src],
                               threshold, dropped)


@dataclass
class DeterminantSpace:
    pairs: np.ndarray  # (dim, 2), p < q, lexicographic
    n_orbitals: int

    @property
    def dim(self) -> int:
        return len(self.pairs)

    def __len__(self) -> int:
        return self.dim

    @property
    def keys(self) -> np.ndarray:
        return self.pairs[:, 0] * self.n_orbitals + self.pairs[:, 1]

    def positions_in(self, other: "DeterminantSpace") -> np.ndarray:
        """Index of each of our pairs inside ``other``; raises if not nested."""
        if other.n_orbitals != self.n_orbitals:
            raise ValueError("spaces are built on different orbital sets")
        keys, okeys = self.keys, other.keys
        pos = np.searchsorted(okeys, keys)
        pos = np.minimum(pos, len(okeys) - 1) if len(okeys) else pos
        if len(okeys) == 0 and len(keys) or np.any(okeys[pos] != keys):
            raise ValueError("sub-space is not contained in the full space")
        return pos


def build_space(orbitals: OrthonormalOrbitals, spec: HyperbolicCrossSpec | None = None
                ) -> DeterminantSpace:
    n = orbitals.n_orbitals
    p, q = np.triu_indices(n, k=1)
    if spec is not None:
        if spec.partition.n_electrons != 2:
            raise ValueError("determinant spaces are built for two electrons")
        lmax = max(spec.l_max, int(orbitals.l.max()))
        allowed = np.zeros((lmax + 1, lmax + 1), dtype=bool)
        for l1, l2 in enumerate_angular(spec):
            allowed[l1, l2] = True
        keep = allowed[orbitals.l[p], orbitals.l[q]]
        p, q = p[keep], q[keep]
    return DeterminantSpace(np.column_stack([p, q]).astype(np.int64), n)


@dataclass
class MOIntegrals:
    core: np.ndarray  # T + V in the orbital basis
    kinetic: np.ndarray
    eri: ERITensor


def mo_integrals(system: MolecularSystem, orbitals: OrthonormalOrbitals,
                 one_e=None, eri_ao: ERITensor | None = None) -> MOIntegrals:
    c = orbitals.coefficients
    if one_e is None:
        one_e = one_electron_matrices(system)
    if eri_ao is None:
        eri_ao = eri_tensor(system)
    t = c.T @ one_e.kinetic @ c
    v = c.T @ one_e.nuclear @ c
    t = 0.5 * (t + t.T)
    core = t + 0.5 * (v + v.T)
    return MOIntegrals(core, t, eri_ao.transform(c))


def _one_body_block(op: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    p, q = rows[:, 0][:, None], rows[:, 1][:, None]
    r, s = cols[:, 0][None, :], cols[:, 1][None, :]
    return ((q == s) * op[p, r] + (p == r) * op[q, s]
            - (p == s) * op[q, r] - (q == r) * op[p, s])


def one_body_matrix(op: np.ndarray, space: DeterminantSpace, chunk: int = 512) -> np.ndarray:
    """Matrix of ``o(1) + o(2)`` between normalised antisymmetrised pairs."""
    out = np.empty((space.dim, space.dim))
    for start in range(0, space.dim, chunk):
        out[start:start + chunk] = _one_body_block(op, space.pairs[start:start + chunk],
                                                   space.pairs)
    return out


@dataclass
class HamiltonianOperator:
    matrix: np.ndarray
    core: np.ndarray
    eri: ERITensor | None = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def matvec(self, c: np.ndarray) -> np.ndarray:
        return self.matrix @ c

    def as_linear_operator(self) -> LinearOperator:
        return LinearOperator(self.matrix.shape, matvec=self.matvec, dtype=complex)

    def restrict(self, indices: np.ndarray) -> "HamiltonianOperator":
        """Galerkin restriction onto the determinants at ``indices``."""
        return HamiltonianOperator(self.matrix[np.ix_(indices, indices)], self.core, self.eri)


def assemble_hamiltonian(mo: MOIntegrals, space: DeterminantSpace,
                         chunk: int = 256) -> HamiltonianOperator:
    """``<pq|H|rs> = one-body terms + (pr|qs) - (ps|qr)`` (chemists' notation)."""
    n = space.n_orbitals
    if space.dim and space.pairs.max() >= n:
        raise IndexError("pair index outside the orbital range")
    g = mo.eri.values
    idx = mo.eri.index
    h = np.empty((space.dim, space.dim))
    cols = space.pairs
    r, s = cols[:, 0][None, :], cols[:, 1][None, :]
    for start in range(0, space.dim, chunk):
        rows = space.pairs[start:start + chunk]
        p, q = rows[:, 0][:, None], rows[:, 1][:, None]
        blk = _one_body_block(mo.core, rows, cols)
        blk += g[idx[p, r], idx[q, s]]
        blk -= g[idx[p, s], idx[q, r]]
        h[start:start + chunk] = blk
    return HamiltonianOperator(h, mo.core, mo.eri)


def h1_gram_matrix(mo: MOIntegrals, space: DeterminantSpace) -> np.ndarray:
    """Gram matrix of ``1 - Laplace_1 - Laplace_2`` over the determinant basis.

    As a one-body operator this is ``sum_j (1/2 + 2 T_j)`` on two electrons.
    """
    op = 0.5 * np.eye(space.n_orbitals) + 2.0 * mo.kinetic
    return one_body_matrix(op, space)


class SpaceEmbedding:
    """Restriction / embedding between a determinant space and a sub-space of it."""

    def __init__(self, full: DeterminantSpace, sub: DeterminantSpace):
        self.full = full
        self.sub = sub
        self.indices = sub.positions_in(full)

    def restrict(self, c: np.ndarray) -> np.ndarray:
        return c[..., self.indices]

    def embed(self, c: np.ndarray) -> np.ndarray:
        out = np.zeros(c.shape[:-1] + (self.full.dim,), dtype=np.result_type(c, float))
        out[..., self.indices] = c
        return out

    def project(self, c: np.ndarray) -> np.ndarray:
        return self.embed(self.restrict(c))


def truncation_projector(space_full: DeterminantSpace, space_sub: DeterminantSpace) -> SpaceEmbedding:
    return SpaceEmbedding(space_full, space_sub)


def h1_norm(c: np.ndarray, gram: np.ndarray) -> float:
    val = np.real(np.vdot(c, gram @ c))
    return math.sqrt(max(val, 0.0))


def energy(c: np.ndarray, h: HamiltonianOperator | np.ndarray, normalize: bool = True) -> float:
    mat = h.matrix if isinstance(h, HamiltonianOperator) else h
    nrm2 = np.real(np.vdot(c, c))
    if nrm2 == 0:
        raise ValueError("energy of the zero vector is undefined")
    val = np.real(np.vdot(c, mat @ c))
    return float(val / nrm2) if normalize else float(val)


def pair_state(a: np.ndarray, b: np.ndarray, space: DeterminantSpace) -> np.ndarray:
    """Coefficients of the antisymmetrised product of orbitals ``a`` and ``b`` (MO basis)."""
    p, q = space.pairs[:, 0], space.pairs[:, 1]
    return a[p] * b[q] - a[q] * b[p]


def initial_ci_vector(ao_a: np.ndarray, ao_b: np.ndarray, orbitals: OrthonormalOrbitals,
                      overlap: np.ndarray, space: DeterminantSpace) -> np.ndarray:
    """Unit-norm CI vector for two AO-expanded orbitals in a complete-pair space."""
    c = orbitals.coefficients
    a = c.T @ overlap @ ao_a
    b = c.T @ overlap @ ao_b
    vec = pair_state(a, b, space).astype(complex)
    nrm = np.linalg.norm(vec)
    if nrm == 0:
        raise ValueError("the two orbitals are linearly dependent")
    return vec / nrm


# --- serialisation ---------------------------------------------------------------

def format_space(space: DeterminantSpace) -> str:
    head = f"# n_orbitals {space.n_orbitals} dim {space.dim}\n"
    return head + "".join(f"{p} {q}\n" for p, q in space.pairs)


def parse_space(text: str) -> DeterminantSpace:
    n = None
    rows = []
    for line in text.splitlines():
        if line.startswith("#"):
            tok = line[1:].split()
            if "n_orbitals" in tok:
                n = int(tok[tok.index("n_orbitals") + 1])
            continue
        if line.strip():
            rows.append([int(t) for t in line.split()])
    pairs = np.array(rows, dtype=np.int64).reshape(-1, 2)
    if n is None:
        n = int(pairs.max()) + 1 if len(pairs) else 0
    return DeterminantSpace(pairs, n)


def save_ci_vector(path, space: DeterminantSpace, c: np.ndarray) -> None:
    lines = [f"# n_orbitals {space.n_orbitals} dim {space.dim}"]
    lines += [f"{p} {q} {v.real:.17e} {v.imag:.17e}" for (p, q), v in zip(space.pairs, c)]
    Path(path).write_text("\n".join(lines) + "\n")


def load_ci_vector(path) -> tuple[DeterminantSpace, np.ndarray]:
    text = Path(path).read_text()
    space = parse_space("\n".join(" ".join(l.split()[:2]) if not l.startswith("#") else l
                                  for l in text.splitlines()))
    vals = [complex(float(t[2]), float(t[3])) for t in
            (l.split() for l in text.splitlines() if l.strip() and not l.startswith("#"))]
    return space, np.array(vals, dtype=complex)
