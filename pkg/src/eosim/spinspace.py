"""Product and total-spin bases for small chains of spin-1/2 particles.

Sites are numbered from 1. In the product basis site 1 is the most
significant tensor factor and ``|up> = (1, 0)``.

Coupled bases are described by a binary *coupling tree* of site numbers,
e.g. ``((1, 2), 3)`` couples spins 1 and 2 first and then adds spin 3. The
six-spin tree ``(((1, 2), 3), ((5, 6), 4))`` builds qubit A from the outer
pair (1, 2) plus spin 3 and qubit B from its outer pair (5, 6) plus spin 4,
then couples the two qubits.

Basis states are ordered by total spin, then total ``S_z``, then the
intermediate spins (nodes nearer the root first, left before right). For
three spins this is exactly ``|0->, |1->, |0+>, |1+>, |L1> .. |L4>``; for
six spins it puts the computational states (both qubits at spin 1/2) first
in every block.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Union

import numpy as np

from .numkit import ComplexMatrix, as_matrix

Tree = Union[int, tuple]

SX = np.array([[0, 1], [1, 0]], dtype=np.complex128) / 2
SY = np.array([[0, -1j], [1j, 0]], dtype=np.complex128) / 2
SZ = np.array([[1, 0], [0, -1]], dtype=np.complex128) / 2
UP = np.array([1, 0], dtype=np.complex128)
DOWN = np.array([0, 1], dtype=np.complex128)

DEFAULT_TREES: dict[int, Tree] = {
    2: (1, 2),
    3: ((1, 2), 3),
    6: (((1, 2), 3), ((5, 6), 4)),
}


class BlockCouplingError(ValueError):
    """An operator mixes total-spin blocks that exchange cannot couple."""


# -- product-space operators -------------------------------------------------

def site_operator(n_spins: int, site: int, op: np.ndarray) -> ComplexMatrix:
    """Embed a single-site 2x2 operator at ``site`` (1-based)."""
    if not 1 <= site <= n_spins:
        raise ValueError(f"site {site} out of range for {n_spins} spins")
    factors = [np.eye(2, dtype=np.complex128)] * n_spins
    factors[site - 1] = op
    return reduce(np.kron, factors)


@lru_cache(maxsize=None)
def _spin_vectors(n_spins: int) -> tuple:
    return tuple(tuple(site_operator(n_spins, s, op) for op in (SX, SY, SZ))
                 for s in range(1, n_spins + 1))


def spin_components(n_spins: int, sites=None) -> tuple[ComplexMatrix, ComplexMatrix, ComplexMatrix]:
    """Total ``(S_x, S_y, S_z)`` of the given sites (default: all)."""
    sites = range(1, n_spins + 1) if sites is None else sites
    vecs = _spin_vectors(n_spins)
    return tuple(sum(vecs[s - 1][k] for s in sites) for k in range(3))


def total_s2(n_spins: int, sites=None) -> ComplexMatrix:
    sx, sy, sz = spin_components(n_spins, sites)
    return sx @ sx + sy @ sy + sz @ sz


def total_sz(n_spins: int, sites=None) -> ComplexMatrix:
    return spin_components(n_spins, sites)[2]


def pauli_exchange_term(n_spins: int, i: int, j: int) -> ComplexMatrix:
    """``S_i . S_j - 1/4`` on the full product space.

    Its eigenvalue is -1 on the singlet of the pair and 0 on the triplets.
    """
    if not (1 <= i < j <= n_spins):
        raise ValueError(f"need 1 <= i < j <= {n_spins}, got ({i}, {j})")
    vecs = _spin_vectors(n_spins)
    dot = sum(vecs[i - 1][k] @ vecs[j - 1][k] for k in range(3))
    return dot - 0.25 * np.eye(2**n_spins)


def product_state(spins: str) -> np.ndarray:
    """Product state from a string like ``"ud d"`` (``u``/``d`` per site)."""
    vecs = [UP if c == "u" else DOWN for c in spins if c in "ud"]
    return reduce(np.kron, vecs)


def singlet_projector(n_spins: int, i: int, j: int) -> ComplexMatrix:
    """Projector onto the singlet of pair ``(i, j)``: ``-(S_i . S_j - 1/4)``."""
    return -pauli_exchange_term(n_spins, i, j)


# -- Clebsch-Gordan coefficients --------------------------------------------

def _ladder(j: Fraction) -> tuple[np.ndarray, np.ndarray]:
    """``J_z`` and ``J_-`` for spin ``j`` in the basis m = j, j-1, ..., -j."""
    ms = [j - k for k in range(int(2 * j) + 1)]
    jz = np.diag([float(m) for m in ms])
    jm = np.zeros((len(ms), len(ms)))
    for k, m in enumerate(ms[:-1]):
        jm[k + 1, k] = np.sqrt(float(j * (j + 1) - m * (m - 1)))
    return jz, jm


@lru_cache(maxsize=None)
def cg_table(j1: Fraction, j2: Fraction) -> dict:
    """All CG coefficients ``<j1 m1; j2 m2 | J M>`` for fixed ``j1, j2``.

    Built from lowering operators: each highest-weight state ``|J J>`` is the
    part of the ``M = J`` subspace orthogonal to all larger ``J``, with the
    Condon-Shortley choice ``<j1 j1; j2 J-j1 | J J> > 0``; the rest of the
    multiplet follows by repeated lowering.
    """
    j1, j2 = Fraction(j1), Fraction(j2)
    m1s = [j1 - k for k in range(int(2 * j1) + 1)]
    m2s = [j2 - k for k in range(int(2 * j2) + 1)]
    _, lo1 = _ladder(j1)
    _, lo2 = _ladder(j2)
    lower = np.kron(lo1, np.eye(len(m2s))) + np.kron(np.eye(len(m1s)), lo2)
    mtot = np.array([float(a + b) for a in m1s for b in m2s])

    found: dict[tuple, np.ndarray] = {}
    table: dict[tuple, float] = {}
    big_j = j1 + j2
    while big_j >= abs(j1 - j2):
        sub = np.flatnonzero(np.isclose(mtot, float(big_j)))
        vec = np.zeros(len(mtot))
        # Gram-Schmidt against higher multiplets sharing M = big_j.
        for idx in sub:
            trial = np.zeros(len(mtot))
            trial[idx] = 1.0
            for (jj, mm), other in found.items():
                if mm == big_j:
                    trial -= other * (other @ trial)
            if np.linalg.norm(trial) > 1e-8:
                vec = trial / np.linalg.norm(trial)
                break
        # Flat index of |m1 = j1, m2 = J - j1> (the m1 = j1 row comes first).
        if (big_j - j1) in m2s and vec[m2s.index(big_j - j1)] < 0:
            vec = -vec
        m = big_j
        while True:
            found[(big_j, m)] = vec
            if m == -big_j:
                break
            vec = lower @ vec
            vec /= np.linalg.norm(vec)
            m -= 1
        big_j -= 1
    for (jj, mm), vec in found.items():
        for a, ma in enumerate(m1s):
            for b, mb in enumerate(m2s):
                c = vec[a * len(m2s) + b]
                if abs(c) > 1e-14:
                    table[(ma, mb, jj, mm)] = float(c)
    return table


def clebsch_gordan(j1, m1, j2, m2, j, m) -> float:
    """``<j1 m1; j2 m2 | j m>`` (Condon-Shortley). Arguments may be floats."""
    key = tuple(Fraction(x).limit_denominator(2) for x in (m1, m2, j, m))
    return cg_table(Fraction(j1).limit_denominator(2),
                    Fraction(j2).limit_denominator(2)).get(key, 0.0)


# -- coupled bases -----------------------------------------------------------

@dataclass(frozen=True)
class CoupledState:
    """A coupled basis state ``|S, S_z; intermediate spins>``."""

    S_tot: Fraction
    Sz_tot: Fraction
    intermediate_labels: tuple[Fraction, ...]

    def __str__(self) -> str:
        inner = ", ".join(str(x) for x in self.intermediate_labels)
        return f"|S={self.S_tot}, Sz={self.Sz_tot}; {inner}>"


@dataclass(frozen=True, eq=False)
class SpinBasis:
    """Ordered coupled basis with its change of basis to the product space.

    ``to_product[:, k]`` is basis state ``k`` expressed in the product basis,
    so an operator ``A`` in the product basis reads
    ``to_product^dagger A to_product`` in the coupled basis.
    """

    n_spins: int
    tree: Tree
    label_names: tuple[str, ...]
    states: tuple[CoupledState, ...]
    to_product: ComplexMatrix

    def __len__(self) -> int:
        return len(self.states)

    def to_coupled(self, op) -> ComplexMatrix:
        b = self.to_product
        return b.conj().T @ as_matrix(op) @ b

    def state_vector(self, index: int) -> np.ndarray:
        return self.to_product[:, index].copy()

    def label(self, index: int, name: str) -> Fraction:
        return self.states[index].intermediate_labels[self.label_names.index(name)]

    def block_indices(self, S_tot, Sz_tot) -> np.ndarray:
        s, sz = Fraction(S_tot).limit_denominator(2), Fraction(Sz_tot).limit_denominator(2)
        return np.array([k for k, st in enumerate(self.states)
                         if st.S_tot == s and st.Sz_tot == sz], dtype=int)

    def block_sizes(self) -> dict[Fraction, int]:
        """Multiplicity of each total spin (states per ``S_z`` value)."""
        sizes: dict[Fraction, int] = {}
        for st in self.states:
            if st.Sz_tot == st.S_tot:
                sizes[st.S_tot] = sizes.get(st.S_tot, 0) + 1
        return dict(sorted(sizes.items()))

    def qubit_spin_names(self) -> tuple[str, ...]:
        """Labels of the three-spin subtrees that form encoded qubits."""
        return tuple(name for name, sites in zip(self.label_names, _internal_site_sets(self.tree))
                     if len(sites) == 3)

    def is_computational(self, index: int) -> bool:
        """True if every encoded qubit of the state sits in its spin-1/2 sector."""
        st = self.states[index]
        if self.n_spins == 3:
            return st.S_tot == Fraction(1, 2)
        names = self.qubit_spin_names()
        return bool(names) and all(self.label(index, n) == Fraction(1, 2) for n in names)

    def projector(self, indices) -> ComplexMatrix:
        """Product-space projector onto the span of the given basis states."""
        cols = self.to_product[:, np.asarray(indices, dtype=int)]
        return cols @ cols.conj().T


def _validate_tree(tree: Tree) -> list[int]:
    if isinstance(tree, (int, np.integer)):
        return [int(tree)]
    if isinstance(tree, tuple) and len(tree) == 2:
        return _validate_tree(tree[0]) + _validate_tree(tree[1])
    raise ValueError(f"unsupported coupling tree node {tree!r}")


def _internal_nodes(tree: Tree) -> list[tuple]:
    """Non-root internal nodes, root-nearest first, left before right."""
    out: list[tuple] = []
    level = [tree]
    while level:
        nxt = []
        for node in level:
            if isinstance(node, tuple):
                nxt.extend(node)
        nxt_internal = [n for n in nxt if isinstance(n, tuple)]
        out.extend(nxt_internal)
        level = nxt_internal
    return out


def _internal_site_sets(tree: Tree) -> list[list[int]]:
    return [_validate_tree(node) for node in _internal_nodes(tree)]


def _couple(tree: Tree):
    """Coupled states of a subtree as ``(j, m, labels, sites, tensor)`` tuples.

    ``labels`` maps internal subtree nodes (by site tuple) to their spin.
    ``tensor`` has one axis of length 2 per site, in the order of ``sites``.
    """
    if not isinstance(tree, tuple):
        half = Fraction(1, 2)
        return [(half, half, {}, (tree,), UP.copy()),
                (half, -half, {}, (tree,), DOWN.copy())]
    left, right = _couple(tree[0]), _couple(tree[1])
    groups: dict = {}
    for jl, ml, lab_l, sites_l, vec_l in left:
        for jr, mr, lab_r, sites_r, vec_r in right:
            key = (jl, tuple(sorted(lab_l.items())), jr, tuple(sorted(lab_r.items())))
            groups.setdefault(key, []).append((ml, mr, vec_l, vec_r, lab_l, lab_r, sites_l + sites_r))
    out = []
    for (jl, _, jr, _), members in groups.items():
        j = abs(jl - jr)
        while j <= jl + jr:
            m = j
            while m >= -j:
                acc = None
                for ml, mr, vl, vr, lab_l, lab_r, sites in members:
                    c = clebsch_gordan(jl, ml, jr, mr, j, m)
                    if c == 0.0:
                        continue
                    term = c * np.multiply.outer(vl, vr)
                    acc = term if acc is None else acc + term
                labels = dict(lab_l)
                labels.update(lab_r)
                for node, val in ((tree[0], jl), (tree[1], jr)):
                    if isinstance(node, tuple):
                        labels[tuple(_validate_tree(node))] = val
                out.append((j, m, labels, sites, acc))
                m -= 1
            j += 1
    return out


@lru_cache(maxsize=None)
def build_coupled_basis(n_spins: int, coupling_order: Tree | None = None) -> SpinBasis:
    """Total-spin basis for ``n_spins`` spins coupled along ``coupling_order``.

    >>> b = build_coupled_basis(3)
    >>> [str(s) for s in b.states[:2]]
    ['|S=1/2, Sz=-1/2; 0>', '|S=1/2, Sz=-1/2; 1>']
    """
    tree = DEFAULT_TREES.get(n_spins) if coupling_order is None else coupling_order
    if tree is None:
        raise ValueError(f"no default coupling tree for {n_spins} spins")
    sites = _validate_tree(tree)
    if sorted(sites) != list(range(1, n_spins + 1)):
        raise ValueError(f"coupling tree {tree!r} does not cover sites 1..{n_spins} once")

    nodes = [tuple(s) for s in _internal_site_sets(tree)]
    names = tuple("S_" + "".join(str(s) for s in node) for node in nodes)
    raw = _couple(tree)
    perm = np.argsort(sites)
    records = []
    for j, m, labels, _, tensor in raw:
        vec = np.transpose(tensor, perm).reshape(-1)
        inter = tuple(labels[node] for node in nodes)
        records.append((CoupledState(j, m, inter), vec))
    records.sort(key=lambda r: (r[0].S_tot, r[0].Sz_tot, r[0].intermediate_labels))
    states = tuple(r[0] for r in records)
    mat = np.column_stack([r[1] for r in records]).astype(np.complex128)
    mat.setflags(write=False)
    return SpinBasis(n_spins, tree, names, states, mat)


def block_project(basis: SpinBasis, operator, S_tot, Sz_tot, tol: float = 1e-9) -> ComplexMatrix:
    """Sub-block of ``operator`` on the ``(S_tot, Sz_tot)`` states of ``basis``.

    Raises :class:`BlockCouplingError` if the operator connects that block to
    any other state by more than ``tol`` times its norm.
    """
    op = basis.to_coupled(operator)
    idx = basis.block_indices(S_tot, Sz_tot)
    if idx.size == 0:
        raise ValueError(f"no states with S={S_tot}, Sz={Sz_tot}")
    rest = np.setdiff1d(np.arange(op.shape[0]), idx)
    leak = max(np.linalg.norm(op[np.ix_(rest, idx)]), np.linalg.norm(op[np.ix_(idx, rest)]))
    if leak > tol * max(np.linalg.norm(op), 1.0):
        raise BlockCouplingError(f"operator couples block S={S_tot}, Sz={Sz_tot} "
                                 f"to other states (norm {leak:.2e})")
    return op[np.ix_(idx, idx)]
