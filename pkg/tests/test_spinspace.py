from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from sympy import Rational
from sympy.physics.quantum.cg import CG

from eosim.spinspace import (BlockCouplingError, block_project, build_coupled_basis,
                             clebsch_gordan, pauli_exchange_term, product_state,
                             singlet_projector, total_s2, total_sz)


def half_range(j):
    return [j - k for k in range(int(2 * j) + 1)]


@pytest.mark.parametrize("j1,j2", [(Fraction(1, 2), Fraction(1, 2)), (Fraction(1), Fraction(1, 2)),
                                   (Fraction(3, 2), Fraction(1, 2)), (Fraction(1), Fraction(1)),
                                   (Fraction(3, 2), Fraction(1))])
def test_cg_matches_sympy(j1, j2):
    for m1, m2 in product(half_range(j1), half_range(j2)):
        for j in np.arange(abs(j1 - j2), j1 + j2 + 1):
            j = Fraction(j)
            ref = float(CG(Rational(j1), Rational(m1), Rational(j2), Rational(m2),
                           Rational(j), Rational(m1 + m2)).doit())
            assert clebsch_gordan(j1, m1, j2, m2, j, m1 + m2) == pytest.approx(ref, abs=1e-12)


def test_cg_selection_rule():
    assert clebsch_gordan(0.5, 0.5, 0.5, 0.5, 1, 0) == 0.0


@pytest.mark.parametrize("n", [3, 6])
def test_basis_is_orthonormal_eigenbasis(n):
    b = build_coupled_basis(n)
    q = b.to_product
    assert np.allclose(q.conj().T @ q, np.eye(2**n), atol=1e-12)
    s2 = b.to_coupled(total_s2(n))
    sz = b.to_coupled(total_sz(n))
    s = np.array([float(st.S_tot) for st in b.states])
    m = np.array([float(st.Sz_tot) for st in b.states])
    assert np.allclose(s2, np.diag(s * (s + 1)), atol=1e-10)
    assert np.allclose(sz, np.diag(m), atol=1e-12)


def test_multiplicities():
    assert build_coupled_basis(3).block_sizes() == {Fraction(1, 2): 2, Fraction(3, 2): 1}
    assert build_coupled_basis(6).block_sizes() == {0: 5, 1: 9, 2: 5, 3: 1}


def test_three_spin_intermediate_label_is_pair_spin():
    b = build_coupled_basis(3)
    s12 = b.to_coupled(total_s2(3, sites=(1, 2)))
    labels = np.array([float(b.label(k, "S_12")) for k in range(8)])
    assert np.allclose(s12, np.diag(labels * (labels + 1)), atol=1e-12)


def test_six_spin_qubit_labels():
    b = build_coupled_basis(6)
    assert b.qubit_spin_names() == ("S_123", "S_564")
    comp = [k for k in b.block_indices(1, 1) if b.is_computational(k)]
    assert len(comp) == 4


def test_exchange_term_and_singlet_projector():
    # S_i.S_j - 1/4 is -1 on the singlet and 0 on triplets
    e = pauli_exchange_term(2, 1, 2)
    singlet = (product_state("ud") - product_state("du")) / np.sqrt(2)
    assert np.allclose(e @ singlet, -singlet)
    assert np.allclose(e @ product_state("uu"), 0)
    p = singlet_projector(3, 1, 2)
    assert np.allclose(p @ p, p) and np.trace(p).real == pytest.approx(2)


def test_block_project_detects_coupling():
    b = build_coupled_basis(3)
    blk = block_project(b, pauli_exchange_term(3, 1, 2), 0.5, 0.5)
    assert blk.shape == (2, 2)
    sx1 = np.kron(np.array([[0, 1], [1, 0]]), np.eye(4))
    with pytest.raises(BlockCouplingError):
        block_project(b, sx1, 0.5, 0.5)
    with pytest.raises(ValueError):
        block_project(b, np.eye(8), 2.5, 0.5)


def test_bad_tree_rejected():
    with pytest.raises(ValueError):
        build_coupled_basis(3, ((1, 2), 2))
