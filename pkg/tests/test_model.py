import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from eosim.model import (BondSet, Connectivity, DivergentExchangeError, HubbardParams,
                         at_sweet_spot, effective_h, exchange_gradient, heisenberg_h,
                         hubbard_exchange, normalize_bond, sweet_spot)
from eosim.spinspace import build_coupled_basis, total_s2, total_sz

J = st.floats(0.0, 1.0, allow_nan=False)


def test_bond_validation():
    assert normalize_bond("3-1") == (1, 3)
    with pytest.raises(ValueError):
        BondSet(3, {(1, 2): -0.1})
    with pytest.raises(ValueError):
        BondSet(3, {(1, 4): 0.1})
    with pytest.raises(ValueError):
        BondSet(3, [(1, 2, 0.1), (2, 1, 0.2)])
    with pytest.raises(ValueError):
        normalize_bond((2, 2))


def test_heisenberg_simple_cases():
    assert np.allclose(heisenberg_h({}, 3), 0)
    w = np.linalg.eigvalsh(heisenberg_h({(1, 2): 1.0}, 3))
    assert w.min() == pytest.approx(-1.0)


@settings(max_examples=40, deadline=None)
@given(J, J, J)
def test_heisenberg_symmetries(j12, j23, j13):
    h = heisenberg_h({(1, 2): j12, (2, 3): j23, (1, 3): j13}, 3)
    assert np.allclose(h, h.conj().T)
    assert np.linalg.eigvalsh(h).max() <= 1e-12
    for op in (total_s2(3), total_sz(3)):
        assert np.abs(h @ op - op @ h).max() <= 1e-12


@settings(max_examples=40, deadline=None)
@given(J, J, J)
def test_effective_h_embeds_into_heisenberg(j12, j23, j13):
    b = build_coupled_basis(3)
    h = b.to_coupled(heisenberg_h({(1, 2): j12, (2, 3): j23, (1, 3): j13}, 3))
    eff = effective_h(j12, j23, j13, "all_to_all").matrix()
    assert np.allclose(h[0:2, 0:2], eff, atol=1e-12)
    assert np.allclose(h[2:4, 2:4], eff, atol=1e-12)
    assert np.allclose(h[4:, 4:], 0, atol=1e-12)
    assert np.allclose(h[0:2, 2:], 0, atol=1e-12)


def test_effective_h_examples():
    x = effective_h(0.05, 0.1)
    assert x.hz == pytest.approx(0, abs=1e-15) and x.hx == pytest.approx(np.sqrt(3) * 0.05 / 2)
    z = effective_h(0.1, 0.0)
    assert z.hx == 0 and z.hz == pytest.approx(-0.05)
    sym = effective_h(0.1, 0.1, 0.1, Connectivity.ALL_TO_ALL)
    assert sym.norm == pytest.approx(0, abs=1e-15)
    assert sym.identity_shift == pytest.approx(0.15)
    with pytest.raises(ValueError):
        effective_h(0.1, 0.1, 0.1, "linear")


def test_symmetric_point_is_pure_shift():
    b = build_coupled_basis(3)
    h = b.to_coupled(heisenberg_h({(1, 2): 0.3, (2, 3): 0.3, (1, 3): 0.3}, 3))
    assert np.allclose(h[0:2, 0:2], -0.45 * np.eye(2), atol=1e-12)


# -- Hubbard -----------------------------------------------------------------------------

SYMMETRIC = HubbardParams((0, 0, 0), (1, 1, 1), (0.2, 0.2, 0.2), (0.05, 0.05, 0.05))
ASYMMETRIC = HubbardParams((0, 0, 0), (1.0, 1.3, 0.9), (0.25, 0.15, 0.05), (0.04, 0.06, 0.02))


def test_symmetric_exchange_closed_form():
    vt = -0.1
    j12, j23, j13 = hubbard_exchange(SYMMETRIC)
    assert j12 == pytest.approx(0.05**2 * (2 + 2 * vt) / (1 + vt) ** 2, rel=1e-12)
    assert j12 == pytest.approx(2 * 0.05**2 / (1 + vt), rel=1e-12)
    assert j12 == pytest.approx(j23) and j12 == pytest.approx(j13)
    assert sweet_spot(SYMMETRIC) == (0.0, 0.0)


def test_zero_tunnelling_zero_exchange():
    p = HubbardParams((0, 0, 0), (1, 1, 1), (0.2, 0.2, 0.2), (0.0, 0.05, 0.05))
    assert hubbard_exchange(p)[0] == 0.0


def test_divergence_and_validation():
    with pytest.raises(DivergentExchangeError):
        hubbard_exchange(SYMMETRIC.with_eps((0.0, 0.9, 0.0)))
    with pytest.raises(ValueError):
        HubbardParams((0, 0, 0), (1, 0, 1), (0, 0, 0), (0, 0, 0))


def test_sweet_spot_formula_readout():
    p = HubbardParams((0, 0, 0), (3, 1, 3), (0.2, 0.2, 0.2), (0.05, 0.05, 0.05))
    assert sweet_spot(p)[0] == pytest.approx(1.0)


def test_sweet_spot_against_symbolic_stationary_point():
    e2, e3 = sp.symbols("e2 e3", real=True)
    p = ASYMMETRIC
    u1, u2, u3 = (sp.nsimplify(x) for x in p.U)
    w12, w23, w13 = (sp.nsimplify(x) for x in p.v_tilde)

    def pair(t, ua, ub, va, vb, d):
        return t**2 * (ua + ub + va + vb) / ((ua + va + d) * (ub + vb - d))

    j12 = pair(sp.Rational(1), u1, u2, w13, w23, -e2)
    j13 = pair(sp.Rational(1), u1, u3, w12, w23, -e3)
    sol = sp.solve([sp.diff(j12, e2), sp.diff(j13, e3)], [e2, e3], dict=True)
    d2, d3 = sweet_spot(p)
    assert any(abs(float(s[e2]) - d2) < 1e-12 and abs(float(s[e3]) - d3) < 1e-12 for s in sol)


def test_gradient_vanishes_at_sweet_spot():
    for p in (SYMMETRIC, ASYMMETRIC):
        q = at_sweet_spot(p)
        grad = exchange_gradient(q)
        js = np.array(hubbard_exchange(q))
        scale = js[:, None] / q.energy_scale
        assert np.all(np.abs(grad) <= 1e-6 * scale)


def test_gradient_matches_analytic_derivative():
    p = ASYMMETRIC.with_eps((0.0, 0.07, -0.04))
    grad = exchange_gradient(p)
    # dJ12/de1 of t^2 S / ((A + d)(B - d)) with d = e1 - e2
    u1, u2, _ = p.U
    w12, w23, w13 = p.v_tilde
    a, b, d = u1 + w13, u2 + w23, p.eps[0] - p.eps[1]
    j12 = hubbard_exchange(p)[0]
    expected = j12 * (1 / (b - d) - 1 / (a + d))
    assert grad[0, 0] == pytest.approx(expected, rel=1e-8)
    assert grad[0, 1] == pytest.approx(-expected, rel=1e-8)
    assert grad[0, 2] == 0.0
