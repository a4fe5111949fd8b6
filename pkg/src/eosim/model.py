"""Heisenberg exchange Hamiltonians, effective qubit Hamiltonians and the
Hubbard-model origin of the exchange couplings.

Exchange amplitudes are angular rates in rad/ns, so a pulse of constant
``J`` for ``t`` ns rotates by ``J t`` radians. ``J_max = 0.1`` rad/ns is the
nominal 100 MHz device limit.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .numkit import ComplexMatrix
from .spinspace import pauli_exchange_term

SQRT3 = np.sqrt(3.0)


class Connectivity(str, enum.Enum):
    LINEAR = "linear"
    ALL_TO_ALL = "all_to_all"

    @classmethod
    def parse(cls, value) -> "Connectivity":
        if isinstance(value, cls):
            return value
        aliases = {"all": cls.ALL_TO_ALL, "all-to-all": cls.ALL_TO_ALL}
        return aliases.get(str(value).lower()) or cls(str(value).lower())


def normalize_bond(bond) -> tuple[int, int]:
    """Accept ``(i, j)`` or ``"i-j"`` and return the ordered pair."""
    if isinstance(bond, str):
        i, j = (int(x) for x in bond.split("-"))
    else:
        i, j = (int(x) for x in bond)
    if i == j:
        raise ValueError(f"bond {bond!r} joins a site to itself")
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class BondSet:
    """Exchange couplings ``J_ij >= 0`` (rad/ns) on an ``n_spins`` chain."""

    n_spins: int
    bonds: Mapping[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        clean: dict[tuple[int, int], float] = {}
        items = self.bonds.items() if isinstance(self.bonds, Mapping) else \
            ((b[:2], b[2]) for b in self.bonds)
        for bond, value in items:
            key = normalize_bond(bond)
            if key in clean:
                raise ValueError(f"duplicate bond {key}")
            if not 1 <= key[0] < key[1] <= self.n_spins:
                raise ValueError(f"bond {key} outside 1..{self.n_spins}")
            value = float(value)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"exchange on {key} must be finite and >= 0, got {value}")
            clean[key] = value
        object.__setattr__(self, "bonds", clean)


def heisenberg_h(bonds: BondSet | Mapping, n_spins: int | None = None) -> ComplexMatrix:
    """``H = sum_ij J_ij (S_i . S_j - 1/4)`` in the product basis.

    Negative semidefinite: a pair in its singlet lowers the energy by ``J``,
    triplets cost nothing.
    """
    if not isinstance(bonds, BondSet):
        bonds = BondSet(n_spins, bonds)
    dim = 2**bonds.n_spins
    h = np.zeros((dim, dim), dtype=np.complex128)
    for (i, j), value in bonds.bonds.items():
        if value:
            h += value * pauli_exchange_term(bonds.n_spins, i, j)
    return h


@dataclass(frozen=True)
class EffectiveSingleQubitH:
    """Computational-block Hamiltonian ``hx sx + hz sz - identity_shift``.

    The leakage (spin-3/2) states have zero energy, so over a time ``t`` the
    computational states pick up the phase ``exp(+i identity_shift t)``
    relative to leakage.
    """

    hx: float
    hz: float
    identity_shift: float

    @property
    def norm(self) -> float:
        return float(np.hypot(self.hx, self.hz))

    def matrix(self) -> ComplexMatrix:
        return np.array([[self.hz - self.identity_shift, self.hx],
                         [self.hx, -self.hz - self.identity_shift]], dtype=np.complex128)

    def traceless(self) -> ComplexMatrix:
        return np.array([[self.hz, self.hx], [self.hx, -self.hz]], dtype=np.complex128)


def effective_h(J12: float, J23: float, J13: float = 0.0,
                connectivity: Connectivity | str = Connectivity.LINEAR) -> EffectiveSingleQubitH:
    """Effective qubit Hamiltonian of one exchange-only triple.

    Linear chains only couple (1,2) and (2,3); passing ``J13 != 0`` with
    linear connectivity is an error.
    """
    connectivity = Connectivity.parse(connectivity)
    if connectivity is Connectivity.LINEAR and J13 != 0:
        raise ValueError("J13 must be zero for linear connectivity")
    hx = SQRT3 / 4 * (J23 - J13)
    hz = (-2 * J12 + J23 + J13) / 4
    return EffectiveSingleQubitH(float(hx), float(hz), float((J12 + J23 + J13) / 2))


# -- Hubbard model ------------------------------------------------------------

class DivergentExchangeError(ArithmeticError):
    """A Hubbard exchange denominator vanished (charge transition)."""


@dataclass(frozen=True)
class HubbardParams:
    """Triple-dot Hubbard parameters, all in one common energy unit.

    ``V`` and ``t_hop`` are ``(12, 23, 13)`` triples.
    """

    eps: tuple[float, float, float]
    U: tuple[float, float, float]
    V: tuple[float, float, float]
    t_hop: tuple[float, float, float]

    def __post_init__(self):
        for name in ("eps", "U", "V", "t_hop"):
            values = tuple(float(x) for x in getattr(self, name))
            if len(values) != 3:
                raise ValueError(f"{name} needs three entries")
            object.__setattr__(self, name, values)
        if min(self.U) <= 0:
            raise ValueError("on-site charging energies must be positive")

    @property
    def v_tilde(self) -> tuple[float, float, float]:
        """Effective cross-charging ``(V~12, V~23, V~13)``."""
        v12, v23, v13 = self.V
        return ((v12 - v23 - v13) / 2, (-v12 + v23 - v13) / 2, (-v12 - v23 + v13) / 2)

    def with_eps(self, eps) -> "HubbardParams":
        return HubbardParams(tuple(eps), self.U, self.V, self.t_hop)

    @property
    def energy_scale(self) -> float:
        return float(np.mean(self.U))


def _pair_exchange(t, ua, ub, va, vb, detuning):
    den = (ua + va + detuning) * (ub + vb - detuning)
    if abs(den) < 1e-300 or not np.isfinite(den):
        raise DivergentExchangeError("exchange denominator vanishes")
    return t**2 * (ua + ub + va + vb) / den


def hubbard_exchange(p: HubbardParams) -> tuple[float, float, float]:
    """Second-order exchange ``(J12, J23, J13)`` from the Hubbard parameters."""
    e1, e2, e3 = p.eps
    u1, u2, u3 = p.U
    t12, t23, t13 = p.t_hop
    w12, w23, w13 = p.v_tilde
    j12 = _pair_exchange(t12, u1, u2, w13, w23, e1 - e2)
    j23 = _pair_exchange(t23, u2, u3, w12, w13, e2 - e3)
    j13 = _pair_exchange(t13, u1, u3, w12, w23, e1 - e3)
    return float(j12), float(j23), float(j13)


def sweet_spot(p: HubbardParams) -> tuple[float, float]:
    """Detunings ``(eps2 - eps1, eps3 - eps1)`` where every J is first-order
    insensitive to the dot potentials."""
    u1, u2, u3 = p.U
    w12, w23, w13 = p.v_tilde
    return (u1 - u2 + w13 - w23) / 2, (u1 - u3 + w12 - w23) / 2


def at_sweet_spot(p: HubbardParams) -> HubbardParams:
    d2, d3 = sweet_spot(p)
    e1 = p.eps[0]
    return p.with_eps((e1, e1 + d2, e1 + d3))


def exchange_gradient(p: HubbardParams, step: float | None = None) -> np.ndarray:
    """Central-difference ``dJ_b / d eps_k`` as a 3 x 3 array (bond b, site k).

    Bonds are ordered (12, 23, 13). The default step is ``1e-5`` of the mean
    charging energy.
    """
    h = 1e-5 * p.energy_scale if step is None else step
    grad = np.zeros((3, 3))
    for k in range(3):
        up = list(p.eps)
        dn = list(p.eps)
        up[k] += h
        dn[k] -= h
        grad[:, k] = (np.array(hubbard_exchange(p.with_eps(up)))
                      - np.array(hubbard_exchange(p.with_eps(dn)))) / (2 * h)
    return grad

