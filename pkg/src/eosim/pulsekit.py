"""Piecewise-constant exchange schedules and their exact evolution.

A :class:`Schedule` is an ordered list of rectangular segments, each holding
constant exchange amplitudes on some bonds. After every segment the barrier
needs ``tau_idle`` ns to settle, during which nothing evolves (all J = 0 and
every spin state is degenerate), so idling only costs wall-clock time.

Single-qubit bookkeeping uses :class:`EffectiveGate`: the SU(2) action on
the qubit plus the phase the computational states gain relative to the
leakage states. Rotation primitives follow one convention,
``R_a(theta) = exp(+i theta a.sigma / 2)``, with ``a = z`` for J12,
``a = n = -(sqrt3, 0, 1)/2`` for J23 and ``a = m = (sqrt3, 0, -1)/2`` for J13.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .model import BondSet, effective_h, heisenberg_h, normalize_bond
from .numkit import ComplexMatrix, expm_unitary
from .spinspace import build_coupled_basis

DEFAULT_J_MAX = 0.1  # rad/ns, the nominal 100 MHz device limit
TWO_PI = 2 * np.pi

# Sequential X/Y construction angles.
THETA_N_X = np.pi - np.arctan(np.sqrt(8.0))
THETA_Z_X = np.arctan(np.sqrt(8.0))
# Further angles quoted for the gate table; not bound to particular gates.
THETA_ALT_2 = np.pi - np.arctan(np.sqrt(5.0) / 2)
THETA_ALT_3 = 1.305
THETA_ALT_4 = 3.519

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
IDENTITY_2 = np.eye(2, dtype=np.complex128)

AXIS_Z = np.array([0.0, 0.0, 1.0])
AXIS_N = -np.array([np.sqrt(3.0), 0.0, 1.0]) / 2
AXIS_M = np.array([np.sqrt(3.0), 0.0, -1.0]) / 2


def su2_rotation(axis, theta: float) -> ComplexMatrix:
    """``exp(+i theta axis.sigma / 2)`` for a unit 3-vector ``axis``."""
    ax, ay, az = np.asarray(axis, dtype=float)
    gen = ax * SIGMA_X + ay * SIGMA_Y + az * SIGMA_Z
    return np.cos(theta / 2) * IDENTITY_2 + 1j * np.sin(theta / 2) * gen


@dataclass(frozen=True)
class QubitSites:
    """Which bonds of a chain play the z, n and m roles for one encoded qubit.

    ``z_bond`` is the outer pair whose singlet defines ``|0>``; ``n_bond``
    joins the pair's second spin to the third spin. For qubit B
    (sites 4-6, outer pair 5-6) the 6-spin coupled basis orders the pair as
    (5, 6), which flips the sign of its ``|0>`` states relative to this
    qubit's own frame; diagonal (phase) operations are unaffected.
    """

    z_bond: tuple[int, int]
    n_bond: tuple[int, int]
    m_bond: tuple[int, int]

    @property
    def sites(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.z_bond) | set(self.n_bond)))

    def bond_map(self, J12: float, J23: float, J13: float = 0.0) -> dict:
        out = {self.z_bond: J12, self.n_bond: J23, self.m_bond: J13}
        return {b: float(v) for b, v in out.items() if v}

    def effective_couplings(self, j_values: Mapping) -> tuple[float, float, float]:
        return (float(j_values.get(self.z_bond, 0.0)), float(j_values.get(self.n_bond, 0.0)),
                float(j_values.get(self.m_bond, 0.0)))


QUBIT_A = QubitSites((1, 2), (2, 3), (1, 3))
QUBIT_B = QubitSites((5, 6), (4, 5), (4, 6))


@dataclass(frozen=True)
class PulseSegment:
    """Constant exchange amplitudes (rad/ns) held for ``duration`` ns."""

    J_values: Mapping[tuple[int, int], float]
    duration: float

    def __post_init__(self):
        clean = {}
        for bond, value in dict(self.J_values).items():
            value = float(value)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"exchange on {bond} must be finite and >= 0")
            if value:
                clean[normalize_bond(bond)] = value
        object.__setattr__(self, "J_values", clean)
        if not (np.isfinite(self.duration) and self.duration > 0):
            raise ValueError(f"segment duration must be positive, got {self.duration}")
        object.__setattr__(self, "duration", float(self.duration))

    @property
    def max_amplitude(self) -> float:
        return max(self.J_values.values(), default=0.0)

    def hamiltonian(self, n_spins: int) -> ComplexMatrix:
        return heisenberg_h(BondSet(n_spins, self.J_values))

    def scaled(self, factors: Mapping) -> "PulseSegment":
        return PulseSegment({b: max(v * factors.get(b, 1.0), 0.0)
                             for b, v in self.J_values.items()}, self.duration)


@dataclass(frozen=True)
class Schedule:
    """Ordered pulse segments on an ``n_spins`` chain, earliest first."""

    n_spins: int
    segments: tuple[PulseSegment, ...] = ()
    tau_idle: float = 0.0
    J_max: float = DEFAULT_J_MAX

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if self.tau_idle < 0:
            raise ValueError("idle time must be non-negative")
        if not self.J_max > 0:
            raise ValueError("J_max must be positive")
        for seg in self.segments:
            for (i, j), value in seg.J_values.items():
                if not 1 <= i < j <= self.n_spins:
                    raise ValueError(f"bond ({i}, {j}) outside a {self.n_spins}-spin chain")
                if value > self.J_max * (1 + 1e-9):
                    raise ValueError(f"amplitude {value} on ({i}, {j}) exceeds J_max={self.J_max}")

    def __len__(self) -> int:
        return len(self.segments)

    @property
    def pulse_time(self) -> float:
        return float(sum(s.duration for s in self.segments))

    @property
    def wall_clock(self) -> float:
        return wall_clock(self)

    def then(self, other: "Schedule") -> "Schedule":
        """This schedule followed by ``other`` (idle time and J_max from ``self``)."""
        if other.n_spins != self.n_spins:
            raise ValueError("cannot join schedules on different chains")
        return Schedule(self.n_spins, self.segments + other.segments, self.tau_idle,
                        max(self.J_max, other.J_max))

    def reversed(self) -> "Schedule":
        return Schedule(self.n_spins, self.segments[::-1], self.tau_idle, self.J_max)

    def with_idle(self, tau_idle: float) -> "Schedule":
        return Schedule(self.n_spins, self.segments, tau_idle, self.J_max)

    def on_chain(self, n_spins: int) -> "Schedule":
        return Schedule(n_spins, self.segments, self.tau_idle, self.J_max)

    def to_dict(self) -> dict:
        return {
            "n_spins": self.n_spins,
            "J_max": self.J_max,
            "tau_idle": self.tau_idle,
            "units": {"time": "ns", "exchange": "rad/ns"},
            "segments": [{"bonds": {f"{i}-{j}": v for (i, j), v in s.J_values.items()},
                          "duration": s.duration} for s in self.segments],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: Mapping) -> "Schedule":
        units = data.get("units")
        if units != {"time": "ns", "exchange": "rad/ns"}:
            raise ValueError(f"schedule units must be ns and rad/ns, got {units!r}")
        segs = tuple(PulseSegment({normalize_bond(k): v for k, v in s["bonds"].items()},
                                  s["duration"]) for s in data["segments"])
        return cls(int(data["n_spins"]), segs, float(data["tau_idle"]), float(data["J_max"]))

    @classmethod
    def from_json(cls, text: str) -> "Schedule":
        return cls.from_dict(json.loads(text))


def wall_clock(schedule: Schedule) -> float:
    """Pulse time plus one idle period per segment, in ns."""
    return schedule.pulse_time + len(schedule.segments) * schedule.tau_idle


def evolve_full(schedule: Schedule) -> ComplexMatrix:
    """Exact propagator of the whole chain; later segments multiply on the left."""
    u = np.eye(2**schedule.n_spins, dtype=np.complex128)
    for seg in schedule.segments:
        u = expm_unitary(seg.hamiltonian(schedule.n_spins), seg.duration) @ u
    return u


@dataclass(frozen=True)
class EffectiveGate:
    """Qubit action of a schedule on one encoded triple.

    The computational block of the full propagator equals
    ``exp(i leakage_phase) * su2`` while the spin-3/2 leakage block stays
    the identity.
    """

    su2: ComplexMatrix
    leakage_phase: float = 0.0

    def __matmul__(self, earlier: "EffectiveGate") -> "EffectiveGate":
        return EffectiveGate(self.su2 @ earlier.su2, self.leakage_phase + earlier.leakage_phase)

    @property
    def block(self) -> ComplexMatrix:
        return np.exp(1j * self.leakage_phase) * self.su2

    @classmethod
    def identity(cls) -> "EffectiveGate":
        return cls(IDENTITY_2.copy(), 0.0)


def segment_gate(segment: PulseSegment, qubit: QubitSites = QUBIT_A) -> EffectiveGate:
    """Effective gate of one segment; bonds outside ``qubit`` are ignored."""
    j12, j23, j13 = qubit.effective_couplings(segment.J_values)
    h = effective_h(j12, j23, j13, "all_to_all")
    return EffectiveGate(expm_unitary(h.traceless(), segment.duration),
                         h.identity_shift * segment.duration)


def batch_qubit_propagator(J12, J23, J13, duration) -> np.ndarray:
    """Traceless qubit propagators ``exp(-i (hx sx + hz sz) t)`` for arrays of
    couplings; the result has shape ``broadcast_shape + (2, 2)``."""
    J12, J23, J13, duration = np.broadcast_arrays(*(np.asarray(x, dtype=float)
                                                    for x in (J12, J23, J13, duration)))
    hx = np.sqrt(3.0) / 4 * (J23 - J13) * duration
    hz = (-2 * J12 + J23 + J13) / 4 * duration
    norm = np.hypot(hx, hz)
    c = np.cos(norm)
    s = np.sin(norm) / np.where(norm > 0, norm, 1.0)
    out = np.empty(norm.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = c - 1j * s * hz
    out[..., 1, 1] = c + 1j * s * hz
    out[..., 0, 1] = -1j * s * hx
    out[..., 1, 0] = -1j * s * hx
    return out


def evolve_effective(schedule: Schedule, qubit: QubitSites = QUBIT_A) -> EffectiveGate:
    gate = EffectiveGate.identity()
    for seg in schedule.segments:
        gate = segment_gate(seg, qubit) @ gate
    return gate


def _single_bond_rotation(bond, theta: float, J_max: float, n_spins: int,
                          tau_idle: float, qubit: QubitSites):
    if theta < 0:
        raise ValueError("rotation angle must be non-negative")
    if theta >= 4 * np.pi:
        raise ValueError("rotation angle must be below 4 pi")
    segs = (PulseSegment({bond: J_max}, theta / J_max),) if theta > 0 else ()
    sched = Schedule(n_spins, segs, tau_idle, J_max)
    return evolve_effective(sched, qubit), sched


def rot_z(theta: float, J_max: float = DEFAULT_J_MAX, *, n_spins: int = 3,
          tau_idle: float = 0.0, qubit: QubitSites = QUBIT_A):
    """``R_z(theta) = exp(i theta sigma_z / 2)`` from the outer-pair exchange alone."""
    return _single_bond_rotation(qubit.z_bond, theta, J_max, n_spins, tau_idle, qubit)


def rot_n(theta: float, J_max: float = DEFAULT_J_MAX, *, n_spins: int = 3,
          tau_idle: float = 0.0, qubit: QubitSites = QUBIT_A):
    """``R_n(theta) = exp(-i theta (sqrt3 sigma_x + sigma_z) / 4)`` from J23 alone."""
    return _single_bond_rotation(qubit.n_bond, theta, J_max, n_spins, tau_idle, qubit)


def rot_m(theta: float, J_max: float = DEFAULT_J_MAX, *, n_spins: int = 3,
          tau_idle: float = 0.0, qubit: QubitSites = QUBIT_A):
    """``R_m(theta) = exp(i theta (sqrt3 sigma_x - sigma_z) / 4)`` from J13 alone."""
    return _single_bond_rotation(qubit.m_bond, theta, J_max, n_spins, tau_idle, qubit)


def rot_x_simultaneous(theta: float, J_max: float = DEFAULT_J_MAX, *, n_spins: int = 3,
                       tau_idle: float = 0.0, qubit: QubitSites = QUBIT_A):
    """``R_x(theta) = exp(i theta sigma_x / 2)`` (up to sign) in one segment.

    Holding ``J23 = 2 J12 = J_max`` cancels the sigma_z terms; the exchange
    then turns the qubit the opposite way about x at ``sqrt3 J_max / 2``
    rad/ns, so the duration solves ``theta = 2 pi - sqrt3 (J_max/2) tau``.
    """
    if not 0 < theta < TWO_PI:
        raise ValueError("simultaneous x rotation needs 0 < theta < 2 pi")
    tau = (TWO_PI - theta) * 2 / (np.sqrt(3.0) * J_max)
    seg = PulseSegment(qubit.bond_map(J_max / 2, J_max), tau)
    sched = Schedule(n_spins, (seg,), tau_idle, J_max)
    return evolve_effective(sched, qubit), sched


def sequential(*parts) -> Schedule:
    """Concatenate schedules given in time order."""
    if not parts:
        raise ValueError("need at least one schedule")
    out = parts[0]
    for p in parts[1:]:
        out = out.then(p)
    return out


def sequential_x(J_max: float = DEFAULT_J_MAX, tau_idle: float = 0.0, n_spins: int = 3):
    """``X = R_n(theta1) R_z(theta2) R_n(theta1)`` with the standard angles."""
    g1, s1 = rot_n(THETA_N_X, J_max, n_spins=n_spins, tau_idle=tau_idle)
    g2, s2 = rot_z(THETA_Z_X, J_max, n_spins=n_spins, tau_idle=tau_idle)
    return g1 @ g2 @ g1, sequential(s1, s2, s1)


def sequential_y(J_max: float = DEFAULT_J_MAX, tau_idle: float = 0.0, n_spins: int = 3):
    """``Y = R_z(pi) X`` built from the sequential X."""
    gx, sx = sequential_x(J_max, tau_idle, n_spins)
    gz, sz = rot_z(np.pi, J_max, n_spins=n_spins, tau_idle=tau_idle)
    return gz @ gx, sequential(sx, sz)


def computational_projector_3(sz_sector: float | None = 0.5) -> ComplexMatrix:
    """Product-space projector onto the qubit states of a single triple.

    ``sz_sector`` picks one of the two degenerate copies (``+1/2`` or
    ``-1/2``); ``None`` keeps both.
    """
    basis = build_coupled_basis(3)
    idx = [k for k, st in enumerate(basis.states)
           if st.S_tot == 0.5 and (sz_sector is None or float(st.Sz_tot) == sz_sector)]
    return basis.projector(idx)


def embed_qubit_gate(su2, leakage=None) -> ComplexMatrix:
    """Lift a 2x2 qubit gate to the 8-dim product space of one triple.

    The gate acts identically on both ``S_z`` copies of the qubit; the
    spin-3/2 block gets ``leakage`` (default identity).
    """
    basis = build_coupled_basis(3)
    coupled = np.zeros((8, 8), dtype=np.complex128)
    coupled[0:2, 0:2] = su2
    coupled[2:4, 2:4] = su2
    coupled[4:, 4:] = np.eye(4) if leakage is None else leakage
    b = basis.to_product
    return b @ coupled @ b.conj().T
