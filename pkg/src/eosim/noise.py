"""Quasi-static exchange noise and Monte Carlo gate fidelity.

Each shot draws one relative deviation per bond, ``J -> J (1 + delta)`` with
``delta ~ N(0, sigma)``, and holds it for every segment of the schedule.
Amplitudes that would turn negative are clipped to zero.

Exchange on a single triple conserves total spin, so a noisy schedule never
leaves the qubit subspace and its fidelity is fixed by the 2 x 2 qubit
action. Shots are therefore evaluated in closed form, vectorised over the
sample; :func:`noisy_fidelities` can also run the full state-space
propagators as a cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .model import normalize_bond
from .numkit import avg_gate_fidelity
from .pulsekit import (DEFAULT_J_MAX, QUBIT_A, PulseSegment, QubitSites, Schedule,
                       batch_qubit_propagator, computational_projector_3, embed_qubit_gate,
                       evolve_full, rot_x_simultaneous, sequential_x)
from .synth import GateSpec, SynthResult

DEFAULT_SHOTS = 4000
DEFAULT_SIGMA_GRID = (0.0, 0.01, 0.02, 0.05, 0.10)


@dataclass(frozen=True)
class NoiseModel:
    """Relative exchange noise per bond and the master seed of the sampler."""

    sigma_rel: Mapping = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        clean = {}
        for bond, sigma in dict(self.sigma_rel).items():
            sigma = float(sigma)
            if not np.isfinite(sigma) or sigma < 0:
                raise ValueError(f"sigma for bond {bond} must be finite and >= 0")
            clean[normalize_bond(bond)] = sigma
        object.__setattr__(self, "sigma_rel", clean)

    def sigma(self, bond) -> float:
        return self.sigma_rel.get(normalize_bond(bond), 0.0)

    def standard_normals(self, n_spins: int, shots: int) -> tuple[list, np.ndarray]:
        """Unit normal draws, one column per bond of an ``n_spins`` chain.

        Every bond gets its own column whether or not it is noisy, so the
        same seed yields the same underlying sample for any choice of sigmas
        (common random numbers across a sweep).
        """
        bonds = list(combinations(range(1, n_spins + 1), 2))
        rng = np.random.default_rng(np.random.SeedSequence(self.seed))
        return bonds, rng.standard_normal((shots, len(bonds)))

    def factors(self, n_spins: int, shots: int) -> tuple[list, np.ndarray]:
        """Per-shot multipliers ``1 + delta`` (clipped at 0), shape (shots, bonds)."""
        bonds, z = self.standard_normals(n_spins, shots)
        sig = np.array([self.sigma(b) for b in bonds])
        return bonds, np.clip(1.0 + z * sig, 0.0, None)


def _scaled_schedule(schedule: Schedule, factors: Mapping) -> Schedule:
    segs = tuple(PulseSegment({b: j * factors.get(b, 1.0) for b, j in seg.J_values.items()},
                              seg.duration) for seg in schedule.segments)
    peak = max((s.max_amplitude for s in segs), default=0.0)
    return Schedule(schedule.n_spins, segs, schedule.tau_idle, max(schedule.J_max, peak))


def sample_noisy_schedule(schedule: Schedule, noise: NoiseModel, shot: int = 0) -> Schedule:
    """One quasi-static realisation of ``schedule`` (shot index ``shot``)."""
    bonds, f = noise.factors(schedule.n_spins, shot + 1)
    return _scaled_schedule(schedule, dict(zip(bonds, f[shot])))


def sample_noisy_schedules(schedule: Schedule, noise: NoiseModel, shots: int) -> list[Schedule]:
    bonds, f = noise.factors(schedule.n_spins, shots)
    return [_scaled_schedule(schedule, dict(zip(bonds, row))) for row in f]


# -- vectorised qubit evolution ---------------------------------------------------------

def _batch_su2(schedule: Schedule, factors: np.ndarray, bonds: Sequence,
               qubit: QubitSites) -> np.ndarray:
    """Qubit action of every noisy shot, shape (shots, 2, 2)."""
    col = {b: k for k, b in enumerate(bonds)}
    shots = factors.shape[0]
    u = np.broadcast_to(np.eye(2, dtype=np.complex128), (shots, 2, 2)).copy()
    for seg in schedule.segments:
        j = [seg.J_values.get(b, 0.0) * factors[:, col[b]]
             for b in (qubit.z_bond, qubit.n_bond, qubit.m_bond)]
        u = batch_qubit_propagator(*j, seg.duration) @ u
    return u


def noisy_fidelities(schedule: Schedule, target_su2, noise: NoiseModel, shots: int,
                     qubit: QubitSites = QUBIT_A, exact: bool = False) -> np.ndarray:
    """Average gate fidelity of each noisy shot against ``target_su2``."""
    bonds, f = noise.factors(schedule.n_spins, shots)
    target = np.asarray(target_su2, dtype=np.complex128)
    if exact:
        if qubit != QUBIT_A or schedule.n_spins != 3:
            raise ValueError("exact evaluation is implemented for a single triple")
        ideal = embed_qubit_gate(target)
        proj = computational_projector_3(0.5)
        return np.array([avg_gate_fidelity(evolve_full(_scaled_schedule(schedule, dict(zip(bonds, row)))),
                                           ideal, proj) for row in f])
    u = _batch_su2(schedule, f, bonds, qubit)
    overlap = np.einsum("ij,nij->n", target.conj(), u)
    return (2 + np.abs(overlap) ** 2) / 6


@dataclass(frozen=True)
class SweepResult:
    """Mean fidelity on a (sigma_12, sigma_23) grid, rows indexed by sigma_12."""

    scheme: str
    sigma_12: tuple
    sigma_23: tuple
    mean: np.ndarray
    std_err: np.ndarray
    shots: int

    def rows(self) -> list[dict]:
        return [{"sigma_12": s12, "sigma_23": s23, "scheme": self.scheme,
                 "mean_fidelity": float(self.mean[i, k]), "std_err": float(self.std_err[i, k])}
                for i, s12 in enumerate(self.sigma_12) for k, s23 in enumerate(self.sigma_23)]


def fidelity_sweep(gate: SynthResult | Schedule, target: GateSpec | np.ndarray,
                   sigma_12_grid: Sequence[float] = DEFAULT_SIGMA_GRID,
                   sigma_23_grid: Sequence[float] = DEFAULT_SIGMA_GRID,
                   shots: int = DEFAULT_SHOTS, seed: int = 0, qubit: QubitSites = QUBIT_A,
                   scheme: str = "") -> SweepResult:
    """Monte Carlo fidelity over a grid of relative noise on the two linear bonds.

    ``sigma_12`` acts on the outer pair of the triple and ``sigma_23`` on the
    inner one. The same normal draws are reused at every grid point, which
    makes the sweep smooth and its orderings reliable at modest shot counts.
    """
    schedule = gate.schedule if isinstance(gate, SynthResult) else gate
    if schedule is None:
        raise ValueError("cannot sweep an infeasible synthesis result")
    target_su2 = target.target_su2 if isinstance(target, GateSpec) else target
    if shots < 2:
        raise ValueError("need at least two shots for a standard error")
    s12, s23 = tuple(float(x) for x in sigma_12_grid), tuple(float(x) for x in sigma_23_grid)
    mean = np.zeros((len(s12), len(s23)))
    err = np.zeros_like(mean)
    for i, a in enumerate(s12):
        for k, b in enumerate(s23):
            noise = NoiseModel({qubit.z_bond: a, qubit.n_bond: b}, seed)
            f = noisy_fidelities(schedule, target_su2, noise, shots, qubit)
            mean[i, k] = f.mean()
            err[i, k] = f.std(ddof=1) / np.sqrt(shots)
    return SweepResult(scheme or getattr(gate, "strategy", ""), s12, s23, mean, err, shots)


def x_gate_schedules(J_max: float = DEFAULT_J_MAX) -> dict[str, Schedule]:
    """The sequential and simultaneous (linear) X constructions."""
    return {"sequential": sequential_x(J_max)[1],
            "simultaneous": rot_x_simultaneous(np.pi, J_max)[1]}
