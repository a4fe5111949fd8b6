"""Simulated calibration experiments on a single exchange-only triple.

Readout is Pauli spin blockade on spins 1 and 2: the measured "ground"
probability is the singlet population of that pair. Two preparations are
supported: the singlet ``|S>_12 |down>_3`` itself, which is the qubit state
``|0>``, and an x eigenstate made from it by a sequential Y-pi/2 rotation.
For the x eigenstate the rotation is undone before readout, so a state that
did not move reads out as ground again.

Grids and traces run on the qubit block in closed form (exchange on one
triple never leaves it). :func:`evolve_state` and :func:`prepare_state`
work in the full 8-dimensional space and serve as the reference.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .noise import NoiseModel
from .numkit import FitResult, expm_unitary, fit_damped_sinusoid
from .pulsekit import (DEFAULT_J_MAX, QUBIT_A, PulseSegment, Schedule, batch_qubit_propagator,
                       evolve_effective, evolve_full)
from .spinspace import product_state, singlet_projector
from .synth import GateSpec, rotation_su2, synthesize_sequential

DEFAULT_PULSE_TIME = 100.0  # ns
DEFAULT_ECHO_REPEATS = 4
Z_BOND, N_BOND = QUBIT_A.z_bond, QUBIT_A.n_bond


class Prep(str, enum.Enum):
    SINGLET = "singlet"
    X = "x"

    @classmethod
    def parse(cls, value) -> "Prep":
        if isinstance(value, cls):
            return value
        text = str(value).lower()
        return cls.X if text in ("x", "x_eigenstate", "x-eigenstate") else cls(text)


# -- preparation and readout ---------------------------------------------------------

def singlet_state() -> np.ndarray:
    """``(|ud> - |du>)/sqrt2 (x) |d>`` in the 8-dim product space."""
    return (product_state("udd") - product_state("dud")) / math.sqrt(2)


@lru_cache(maxsize=None)
def y_half_schedules(J_max: float = DEFAULT_J_MAX) -> tuple[Schedule, Schedule]:
    """Sequential schedules for ``exp(-+ i pi sigma_y / 4)`` (prerotation, undo)."""
    out = []
    for sign in (1, -1):
        res = synthesize_sequential(GateSpec(f"Y{sign * 90:+d}", rotation_su2((0, 1, 0), sign * math.pi / 2)),
                                    4, J_max)
        if not res.feasible:
            raise RuntimeError("no sequential Y-pi/2 found")
        out.append(res.schedule)
    return out[0], out[1]


def evolve_state(schedule: Schedule, psi: np.ndarray) -> np.ndarray:
    return evolve_full(schedule) @ psi


def prepare_state(prep: Prep | str, J_max: float = DEFAULT_J_MAX) -> np.ndarray:
    """Initial 8-dim state for a preparation."""
    psi = singlet_state()
    if Prep.parse(prep) is Prep.X:
        psi = evolve_state(y_half_schedules(J_max)[0], psi)
    return psi / np.linalg.norm(psi)


def ground_probability(psi: np.ndarray, undo: Optional[Schedule] = None) -> float:
    """Singlet population of spins 1, 2 (after the optional undo rotation)."""
    if undo is not None:
        psi = evolve_state(undo, psi)
    return float(np.real(psi.conj() @ singlet_projector(3, 1, 2) @ psi))


def _qubit_frame(prep: Prep, J_max: float):
    """Prep and undo rotations in the qubit block (identity for the singlet)."""
    if prep is Prep.SINGLET:
        return np.eye(2, dtype=np.complex128), np.eye(2, dtype=np.complex128)
    pre, undo = y_half_schedules(J_max)
    return evolve_effective(pre).su2, evolve_effective(undo).su2


# -- configuration ---------------------------------------------------------------------

@dataclass(frozen=True)
class VoltageMap:
    """Barrier voltage to exchange, ``J(V) = J0 exp(alpha V)`` (rad/ns, 1/mV)."""

    J0: float
    alpha: float
    bond: tuple = Z_BOND

    def __post_init__(self):
        if self.J0 <= 0:
            raise ValueError("J0 must be positive")

    def J(self, V):
        return self.J0 * np.exp(self.alpha * np.asarray(V, dtype=float))

    def V(self, J):
        return np.log(np.asarray(J, dtype=float) / self.J0) / self.alpha


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings of a fingerpinch run.

    ``z_values`` and ``n_values`` are exchange amplitudes in rad/ns, or
    barrier voltages in mV when voltage maps are passed to
    :func:`fingerpinch`. ``echo_repeats = 0`` gives the plain map.
    """

    prep: Prep = Prep.SINGLET
    pulse_time: float = DEFAULT_PULSE_TIME
    z_values: tuple = tuple(np.linspace(0.0, 0.1, 41))
    n_values: tuple = tuple(np.linspace(0.0, 0.2, 81))
    echo_repeats: int = 0
    echo_angle: float = math.pi
    noise: Optional[NoiseModel] = None
    shots: int = 200
    J_max: float = DEFAULT_J_MAX

    def __post_init__(self):
        object.__setattr__(self, "prep", Prep.parse(self.prep))
        object.__setattr__(self, "z_values", tuple(float(x) for x in self.z_values))
        object.__setattr__(self, "n_values", tuple(float(x) for x in self.n_values))
        if self.pulse_time <= 0:
            raise ValueError("pulse_time must be positive")
        if not self.z_values or not self.n_values:
            raise ValueError("grids must be non-empty")
        if self.echo_repeats < 0:
            raise ValueError("echo_repeats must be >= 0")
        if self.shots < 1:
            raise ValueError("shots must be >= 1")

    def metadata(self) -> dict:
        return {"prep": self.prep.value, "pulse_time": self.pulse_time,
                "echo_repeats": self.echo_repeats, "echo_angle": self.echo_angle,
                "shots": self.shots if self.noise else 1,
                "seed": self.noise.seed if self.noise else None,
                "sigma_rel": {f"{i}-{j}": s for (i, j), s in self.noise.sigma_rel.items()}
                if self.noise else {}}


@dataclass(frozen=True)
class FingerpinchResult:
    """``signal[i, k] = 1 - P_ground`` at ``(z_values[i], n_values[k])``."""

    z_values: np.ndarray
    n_values: np.ndarray
    J_z: np.ndarray
    J_n: np.ndarray
    signal: np.ndarray
    config: ExperimentConfig = field(compare=False)

    def rows(self) -> list[dict]:
        return [{"V_or_J_z": float(z), "V_or_J_n": float(n), "signal": float(self.signal[i, k])}
                for i, z in enumerate(self.z_values) for k, n in enumerate(self.n_values)]


def _noise_factors(noise: Optional[NoiseModel], shots: int):
    """Per-shot multipliers of J12 and J23 (ones without noise)."""
    if noise is None:
        return np.ones(1), np.ones(1)
    bonds, f = noise.factors(3, shots)
    return f[:, bonds.index(Z_BOND)], f[:, bonds.index(N_BOND)]


def _final_amplitude(u: np.ndarray, prep: Prep, J_max: float) -> np.ndarray:
    """``<0| undo . u . pre |0>`` for a stack of qubit propagators."""
    pre, undo = _qubit_frame(prep, J_max)
    psi0 = pre[:, 0]
    return np.einsum("j,...jk,k->...", undo[0], u, psi0)


def fingerpinch(config: ExperimentConfig, maps: Optional[Sequence[VoltageMap]] = None
                ) -> FingerpinchResult:
    """``1 - P_ground`` after pulsing J12 and J23 together for ``pulse_time``.

    With ``echo_repeats = N > 0`` the exchange pulse is cut into ``N`` equal
    parts, each followed by a J12-only rotation by ``echo_angle`` at
    ``J_max`` (a Z-pi echo by default); an echo angle of zero skips it.
    Quasi-static noise, when configured, multiplies every J12 and J23 of a
    shot (echo pulses included) by the same factors, and the map is the
    shot average.
    """
    z = np.asarray(config.z_values)
    n = np.asarray(config.n_values)
    if maps is None:
        jz, jn = z, n
    else:
        jz, jn = maps[0].J(z), maps[1].J(n)
    if np.any(jz < 0) or np.any(jn < 0):
        raise ValueError("exchange amplitudes must be non-negative")
    f12, f23 = _noise_factors(config.noise, config.shots)
    # axes: (z, n, shot)
    J12 = jz[:, None, None] * f12[None, None, :]
    J23 = jn[None, :, None] * f23[None, None, :]
    reps = max(config.echo_repeats, 1)
    step = batch_qubit_propagator(J12, J23, 0.0, config.pulse_time / reps)
    if config.echo_repeats and config.echo_angle:
        jmax = config.J_max * f12
        echo = batch_qubit_propagator(jmax, 0.0, 0.0, config.echo_angle / config.J_max)
        step = echo[None, None] @ step
    u = step
    for _ in range(reps - 1):
        u = step @ u
    amp = _final_amplitude(u, config.prep, config.J_max)
    signal = 1.0 - np.mean(np.abs(amp) ** 2, axis=-1)
    return FingerpinchResult(z, n, jz, jn, np.clip(signal, 0.0, 1.0), config)


def fingerpinch_echoed(config: ExperimentConfig, maps=None) -> FingerpinchResult:
    if config.echo_repeats < 1:
        config = replace(config, echo_repeats=DEFAULT_ECHO_REPEATS)
    return fingerpinch(config, maps)


def fingerpinch_schedule(J_z: float, J_n: float, config: ExperimentConfig) -> Schedule:
    """The pulse sequence behind one map point, for full-space checks."""
    reps = max(config.echo_repeats, 1)
    segs = []
    for _ in range(reps):
        segs.append(PulseSegment({Z_BOND: J_z, N_BOND: J_n}, config.pulse_time / reps))
        if config.echo_repeats and config.echo_angle:
            segs.append(PulseSegment({Z_BOND: config.J_max}, config.echo_angle / config.J_max))
    return Schedule(3, tuple(segs), 0.0, max(config.J_max, J_z, J_n))


def dark_locus(result: FingerpinchResult, min_z: float = 0.0):
    """Per-column minimum of the map: ``(J_z, J_n at the minimum)`` and the
    least-squares slope through the origin."""
    keep = result.J_z > min_z
    jz = result.J_z[keep]
    jn = result.J_n[np.argmin(result.signal[keep], axis=1)]
    slope = float(np.dot(jz, jn) / np.dot(jz, jz)) if jz.size else math.nan
    return jz, jn, slope


def region_contrast(result: FingerpinchResult, mask: np.ndarray) -> float:
    values = result.signal[mask]
    return float(values.max() - values.min())


# -- time domain -------------------------------------------------------------------------

@dataclass(frozen=True)
class TimeTrace:
    times: np.ndarray
    probability: np.ndarray
    fit: FitResult

    @property
    def quality_factor(self) -> float:
        return self.fit.quality_factor

    def rows(self) -> list[dict]:
        return [{"t_ns": float(t), "probability": float(p)}
                for t, p in zip(self.times, self.probability)]


def time_domain_trace(prep: Prep | str, J_z: float, J_n: float, t_max: float, n_points: int,
                      noise: Optional[NoiseModel] = None, shots: int = 2000,
                      J_max: float = DEFAULT_J_MAX) -> TimeTrace:
    """Ground probability versus pulse length for fixed (J_z, J_n), with a
    damped-sinusoid fit. Noise is averaged over ``shots`` quasi-static draws."""
    if n_points < 16:
        raise ValueError("need at least 16 time points")
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    if J_z < 0 or J_n < 0:
        raise ValueError("exchange amplitudes must be non-negative")
    prep = Prep.parse(prep)
    times = np.linspace(0.0, t_max, n_points)
    f12, f23 = _noise_factors(noise, shots)
    u = batch_qubit_propagator(J_z * f12[None, :], J_n * f23[None, :], 0.0, times[:, None])
    amp = _final_amplitude(u, prep, J_max)
    prob = np.clip(np.mean(np.abs(amp) ** 2, axis=-1), 0.0, 1.0)
    return TimeTrace(times, prob, fit_damped_sinusoid(times, prob))


def calibrate_sigma_for_q(target_q: float, J_z: float = 0.0, J_n: float = 0.213,
                          bonds: Sequence = (N_BOND,), t_max: float = 1500.0,
                          n_points: int = 400, shots: int = 2000, seed: int = 0,
                          bracket=(1e-3, 0.1)) -> tuple[float, TimeTrace]:
    """Relative noise on ``bonds`` giving a fitted quality factor ``target_q``.

    The quality factor falls monotonically with sigma (common random
    numbers keep it smooth), so a bracketed root search suffices.
    """
    def trace(sigma):
        noise = NoiseModel({b: sigma for b in bonds}, seed)
        return time_domain_trace(Prep.SINGLET, J_z, J_n, t_max, n_points, noise, shots)

    sigma = brentq(lambda s: trace(s).quality_factor - target_q, *bracket, xtol=1e-6)
    return sigma, trace(sigma)


def noiseless_frequency(J_z: float, J_n: float) -> float:
    """Rotation frequency (cycles/ns) of the qubit under fixed couplings."""
    hx = math.sqrt(3) / 4 * J_n
    hz = (-2 * J_z + J_n) / 4
    return 2 * math.hypot(hx, hz) / (2 * math.pi)


def evolve_reference(prep: Prep | str, J_z: float, J_n: float, t: float,
                     J_max: float = DEFAULT_J_MAX) -> float:
    """Full-space ground probability for one noiseless point (cross-check)."""
    prep = Prep.parse(prep)
    psi = prepare_state(prep, J_max)
    seg = PulseSegment({Z_BOND: J_z, N_BOND: J_n}, t) if t > 0 else None
    if seg is not None:
        psi = expm_unitary(seg.hamiltonian(3), t) @ psi
    undo = y_half_schedules(J_max)[1] if prep is Prep.X else None
    return ground_probability(psi, undo)
