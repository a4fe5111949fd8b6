"""Gate synthesis from sequential and simultaneous exchange pulses.

Throughout, a segment with effective field ``h`` realises
``exp(-i tau h.sigma)``, i.e. a right-handed rotation by ``2 |h| tau`` about
``h / |h|``. Because every exchange is non-negative, only some field
directions exist: with a linear chain they fill the arc from
``(sqrt3, 0, 1)/2`` (J23 alone) through ``+x`` (J23 = 2 J12) down to ``-z``
(J12 alone); with all three couplings every direction in the x-z plane is
available. A rotation whose axis points the wrong way is run about the
opposite axis by ``2 pi - theta`` instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

from .model import Connectivity, effective_h
from .numkit import ComplexMatrix, avg_gate_fidelity, unitary_distance_up_to_phase
from .pulsekit import (DEFAULT_J_MAX, IDENTITY_2, QUBIT_A, QUBIT_B, SIGMA_X, SIGMA_Y,
                       SIGMA_Z, THETA_N_X, THETA_Z_X, TWO_PI, EffectiveGate, PulseSegment,
                       QubitSites, Schedule, computational_projector_3, embed_qubit_gate,
                       evolve_effective, evolve_full, rot_n, rot_z, segment_gate, sequential,
                       sequential_x, sequential_y, wall_clock)

SQRT3 = math.sqrt(3.0)
ACCEPT_FIDELITY = 1 - 1e-6
# Effective field per unit exchange: h = FIELD @ (J12, J23, J13), rows (x, z).
FIELD = np.array([[0.0, SQRT3 / 4, -SQRT3 / 4],
                  [-0.5, 0.25, 0.25]])


class DegenerateAxisError(ValueError):
    """The couplings produce no traceless field, hence no rotation axis."""


@dataclass(frozen=True)
class GateSpec:
    name: str
    target_su2: ComplexMatrix
    requires_leakage_phase: Optional[float] = None


@dataclass(frozen=True)
class SynthResult:
    """Outcome of a synthesis request.

    Infeasible requests come back with ``feasible=False``, no schedule and a
    short ``reason`` rather than raising.
    """

    schedule: Optional[Schedule]
    achieved_fidelity: float
    pulse_count: int
    wall_clock: float
    leakage_phase: float
    feasible: bool = True
    name: str = ""
    strategy: str = ""
    reason: str = ""
    details: dict = field(default_factory=dict, compare=False)

    @classmethod
    def infeasible(cls, name: str, strategy: str, reason: str) -> "SynthResult":
        return cls(None, 0.0, 0, math.inf, 0.0, False, name, strategy, reason)


# -- axis geometry --------------------------------------------------------------

def reachable_axis(J12: float, J23: float, J13: float = 0.0,
                   connectivity: Connectivity | str = Connectivity.LINEAR):
    """Rotation axis ``(hx, 0, hz)/|h|`` and angular rate ``2|h|`` of a segment."""
    if min(J12, J23, J13) < 0:
        raise ValueError("exchange must be non-negative")
    h = effective_h(J12, J23, J13, connectivity)
    if h.norm <= 1e-15 * max(J12, J23, J13, 1e-300):
        raise DegenerateAxisError("couplings give no rotation (equal exchanges)")
    return np.array([h.hx, 0.0, h.hz]) / h.norm, 2 * h.norm


def max_rate_couplings(direction, connectivity: Connectivity | str,
                       J_max: float = DEFAULT_J_MAX, tol: float = 1e-12):
    """Couplings ``(J12, J23, J13)`` giving the fastest rotation about ``direction``.

    ``direction`` is an ``(x, z)`` pair or an x-z plane 3-vector. Returns
    ``None`` when no non-negative couplings point the field that way.
    """
    d = np.asarray(direction, dtype=float)
    if d.size == 3:
        if abs(d[1]) > 1e-9:
            return None
        d = d[[0, 2]]
    gx, gz = d / np.linalg.norm(d)
    connectivity = Connectivity.parse(connectivity)
    if connectivity is Connectivity.LINEAR:
        a23 = 4 * gx / SQRT3
        a12 = 2 * (gx / SQRT3 - gz)
        if a23 < -tol or a12 < -tol:
            return None
        lam = J_max / max(a12, a23)
        return _snap((a12 * lam, a23 * lam, 0.0), J_max)
    # The sum J12 + J23 + J13 is invisible to the field; shift it so the
    # smallest coupling is zero and then scale the largest up to J_max.
    base = np.linalg.pinv(FIELD) @ np.array([gx, gz])
    base = base - base.min()
    return _snap(base * (J_max / base.max()), J_max)


def _snap(couplings, J_max: float, rel: float = 1e-12):
    """Round-off residue of a switched-off coupling becomes an exact zero."""
    return tuple(0.0 if x <= rel * J_max else min(float(x), J_max) for x in couplings)


def rate_of(couplings) -> float:
    return float(2 * np.linalg.norm(FIELD @ np.asarray(couplings, dtype=float)))


def su2_axis_angle(u) -> tuple[np.ndarray, float]:
    """Axis and angle of ``u`` as ``exp(-i angle axis.sigma / 2)``, angle in [0, pi].

    The global phase (including the sign ambiguity of SU(2)) is discarded.
    """
    u = np.asarray(u, dtype=np.complex128)
    det = np.linalg.det(u)
    v = u / np.sqrt(det)
    a0 = np.trace(v) / 2
    # v = a0 I - i (a . sigma); pick the sign with Re a0 >= 0.
    vec = np.array([np.trace(v @ s) for s in (SIGMA_X, SIGMA_Y, SIGMA_Z)]) / 2 * 1j
    if a0.real < 0:
        a0, vec = -a0, -vec
    vec = vec.real
    s = np.linalg.norm(vec)
    angle = 2 * math.atan2(s, min(max(a0.real, -1.0), 1.0))
    axis = vec / s if s > 1e-15 else np.array([0.0, 0.0, 1.0])
    return axis, angle


def rotation_su2(axis, angle: float) -> ComplexMatrix:
    """``exp(-i angle axis.sigma / 2)``."""
    ax, ay, az = axis
    gen = ax * SIGMA_X + ay * SIGMA_Y + az * SIGMA_Z
    return math.cos(angle / 2) * IDENTITY_2 - 1j * math.sin(angle / 2) * gen


def _pulse(couplings, angle: float):
    """Segment (J values, duration) turning by ``angle`` at the given couplings."""
    rate = rate_of(couplings)
    return couplings, angle / rate


# -- target gates ------------------------------------------------------------------

_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)
_S = np.diag([1, 1j]).astype(np.complex128)

STANDARD_GATES: dict[str, ComplexMatrix] = {
    "I": IDENTITY_2,
    "Z": SIGMA_Z,
    "S": _S,
    "Sdg": _S.conj().T,
    "X": SIGMA_X,
    "Y": SIGMA_Y,
    "H": _H,
    "X_pi/2": _H @ _S @ _H,
    "X_-pi/2": _H @ _S.conj().T @ _H,
    "YH": SIGMA_Y @ _H,
}


def gate_spec(name: str) -> GateSpec:
    return GateSpec(name, STANDARD_GATES[name])


def _is_identity(u, tol=1e-12) -> bool:
    return unitary_distance_up_to_phase(u, IDENTITY_2) <= tol


# -- verification ---------------------------------------------------------------

def schedule_fidelity(schedule: Schedule, target_su2) -> float:
    """Average gate fidelity of the full 3-spin evolution on one qubit copy."""
    u = evolve_full(schedule.on_chain(3))
    return avg_gate_fidelity(u, embed_qubit_gate(target_su2), computational_projector_3(0.5))


def _result(name, strategy, schedule: Schedule, target_su2) -> SynthResult:
    fid = schedule_fidelity(schedule, target_su2) if len(schedule) else \
        (1.0 if _is_identity(target_su2, 1e-9) else 0.0)
    gate = evolve_effective(schedule)
    return SynthResult(schedule, fid, len(schedule), wall_clock(schedule),
                       gate.leakage_phase, fid >= ACCEPT_FIDELITY, name, strategy,
                       "" if fid >= ACCEPT_FIDELITY else "fidelity below threshold")


# -- single pulse ---------------------------------------------------------------

def single_pulse_options(target_su2, connectivity, J_max: float = DEFAULT_J_MAX):
    """All single-segment realisations ``(couplings, duration)`` of a gate.

    Decided analytically: the gate's axis must lie in the x-z plane and one
    of its two orientations must be a reachable field direction.
    """
    axis, angle = su2_axis_angle(target_su2)
    if angle <= 1e-12:
        return []
    if abs(axis[1]) > 1e-9:
        return []
    out = []
    for direction, theta in ((axis, angle), (-axis, TWO_PI - angle)):
        couplings = max_rate_couplings(direction, connectivity, J_max)
        if couplings is not None:
            out.append(_pulse(couplings, theta))
    return sorted(out, key=lambda p: p[1])


def _segment(couplings, duration, qubit: QubitSites = QUBIT_A) -> PulseSegment:
    return PulseSegment(qubit.bond_map(*couplings), duration)


# -- multi-pulse search ---------------------------------------------------------
#
# Work with SO(3) rotations: the sign ambiguity of SU(2) is then gone and a
# product R_b(beta) R_a(alpha) = R has a closed form once a is fixed. Since
# R_a leaves a alone, R_b must carry a to R a, so b is perpendicular to
# R a - a (and lies in the x-z plane); beta and alpha follow from projections.

def so3(axis, angle) -> np.ndarray:
    """Right-handed rotation matrix (Rodrigues)."""
    x, y, z = axis
    k = np.array([[0, -z, y], [z, 0, -x], [-y, x, 0]])
    return np.eye(3) + math.sin(angle) * k + (1 - math.cos(angle)) * (k @ k)


def su2_to_so3(u) -> np.ndarray:
    axis, angle = su2_axis_angle(u)
    return so3(axis, angle)


def _signed_angle(u, v, axis) -> float:
    return math.atan2(float(np.dot(axis, np.cross(u, v))), float(np.dot(u, v))) % TWO_PI


def _angle_about(r, axis, tol=1e-7):
    """Angle in [0, 2 pi) if ``r`` is a rotation about ``axis``, else None."""
    ref = np.array([0.0, 1.0, 0.0]) if abs(axis[1]) < 0.9 else np.array([1.0, 0.0, 0.0])
    ref = ref - np.dot(ref, axis) * axis
    ref /= np.linalg.norm(ref)
    angle = _signed_angle(ref, r @ ref, axis)
    if np.max(np.abs(so3(axis, angle) - r)) > tol:
        return None
    return angle


def xz_axis(phi: float) -> np.ndarray:
    return np.array([math.cos(phi), 0.0, math.sin(phi)])


@dataclass(frozen=True)
class _AxisSet:
    """Field directions ``(cos phi, 0, sin phi)`` for phi in ``[lo, hi]``."""

    lo: float
    hi: float
    connectivity: Connectivity
    J_max: float

    @classmethod
    def of(cls, connectivity: Connectivity, J_max: float) -> "_AxisSet":
        if connectivity is Connectivity.LINEAR:
            return cls(-math.pi / 2, math.pi / 6, connectivity, J_max)
        return cls(-math.pi, math.pi, connectivity, J_max)

    def couplings(self, phi: float):
        return max_rate_couplings((math.cos(phi), math.sin(phi)), self.connectivity, self.J_max)


_PINV_FIELD = np.linalg.pinv(FIELD)


def max_rate(phi, connectivity: Connectivity, J_max: float = DEFAULT_J_MAX):
    """Fastest angular rate about ``(cos phi, 0, sin phi)``; 0 where unreachable.

    Vectorised closed form of ``rate_of(max_rate_couplings(...))``.
    """
    gx, gz = np.cos(phi), np.sin(phi)
    if connectivity is Connectivity.LINEAR:
        a12 = 2 * (gx / SQRT3 - gz)
        a23 = 4 * gx / SQRT3
        ok = (a12 >= -1e-12) & (a23 >= -1e-12)
        with np.errstate(divide="ignore"):
            return np.where(ok, 2 * J_max / np.maximum(a12, a23), 0.0)
    base = _PINV_FIELD @ np.array([gx, gz])
    return 2 * J_max / np.ptp(base, axis=0)


def _cross(u, v):
    """Row-wise cross product (much cheaper than ``np.cross`` for small stacks)."""
    return np.stack([u[:, 1] * v[:, 2] - u[:, 2] * v[:, 1],
                     u[:, 2] * v[:, 0] - u[:, 0] * v[:, 2],
                     u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]], axis=1)


def _rotate(vec, axis, angle):
    """Rodrigues rotation of row vectors ``vec`` about row axes ``axis``."""
    c, s = np.cos(angle)[:, None], np.sin(angle)[:, None]
    dot = np.sum(axis * vec, axis=1)[:, None]
    return vec * c + _cross(axis, vec) * s + axis * dot * (1 - c)


def _two_pulse_batch(r, phi_a, axes: "_AxisSet"):
    """Closed-form ``R_b(beta) R_a(alpha) = r`` for an array of first axes.

    ``r`` is one rotation or a stack matching ``phi_a``. Returns
    ``(time, phi_b, alpha, beta)`` arrays, keeping the faster of the two
    admissible second axes; ``time`` is inf where nothing works.
    """
    phi_a = np.atleast_1d(np.asarray(phi_a, dtype=float))
    n = phi_a.size
    a = np.stack([np.cos(phi_a), np.zeros(n), np.sin(phi_a)], axis=1)
    r = np.asarray(r, dtype=float)
    if r.ndim == 2:
        v, ry = a @ r.T, np.broadcast_to(r[:, 1], (n, 3))
    else:
        v, ry = np.einsum("nij,nj->ni", r, a), r[:, :, 1]
    w = v - a
    wn = np.hypot(w[:, 0], w[:, 2])
    good = wn > 1e-12
    wn = np.where(good, wn, 1.0)
    b0 = np.stack([w[:, 2] / wn, np.zeros(n), -w[:, 0] / wn], axis=1)
    rate_a = max_rate(phi_a, axes.connectivity, axes.J_max)
    best = (np.full(n, np.inf), np.zeros(n), np.zeros(n), np.zeros(n))
    for b in (b0, -b0):
        phi_b = np.arctan2(b[:, 2], b[:, 0])
        rate_b = max_rate(phi_b, axes.connectivity, axes.J_max)
        ap = a - np.sum(a * b, axis=1)[:, None] * b
        vp = v - np.sum(v * b, axis=1)[:, None] * b
        beta = np.arctan2(np.sum(b * _cross(ap, vp), axis=1), np.sum(ap * vp, axis=1)) % TWO_PI
        # R_a(alpha) y = R_b(-beta) r y, and y is perpendicular to every axis.
        m = _rotate(ry, b, -beta)
        # a . (y x m) = a_x m_z - a_z m_x
        alpha = np.arctan2(a[:, 0] * m[:, 2] - a[:, 2] * m[:, 0], m[:, 1]) % TWO_PI
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(good & (rate_a > 0) & (rate_b > 0), alpha / rate_a + beta / rate_b, np.inf)
        better = t < best[0]
        best = tuple(np.where(better, new, old) for new, old in zip((t, phi_b, alpha, beta), best))
    return best


def _so3_batch(phi, angle):
    """Stack of rotations about ``(cos phi, 0, sin phi)``."""
    c, s = np.cos(angle), np.sin(angle)
    x, z = np.cos(phi), np.sin(phi)
    out = np.empty(np.shape(phi) + (3, 3))
    out[..., 0, 0] = c + x * x * (1 - c)
    out[..., 0, 1] = -z * s
    out[..., 0, 2] = x * z * (1 - c)
    out[..., 1, 0] = z * s
    out[..., 1, 1] = c
    out[..., 1, 2] = -x * s
    out[..., 2, 0] = x * z * (1 - c)
    out[..., 2, 1] = x * s
    out[..., 2, 2] = c + z * z * (1 - c)
    return out


def _chain_time(chain, axes: "_AxisSet") -> float:
    return sum(angle / float(max_rate(phi, axes.connectivity, axes.J_max))
               for phi, angle in chain)


def _local_minima(vals, limit):
    """Indices of grid local minima (finite), best first."""
    left = np.concatenate(([np.inf], vals[:-1]))
    right = np.concatenate((vals[1:], [np.inf]))
    idx = np.flatnonzero(np.isfinite(vals) & (vals <= left) & (vals <= right))
    return idx[np.argsort(vals[idx])][:limit]


def _scan_refine(objective, lo, hi, n_grid=721, n_starts=32, batch=None):
    """Grid scan of a 1-D objective, then bounded refinement around the
    ``n_starts`` best local minima of the grid."""
    grid = np.linspace(lo, hi, n_grid)
    vals = batch(grid) if batch is not None else np.array([objective(x) for x in grid])
    starts = _local_minima(vals, n_starts)
    if starts.size == 0:
        return None
    step = grid[1] - grid[0]
    best = (vals[starts[0]], grid[starts[0]])
    # Brent's parabolic steps break on infinite values; cap them instead.
    capped = lambda x: min(objective(x), 1e30)
    for i in starts:
        res = minimize_scalar(capped, bounds=(max(lo, grid[i] - step), min(hi, grid[i] + step)),
                              method="bounded", options={"xatol": 1e-12})
        if res.fun < 1e30 and res.fun < best[0]:
            best = (res.fun, res.x)
    return best


def _best_two_pulse(r, axes: "_AxisSet", n_grid=721, n_starts=32):
    """Fastest ``[(phi_a, alpha), (phi_b, beta)]`` or None."""
    batch = lambda phis: _two_pulse_batch(r, phis, axes)[0]
    found = _scan_refine(lambda x: float(batch(x)[0]), axes.lo, axes.hi, n_grid, n_starts, batch)
    if found is None:
        return None
    t, phi_b, alpha, beta = (float(x[0]) for x in _two_pulse_batch(r, found[1], axes))
    if not np.isfinite(t):
        return None
    return [(float(found[1]), alpha), (phi_b, beta)]


def _best_three_pulse(r, axes: "_AxisSet", n_phi=48, n_alpha=48, n_mid=121, n_polish=4):
    """Fastest three-segment chain.

    A dense vectorised grid over (first axis, first angle, second axis) with
    the rest in closed form picks starting points; Nelder-Mead polishes them.
    """
    phi1, alpha1, phi2 = np.meshgrid(np.linspace(axes.lo, axes.hi, n_phi),
                                     np.linspace(0.0, TWO_PI, n_alpha, endpoint=False)[1:],
                                     np.linspace(axes.lo, axes.hi, n_mid), indexing="ij")
    phi1, alpha1, phi2 = phi1.ravel(), alpha1.ravel(), phi2.ravel()
    rate1 = max_rate(phi1, axes.connectivity, axes.J_max)
    rest = r @ np.transpose(_so3_batch(phi1, alpha1), (0, 2, 1))
    t_rest = _two_pulse_batch(rest, phi2, axes)[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        total = np.where(rate1 > 0, alpha1 / rate1 + t_rest, np.inf)

    def chain_of(x):
        p1 = min(max(x[0], axes.lo), axes.hi)
        a1 = x[1] % TWO_PI
        p2 = min(max(x[2], axes.lo), axes.hi)
        t, pb, al, be = (float(v[0]) for v in _two_pulse_batch(r @ so3(xz_axis(p1), a1).T, p2, axes))
        rate = float(max_rate(p1, axes.connectivity, axes.J_max))
        if not np.isfinite(t) or rate <= 0:
            return math.inf, None
        return a1 / rate + t, [(p1, a1), (p2, al), (pb, be)]

    best = (math.inf, None)
    for i in np.argsort(total)[:n_polish]:
        if not np.isfinite(total[i]):
            break
        res = minimize(lambda x: chain_of(x)[0], np.array([phi1[i], alpha1[i], phi2[i]]),
                       method="Nelder-Mead",
                       options={"xatol": 1e-11, "fatol": 1e-13, "maxiter": 800})
        cand = chain_of(res.x)
        if cand[0] < best[0]:
            best = cand
    return best[1]


# J12 alone drives about -z, J23 alone about (sqrt3, 0, 1)/2; both at rate J.
PHI_J12 = -math.pi / 2
PHI_J23 = math.pi / 6


def _fixed_two(r, phi_a: float, phi_b: float):
    """``R_b(beta) R_a(alpha) = r`` for fixed axes, or None."""
    a, b = xz_axis(phi_a), xz_axis(phi_b)
    v = r @ a
    if abs(np.dot(b, v - a)) > 1e-9:
        return None
    beta = _signed_angle(a - np.dot(a, b) * b, v - np.dot(v, b) * b, b)
    alpha = _angle_about(so3(b, beta).T @ r, a)
    return None if alpha is None else [(phi_a, alpha), (phi_b, beta)]


def _fixed_three(r, phis, n_grid=721):
    """All ``R_3 R_2 R_1 = r`` with fixed axes: roots in the first angle."""
    a1, a2, a3 = (xz_axis(p) for p in phis)

    def cond(alpha):
        rest = r @ so3(a1, alpha).T
        return float(np.dot(a3, rest @ a2 - a2))

    grid = np.linspace(0.0, TWO_PI, n_grid)
    vals = np.array([cond(x) for x in grid])
    out = []
    for i in range(n_grid - 1):
        if vals[i] == 0.0 or vals[i] * vals[i + 1] < 0:
            root = grid[i] if vals[i] == 0.0 else brentq(cond, grid[i], grid[i + 1], xtol=1e-15)
            tail = _fixed_two(r @ so3(a1, root).T, phis[1], phis[2])
            if tail is not None:
                out.append([(phis[0], root)] + tail)
    return out


def _fixed_four(r, phis, n_grid=181):
    """Four fixed axes leave a one-parameter family; return its fastest member."""
    a1 = xz_axis(phis[0])

    def best_for(alpha):
        tails = _fixed_three(r @ so3(a1, alpha).T, phis[1:], n_grid)
        if not tails:
            return math.inf, None
        tail = min(tails, key=lambda c: sum(x for _, x in c))
        return alpha + sum(x for _, x in tail), [(phis[0], alpha)] + tail

    found = _scan_refine(lambda x: best_for(x)[0], 0.0, TWO_PI, n_grid, 8)
    return [] if found is None else [best_for(found[1])[1]]


def sequential_chains(target_su2, n_pulses: int):
    """Exact alternating J12 / J23 decompositions with ``n_pulses`` segments.

    Returns chains ``[(phi, angle), ...]`` in time order, for both choices of
    the leading coupling. Angles lie in ``[0, 2 pi)``.
    """
    r = su2_to_so3(target_su2)
    out = []
    for first in (PHI_J12, PHI_J23):
        other = PHI_J23 if first == PHI_J12 else PHI_J12
        phis = [first if i % 2 == 0 else other for i in range(n_pulses)]
        if n_pulses == 1:
            ang = _angle_about(r, xz_axis(first))
            if ang is not None:
                out.append([(first, ang)])
        elif n_pulses == 2:
            sol = _fixed_two(r, *phis)
            if sol is not None:
                out.append(sol)
        elif n_pulses == 3:
            out.extend(_fixed_three(r, phis))
        elif n_pulses == 4:
            out.extend(c for c in _fixed_four(r, phis) if c is not None)
        else:
            raise ValueError("n_pulses must be between 1 and 4")
    return out


def _schedule_from_chain(chain, axes: _AxisSet, tau_idle, n_spins=3,
                         qubit: QubitSites = QUBIT_A) -> Schedule:
    segs = []
    for phi, angle in chain:
        if angle <= 1e-12:
            continue
        c, dur = _pulse(axes.couplings(phi), angle)
        segs.append(_segment(c, dur, qubit))
    return Schedule(n_spins, tuple(segs), tau_idle, axes.J_max)


def _pick(name, strategy, candidates, u, reason):
    """Fastest candidate that passes the full-space fidelity check."""
    results = [_result(name, strategy, sched, u) for sched in candidates]
    results = [r for r in results if r.feasible]
    if not results:
        return SynthResult.infeasible(name, strategy, reason)
    return min(results, key=lambda r: (round(r.wall_clock, 9), r.pulse_count))


def synthesize(target: GateSpec, connectivity: Connectivity | str = Connectivity.LINEAR,
               max_pulses: int = 2, J_max: float = DEFAULT_J_MAX, tau_idle: float = 0.0,
               n_starts: int = 32) -> SynthResult:
    """Fastest simultaneous-pulse schedule (at most ``max_pulses`` segments)
    reproducing ``target`` up to a global phase.

    One pulse is decided analytically. For two pulses the first axis is
    scanned and refined from ``n_starts`` starting points; everything else
    follows in closed form. Three pulses add a grid over the first pulse.
    The search is deterministic.
    """
    connectivity = Connectivity.parse(connectivity)
    if max_pulses not in (1, 2, 3):
        raise ValueError("max_pulses must be 1, 2 or 3")
    strategy = f"simultaneous-{connectivity.value}"
    u = np.asarray(target.target_su2, dtype=np.complex128)
    if _is_identity(u):
        return _result(target.name, strategy, Schedule(3, (), tau_idle, J_max), u)

    axes = _AxisSet.of(connectivity, J_max)
    candidates: list[Schedule] = []
    options = single_pulse_options(u, connectivity, J_max)
    if options:
        c, dur = options[0]
        candidates.append(Schedule(3, (_segment(c, dur),), tau_idle, J_max))
    r = su2_to_so3(u)
    if max_pulses >= 2:
        chain = _best_two_pulse(r, axes, n_starts=n_starts)
        if chain is not None:
            candidates.append(_schedule_from_chain(chain, axes, tau_idle))
    if max_pulses >= 3:
        chain = _best_three_pulse(r, axes)
        if chain is not None:
            candidates.append(_schedule_from_chain(chain, axes, tau_idle))
    return _pick(target.name, strategy, candidates, u,
                 f"no solution with at most {max_pulses} pulses")


def synthesize_sequential(target: GateSpec, max_pulses: int = 4, J_max: float = DEFAULT_J_MAX,
                          tau_idle: float = 0.0) -> SynthResult:
    """Fastest alternating J12 / J23 sequence (one coupling on at a time)."""
    u = np.asarray(target.target_su2, dtype=np.complex128)
    strategy = "sequential"
    if _is_identity(u):
        return _result(target.name, strategy, Schedule(3, (), tau_idle, J_max), u)
    axes = _AxisSet.of(Connectivity.LINEAR, J_max)
    candidates = []
    for k in range(1, max_pulses + 1):
        candidates.extend(_schedule_from_chain(c, axes, tau_idle)
                          for c in sequential_chains(u, k))
    return _pick(target.name, strategy, candidates, u,
                 f"no sequential solution with at most {max_pulses} pulses")


def _chain_of_schedule(schedule: Schedule, qubit: QubitSites = QUBIT_A):
    """``[(label, angle)]`` for single-coupling segments (``z``, ``n`` or ``m``)."""
    names = {qubit.z_bond: "z", qubit.n_bond: "n", qubit.m_bond: "m"}
    out = []
    for seg in schedule.segments:
        on = [(b, j) for b, j in seg.J_values.items() if j > 0]
        if len(on) != 1:
            raise ValueError("segment drives more than one coupling")
        bond, j = on[0]
        out.append((names[bond], j * seg.duration))
    return out


# -- gate catalog -------------------------------------------------------------------

CATALOG_GATES = ("I", "Z", "S", "Sdg", "X", "Y", "H", "X_pi/2", "X_-pi/2", "YH")


@dataclass(frozen=True)
class CatalogEntry:
    gate: GateSpec
    sequential: SynthResult
    sequential_angles: tuple
    linear: SynthResult
    all_to_all: SynthResult

    def results(self):
        return {"sequential": self.sequential, "linear": self.linear,
                "all_to_all": self.all_to_all}


def _documented_sequential(name: str, J_max: float, tau_idle: float) -> Optional[SynthResult]:
    """The standard X and Y constructions, used in place of a search."""
    if name == "X":
        _, sched = sequential_x(J_max, tau_idle)
    elif name == "Y":
        _, sched = sequential_y(J_max, tau_idle)
    else:
        return None
    return _result(name, "sequential", sched, STANDARD_GATES[name])


def gate_catalog(J_max: float = DEFAULT_J_MAX, tau_idle: float = 0.0,
                 gates: Sequence[str] = CATALOG_GATES, max_pulses: int = 3) -> list[CatalogEntry]:
    """Sequential and simultaneous (linear, all-to-all) versions of each gate.

    X and Y use their standard sequential constructions; every other
    sequential entry is the fastest alternating J12/J23 chain of at most
    four pulses.
    """
    entries = []
    for name in gates:
        spec = gate_spec(name)
        seq = _documented_sequential(name, J_max, tau_idle) or \
            synthesize_sequential(spec, 4, J_max, tau_idle)
        angles = tuple(_chain_of_schedule(seq.schedule)) if seq.feasible else ()
        lin = synthesize(spec, Connectivity.LINEAR, max_pulses, J_max, tau_idle)
        a2a = synthesize(spec, Connectivity.ALL_TO_ALL, max_pulses, J_max, tau_idle)
        entries.append(CatalogEntry(spec, seq, angles, lin, a2a))
    return entries


def catalog_averages(entries: Sequence[CatalogEntry]) -> dict[str, float]:
    """Mean wall clock (ns) per strategy, leaving out the identity."""
    gates = [e for e in entries if e.gate.name != "I"]
    return {key: float(np.mean([e.results()[key].wall_clock for e in gates]))
            for key in ("sequential", "linear", "all_to_all")}


def catalog_rows(entries: Sequence[CatalogEntry]) -> list[dict]:
    rows = []
    for e in entries:
        for strategy, res in e.results().items():
            rows.append({"gate": e.gate.name, "strategy": strategy,
                         "pulses": res.pulse_count if res.feasible else "",
                         "wall_clock_ns": res.wall_clock if res.feasible else "",
                         "fidelity": res.achieved_fidelity if res.feasible else "",
                         "feasible": res.feasible})
    return rows


# -- phase-correction pulses ----------------------------------------------------------
#
# A segment with |h| tau = pi turns the qubit by 2 pi, i.e. acts as -1 on the
# computational block, while the identity shift adds exp(i phi) with
# phi = (sum J) tau / 2. Relative to the untouched spin-3/2 states the
# computational block therefore picks up -exp(i phi).

class PhaseCorrection(NamedTuple):
    schedule: Schedule
    phi: float
    relative_phase: float


def _pair_quadratic(j1: float, j2: float) -> float:
    return j1 * j1 - j1 * j2 + j2 * j2


def phase_correction_linear(qubit: str | QubitSites, J_first: float, J_second: float,
                            J_max: Optional[float] = None, tau_idle: float = 0.0) -> PhaseCorrection:
    """Segment that is the identity on a qubit up to a phase relative to leakage.

    ``J_first`` drives the outer pair of the triple (1-2 for qubit A, 5-6 for
    qubit B) and ``J_second`` the pair next to it (2-3, 4-5). The schedule
    lives on six spins.
    """
    sites = {"A": QUBIT_A, "B": QUBIT_B}[qubit.upper()] if isinstance(qubit, str) else qubit
    if J_first < 0 or J_second < 0:
        raise ValueError("exchange must be non-negative")
    q = _pair_quadratic(J_first, J_second)
    if q <= 0:
        raise ValueError("phase correction needs a non-zero exchange")
    tau = TWO_PI / math.sqrt(q)
    phi = (J_first + J_second) * tau / 2
    j_max = max(J_first, J_second) if J_max is None else J_max
    seg = PulseSegment(sites.bond_map(J_first, J_second), tau)
    return PhaseCorrection(Schedule(6, (seg,), tau_idle, j_max), phi, (phi + math.pi) % TWO_PI)


def linear_correction_for(relative_phase: float, J_max: float = DEFAULT_J_MAX,
                          qubit: str | QubitSites = "A", tau_idle: float = 0.0) -> PhaseCorrection:
    """Fastest linear correction with the requested ``relative_phase`` in [0, pi].

    With ``r = J_second / J_first`` in [0, 1] the phase grows monotonically
    from 0 (r = 0) to pi (r = 1); the larger coupling sits at ``J_max``.
    """
    if not -1e-12 <= relative_phase <= math.pi + 1e-12:
        raise ValueError("a single linear correction reaches relative phases in [0, pi]")
    target = min(max(relative_phase, 0.0), math.pi) + math.pi
    f = lambda r: math.pi * (1 + r) / math.sqrt(_pair_quadratic(1.0, r)) - target
    if f(1.0) <= 0:
        r = 1.0
    elif f(0.0) >= 0:
        r = 0.0
    else:
        r = brentq(f, 0.0, 1.0, xtol=1e-15)
    return phase_correction_linear(qubit, J_max, r * J_max, J_max, tau_idle)


def _triple_quadratic(J12: float, J13: float, J23: float) -> float:
    return J12**2 + J13**2 + J23**2 - J12 * J13 - J12 * J23 - J13 * J23


def phase_correction_all_to_all(J12: float, J13: float, J23: float, J_max: Optional[float] = None,
                                n_spins: int = 3, qubit: QubitSites = QUBIT_A,
                                tau_idle: float = 0.0) -> tuple[Schedule, float]:
    """All-to-all version of the correction segment; returns ``(schedule, phi)``."""
    if min(J12, J13, J23) < 0:
        raise ValueError("exchange must be non-negative")
    q = _triple_quadratic(J12, J13, J23)
    if q <= 1e-24 * max(J12, J13, J23, 1e-300) ** 2:
        raise DegenerateAxisError("equal exchanges give no rotation to close")
    tau = TWO_PI / math.sqrt(q)
    phi = (J12 + J13 + J23) * tau / 2
    j_max = max(J12, J13, J23) if J_max is None else J_max
    seg = PulseSegment(qubit.bond_map(J12, J23, J13), tau)
    return Schedule(n_spins, (seg,), tau_idle, j_max), phi


def solve_all_to_all_phase(phi_target: float, J_max: float = DEFAULT_J_MAX):
    """Couplings ``(J12, J13, J23)`` whose correction phase equals ``phi_target``
    modulo 2 pi.

    The phase itself never drops below pi, so targets in [0, pi) are met by
    ``phi_target + 2 pi``. For ``phi/pi = p`` in [1, 2] the family
    ``(1, 0, r)`` gives ``(1 + r)/sqrt(1 - r + r^2) = p``; for p in [2, 3)
    the family ``(1, s, 1)`` gives ``(2 + s)/(1 - s) = p``.
    """
    phi = float(phi_target) % TWO_PI
    if phi < math.pi:
        phi += TWO_PI
    p = phi / math.pi
    if p <= 2.0:
        f = lambda r: (1 + r) / math.sqrt(_pair_quadratic(1.0, r)) - p
        r = 0.0 if f(0.0) >= 0 else (1.0 if f(1.0) <= 0 else brentq(f, 0.0, 1.0, xtol=1e-15))
        return (J_max, 0.0, r * J_max)
    s = (p - 2) / (p + 1)
    return (J_max, s * J_max, J_max)


# -- three-pulse subsequence replacement -----------------------------------------------

def _wrap(angle: float) -> float:
    return float((angle + math.pi) % TWO_PI - math.pi)


def _subsequence_reference(thetas, pattern: str, J_max: float, n_spins: int, tau_idle: float):
    rot = {"z": rot_z, "n": rot_n}
    parts = [rot[axis](theta, J_max, n_spins=n_spins, tau_idle=tau_idle)
             for axis, theta in zip(pattern, thetas)]
    gate = EffectiveGate.identity()
    for g, _ in parts:
        gate = g @ gate
    return gate, sequential(*(s for _, s in parts))


def mirrored(thetas, pattern: str):
    """The same subsequence with the roles of the two couplings swapped.

    Valid (up to global phase) when the outer angles are both pi.
    """
    if not (abs(thetas[0] - math.pi) < 1e-12 and abs(thetas[2] - math.pi) < 1e-12):
        raise ValueError("mirroring needs outer angles equal to pi")
    return tuple(thetas), {"nzn": "znz", "znz": "nzn"}[pattern]


def break_even_idle(t_seq: float, n_seq: int, t_sim: float, n_sim: int) -> float:
    """Idle time above which the replacement finishes first.

    0 if it already wins at zero idle, inf if it never does.
    """
    if t_sim <= t_seq and n_sim <= n_seq:
        return 0.0
    if n_seq <= n_sim:
        return math.inf
    return (t_sim - t_seq) / (n_seq - n_sim)


def _full_fidelity(u, v) -> float:
    d = u.shape[0]
    return float((d + abs(np.trace(v.conj().T @ u)) ** 2) / (d * (d + 1)))


def _linear_replacement(ref: EffectiveGate, J_max: float, tau_idle: float):
    """Fastest ``[gate pulse, corrections...]`` on six spins, or None."""
    best = None
    for couplings, duration in single_pulse_options(ref.su2, Connectivity.LINEAR, J_max):
        rate = rate_of(couplings)
        for extra in (0.0, TWO_PI / rate):
            seg = _segment(couplings, duration + extra)
            first = segment_gate(seg)
            rho = float(np.angle(np.trace(first.block.conj().T @ ref.block))) % TWO_PI
            if rho < 1e-12 or TWO_PI - rho < 1e-12:
                fixes = []
            elif rho <= math.pi:
                fixes = [linear_correction_for(rho, J_max, "A", tau_idle)]
            else:
                fixes = [linear_correction_for(rho / 2, J_max, "A", tau_idle)] * 2
            sched = Schedule(6, (seg,) + tuple(f.schedule.segments[0] for f in fixes),
                             tau_idle, J_max)
            if best is None or wall_clock(sched) < wall_clock(best[0]):
                best = (sched, fixes, rho)
    return best


def _all_to_all_replacement(ref: EffectiveGate, J_max: float, k_range=range(-4, 5)):
    """Single all-to-all segment matching the block, including the leakage phase.

    With pulse areas ``(a, b, c) = tau (J12, J23, J13)`` the segment rotates by
    ``2 |h| tau`` about ``h`` and adds ``(a + b + c)/2`` to the leakage phase.
    Writing the target as ``exp(-i theta axis.sigma / 2)`` the conditions are
    linear in the areas, for each winding ``k``; a common offset of
    ``4 pi / 3`` per extra turn of the leakage phase keeps them non-negative.
    """
    axis, theta = su2_axis_angle(ref.su2)
    if abs(axis[1]) > 1e-9:
        return None
    exact = rotation_su2(axis, theta)
    sign = np.trace(exact.conj().T @ ref.su2).real
    psi_ref = ref.leakage_phase + (0.0 if sign > 0 else math.pi)
    best = None
    for k in k_range:
        v = (theta + TWO_PI * k) / 2 * axis
        psi = psi_ref - k * math.pi
        a = (2 * psi - 4 * v[2]) / 3
        diff = 4 * v[0] / SQRT3
        total = 2 * psi - a
        areas = np.array([a, (total + diff) / 2, (total - diff) / 2])
        shift = math.ceil((-areas.min() - 1e-12) / (4 * math.pi / 3))
        areas = areas + shift * 4 * math.pi / 3
        if areas.max() <= 1e-12:
            continue
        tau = areas.max() / J_max
        if best is None or tau < best[1]:
            best = (areas / tau, tau)
    if best is None:
        return None
    (j12, j23, j13), tau = best
    return PulseSegment(QUBIT_A.bond_map(j12, j23, j13), tau)


def replace_three_pulse(thetas, pattern: str = "nzn",
                        connectivity: Connectivity | str = Connectivity.LINEAR,
                        J_max: float = DEFAULT_J_MAX, tau_idle: float = 0.0) -> SynthResult:
    """Replace a three-pulse single-coupling subsequence on qubit A.

    ``pattern`` gives the couplings in time order (``n`` = J23, ``z`` = J12).
    Linear chains reproduce the qubit rotation with one simultaneous pulse
    and restore the leakage phase with up to two correction pulses; all-to-all
    needs a single segment. The match is checked on the full six-spin
    propagator, leakage included.
    """
    connectivity = Connectivity.parse(connectivity)
    strategy = f"replacement-{connectivity.value}"
    name = f"{pattern}({', '.join(f'{t:.6g}' for t in thetas)})"
    if pattern not in ("nzn", "znz"):
        raise ValueError("pattern must be 'nzn' or 'znz'")
    if len(thetas) != 3:
        raise ValueError("need three angles")
    if abs(thetas[0] - thetas[2]) > 1e-12:
        return SynthResult.infeasible(name, strategy, "outer angles differ")
    ref, ref_sched = _subsequence_reference(thetas, pattern, J_max, 6, tau_idle)
    details = {"reference_pulse_time": ref_sched.pulse_time,
               "reference_wall_clock": wall_clock(ref_sched),
               "reference_pulses": len(ref_sched)}

    if connectivity is Connectivity.LINEAR:
        found = _linear_replacement(ref, J_max, tau_idle)
        if found is None:
            return SynthResult.infeasible(name, strategy, "rotation axis not reachable")
        sched, fixes, rho = found
        details.update(correction_phase=rho,
                       corrections=[{"J": [f.schedule.segments[0].J_values[b] for b in
                                           (QUBIT_A.z_bond, QUBIT_A.n_bond)],
                                     "tau": f.schedule.segments[0].duration,
                                     "phi": f.phi, "relative_phase": f.relative_phase}
                                    for f in fixes])
    else:
        seg = _all_to_all_replacement(ref, J_max)
        if seg is None:
            return SynthResult.infeasible(name, strategy, "rotation axis outside the x-z plane")
        sched = Schedule(6, (seg,), tau_idle, J_max)

    u_ref, u = evolve_full(ref_sched), evolve_full(sched)
    fid = _full_fidelity(u, u_ref)
    details.update(block_distance=unitary_distance_up_to_phase(u, u_ref),
                   break_even_tau_idle=break_even_idle(ref_sched.pulse_time, len(ref_sched),
                                                       sched.pulse_time, len(sched)))
    ok = fid >= ACCEPT_FIDELITY
    return SynthResult(sched, fid, len(sched), wall_clock(sched),
                       evolve_effective(sched).leakage_phase, ok, name, strategy,
                       "" if ok else "replacement does not match", details)


# (theta1, theta2, theta3) with their coupling pattern.
SUBSEQUENCES = (
    ((math.pi / 2, math.pi / 2, math.pi / 2), "nzn"),
    ((math.pi / 2, math.pi / 2, math.pi / 2), "znz"),
    ((math.pi, math.pi / 2, math.pi), "nzn"),
    ((math.pi, math.pi, math.pi), "nzn"),
    ((THETA_N_X, THETA_Z_X, THETA_N_X), "nzn"),
)


def subsequence_rows(J_max: float = DEFAULT_J_MAX, tau_idle: float = 0.0,
                     sequences=SUBSEQUENCES) -> list[dict]:
    rows = []
    for thetas, pattern in sequences:
        lin = replace_three_pulse(thetas, pattern, Connectivity.LINEAR, J_max, tau_idle)
        a2a = replace_three_pulse(thetas, pattern, Connectivity.ALL_TO_ALL, J_max, tau_idle)
        ref = _subsequence_reference(thetas, pattern, J_max, 3, tau_idle)[1] \
            if abs(thetas[0] - thetas[2]) <= 1e-12 else None
        row = {"pattern": pattern, "theta1": thetas[0], "theta2": thetas[1], "theta3": thetas[2],
               "mirror_replaceable": abs(thetas[0] - math.pi) < 1e-12
               and abs(thetas[2] - math.pi) < 1e-12,
               "sequential_time_ns": ref.pulse_time if ref else "",
               "sequential_wall_clock_ns": wall_clock(ref) if ref else "",
               "linear_feasible": lin.feasible, "linear_pulses": lin.pulse_count,
               "linear_time_ns": lin.schedule.pulse_time if lin.feasible else "",
               "linear_wall_clock_ns": lin.wall_clock if lin.feasible else "",
               "all_to_all_feasible": a2a.feasible,
               "all_to_all_time_ns": a2a.schedule.pulse_time if a2a.feasible else "",
               "all_to_all_wall_clock_ns": a2a.wall_clock if a2a.feasible else "",
               "break_even_tau_idle_ns": lin.details.get("break_even_tau_idle", "")
               if lin.feasible else "",
               "reason": lin.reason or a2a.reason}
        if lin.feasible:
            seg = lin.schedule.segments[0]
            row.update(linear_J12=seg.J_values.get(QUBIT_A.z_bond, 0.0),
                       linear_J23=seg.J_values.get(QUBIT_A.n_bond, 0.0),
                       linear_tau_ns=seg.duration,
                       correction_phase=lin.details.get("correction_phase", ""),
                       corrections=len(lin.details.get("corrections", [])))
            corr = lin.details.get("corrections") or []
            if corr:
                row.update(phi=corr[0]["phi"], relative_phase=corr[0]["relative_phase"])
        rows.append(row)
    return rows
