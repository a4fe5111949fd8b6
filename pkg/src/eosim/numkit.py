"""Dense complex linear algebra used throughout the package.

Operators are plain ``numpy`` complex arrays. Everything here is small
(at most 64 x 64), so eigendecomposition is the workhorse: the matrix
exponential of a Hermitian generator is taken through its spectrum, and a
scaling-and-squaring Taylor series is kept only as an independent check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import curve_fit

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10

ComplexMatrix = NDArray[np.complex128]


class NotHermitianError(ValueError):
    """Raised when an operator expected to be Hermitian is not."""


def as_matrix(a: ArrayLike) -> ComplexMatrix:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {m.shape}")
    return m


def is_hermitian(a: ArrayLike, tol: float = HERMITIAN_TOL) -> bool:
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        return False
    scale = max(np.linalg.norm(m), 1.0)
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol * scale)


def is_unitary(a: ArrayLike, tol: float = UNITARY_TOL) -> bool:
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        return False
    return bool(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) <= tol)


def herm_eig(h: ArrayLike) -> tuple[NDArray[np.float64], ComplexMatrix]:
    """Eigendecomposition of a Hermitian matrix.

    Returns ascending real eigenvalues and the unitary matrix whose columns
    are the corresponding eigenvectors, so that ``h = V diag(w) V^dagger``.

    Raises
    ------
    NotHermitianError
        If ``h`` is not Hermitian to ``1e-12`` relative to its norm.
    np.linalg.LinAlgError
        If LAPACK fails to converge or the reconstruction is inaccurate.
    """
    m = as_matrix(h)
    if not is_hermitian(m):
        raise NotHermitianError("matrix is not Hermitian")
    w, v = np.linalg.eigh(m)
    err = np.max(np.abs((v * w) @ v.conj().T - m), initial=0.0)
    if err > 1e-10 * max(np.linalg.norm(m), 1.0):
        raise np.linalg.LinAlgError(f"eigendecomposition inaccurate ({err:.2e})")
    return w, v


def expm_unitary(h: ArrayLike, t: float) -> ComplexMatrix:
    """Return ``exp(-i h t)`` for Hermitian ``h``."""
    if not np.isfinite(t):
        raise ValueError("duration must be finite")
    w, v = herm_eig(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def expm_taylor(a: ArrayLike, order: int = 30) -> ComplexMatrix:
    """Matrix exponential of a general matrix by scaling and squaring.

    Deliberately independent of :func:`expm_unitary`; used to cross-check it.
    """
    m = as_matrix(a)
    norm = np.linalg.norm(m, 1)
    s = max(0, int(np.ceil(np.log2(norm))) + 1) if norm > 0 else 0
    x = m / 2.0**s
    result = np.eye(m.shape[0], dtype=np.complex128)
    term = np.eye(m.shape[0], dtype=np.complex128)
    for k in range(1, order + 1):
        term = term @ x / k
        result = result + term
    for _ in range(s):
        result = result @ result
    return result


def unitary_distance_up_to_phase(u: ArrayLike, v: ArrayLike) -> float:
    """Frobenius distance between ``u`` and ``v`` minimised over a global phase.

    The optimal phase is ``alpha = arg Tr(v^dagger u)``. The residual is
    formed explicitly rather than through ``|u|^2 + |v|^2 - 2|Tr|``, which
    would lose half the significant digits near zero.
    """
    a, b = as_matrix(u), as_matrix(v)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    overlap = np.trace(b.conj().T @ a)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.linalg.norm(a - phase * b))


def projector_basis(projector: ArrayLike, tol: float = 1e-9) -> ComplexMatrix:
    """Orthonormal basis (as columns) for the range of an orthogonal projector."""
    p = as_matrix(projector)
    if p.shape[0] != p.shape[1] or not is_hermitian(p, 1e-9):
        raise ValueError("projector must be a square Hermitian matrix")
    if np.max(np.abs(p @ p - p)) > tol:
        raise ValueError("projector is not idempotent")
    w, v = np.linalg.eigh(p)
    cols = v[:, w > 0.5]
    if cols.shape[1] == 0:
        raise ValueError("projector has rank zero")
    return cols


def avg_gate_fidelity(actual: ArrayLike, target: ArrayLike,
                      computational_projector: ArrayLike) -> float:
    """Average gate fidelity of ``actual`` against ``target`` on a subspace.

    With ``M = Q^dagger target^dagger actual Q`` for an orthonormal basis
    ``Q`` of the projector's range (rank ``d``),
    ``F = (Tr(M M^dagger) + |Tr M|^2) / (d (d + 1))``. Population that leaks
    out of the subspace makes ``M`` sub-unitary and lowers ``F``.
    """
    q = projector_basis(computational_projector)
    a, t = as_matrix(actual), as_matrix(target)
    if a.shape != t.shape or a.shape[0] != q.shape[0]:
        raise ValueError("actual, target and projector dimensions disagree")
    d = q.shape[1]
    m = q.conj().T @ t.conj().T @ a @ q
    f = (np.real(np.trace(m @ m.conj().T)) + abs(np.trace(m)) ** 2) / (d * (d + 1))
    return float(min(max(f, 0.0), 1.0))


@dataclass(frozen=True)
class FitResult:
    """Damped sinusoid ``A exp(-t/T) cos(2 pi f t + phase) + B``.

    ``oscillating`` is False when the signal was too flat to fit, in which
    case the remaining fields describe a constant at ``offset``.
    """

    amplitude: float
    frequency: float
    decay_time: float
    phase: float
    offset: float
    residual: float
    oscillating: bool = True

    @property
    def quality_factor(self) -> float:
        """Oscillations completed within one 1/e decay time."""
        if not self.oscillating:
            return 0.0
        return self.frequency * self.decay_time


def _damped_cosine(t, amplitude, frequency, rate, phase, offset):
    return amplitude * np.exp(-rate * t) * np.cos(2 * np.pi * frequency * t + phase) + offset


def fit_damped_sinusoid(times: ArrayLike, values: ArrayLike,
                        flat_tol: float = 1e-9) -> FitResult:
    """Least-squares fit of an exponentially damped cosine.

    The starting frequency comes from the peak of the discrete spectrum of
    the mean-subtracted signal. The fit is carried out in terms of the decay
    rate, so an undamped signal is representable (rate 0, infinite decay time).
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise ValueError("times and values must be 1-D arrays of equal length")
    if t.size < 8:
        raise ValueError("need at least 8 samples")
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")

    offset0 = float(np.mean(y))
    centred = y - offset0
    if np.ptp(y) <= flat_tol:
        rms = float(np.sqrt(np.mean(centred**2)))
        return FitResult(0.0, 0.0, np.inf, 0.0, offset0, rms, oscillating=False)

    # Resample onto a uniform grid for the spectral guess; zero-pad for resolution.
    n = t.size
    grid = np.linspace(t[0], t[-1], n)
    uniform = np.interp(grid, t, centred)
    dt = grid[1] - grid[0]
    nfft = 16 * n
    spectrum = np.abs(np.fft.rfft(uniform, nfft))
    freqs = np.fft.rfftfreq(nfft, dt)
    k = int(np.argmax(spectrum[1:])) + 1
    f0 = float(freqs[k])
    amp0 = float(np.max(np.abs(centred)))
    phase0 = float(np.angle(np.sum(centred * np.exp(-2j * np.pi * f0 * (t - t[0])))))
    phase0 -= 2 * np.pi * f0 * t[0]

    span = t[-1] - t[0]
    p0 = [amp0, f0, 1.0 / span, phase0, offset0]
    lower = [0.0, 0.0, 0.0, -np.inf, -np.inf]
    upper = [np.inf, 0.5 / dt, np.inf, np.inf, np.inf]
    try:
        popt, _ = curve_fit(_damped_cosine, t, y, p0=p0, bounds=(lower, upper),
                            max_nfev=20000, xtol=1e-14, ftol=1e-14, gtol=1e-14)
    except RuntimeError:
        popt = np.array(p0)
    amplitude, frequency, rate, phase, offset = (float(x) for x in popt)
    resid = float(np.sqrt(np.mean((_damped_cosine(t, *popt) - y) ** 2)))
    decay = np.inf if rate <= 0 else 1.0 / rate
    phase = float(np.angle(np.exp(1j * phase)))
    return FitResult(amplitude, frequency, decay, phase, offset, resid)
