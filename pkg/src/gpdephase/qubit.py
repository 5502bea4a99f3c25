"""Reduced density matrix of the dephasing qubit and its eigensystem."""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegeneracyError, DomainError, PositivityWarning

__all__ = [
    "BlochInitial",
    "ReducedDensity",
    "EigenPair",
    "reduced_density",
    "eigensystem",
    "eigensystem_arrays",
]

DEGENERACY_GAP = 1e-12
_GAUGE_ZERO = 1e-15


@dataclass(frozen=True)
class BlochInitial:
    """Pure initial state cos(theta/2)|0> + sin(theta/2)|1>."""

    theta: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi:
            raise DomainError(f"theta must lie in [0, pi], got {self.theta}")


@dataclass(frozen=True, eq=False)
class ReducedDensity:
    matrix: np.ndarray
    time: float

    @property
    def trace(self):
        return complex(np.trace(self.matrix))


@dataclass(frozen=True, eq=False)
class EigenPair:
    eigenvalue: float
    eigenvector: np.ndarray


def reduced_density(init, F, t):
    """Qubit state at time t under pure dephasing with decoherence factor F.

    Populations stay at cos^2(theta/2), sin^2(theta/2); the coherence is
    rho_10 = e^{-i t} e^{-F} sin(theta/2) cos(theta/2) and rho_01 its
    conjugate. A negative F (possible with the rebased non-equilibrium
    factor) can push the matrix out of the positive cone; that raises a
    PositivityWarning and the matrix is returned anyway.
    """
    if t < 0:
        raise DomainError("time must be >= 0")
    c = math.cos(0.5 * init.theta)
    s = math.sin(0.5 * init.theta)
    coherence = math.exp(-F) * s * c
    if F < -1e-12 and s * c > 0:
        warnings.warn(
            f"e^(-F) = {math.exp(-F):.6g} > 1 makes the state non-positive", PositivityWarning
        )
    rho10 = coherence * complex(math.cos(t), -math.sin(t))
    m = np.array([[c * c, rho10.conjugate()], [rho10, s * s]], dtype=complex)
    return ReducedDensity(m, float(t))


def eigensystem_arrays(a, c, b):
    """Closed-form eigensystem of Hermitian [[a, b], [conj(b), c]] stacks.

    ``a`` and ``c`` are real, ``b`` complex, all broadcastable. Returns
    ``(eps_plus, eps_minus, v_plus, v_minus)`` with vectors of shape
    (..., 2), each gauge-fixed so its first non-negligible component is
    real and positive. Raises DegeneracyError if the eigenvalues coincide.
    """
    a, c, b = np.broadcast_arrays(
        np.asarray(a, dtype=float), np.asarray(c, dtype=float), np.asarray(b, dtype=complex)
    )
    mean = 0.5 * (a + c)
    delta = 0.5 * (a - c)
    r = np.hypot(delta, np.abs(b))
    if np.any(2.0 * r < DEGENERACY_GAP):
        idx = np.unravel_index(int(np.argmin(r)), r.shape) if r.ndim else ()
        raise DegeneracyError(f"degenerate spectrum (gap {2.0 * float(r[idx]):.3g})")
    # pick the eigenvector form without cancellation
    pos = delta >= 0
    x = np.where(pos, delta + r, b)
    y = np.where(pos, np.conj(b), r - delta)
    norm = np.sqrt(np.abs(x) ** 2 + np.abs(y) ** 2)
    v_plus = np.stack([x / norm, y / norm], axis=-1)
    v_minus = np.stack([-np.conj(v_plus[..., 1]), np.conj(v_plus[..., 0])], axis=-1)
    return mean + r, mean - r, _fix_gauge(v_plus), _fix_gauge(v_minus)


def _fix_gauge(v):
    first = np.abs(v[..., 0]) > _GAUGE_ZERO
    lead = np.where(first, v[..., 0], v[..., 1])
    size = np.abs(lead)
    out = v * np.conj(lead / size)[..., None]
    # write the leading component exactly, free of rounding in the phase
    out[..., 0] = np.where(first, size, out[..., 0])
    out[..., 1] = np.where(first, out[..., 1], size)
    return out


def eigensystem(rho):
    """Both eigenpairs of a qubit density matrix, larger eigenvalue first."""
    m = rho.matrix
    try:
        ep, em, vp, vm = eigensystem_arrays(m[0, 0].real, m[1, 1].real, m[0, 1])
    except DegeneracyError as exc:
        raise DegeneracyError(str(exc), time=rho.time) from None
    return EigenPair(float(ep), vp), EigenPair(float(em), vm)
