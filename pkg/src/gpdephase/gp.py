"""Geometric phase of the dephasing qubit over one quasi-cycle.

The phase is the kinematic mixed-state functional

    arg sum_k sqrt(eps_k(0) eps_k(tau)) <Psi_k(0)|Psi_k(tau)>
              exp(-int_0^tau <Psi_k|d/dt Psi_k> dt),

evaluated on a uniform time grid. The connection integral is replaced by
the phases of the overlaps of neighbouring eigenvectors, which makes the
discrete sum independent of the eigenvector gauge at every node.

Orientation: with rho_10 ~ e^{-i t} the closed-system phase is
pi (1 - cos theta). In that orientation decoherence moves the dominant
eigenvector towards the nearer pole, so the exact correction is
-(1/2) sin^2(theta) cos(theta) int F dt to first order, the opposite sign
of the perturbative formulas below, which keep their published sign.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import envmodels, numerics
from .errors import ConvergenceError, DegeneracyError, DomainError, PositivityWarning
from .qubit import BlochInitial, eigensystem_arrays

__all__ = [
    "GpRun",
    "GpResult",
    "gp_unitary",
    "gp_evaluate",
    "correction_thermal_perturbative",
    "correction_noneq_perturbative",
]

TWO_PI = 2.0 * math.pi
GAP_TOLERANCE = 1e-6
DEFAULT_GRID = 4096


@dataclass(frozen=True)
class GpRun:
    init: BlochInitial
    env: object
    period: float = TWO_PI
    grid: int = DEFAULT_GRID

    def __post_init__(self):
        if self.grid < 64:
            raise DomainError("grid must have at least 64 intervals")
        if not self.period > 0:
            raise DomainError("period must be positive")


@dataclass(frozen=True)
class GpResult:
    phi_g: float
    phi_u: float
    delta_phi: float
    normalized_delta: float
    grid_points: int
    richardson_gap: float


def gp_unitary(init):
    return math.pi * (1.0 - math.cos(init.theta))


def _wrap(x):
    """Map an angle difference into [-pi, pi)."""
    return (x + math.pi) % TWO_PI - math.pi


def _track_branches(vp, vm, ep, em):
    """Order the two eigen-branches by maximal overlap with the previous node."""
    vecs = np.stack([vp, vm], axis=1)  # (n, branch, 2)
    vals = np.stack([ep, em], axis=1)
    straight = np.abs(np.sum(np.conj(vecs[:-1, 0]) * vecs[1:, 0], axis=-1)) + np.abs(
        np.sum(np.conj(vecs[:-1, 1]) * vecs[1:, 1], axis=-1)
    )
    crossed = np.abs(np.sum(np.conj(vecs[:-1, 0]) * vecs[1:, 1], axis=-1)) + np.abs(
        np.sum(np.conj(vecs[:-1, 1]) * vecs[1:, 0], axis=-1)
    )
    parity = np.concatenate([[0], np.cumsum(crossed > straight) % 2]).astype(bool)
    vecs[parity] = vecs[parity][:, ::-1]
    vals[parity] = vals[parity][:, ::-1]
    return vecs, vals


def _kinematic_phase(theta, times, F):
    c2 = math.cos(0.5 * theta) ** 2
    s2 = math.sin(0.5 * theta) ** 2
    sc = math.sin(0.5 * theta) * math.cos(0.5 * theta)
    rho01 = np.exp(-F) * sc * np.exp(1j * times)
    try:
        ep, em, vp, vm = eigensystem_arrays(c2, s2, rho01)
    except DegeneracyError:
        gap = np.hypot(0.5 * (c2 - s2), np.abs(rho01))
        where = float(times[int(np.argmin(gap))])
        raise DegeneracyError(f"degenerate spectrum along the path at t = {where:.6g}", where)
    vecs, vals = _track_branches(vp, vm, ep, em)
    overlaps = np.sum(np.conj(vecs[:-1]) * vecs[1:], axis=-1)  # (n-1, branch)
    connection = np.sum(np.angle(overlaps), axis=0)
    closure = np.sum(np.conj(vecs[0]) * vecs[-1], axis=-1)
    weight = np.sqrt(np.clip(vals[0] * vals[-1], 0.0, None))
    total = np.sum(weight * closure * np.exp(-1j * connection))
    return float(np.angle(total)) % TWO_PI


def gp_evaluate(run, spec=None):
    """Open-system geometric phase for one run, with a grid-doubling check.

    The phase is computed with ``run.grid`` and ``2 * run.grid`` intervals;
    their difference is ``richardson_gap`` and the reported phase is the
    Richardson combination of the two (the discretisation error is
    quadratic in the step). A gap of 1e-6 rad or more raises
    ConvergenceError.
    """
    theta = run.init.theta
    phi_u = gp_unitary(run.init)
    if theta == 0.0 or theta == math.pi:
        return GpResult(phi_u, phi_u, 0.0, 0.0 if phi_u else math.nan, run.grid, 0.0)

    n = run.grid
    times = np.linspace(0.0, run.period, 2 * n + 1)
    F = np.asarray(envmodels.decoherence(run.env, times, spec), dtype=float)
    if not np.all(np.isfinite(F)):
        raise ConvergenceError("decoherence factor is not finite on the path")
    if np.any(F < -1e-12):
        warnings.warn(
            "negative decoherence factor on the path; eigenvalues leave [0, 1]",
            PositivityWarning,
            stacklevel=2,
        )
    coarse = _kinematic_phase(theta, times[::2], F[::2])
    fine = _kinematic_phase(theta, times, F)
    step = _wrap(fine - coarse)
    gap = abs(step)
    if gap >= GAP_TOLERANCE:
        raise ConvergenceError(
            f"geometric phase changed by {gap:.3g} rad under grid doubling", fine, gap
        )
    phi_g = (fine + step / 3.0) % TWO_PI
    delta = _wrap(phi_g - phi_u)
    normalized = delta / phi_u if phi_u != 0 else math.nan
    return GpResult(phi_g, phi_u, delta, normalized, n, gap)


_POLE_WINDOW = 1e-3
_POLE_OFFSET = 1e-4


def _thermal_correction_raw(s, cutoff):
    y = TWO_PI * cutoff
    alpha = math.atan(y)
    bracket = 2.0 * math.pi * (s - 2.0) + (1.0 + y * y) ** (-0.5 * s) * (
        4.0 * math.pi * math.cos(s * alpha)
        + (4.0 * math.pi**2 * cutoff - 1.0 / cutoff) * math.sin(s * alpha)
    )
    return 2.0 * numerics.gamma(s - 2.0) * bracket


def correction_thermal_perturbative(sd, init):
    """First-order correction to the phase for a zero-temperature thermal bath.

    gamma0 sin^2(theta) cos(theta) * 2 Gamma(s - 2) {2 pi (s - 2)
      + (1 + 4 pi^2 L^2)^(-s/2) [4 pi cos(s a) + (4 pi^2 L - 1/L) sin(s a)]},
    with a = atan(2 pi L). This is the first-order expansion of the phase
    with the decoherence factor of ``thermal_F_closed``; it tends to
    4 pi gamma0 sin^2 cos (log(2 pi L) - 1) as s -> 1 and to
    4 pi gamma0 sin^2 cos as s -> 3 for large L.

    Within 1e-3 of the removable singularities s = 0, 1, 2 the value is
    the mean of evaluations at s +/- 1e-4.
    """
    s = sd.s
    if not s > -1:
        raise DomainError("s must be > -1")
    poles = [p for p in (0.0, 1.0, 2.0) if abs(s - p) < _POLE_WINDOW]
    if poles:
        p = poles[0]
        lo, hi = p - _POLE_OFFSET, p + _POLE_OFFSET
        if not lo > -1:
            raise DomainError(f"cannot resolve the singularity at s = {p}")
        core = 0.5 * (_thermal_correction_raw(lo, sd.cutoff) + _thermal_correction_raw(hi, sd.cutoff))
    else:
        core = _thermal_correction_raw(s, sd.cutoff)
    th = init.theta
    return sd.gamma0 * math.sin(th) ** 2 * math.cos(th) * core


def correction_noneq_perturbative(sd, init):
    """gamma0 Gamma(s + 1) sin^2(theta) cos(theta) for the non-equilibrium bath."""
    if not sd.s > -1:
        raise DomainError("s must be > -1")
    th = init.theta
    return sd.gamma0 * numerics.gamma(sd.s + 1.0) * math.sin(th) ** 2 * math.cos(th)
