"""Numerical kernel: Gamma function, adaptive quadrature, differentiation
and sign-change bracketing.

All routines are pure functions; nothing here knows about qubits or baths.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DomainError

__all__ = [
    "QuadratureSpec",
    "SignChangeReport",
    "gamma",
    "integrate_semi_infinite",
    "integrate_interval",
    "derivative",
    "find_sign_changes",
]


# ---------------------------------------------------------------------------
# Gamma function
# ---------------------------------------------------------------------------

# Lanczos approximation, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma(x):
    """Gamma function of a real argument.

    Uses the Lanczos approximation for x >= 0.5 and the reflection formula
    below that. Relative accuracy is about 1e-14 on [-5, 30] away from poles.

    Raises DomainError at the poles x = 0, -1, -2, ...
    """
    x = float(x)
    if x <= 0.0 and x == math.floor(x):
        raise DomainError(f"gamma has a pole at x = {x:g}")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma(1.0 - x))
    x -= 1.0
    acc = _LANCZOS_COEF[0]
    for k in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[k] / (x + k)
    t = x + _LANCZOS_G + 0.5
    # split the power to keep t**(x+0.5) finite for large x
    half = t ** (0.5 * (x + 0.5))
    return math.sqrt(2.0 * math.pi) * half * (half * math.exp(-t)) * acc


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for the adaptive integrators."""

    relative_tolerance: float = 1e-9
    absolute_tolerance: float = 1e-12
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.relative_tolerance > 0 and self.absolute_tolerance > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be at least 1")


DEFAULT_QUADRATURE = QuadratureSpec()

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(15)

# Beyond this multiple of the scale an exponentially damped integrand is
# treated by the mapped tail only.
_OSCILLATION_EXTENT = 40.0

_SAFETY = 4.0


def _panel_sums(g, a, b):
    """Gauss-Legendre estimates on [a, b] and on its two halves."""
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    quarter = 0.5 * half

    def rule(center, radius):
        x = center[:, None] + radius[:, None] * _GL_NODES[None, :]
        y = np.asarray(g(x.ravel()), dtype=float).reshape(x.shape)
        return radius * (y @ _GL_WEIGHTS)

    whole = rule(mid, half)
    left = rule(a + quarter, quarter)
    right = rule(mid + quarter, quarter)
    return whole, left + right


def _adaptive(g, edges, spec):
    """Globally adaptive composite Gauss-Legendre on consecutive panels.

    The error of each panel is estimated by comparing the one-panel rule
    with the two-half-panel rule; the worst panels are bisected until the
    summed estimate meets the tolerance.
    """
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1], edges[1:]
    coarse, fine = _panel_sums(g, a, b)
    err = np.abs(coarse - fine)
    splits = 0
    while True:
        total = float(np.sum(fine))
        err_total = float(np.sum(err))
        tol = max(spec.absolute_tolerance, spec.relative_tolerance * abs(total))
        if not math.isfinite(total):
            raise ConvergenceError("integrand produced a non-finite value", total, err_total)
        # the halving estimate undershoots on endpoint-singular panels
        if _SAFETY * err_total <= tol:
            return total, err_total
        order = np.argsort(err)[::-1]
        remaining = err_total - np.cumsum(err[order])
        n_split = int(np.searchsorted(-remaining, -0.5 * tol / _SAFETY)) + 1
        pick = order[:n_split]
        # panels too narrow to bisect in floating point cannot improve
        width_ok = (b[pick] - a[pick]) > 8 * np.finfo(float).eps * np.maximum(
            np.abs(a[pick]), np.abs(b[pick])
        )
        pick = pick[width_ok]
        if pick.size == 0 or splits + pick.size > spec.max_subdivisions:
            raise ConvergenceError(
                f"quadrature did not converge within {spec.max_subdivisions} subdivisions "
                f"(estimate {total:.17g}, error {err_total:.3g})",
                total,
                err_total,
            )
        splits += pick.size
        pa, pb = a[pick], b[pick]
        pm = 0.5 * (pa + pb)
        na = np.concatenate([pa, pm])
        nb = np.concatenate([pm, pb])
        c2, f2 = _panel_sums(g, na, nb)
        keep = np.ones(a.size, dtype=bool)
        keep[pick] = False
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        fine = np.concatenate([fine[keep], f2])
        err = np.concatenate([err[keep], np.abs(c2 - f2)])


def integrate_interval(f, a, b, spec=None, *, panel_width=None):
    """Integrate a vectorized function over the finite interval [a, b].

    Returns ``(value, error_estimate)``. ``panel_width`` optionally caps the
    width of the initial panels (useful for oscillatory integrands).
    """
    spec = spec or DEFAULT_QUADRATURE
    if not b > a:
        if b == a:
            return 0.0, 0.0
        value, err = integrate_interval(f, b, a, spec, panel_width=panel_width)
        return -value, err
    n = 1 if panel_width is None else max(1, int(math.ceil((b - a) / panel_width)))
    return _adaptive(f, np.linspace(a, b, n + 1), spec)


def integrate_semi_infinite(f, spec=None, *, lower=0.0, scale=1.0, oscillation=0.0):
    """Integrate ``f`` over [lower, inf).

    ``f`` must accept a numpy array and be exponentially damped on the
    length ``scale``. The body [lower, scale] is integrated directly and the
    tail through the map w = b (1 + u / (1 - u)), u in [0, 1). When
    ``oscillation`` (an angular frequency) is positive, the body is extended
    to a few dozen scales and cut into panels no wider than
    pi / (4 oscillation) so each panel sees at most an eighth of a period.

    Integrable endpoint singularities at ``lower`` are resolved by adaptive
    bisection. Returns ``(value, error_estimate)``; raises ConvergenceError
    when the subdivision budget is exhausted.
    """
    spec = spec or DEFAULT_QUADRATURE
    if scale <= 0:
        raise DomainError("scale must be positive")
    body_end = scale
    if oscillation > 0:
        body_end = _OSCILLATION_EXTENT * scale
    body_end = max(body_end, lower)

    if body_end > lower:
        if oscillation > 0:
            width = math.pi / (4.0 * oscillation)
            n = max(1, int(math.ceil((body_end - lower) / width)))
        else:
            n = 1
        body_edges = np.linspace(lower, body_end, n + 1)
    else:
        body_edges = np.array([lower])

    base = body_end

    def tail(u):
        one_minus = 1.0 - u
        w = base * (1.0 + u / one_minus)
        return np.asarray(f(w), dtype=float) * base / (one_minus * one_minus)

    # one combined variable: x < body_end is physical, x >= body_end is body_end + u
    def combined(x):
        out = np.empty_like(x)
        inside = x < body_end
        if np.any(inside):
            out[inside] = f(x[inside])
        if not np.all(inside):
            out[~inside] = tail(x[~inside] - body_end)
        return out

    tail_edges = body_end + np.array([0.0, 0.5, 0.75, 0.875, 1.0])
    edges = np.concatenate([body_edges[:-1], tail_edges]) if body_edges.size > 1 else tail_edges
    return _adaptive(combined, edges, spec)


# ---------------------------------------------------------------------------
# Differentiation
# ---------------------------------------------------------------------------


def derivative(f, t, scale=1.0):
    """First derivative by central differences with one Richardson step.

    The base step is 1e-5 * scale; the result combines steps h and h/2 so
    the truncation error is O(h^4).
    """
    h = 1e-5 * scale

    def central(step):
        return (f(t + step) - f(t - step)) / (2.0 * step)

    d1 = central(h)
    d2 = central(0.5 * h)
    return (4.0 * d2 - d1) / 3.0


# ---------------------------------------------------------------------------
# Sign changes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SignChangeReport:
    """Disjoint, ordered intervals on which a probed function is negative."""

    intervals: tuple = field(default_factory=tuple)
    first_crossing: float | None = None

    @property
    def is_empty(self):
        return not self.intervals


def _bisect(f, lo, hi, f_lo, tol_width, tol_value=1e-10):
    """Refine a sign change of f inside [lo, hi]; returns the boundary."""
    neg_lo = f_lo < 0
    while hi - lo > tol_width:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm) < tol_value and fm != 0.0:
            return mid
        if (fm < 0) == neg_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_sign_changes(f, window, samples=256):
    """Locate the sub-intervals of ``window`` where ``f`` is strictly negative.

    ``f`` is sampled on a uniform grid of ``samples`` + 1 points and every
    sign change is refined by bisection. A negative region that touches the
    window edge keeps that edge as its endpoint. ``first_crossing`` is the
    start of the first negative interval (``t0`` itself when f is already
    negative there).
    """
    t0, t1 = map(float, window)
    if not t1 > t0:
        raise DomainError("window must satisfy t0 < t1")
    if samples < 16:
        raise DomainError("at least 16 samples are required")
    grid = np.linspace(t0, t1, samples + 1)
    values = np.array([f(x) for x in grid], dtype=float)
    negative = values < 0
    tol_width = 1e-10 * (t1 - t0)

    intervals = []
    start = t0 if negative[0] else None
    for i in range(1, grid.size):
        if negative[i] == negative[i - 1]:
            continue
        edge = float(_bisect(f, float(grid[i - 1]), float(grid[i]), values[i - 1], tol_width))
        if negative[i]:
            start = edge
        else:
            if edge > start:
                intervals.append((start, edge))
            start = None
    if start is not None and t1 > start:
        intervals.append((start, t1))
    first_crossing = intervals[0][0] if intervals else None
    return SignChangeReport(tuple(intervals), first_crossing)
