"""Environment descriptors, decoherence factors and diffusion coefficients.

Every quantity is expressed in units of the qubit frequency: times as
Omega*t, frequencies as omega/Omega, temperature as k_B T / (hbar Omega).

Two bath families are covered:

* thermal baths of harmonic oscillators with the spectral density
  I(w) = gamma0 w**s / cutoff**(s - 1) * exp(-w / cutoff);
* non-equilibrium baths with non-stationary noise, parameterized by an
  extra time offset ``lambda_param`` and rate ``d_param``.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import numerics
from .errors import DomainError
from .numerics import QuadratureSpec, SignChangeReport

__all__ = [
    "SpectralDensity",
    "ThermalEnv",
    "NonEqEnv",
    "MarkovReport",
    "spectral_density_eval",
    "thermal_F_closed",
    "thermal_F_quadrature",
    "thermal_D",
    "thermal_D_quadrature",
    "noneq_F",
    "noneq_F_printed",
    "noneq_D",
    "decoherence",
    "diffusion",
    "markovianity_report",
]

# Width of the pole neighbourhoods of the zero-temperature closed form.
POLE_WINDOW = 1e-3


@dataclass(frozen=True)
class SpectralDensity:
    gamma0: float
    s: float
    cutoff: float = 10.0

    def __post_init__(self):
        if not self.gamma0 >= 0:
            raise DomainError(f"gamma0 must be >= 0, got {self.gamma0}")
        if not self.cutoff > 0:
            raise DomainError(f"cutoff must be > 0, got {self.cutoff}")
        if not self.s > -1:
            raise DomainError(f"ohmicity s must be > -1, got {self.s}")


@dataclass(frozen=True)
class ThermalEnv:
    spectral: SpectralDensity
    temperature: float = 0.0

    kind = "thermal"

    def __post_init__(self):
        if not self.temperature >= 0:
            raise DomainError(f"temperature must be >= 0, got {self.temperature}")


@dataclass(frozen=True)
class NonEqEnv:
    spectral: SpectralDensity
    lambda_param: float = 0.3
    d_param: float = 2.0
    rebased: bool = True

    kind = "noneq"

    def __post_init__(self):
        if not self.d_param > 0:
            raise DomainError(f"d must be > 0, got {self.d_param}")


@dataclass(frozen=True)
class MarkovReport:
    environment_kind: str
    negative_intervals: SignChangeReport
    is_markovian_on_window: bool


def spectral_density_eval(sd, omega):
    """Spectral density I(omega); the s <= 0 origin value is taken as a limit."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise DomainError("spectral density is defined for omega >= 0")
    if sd.s < 0 and np.any(omega == 0):
        raise DomainError("spectral density diverges at omega = 0 for s < 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = sd.gamma0 * omega**sd.s / sd.cutoff ** (sd.s - 1) * np.exp(-omega / sd.cutoff)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Thermal bath, zero temperature closed form
# ---------------------------------------------------------------------------


def _check_times(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise DomainError("time must be >= 0")
    return t


def _near_pole_bracket(s, x):
    """F / (4 gamma0) = Gamma(s - 1) Re[1 - (1 - i x)^(1 - s)], evaluated stably.

    Used within POLE_WINDOW of s = 1 and s = 0, where the printed prefactor
    Gamma(s)/(s - 1) blows up while the bracket vanishes.
    """
    log1 = 0.5 * np.log1p(x * x) - 1j * np.arctan(x)  # log(1 - i x)
    if abs(s - 1.0) < POLE_WINDOW:
        nu = s - 1.0
        # Gamma(nu) (1 - e^{-nu L}) = Gamma(s) (1 - e^{-nu L}) / nu
        if nu == 0.0:
            ratio = log1
        else:
            ratio = -_cexpm1(-nu * log1) / nu
        return numerics.gamma(s) * ratio.real
    # s near 0: Gamma(s - 1) = Gamma(s + 1) / (s (s - 1)), and
    # Re(1 - e^{(1-s) L}) = -Re(e^{L} (e^{-s L} - 1)) since Re(1 - e^{L}) = 0
    e_log = 1.0 - 1j * x
    if s == 0.0:
        ratio = -e_log * (-log1)
    else:
        ratio = -e_log * _cexpm1(-s * log1) / s
    return numerics.gamma(s + 1.0) / (s - 1.0) * ratio.real


def _cexpm1(z):
    """exp(z) - 1 for complex arrays without cancellation for small |z|."""
    a, b = z.real, z.imag
    return np.expm1(a) * np.cos(b) - 2.0 * np.sin(0.5 * b) ** 2 + 1j * np.exp(a) * np.sin(b)


def thermal_F_closed(env, t):
    """Exact zero-temperature decoherence factor.

    Away from s = 0 and s = 1 this evaluates

        4 gamma0 Gamma(s)/(s - 1) [1 - (1 + x^2)^(-s/2)
                                    (cos(s atan x) + x sin(s atan x))],

    x = cutoff * t. Within 1e-3 of those two points the prefactor pole and
    the vanishing bracket are combined analytically instead.
    Accepts scalar or array ``t``.
    """
    if env.temperature != 0:
        raise DomainError("closed form is only valid at zero temperature")
    sd = env.spectral
    t = _check_times(t)
    x = sd.cutoff * t
    s = sd.s
    if abs(s - 1.0) < POLE_WINDOW or abs(s) < POLE_WINDOW:
        bracket = _near_pole_bracket(s, x)
        out = 4.0 * sd.gamma0 * bracket
    else:
        phase = s * np.arctan(x)
        bracket = 1.0 - (1.0 + x * x) ** (-0.5 * s) * (np.cos(phase) + x * np.sin(phase))
        out = 4.0 * sd.gamma0 * numerics.gamma(s) / (s - 1.0) * bracket
    return out if np.ndim(out) else float(out)


def thermal_D(env, t):
    """Zero-temperature diffusion coefficient, half the time derivative of F.

    D(t) = 2 gamma0 cutoff Gamma(s) sin(s atan x) / (1 + x^2)^(s/2); the
    Gamma(s) sin(s phi) product is written as Gamma(s + 1) phi sinc(...) so
    s = 0 needs no special case.
    """
    if env.temperature != 0:
        raise DomainError("analytic diffusion coefficient requires zero temperature")
    sd = env.spectral
    t = _check_times(t)
    x = sd.cutoff * t
    phi = np.arctan(x)
    s = sd.s
    out = (
        2.0
        * sd.gamma0
        * sd.cutoff
        * numerics.gamma(s + 1.0)
        * phi
        * np.sinc(s * phi / math.pi)
        * (1.0 + x * x) ** (-0.5 * s)
    )
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# Thermal bath, quadrature
# ---------------------------------------------------------------------------

_SERIES_TERMS = 30


@lru_cache(maxsize=None)
def _coth_series(n_terms):
    """Coefficients c_j with coth(x) = sum_j c_j x^(2j - 1), |x| < pi."""
    # Bernoulli numbers via the Akiyama-Tanigawa recurrence
    m_max = 2 * n_terms
    bern = []
    row = [Fraction(0)] * (m_max + 1)
    for m in range(m_max + 1):
        row[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            row[j - 1] = j * (row[j - 1] - row[j])
        bern.append(row[0])
    # row[0] gives B_1 = +1/2 convention; only even indices are used
    return tuple(
        float(Fraction(2) ** (2 * j) * bern[2 * j] / math.factorial(2 * j)) for j in range(n_terms)
    )


def _origin_panel(sd, temperature, t, a):
    """Integral of the F-integrand over [0, a] by term-wise series integration.

    Powers are tracked in the scaled variable u = w / a so every
    coefficient stays O(1).
    """
    n = _SERIES_TERMS
    # 1 - cos(a t u) = sum_{k>=1} (-1)^(k+1) (a t u)^(2k) / (2k)!
    one_minus_cos = np.zeros(2 * n + 1)
    at = a * t
    for k in range(1, n + 1):
        one_minus_cos[2 * k] = (-1) ** (k + 1) * at ** (2 * k) / math.factorial(2 * k)
    # exp(-a u / cutoff)
    r = a / sd.cutoff
    expo = np.array([(-r) ** m / math.factorial(m) for m in range(2 * n + 1)])
    poly = np.convolve(one_minus_cos, expo)[: 2 * n + 1]
    shift = -2  # w^(s-2) factor
    if temperature > 0:
        # coth(a u / 2T) = sum_j c_j (a/2T)^(2j-1) u^(2j-1)
        y = a / (2.0 * temperature)
        coth = np.zeros(2 * n + 1)
        for j, c in enumerate(_coth_series(n)):
            if 2 * j < coth.size:
                coth[2 * j] = c * y ** (2 * j - 1)
        poly = np.convolve(poly, coth)[: 2 * n + 1]
        shift -= 1  # coth coefficients are stored one power up
    # integral of u^(s + shift + m) over [0, 1]
    powers = sd.s + shift + np.arange(poly.size)
    nz = poly != 0
    total = float(np.sum(poly[nz] / (powers[nz] + 1.0)))
    return 4.0 * sd.gamma0 * sd.cutoff ** (1.0 - sd.s) * a ** (sd.s - 1.0) * total


def _thermal_integrand(sd, temperature, t, sine=False):
    c = 4.0 * sd.gamma0 * sd.cutoff ** (1.0 - sd.s)

    def f(w):
        base = c * w ** (sd.s - 2.0) * np.exp(-w / sd.cutoff)
        if temperature > 0:
            base = base / np.tanh(w / (2.0 * temperature))
        if sine:
            return 0.5 * w * base * np.sin(w * t)
        return base * 2.0 * np.sin(0.5 * w * t) ** 2

    return f


def _quad_domain(sd, temperature):
    if temperature == 0 and not sd.s > -1:
        raise DomainError("zero-temperature quadrature requires s > -1")
    if temperature > 0 and not sd.s > 0:
        raise DomainError("finite-temperature quadrature requires s > 0")


def _thermal_F_scalar(sd, temperature, t, spec):
    if t == 0:
        return 0.0
    a = min(1e-3 * sd.cutoff, 1.0 / t)
    if temperature > 0:
        a = min(a, temperature)
    head = _origin_panel(sd, temperature, t, a)
    tail, _ = numerics.integrate_semi_infinite(
        _thermal_integrand(sd, temperature, t), spec, lower=a, scale=sd.cutoff, oscillation=t
    )
    return head + tail


def thermal_F_quadrature(env, t, spec=None):
    """Decoherence factor from the frequency integral, any temperature.

    Integrates 4 I(w) coth(w / 2T) (1 - cos wt) / w^2 over (0, inf); the
    coth factor is 1 at T = 0. The stretch [0, a] next to the origin is
    done by series expansion, the rest by adaptive quadrature. The overall
    factor 4 matches the closed form returned by ``thermal_F_closed``.
    """
    sd = env.spectral
    _quad_domain(sd, env.temperature)
    t = _check_times(t)
    spec = spec or numerics.DEFAULT_QUADRATURE
    if t.ndim == 0:
        return _thermal_F_scalar(sd, env.temperature, float(t), spec)
    flat = [_thermal_F_scalar(sd, env.temperature, float(x), spec) for x in t.ravel()]
    return np.array(flat).reshape(t.shape)


def thermal_D_quadrature(env, t, spec=None):
    """Diffusion coefficient 2 int I(w) coth(w/2T) sin(wt) / w dw by quadrature."""
    sd = env.spectral
    _quad_domain(sd, env.temperature)
    t = _check_times(t)
    spec = spec or numerics.DEFAULT_QUADRATURE

    def one(x):
        if x == 0:
            return 0.0
        value, _ = numerics.integrate_semi_infinite(
            _thermal_integrand(sd, env.temperature, x, sine=True),
            spec,
            scale=sd.cutoff,
            oscillation=x,
        )
        return value

    if t.ndim == 0:
        return one(float(t))
    return np.array([one(float(x)) for x in t.ravel()]).reshape(t.shape)


# ---------------------------------------------------------------------------
# Non-equilibrium bath
# ---------------------------------------------------------------------------


def _noneq_parts(env, t):
    sd = env.spectral
    n = 1.0 + sd.s
    v = 2.0 * sd.cutoff * (t - env.lambda_param)
    psi = np.arctan(v)
    one_v2 = 1.0 + v * v
    g = one_v2 ** (-0.5 * n) * np.cos(n * psi)
    dg = -2.0 * sd.cutoff * n * one_v2 ** (-0.5 * (n + 1.0)) * np.sin((n + 1.0) * psi)
    return numerics.gamma(n), g, dg


def _noneq_exponent(env, t):
    """Bracketed exponent and its time derivative.

    gamma0 e^{-4dt}(e^{2dt} - 1)[Gamma(1+s) g + cosh 2dt + sinh 2dt] is
    rewritten as gamma0 (1 - E)(Gamma(1+s) g E + 1) with E = e^{-2dt},
    identical algebraically and free of overflow at large t.
    """
    sd = env.spectral
    d = env.d_param
    gam, g, dg = _noneq_parts(env, t)
    e = np.exp(-2.0 * d * t)
    inner = gam * g * e + 1.0
    u = sd.gamma0 * (1.0 - e) * inner
    du = sd.gamma0 * (2.0 * d * e * inner + (1.0 - e) * gam * e * (dg - 2.0 * d * g))
    return u, du


def noneq_F(env, t, rebased=None):
    """Non-equilibrium decoherence factor.

    Raw mode returns exp(-u(t)) with u the bracketed exponent, exactly as
    the formula is printed, so raw(0) = 1. Rebased mode (the default, taken
    from ``env.rebased``) subtracts raw(0) so the factor starts at 0.
    """
    t = _check_times(t)
    rebased = env.rebased if rebased is None else rebased
    u, _ = _noneq_exponent(env, t)
    out = np.exp(-u)
    if rebased:
        out = out - 1.0
    return out if np.ndim(out) else float(out)


def noneq_F_printed(env, t):
    """Literal transcription of the printed formula (regression reference)."""
    sd = env.spectral
    d = env.d_param
    lam = env.lambda_param
    cut = sd.cutoff
    t = np.asarray(t, dtype=float)
    return np.exp(
        -(
            sd.gamma0
            * np.exp(-4 * d * t)
            * (-1 + np.exp(2 * d * t))
            * (
                numerics.gamma(1 + sd.s)
                * (1 + 4 * (t - lam) ** 2 * cut**2) ** (-(1 + sd.s) / 2)
                * np.cos((1 + sd.s) * np.arctan(2 * cut * (t - lam)))
                + np.cosh(2 * d * t)
                + np.sinh(2 * d * t)
            )
        )
    )


def noneq_D(env, t):
    """Half the analytic time derivative of the non-equilibrium factor."""
    t = _check_times(t)
    u, du = _noneq_exponent(env, t)
    out = -0.5 * du * np.exp(-u)
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# Dispatch and Markovianity
# ---------------------------------------------------------------------------


def decoherence(env, t, spec=None):
    """F(t) for any environment; arrays are evaluated element-wise."""
    if isinstance(env, NonEqEnv):
        return noneq_F(env, t)
    if env.temperature == 0:
        return thermal_F_closed(env, t)
    return thermal_F_quadrature(env, t, spec)


def diffusion(env, t, spec=None):
    """D(t) = dF/dt / 2 for any environment."""
    if isinstance(env, NonEqEnv):
        return noneq_D(env, t)
    if env.temperature == 0:
        return thermal_D(env, t)
    return thermal_D_quadrature(env, t, spec)


def markovianity_report(env, window, samples=400, spec=None):
    """Scan D(t) on ``window`` and flag Markovian iff it never goes negative."""
    t0, t1 = window
    if not t1 > 0:
        raise DomainError("window end must be positive")
    report = numerics.find_sign_changes(lambda x: diffusion(env, x, spec), (t0, t1), samples)
    return MarkovReport(env.kind, report, report.is_empty)
