"""Rectangular parameter sweeps producing figure datasets.

A sweep evaluates one pure function on every point of a one- or
two-dimensional grid and stores the results in a SweepTable. Points are
independent, so they can be farmed out to a process pool; results are
always placed by grid index, never by completion order.

Per-point numerical failures do not abort a sweep: the point is stored
as NaN and the failure message is kept in ``metadata["failures"]``.
"""

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__, envmodels, gp
from .errors import ConvergenceError, DomainError, GpDephaseError, PositivityWarning
from .numerics import DEFAULT_QUADRATURE
from .qubit import BlochInitial

__all__ = [
    "Axis",
    "SweepTable",
    "THERMAL_DEFAULTS",
    "NONEQ_DEFAULTS",
    "make_env",
    "worker_count",
    "diffusion_map",
    "decoherence_curves",
    "gp_vs_s",
    "gp_series_vs_s",
    "gp_vs_theta",
]

THERMAL_DEFAULTS = {"gamma0": 0.1, "cutoff": 10.0, "temperature": 0.0}
NONEQ_DEFAULTS = {
    "gamma0": 0.1,
    "cutoff": 10.0,
    "lambda_param": 0.3,
    "d_param": 2.0,
    "rebased": True,
}

# grid doublings tried by a gp sweep point before it is flagged
GRID_ESCALATIONS = 2


@dataclass(frozen=True)
class Axis:
    """A named sample axis: ``count`` evenly spaced points on [start, stop],
    or an explicit list of points (which may hold a single value)."""

    name: str
    start: float
    stop: float
    count: int
    points: tuple = None

    def __post_init__(self):
        if self.points is not None:
            pts = tuple(float(p) for p in self.points)
            if not pts:
                raise DomainError(f"axis {self.name!r} has no points")
            object.__setattr__(self, "points", pts)
            return
        if self.count < 2:
            raise DomainError(f"axis {self.name!r} needs at least 2 points")
        if not self.start < self.stop:
            raise DomainError(f"axis {self.name!r} needs start < stop")

    @classmethod
    def from_points(cls, name, points):
        pts = tuple(float(p) for p in points)
        if not pts:
            raise DomainError(f"axis {name!r} has no points")
        return cls(name, min(pts), max(pts), len(pts), pts)

    def values(self):
        if self.points is not None:
            return np.array(self.points)
        return np.linspace(self.start, self.stop, self.count)

    def describe(self):
        out = {"name": self.name, "start": self.start, "stop": self.stop, "count": self.count}
        if self.points is not None:
            out["points"] = list(self.points)
        return out


@dataclass
class SweepTable:
    """Values on the outer product of ``axes``.

    ``values`` has shape ``(*axis counts, len(columns))`` and is stored
    row-major with the first axis outermost.
    """

    axes: tuple
    columns: tuple
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.axes = tuple(self.axes)
        self.columns = tuple(self.columns)
        if not 1 <= len(self.axes) <= 2:
            raise DomainError("a table has one or two axes")
        shape = tuple(a.count for a in self.axes) + (len(self.columns),)
        self.values = np.asarray(self.values, dtype=float).reshape(shape)

    @property
    def shape(self):
        return self.values.shape[:-1]

    def column(self, name):
        return self.values[..., self.columns.index(name)]

    def flagged(self):
        return ~np.isfinite(self.values)

    def rows(self):
        """Yield (axis coordinates, column values) in row-major order."""
        grids = [a.values() for a in self.axes]
        for idx in np.ndindex(*self.shape):
            yield tuple(g[i] for g, i in zip(grids, idx)), self.values[idx]

    def equals(self, other):
        """Exact equality of axes, columns and values (NaN equals NaN)."""
        return (
            [a.describe() for a in self.axes] == [a.describe() for a in other.axes]
            and self.columns == other.columns
            and self.values.shape == other.values.shape
            and np.array_equal(self.values, other.values, equal_nan=True)
        )


def worker_count(requested=None):
    """Worker processes to use; GPDEPHASE_THREADS caps the count."""
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get("GPDEPHASE_THREADS")
    if cap:
        try:
            n = min(n, int(cap))
        except ValueError:
            raise DomainError(f"GPDEPHASE_THREADS must be an integer, got {cap!r}")
    return max(1, n)


def make_env(family, s, fixed):
    """Build an environment descriptor for ohmicity ``s`` from a parameter record."""
    if family == "thermal":
        p = {**THERMAL_DEFAULTS, **fixed}
        sd = envmodels.SpectralDensity(p["gamma0"], s, p["cutoff"])
        return envmodels.ThermalEnv(sd, p["temperature"])
    if family == "noneq":
        p = {**NONEQ_DEFAULTS, **fixed}
        sd = envmodels.SpectralDensity(p["gamma0"], s, p["cutoff"])
        return envmodels.NonEqEnv(sd, p["lambda_param"], p["d_param"], p["rebased"])
    raise DomainError(f"unknown environment family {family!r}")


def _record(family, fixed):
    base = THERMAL_DEFAULTS if family == "thermal" else NONEQ_DEFAULTS
    keys = ("gamma0", "cutoff", "temperature", "lambda_param", "d_param", "rebased")
    p = {**base, **fixed}
    return {k: p[k] for k in keys if k in p}


def _metadata(kind, family, fixed, axes, columns, tag, **extra):
    spec = extra.pop("spec", None) or DEFAULT_QUADRATURE
    meta = {
        "figure": tag,
        "kind": kind,
        "tool": "gpdephase",
        "version": __version__,
        "environment": family,
        "parameters": _record(family, fixed),
        "axes": [a.describe() for a in axes],
        "columns": list(columns),
        "quadrature": {
            "relative_tolerance": spec.relative_tolerance,
            "absolute_tolerance": spec.absolute_tolerance,
            "max_subdivisions": spec.max_subdivisions,
        },
    }
    meta.update(extra)
    return meta


def _run_points(func, tasks, workers, order):
    """Evaluate ``func`` on every task; returns results in task order.

    ``order`` is an optional permutation giving the dispatch sequence.
    """
    n = len(tasks)
    seq = list(range(n)) if order is None else [int(i) for i in order]
    if sorted(seq) != list(range(n)):
        raise DomainError("order must be a permutation of the point indices")
    workers = worker_count(workers)
    if workers > 1 and n > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            done = list(pool.map(func, [tasks[i] for i in seq], chunksize=max(1, n // (4 * workers))))
    else:
        done = [func(tasks[i]) for i in seq]
    out = [None] * n
    for i, res in zip(seq, done):
        out[i] = res
    return out


def _collect(results, shape, ncol):
    values = np.full((len(results), ncol), np.nan)
    failures = []
    nonpositive = 0
    for i, (vals, err, warned) in enumerate(results):
        if err is None:
            values[i] = vals
        else:
            failures.append({"index": [int(k) for k in np.unravel_index(i, shape)], "error": err})
        nonpositive += bool(warned)
    return values.reshape(shape + (ncol,)), failures, nonpositive


def _guard(compute):
    """Run ``compute`` and package (values, error message, positivity flag)."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", PositivityWarning)
        try:
            vals, err = compute(), None
        except (GpDephaseError, ArithmeticError, ValueError) as exc:
            vals, err = None, f"{type(exc).__name__}: {exc}"
    warned = any(issubclass(w.category, PositivityWarning) for w in caught)
    return vals, err, warned


# ---------------------------------------------------------------------------
# point kernels (module level so they pickle)
# ---------------------------------------------------------------------------


def _column_point(task):
    quantity, family, s, fixed, times, spec = task

    def compute():
        env = make_env(family, s, fixed)
        f = envmodels.diffusion if quantity == "D" else envmodels.decoherence
        return np.asarray(f(env, np.asarray(times), spec), dtype=float)

    return _guard(compute)


def _gp_point(task):
    family, s, fixed, theta, grid, spec = task

    def compute():
        env = make_env(family, s, fixed)
        init = BlochInitial(theta)
        n = grid
        for attempt in range(GRID_ESCALATIONS + 1):
            try:
                r = gp.gp_evaluate(gp.GpRun(init, env, grid=n), spec)
                break
            except ConvergenceError:
                if attempt == GRID_ESCALATIONS:
                    raise
                n *= 2
        return [r.phi_g, r.phi_u, r.delta_phi, r.normalized_delta, r.richardson_gap, float(n)]

    return _guard(compute)


_GP_COLUMNS = ("phi_g", "phi_u", "delta_phi", "normalized_delta", "richardson_gap", "grid")


# ---------------------------------------------------------------------------
# public sweeps
# ---------------------------------------------------------------------------


def _time_by_s(quantity, family, fixed, t_axis, s_axis, tag, spec, workers, order):
    times = tuple(t_axis.values())
    s_vals = s_axis.values()
    tasks = [(quantity, family, float(s), dict(fixed), times, spec) for s in s_vals]
    results = _run_points(_column_point, tasks, workers, order)
    # one task per s gives a whole t column; scatter back into (t, s)
    values = np.full((t_axis.count, s_axis.count, 1), np.nan)
    failures = []
    nonpositive = 0
    for j, (vals, err, warned) in enumerate(results):
        if err is None:
            values[:, j, 0] = vals
        else:
            failures.append({"index": [None, j], "error": err})
        nonpositive += bool(warned)
    axes = (t_axis, s_axis)
    meta = _metadata(
        "diffusion" if quantity == "D" else "decoherence",
        family,
        fixed,
        axes,
        (quantity,),
        tag,
        spec=spec,
        failures=failures,
        nonpositive_points=nonpositive,
    )
    return SweepTable(axes, (quantity,), values, meta)


def diffusion_map(family, fixed=None, t_axis=None, s_axis=None, *, tag=None, spec=None,
                  workers=1, order=None):
    """D(t, s) on a (t, s) grid.

    Defaults: 200 x 200 points over t in (0, 3], s in (0, 5] with the
    default parameter record of the family.
    """
    t_axis = t_axis or Axis("t", 0.015, 3.0, 200)
    s_axis = s_axis or Axis("s", 0.025, 5.0, 200)
    return _time_by_s("D", family, fixed or {}, t_axis, s_axis, tag, spec, workers, order)


def decoherence_curves(family, fixed=None, t_axis=None, s_values=(1.0, 4.0), *, tag=None,
                       spec=None, workers=1, order=None):
    """F(t) curves, one per value in ``s_values``."""
    t_axis = t_axis or Axis("t", 0.0, 3.0, 601)
    s_axis = Axis.from_points("s", s_values)
    return _time_by_s("F", family, fixed or {}, t_axis, s_axis, tag, spec, workers, order)


def _gp_grid(family, fixed, axes, params, theta_of, tag, grid, spec, workers, order, extra):
    """Run gp points over the outer product ``params`` (list of (s, fixed, theta))."""
    tasks = [(family, s, fx, theta_of(th), grid, spec) for s, fx, th in params]
    results = _run_points(_gp_point, tasks, workers, order)
    shape = tuple(a.count for a in axes)
    values, failures, nonpositive = _collect(results, shape, len(_GP_COLUMNS))
    meta = _metadata(
        "geometric_phase",
        family,
        fixed,
        axes,
        _GP_COLUMNS,
        tag,
        spec=spec,
        grid=grid,
        grid_escalations=GRID_ESCALATIONS,
        failures=failures,
        nonpositive_points=nonpositive,
        **extra,
    )
    return SweepTable(axes, _GP_COLUMNS, values, meta)


def gp_series_vs_s(family, fixed, s_axis, series, theta, *, tag=None, grid=gp.DEFAULT_GRID,
                   spec=None, workers=None, order=None):
    """Geometric phase over s for several parameter records.

    ``series`` is a list of dicts overriding entries of ``fixed``; the
    second axis is the series index and the overrides go to metadata.
    """
    fixed = dict(fixed or {})
    series = [dict(x) for x in series]
    axes = (s_axis, Axis.from_points("series", range(len(series))))
    params = [(float(s), {**fixed, **ov}, theta) for s in s_axis.values() for ov in series]
    return _gp_grid(family, fixed, axes, params, float, tag, grid, spec, workers, order,
                    {"theta": theta, "series": series})


def gp_vs_s(family, fixed, s_axis, gamma0_values, theta, *, tag=None, grid=gp.DEFAULT_GRID,
            spec=None, workers=None, order=None):
    """Geometric phase over a (s, gamma0) grid at fixed polar angle."""
    fixed = dict(fixed or {})
    g_axis = Axis.from_points("gamma0", gamma0_values)
    axes = (s_axis, g_axis)
    params = [(float(s), {**fixed, "gamma0": g}, theta) for s in s_axis.values() for g in g_axis.values()]
    return _gp_grid(family, fixed, axes, params, float, tag, grid, spec, workers, order,
                    {"theta": theta})


def gp_vs_theta(family, fixed, theta_axis, s_values, *, tag=None, grid=gp.DEFAULT_GRID,
                spec=None, workers=None, order=None):
    """Geometric phase over a (theta, s) grid."""
    fixed = dict(fixed or {})
    s_axis = Axis.from_points("s", s_values)
    axes = (theta_axis, s_axis)
    params = [(float(s), fixed, th) for th in theta_axis.values() for s in s_axis.values()]
    # theta endpoints from linspace may overshoot pi by an ulp
    return _gp_grid(family, fixed, axes, params, lambda th: min(max(float(th), 0.0), math.pi),
                    tag, grid, spec, workers, order, {})
