"""Command-line entry point.

    gpdephase <command> [flags] [--config PATH] [--out PATH] [--format csv|json] [--plot-script]

Commands: decoherence, diffusion-map, markovianity, gp, gp-sweep and
``figure figN`` (N = 1..7). Each command writes one table, optionally a
gnuplot script next to it, and prints a JSON manifest on stdout. The exit
status is 0 iff every listed file exists with its recorded checksum.
"""

import argparse
import json
import math
import sys
import time

import numpy as np

from . import __version__, envmodels, sweep
from .config import COMMANDS, FIGURES, load_config
from .errors import ConfigError, GpDephaseError
from .numerics import QuadratureSpec
from .output import OutputManifest, emit_plot_script, write_table
from .sweep import Axis

__all__ = ["build_parser", "run_command", "main", "FIG7_SERIES"]

# (gamma0, cutoff) pairs, plus one pair with lambda and d interchanged
FIG7_SERIES = (
    {"gamma0": 0.5, "cutoff": 10.0},
    {"gamma0": 0.5, "cutoff": 5.0},
    {"gamma0": 0.1, "cutoff": 5.0},
    {"gamma0": 0.1, "cutoff": 1.0},
    {"gamma0": 0.1, "cutoff": 1.0, "lambda_param": 1.0, "d_param": 0.5},
    {"gamma0": 0.01, "cutoff": 10.0},
)

# argparse dest -> config field
_DEST = {"env": "kind", "lam": "lambda_param", "d": "d_param", "out": "path"}


def _floats(text):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of numbers, got {text!r}")


def _common_flags():
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    g = p.add_argument_group("environment")
    g.add_argument("--env", choices=("thermal", "noneq"), help="bath family")
    g.add_argument("--gamma0", type=float, help="coupling strength")
    g.add_argument("--gamma0-values", type=_floats, help="comma separated couplings")
    g.add_argument("--s", type=float, help="ohmicity")
    g.add_argument("--s-values", type=_floats, help="comma separated ohmicities")
    g.add_argument("--s-start", type=float)
    g.add_argument("--s-stop", type=float)
    g.add_argument("--s-count", type=int)
    g.add_argument("--cutoff", type=float, help="cutoff frequency in units of the qubit frequency")
    g.add_argument("--temperature", type=float, help="thermal baths only")
    g.add_argument("--lambda", dest="lam", type=float, help="non-equilibrium time offset")
    g.add_argument("--d", type=float, help="non-equilibrium rate")
    mode = g.add_mutually_exclusive_group()
    mode.add_argument("--rebased", dest="rebased", action="store_true", help="F(t) - F(0) (default)")
    mode.add_argument("--raw", dest="rebased", action="store_false", help="F(t) as printed")
    g = p.add_argument_group("state")
    g.add_argument("--theta", type=float, help="polar angle of the initial state")
    g.add_argument("--theta-start", type=float)
    g.add_argument("--theta-stop", type=float)
    g.add_argument("--theta-count", type=int)
    g = p.add_argument_group("numerics")
    g.add_argument("--grid", type=int, help="time intervals per period for the phase")
    g.add_argument("--rtol", type=float)
    g.add_argument("--atol", type=float)
    g.add_argument("--max-subdivisions", type=int)
    g.add_argument("--t-start", type=float)
    g.add_argument("--t-stop", type=float)
    g.add_argument("--t-count", type=int)
    g.add_argument("--samples", type=int, help="scan points for markovianity")
    g.add_argument("--workers", type=int, help="worker processes (capped by GPDEPHASE_THREADS)")
    g = p.add_argument_group("output")
    g.add_argument("--config", help="INI configuration file")
    g.add_argument("--out", help="output table path")
    g.add_argument("--format", choices=("csv", "json"))
    g.add_argument("--plot-script", action="store_true", help="also write a gnuplot script")
    return p


def build_parser():
    common = _common_flags()
    parser = argparse.ArgumentParser(prog="gpdephase", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"gpdephase {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "decoherence": "decoherence factor curves F(t)",
        "diffusion-map": "diffusion coefficient D(t, s) map",
        "markovianity": "scan D(t) for negative intervals",
        "gp": "geometric phase for one parameter point",
        "gp-sweep": "geometric phase over s (or theta)",
    }
    for name in COMMANDS:
        if name == "figure":
            sp = sub.add_parser("figure", parents=[common], help="regenerate a figure dataset")
            sp.add_argument("figure", choices=FIGURES)
        else:
            sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def _flags_from(ns):
    flags = {}
    for key, value in vars(ns).items():
        if key in ("command", "figure", "config"):
            continue
        flags[_DEST.get(key, key)] = value
    return flags


def _s_axis(env):
    if env.s_values is not None:
        return Axis.from_points("s", env.s_values)
    if env.s_count is not None:
        return Axis("s", env.s_start, env.s_stop, env.s_count)
    return Axis.from_points("s", [env.s])


def _t_axis(num):
    return Axis("t", num.t_start, num.t_stop, num.t_count)


def _build_table(cfg):
    env, st, num = cfg.environment, cfg.state, cfg.numeric
    spec = QuadratureSpec(num.rtol, num.atol, num.max_subdivisions)
    fixed = env.fixed()
    tag = cfg.figure
    cmd = cfg.command if cfg.command != "figure" else {
        "fig1": "diffusion-map",
        "fig2": "decoherence",
        "fig3": "diffusion-map",
        "fig4": "decoherence",
        "fig5": "gp-sweep",
        "fig6": "gp-sweep",
        "fig7": "gp-sweep",
    }[cfg.figure]
    common = dict(tag=tag, spec=spec, workers=num.workers)
    report = {}
    if cmd == "diffusion-map":
        table = sweep.diffusion_map(env.kind, fixed, _t_axis(num), _s_axis(env), **common)
        return table, "density", "D", report
    if cmd == "decoherence":
        s_vals = _s_axis(env).values()
        table = sweep.decoherence_curves(env.kind, fixed, _t_axis(num), s_vals, **common)
        return table, "curves", "F", report
    if cmd == "markovianity":
        if env.s is None:
            raise ConfigError("markovianity needs a single ohmicity", "environment.s")
        e = sweep.make_env(env.kind, env.s, fixed)
        rep = envmodels.markovianity_report(e, (num.t_start, num.t_stop), num.samples, spec)
        table = sweep.diffusion_map(env.kind, fixed, _t_axis(num), Axis.from_points("s", [env.s]),
                                    tag=tag, spec=spec)
        report = {
            "markovian": rep.is_markovian_on_window,
            "negative_intervals": [list(iv) for iv in rep.negative_intervals.intervals],
            "first_crossing": rep.negative_intervals.first_crossing,
            "window": [num.t_start, num.t_stop],
        }
        table.metadata["markovianity"] = report
        return table, "curves", "D", report
    grid = num.grid
    if cfg.figure == "fig7":
        table = sweep.gp_series_vs_s(env.kind, fixed, _s_axis(env), FIG7_SERIES, st.theta, grid=grid, **common)
        return table, "curves", "normalized_delta", report
    if cmd == "gp" or not st.is_range:
        if cmd == "gp" and env.s is None:
            raise ConfigError("gp needs a single ohmicity", "environment.s")
        gammas = env.gamma0_values if env.gamma0_values is not None else (env.gamma0,)
        table = sweep.gp_vs_s(env.kind, fixed, _s_axis(env), gammas, st.theta, grid=grid, **common)
        return table, "curves", "normalized_delta", report
    theta_axis = Axis("theta", st.theta_start, st.theta_stop, st.theta_count)
    s_vals = env.s_values if env.s_values is not None else ((env.s,) if env.s is not None else (1.0, 2.0, 2.5, 3.0))
    table = sweep.gp_vs_theta(env.kind, fixed, theta_axis, s_vals, grid=grid, **common)
    return table, "curves", "delta_phi", report


def run_command(cfg):
    """Execute a validated RunConfig and return its OutputManifest.

    ``report["all_failed"]`` is set when no point of the table is finite.
    """
    start = time.perf_counter()
    table, style, column, report = _build_table(cfg)
    table.metadata["run"] = cfg.echo()
    path = write_table(table, cfg.output.format, cfg.output.path)
    manifest = OutputManifest(parameters=cfg.echo(), report=dict(report))
    manifest.add(path, "table")
    if cfg.output.plot_script:
        if cfg.output.format != "csv":
            raise ConfigError("plot scripts are written for CSV tables only", "output.plot_script")
        script = emit_plot_script(path, style, column=column)
        manifest.add(script, "plot-script")
    failures = table.metadata.get("failures", [])
    manifest.report["flagged_points"] = len(failures)
    manifest.report["points"] = int(np.prod(table.shape))
    if "delta_phi" in table.columns and table.values[..., 0].size == 1:
        manifest.report["result"] = {c: float(v) for c, v in zip(table.columns, table.values.reshape(-1))}
    manifest.report["all_failed"] = bool(np.all(~np.isfinite(table.values)))
    manifest.wall_time = time.perf_counter() - start
    return manifest


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = load_config(ns.command, getattr(ns, "config", None), _flags_from(ns), getattr(ns, "figure", None))
    except ConfigError as exc:
        print(f"gpdephase: configuration error [{exc.field}]: {exc}", file=sys.stderr)
        return 2
    try:
        manifest = run_command(cfg)
    except ConfigError as exc:
        print(f"gpdephase: configuration error [{exc.field}]: {exc}", file=sys.stderr)
        return 2
    except GpDephaseError as exc:
        print(f"gpdephase: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    doc = manifest.to_dict()
    print(json.dumps(_jsonable(doc), indent=1, sort_keys=True))
    if manifest.report["all_failed"]:
        print("gpdephase: every point failed", file=sys.stderr)
        return 1
    return 0 if doc["verified"] else 1


if __name__ == "__main__":
    sys.exit(main())
