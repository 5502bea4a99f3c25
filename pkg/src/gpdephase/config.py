"""Run configuration: INI file plus command-line overrides.

File layout (every key optional)::

    [run]
    command = gp-sweep
    [environment]
    kind = thermal          ; thermal | noneq
    gamma0 = 0.01
    gamma0_values = 0.001, 0.005
    s = 3
    s_values = 1, 2, 3
    s_start = -0.95
    s_stop = 5
    s_count = 40
    cutoff = 10
    temperature = 0
    lambda = 0.3
    d = 2
    rebased = yes
    [state]
    theta = 1.0471975511965976
    theta_start = 0
    theta_stop = 3.141592653589793
    theta_count = 61
    [numeric]
    grid = 4096
    rtol = 1e-9
    atol = 1e-12
    max_subdivisions = 2000
    t_start = 0
    t_stop = 3
    t_count = 601
    samples = 400
    workers = 4
    [output]
    path = out.csv
    format = csv
    plot_script = no

Precedence is command defaults < file < flags. Unknown sections or keys,
values outside the physical domain and contradictory settings raise
ConfigError naming the offending field.
"""

import configparser
import math
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError

__all__ = [
    "COMMANDS",
    "FIGURES",
    "EnvironmentRecord",
    "StateRecord",
    "NumericRecord",
    "OutputRecord",
    "RunConfig",
    "load_config",
]

COMMANDS = ("decoherence", "diffusion-map", "markovianity", "gp", "gp-sweep", "figure")
FIGURES = tuple(f"fig{i}" for i in range(1, 8))

_BOOL = {"1": True, "yes": True, "true": True, "on": True, "0": False, "no": False, "false": False, "off": False}


def _to_bool(text):
    if isinstance(text, bool):
        return text
    try:
        return _BOOL[str(text).strip().lower()]
    except KeyError:
        raise ValueError(f"not a boolean: {text!r}")


def _to_floats(text):
    if isinstance(text, (list, tuple)):
        return tuple(float(x) for x in text)
    parts = [p for p in str(text).replace(";", ",").split(",") if p.strip()]
    if not parts:
        raise ValueError("empty list")
    return tuple(float(p) for p in parts)


# (section, file key) -> (record field, parser)
SCHEMA = {
    ("run", "command"): ("command", str),
    ("run", "figure"): ("figure", str),
    ("environment", "kind"): ("kind", str),
    ("environment", "gamma0"): ("gamma0", float),
    ("environment", "gamma0_values"): ("gamma0_values", _to_floats),
    ("environment", "s"): ("s", float),
    ("environment", "s_values"): ("s_values", _to_floats),
    ("environment", "s_start"): ("s_start", float),
    ("environment", "s_stop"): ("s_stop", float),
    ("environment", "s_count"): ("s_count", int),
    ("environment", "cutoff"): ("cutoff", float),
    ("environment", "temperature"): ("temperature", float),
    ("environment", "lambda"): ("lambda_param", float),
    ("environment", "d"): ("d_param", float),
    ("environment", "rebased"): ("rebased", _to_bool),
    ("state", "theta"): ("theta", float),
    ("state", "theta_start"): ("theta_start", float),
    ("state", "theta_stop"): ("theta_stop", float),
    ("state", "theta_count"): ("theta_count", int),
    ("numeric", "grid"): ("grid", int),
    ("numeric", "rtol"): ("rtol", float),
    ("numeric", "atol"): ("atol", float),
    ("numeric", "max_subdivisions"): ("max_subdivisions", int),
    ("numeric", "t_start"): ("t_start", float),
    ("numeric", "t_stop"): ("t_stop", float),
    ("numeric", "t_count"): ("t_count", int),
    ("numeric", "samples"): ("samples", int),
    ("numeric", "workers"): ("workers", int),
    ("output", "path"): ("path", str),
    ("output", "format"): ("format", str),
    ("output", "plot_script"): ("plot_script", _to_bool),
}

FIELD_NAMES = {f"{sec}.{key}": (sec, key) for sec, key in SCHEMA}


@dataclass(frozen=True)
class EnvironmentRecord:
    kind: str
    gamma0: float
    cutoff: float
    s: float = None
    s_values: tuple = None
    s_start: float = None
    s_stop: float = None
    s_count: int = None
    gamma0_values: tuple = None
    temperature: float = 0.0
    lambda_param: float = 0.3
    d_param: float = 2.0
    rebased: bool = True

    def fixed(self):
        """Parameter record for the sweep layer."""
        if self.kind == "thermal":
            return {"gamma0": self.gamma0, "cutoff": self.cutoff, "temperature": self.temperature}
        return {
            "gamma0": self.gamma0,
            "cutoff": self.cutoff,
            "lambda_param": self.lambda_param,
            "d_param": self.d_param,
            "rebased": self.rebased,
        }


@dataclass(frozen=True)
class StateRecord:
    theta: float = math.pi / 3
    theta_start: float = None
    theta_stop: float = None
    theta_count: int = None

    @property
    def is_range(self):
        return self.theta_count is not None


@dataclass(frozen=True)
class NumericRecord:
    grid: int = 4096
    rtol: float = 1e-9
    atol: float = 1e-12
    max_subdivisions: int = 2000
    t_start: float = 0.0
    t_stop: float = 3.0
    t_count: int = 601
    samples: int = 400
    workers: int = None


@dataclass(frozen=True)
class OutputRecord:
    path: str
    format: str = "csv"
    plot_script: bool = False


@dataclass(frozen=True)
class RunConfig:
    command: str
    figure: str
    environment: EnvironmentRecord
    state: StateRecord
    numeric: NumericRecord
    output: OutputRecord

    def echo(self):
        """Plain-dict copy of every setting, for manifests."""
        out = {"command": self.command, "figure": self.figure}
        for name in ("environment", "state", "numeric", "output"):
            out[name] = dict(vars(getattr(self, name)))
        return out


# ---------------------------------------------------------------------------
# defaults
# ---------------------------------------------------------------------------

_THERMAL = {"kind": "thermal", "gamma0": 0.1, "cutoff": 10.0, "temperature": 0.0}
_NONEQ = {"kind": "noneq", "gamma0": 0.1, "cutoff": 10.0, "lambda_param": 0.3, "d_param": 2.0, "rebased": True}

# figure presets: environment family first, then any non-default settings
FIGURE_DEFAULTS = {
    "fig1": {**_THERMAL, "t_start": 0.015, "t_stop": 3.0, "t_count": 200, "s_start": 0.025, "s_stop": 5.0, "s_count": 200},
    "fig2": {**_THERMAL, "s_values": (1.0, 4.0), "t_start": 0.0, "t_stop": 3.0, "t_count": 601},
    "fig3": {**_NONEQ, "t_start": 0.015, "t_stop": 3.0, "t_count": 200, "s_start": 0.025, "s_stop": 5.0, "s_count": 200},
    "fig4": {**_NONEQ, "s_values": (1.0, 2.0, 3.0), "t_start": 0.0, "t_stop": 3.0, "t_count": 601},
    "fig5": {
        **_THERMAL,
        "gamma0_values": (0.001, 0.005, 0.01, 0.03),
        "s_start": -0.95,
        "s_stop": 5.0,
        "s_count": 40,
        "theta": math.pi / 3,
    },
    "fig6": {
        **_THERMAL,
        "gamma0": 0.01,
        "s_values": (1.0, 2.0, 2.5, 3.0),
        "theta_start": 0.0,
        "theta_stop": math.pi,
        "theta_count": 61,
    },
    "fig7": {
        **_NONEQ,
        "lambda_param": 0.5,
        "d_param": 1.0,
        "s_start": -0.9,
        "s_stop": 5.0,
        "s_count": 40,
        "theta": math.pi / 3,
    },
}


def _command_defaults(command, figure, kind):
    if command == "figure":
        return dict(FIGURE_DEFAULTS[figure])
    if kind not in ("thermal", "noneq"):
        raise ConfigError(f"environment.kind: must be thermal or noneq, got {kind!r}", "environment.kind")
    base = dict(_THERMAL if kind == "thermal" else _NONEQ)
    if command == "decoherence":
        key = "fig2" if kind == "thermal" else "fig4"
    elif command == "diffusion-map":
        key = "fig1" if kind == "thermal" else "fig3"
    elif command == "markovianity":
        return {**base, "s": 1.0, "t_start": 0.0, "t_stop": 50.0, "samples": 400}
    elif command == "gp":
        return {**base, "gamma0": 0.01, "s": 3.0, "theta": math.pi / 3}
    else:  # gp-sweep
        key = "fig5" if kind == "thermal" else "fig7"
    return dict(FIGURE_DEFAULTS[key])


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------


def _read_file(path):
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}", "config")
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}", "config")
    values = {}
    sections = {sec for sec, _ in SCHEMA}
    for sec in parser.sections():
        if sec not in sections:
            raise ConfigError(f"unknown config section [{sec}]", sec)
        for key, raw in parser.items(sec):
            if (sec, key) not in SCHEMA:
                raise ConfigError(f"unknown config key {sec}.{key}", f"{sec}.{key}")
            name, conv = SCHEMA[(sec, key)]
            try:
                values[name] = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {sec}.{key}: {exc}", f"{sec}.{key}")
    return values


def _field_of(name):
    for (sec, key), (field_name, _) in SCHEMA.items():
        if field_name == name:
            return f"{sec}.{key}"
    return name


def _check_flag_conflicts(flags):
    groups = [
        ("s", ("s_values", "s_start", "s_stop", "s_count")),
        ("s_values", ("s_start", "s_stop", "s_count")),
        ("gamma0", ("gamma0_values",)),
        ("theta", ("theta_start", "theta_stop", "theta_count")),
    ]
    for single, others in groups:
        for other in others:
            if single in flags and other in flags:
                raise ConfigError(
                    f"conflicting settings {_field_of(single)} and {_field_of(other)}", _field_of(single)
                )


def _fail(name, message):
    raise ConfigError(f"{_field_of(name)}: {message}", _field_of(name))


def _validate(cfg, explicit):
    env, st, num, out = cfg.environment, cfg.state, cfg.numeric, cfg.output
    if env.kind not in ("thermal", "noneq"):
        _fail("kind", f"must be thermal or noneq, got {env.kind!r}")
    if not (math.isfinite(env.gamma0) and env.gamma0 >= 0):
        _fail("gamma0", "must be >= 0")
    for g in env.gamma0_values or ():
        if not (math.isfinite(g) and g >= 0):
            _fail("gamma0_values", "entries must be >= 0")
    if not (math.isfinite(env.cutoff) and env.cutoff > 0):
        _fail("cutoff", "must be > 0")
    if env.s is not None and not env.s > -1:
        _fail("s", f"s > -1 required, got {env.s:g}")
    for s in env.s_values or ():
        if not s > -1:
            _fail("s_values", f"s > -1 required, got {s:g}")
    if env.s_start is not None and not env.s_start > -1:
        _fail("s_start", f"s > -1 required, got {env.s_start:g}")
    if env.s_count is not None:
        if env.s_count < 2:
            _fail("s_count", "must be >= 2")
        if not env.s_stop > env.s_start:
            _fail("s_stop", "must exceed s_start")
    if not (math.isfinite(env.temperature) and env.temperature >= 0):
        _fail("temperature", "must be >= 0")
    if not math.isfinite(env.lambda_param):
        _fail("lambda_param", "must be finite")
    if not (math.isfinite(env.d_param) and env.d_param >= 0):
        _fail("d_param", "must be >= 0")
    if env.kind == "noneq" and "temperature" in explicit:
        _fail("temperature", "only applies to thermal environments")
    if env.kind == "thermal":
        for name in ("lambda_param", "d_param", "rebased"):
            if name in explicit:
                _fail(name, "only applies to non-equilibrium environments")
    if not 0 <= st.theta <= math.pi:
        _fail("theta", "must lie in [0, pi]")
    if st.theta_count is not None:
        if st.theta_count < 2:
            _fail("theta_count", "must be >= 2")
        if not (0 <= st.theta_start < st.theta_stop <= math.pi):
            _fail("theta_start", "need 0 <= theta_start < theta_stop <= pi")
    if num.grid < 64:
        _fail("grid", "must be >= 64")
    if not (num.rtol > 0 and num.atol > 0):
        _fail("rtol" if not num.rtol > 0 else "atol", "must be > 0")
    if num.max_subdivisions < 1:
        _fail("max_subdivisions", "must be >= 1")
    if not (0 <= num.t_start < num.t_stop):
        _fail("t_stop", "need 0 <= t_start < t_stop")
    if num.t_count < 2:
        _fail("t_count", "must be >= 2")
    if num.samples < 16:
        _fail("samples", "must be >= 16")
    if num.workers is not None and num.workers < 1:
        _fail("workers", "must be >= 1")
    if out.format not in ("csv", "json"):
        _fail("format", f"must be csv or json, got {out.format!r}")
    parent = Path(out.path).resolve().parent
    while not parent.exists():
        parent = parent.parent
    if not os.access(parent, os.W_OK):
        _fail("path", f"{out.path} is not writable")


def load_config(command, path=None, flags=None, figure=None):
    """Build a validated RunConfig.

    ``flags`` maps record field names (``gamma0``, ``s_values``, ...) to
    values given on the command line; only explicitly given flags should
    be present.
    """
    flags = dict(flags or {})
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}", "run.command")
    _check_flag_conflicts(flags)
    file_values = _read_file(path) if path else {}
    file_cmd = file_values.pop("command", None)
    if file_cmd is not None and file_cmd != command:
        raise ConfigError(f"config file is for command {file_cmd!r}, not {command!r}", "run.command")
    file_fig = file_values.pop("figure", None)
    if figure is not None and file_fig is not None and figure != file_fig:
        raise ConfigError("figure given in both file and flags with different values", "run.figure")
    figure = figure or file_fig
    if command == "figure":
        if figure not in FIGURES:
            raise ConfigError(f"figure must be one of {', '.join(FIGURES)}, got {figure!r}", "run.figure")
    elif figure is not None:
        raise ConfigError("figure only applies to the figure command", "run.figure")

    # a file setting of a range is superseded by a flag giving the single value
    for single, others in (("s", ("s_values", "s_start", "s_stop", "s_count")),
                           ("gamma0", ("gamma0_values",)),
                           ("theta", ("theta_start", "theta_stop", "theta_count"))):
        if single in flags:
            for o in others:
                file_values.pop(o, None)
    if any(k in flags for k in ("s_start", "s_stop", "s_count")):
        file_values.pop("s_values", None)
    if "s_values" in flags:
        for o in ("s_start", "s_stop", "s_count"):
            file_values.pop(o, None)

    if command == "figure":
        kind = FIGURE_DEFAULTS[figure]["kind"]
        if flags.get("kind", kind) != kind or file_values.get("kind", kind) != kind:
            raise ConfigError(f"{figure} uses the {kind} environment", "environment.kind")
    else:
        kind = flags.get("kind", file_values.get("kind", "thermal"))
    defaults = _command_defaults(command, figure, kind)
    # user-supplied single s or s range replaces the preset s settings
    user = {**file_values, **flags}
    ranges = ("s_start", "s_stop", "s_count")
    if "s" in user:
        drop = ("s_values",) + ranges
    elif "s_values" in user:
        drop = ("s",) + ranges
    elif any(k in user for k in ranges):
        drop = ("s", "s_values")
    else:
        drop = ()
    for k in drop:
        defaults.pop(k, None)
    if "gamma0_values" not in user and "gamma0" in user:
        defaults.pop("gamma0_values", None)
    if "theta" in user:
        for k in ("theta_start", "theta_stop", "theta_count"):
            defaults.pop(k, None)
    merged = {**defaults, **user}
    merged["kind"] = kind

    for k in ("s_start", "s_stop", "s_count"):
        if any(j in merged for j in ("s_start", "s_stop", "s_count")) and k not in merged:
            _fail(k, "s ranges need s_start, s_stop and s_count")
    for k in ("theta_start", "theta_stop", "theta_count"):
        if any(j in merged for j in ("theta_start", "theta_stop", "theta_count")) and k not in merged:
            _fail(k, "theta ranges need theta_start, theta_stop and theta_count")

    fmt = merged.get("format", "csv")
    default_name = (figure if command == "figure" else command) + "." + fmt
    try:
        cfg = RunConfig(
            command=command,
            figure=figure,
            environment=EnvironmentRecord(
                **{k: merged[k] for k in EnvironmentRecord.__dataclass_fields__ if k in merged}
            ),
            state=StateRecord(**{k: merged[k] for k in StateRecord.__dataclass_fields__ if k in merged}),
            numeric=NumericRecord(**{k: merged[k] for k in NumericRecord.__dataclass_fields__ if k in merged}),
            output=OutputRecord(
                path=merged.get("path", default_name),
                format=fmt,
                plot_script=merged.get("plot_script", False),
            ),
        )
    except TypeError as exc:
        raise ConfigError(f"incomplete configuration: {exc}", "config")
    _validate(cfg, set(user))
    return cfg
