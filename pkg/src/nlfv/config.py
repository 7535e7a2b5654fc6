"""Run configuration: parsing, validation, and canonical serialization.

Configs are line-oriented ``key = value`` documents with ``[section]``
headers.  Unknown keys, duplicate keys, and missing required keys are hard
errors; every experiment recipe round-trips through this format, so a recipe
is exactly equivalent to running its emitted config file.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field

from .errors import ConfigError, StabilityError
from .grid import Grid, build_grid, check_mesh_condition, max_stable_lambda
from .models import KernelTable, ModelSpec, builtin_model, kernel_cell_averages
from .scheme import PiecewiseConstantDatum

AUTO_LAMBDA_FRACTION = 0.9

_MODEL_NAMES = ("traffic_forward", "traffic_backward", "tv_example", "limit_family")
_MODES = ("nonlocal", "local")

# section -> {key: (kind, required, default)}
_SCHEMA = {
    "model": {
        "name": ("str", True, None),
        "v_max": ("float", False, None),
        "kernel_a": ("float", False, None),
        "kernel_b": ("float", False, None),
        "width": ("float", False, None),
        "mode": ("str", False, "nonlocal"),
    },
    "grid": {
        "x_min": ("float", True, None),
        "x_max": ("float", True, None),
        "n_cells": ("int", True, None),
        "lambda": ("lambda", False, "auto"),
    },
    "time": {
        "t_final": ("float", True, None),
        "snapshot_times": ("float_list", False, None),
    },
    "datum": {
        "pieces": ("pieces", True, None),
        "background": ("float", False, 0.0),
    },
    "output": {
        "dir": ("str", False, "out"),
        "diagnostics": ("bool", False, True),
        "diag_stride": ("int", False, 1),
        "entropy_points": ("int", False, 41),
        "strict": ("bool", False, False),
    },
}


@dataclass(frozen=True)
class RunConfig:
    """Validated parameters for one solver run."""

    model_name: str
    model_params: dict
    mode: str
    x_min: float
    x_max: float
    n_cells: int
    lam: float
    lam_requested: str          # "auto" or the literal number as given
    t_final: float
    snapshot_times: tuple
    datum: PiecewiseConstantDatum
    output_dir: str
    diagnostics_on: bool
    diag_stride: int
    entropy_points: int
    strict: bool


def _parse_value(kind: str, raw: str, where: str):
    raw = raw.strip()
    try:
        if kind == "str":
            return raw
        if kind == "float":
            return float(raw)
        if kind == "int":
            return int(raw)
        if kind == "bool":
            if raw.lower() in ("true", "yes", "1", "on"):
                return True
            if raw.lower() in ("false", "no", "0", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if kind == "lambda":
            return "auto" if raw.lower() == "auto" else str(float(raw))
        if kind == "float_list":
            return tuple(float(part) for part in raw.split(",") if part.strip())
        if kind == "pieces":
            pieces = []
            for part in raw.split(","):
                part = part.strip()
                if not part:
                    continue
                fields = part.split(":")
                if len(fields) != 3:
                    raise ValueError(f"piece {part!r} is not lo:hi:value")
                pieces.append(tuple(float(f) for f in fields))
            if not pieces:
                raise ValueError("no pieces given")
            return tuple(pieces)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    raise AssertionError(f"unknown kind {kind}")


def _read_sections(text: str) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(interpolation=None, strict=True,
                                       delimiters=("=",))
    try:
        parser.read_string(text)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(
            f"line {exc.lineno}: duplicate key {exc.option!r} in [{exc.section}]"
        ) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(
            f"line {exc.lineno}: duplicate section [{exc.section}]") from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"line {exc.lineno}: key before any [section] header") from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"line {lineno}: cannot parse {line}") from None
    return {s: dict(parser.items(s)) for s in parser.sections()}


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a config document.

    Raises ConfigError with a line number for syntax problems, and with the
    violated condition named for semantic ones; CFL/mesh violations raise
    StabilityError.
    """
    sections = _read_sections(text)

    unknown = [s for s in sections if s not in _SCHEMA]
    if unknown:
        raise ConfigError(f"unknown sections: {', '.join(sorted(unknown))}")
    for sec, keys in sections.items():
        bad = [k for k in keys if k not in _SCHEMA[sec]]
        if bad:
            raise ConfigError(f"unknown keys in [{sec}]: {', '.join(sorted(bad))}")

    missing = [f"{sec}.{key}" for sec, schema in _SCHEMA.items()
               for key, (_, required, _) in schema.items()
               if required and key not in sections.get(sec, {})]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")

    values: dict[str, dict] = {}
    for sec, schema in _SCHEMA.items():
        values[sec] = {}
        for key, (kind, _, default) in schema.items():
            if key in sections.get(sec, {}):
                values[sec][key] = _parse_value(kind, sections[sec][key], f"[{sec}] {key}")
            else:
                values[sec][key] = default

    return _validate(values)


def _validate(values: dict[str, dict]) -> RunConfig:
    m = values["model"]
    if m["name"] not in _MODEL_NAMES:
        raise ConfigError(
            f"model.name: unknown model {m['name']!r}; known: {', '.join(_MODEL_NAMES)}")
    if m["mode"] not in _MODES:
        raise ConfigError(f"model.mode: must be one of {', '.join(_MODES)}")
    model_params = {k: m[k] for k in ("v_max", "kernel_a", "kernel_b", "width")
                    if m[k] is not None}
    try:
        model = builtin_model(m["name"], **model_params)
    except Exception as exc:
        raise ConfigError(f"model: {exc}") from None

    g = values["grid"]
    if g["x_max"] <= g["x_min"]:
        raise ConfigError(f"grid: empty domain [{g['x_min']}, {g['x_max']}]")
    if g["n_cells"] < 2:
        raise ConfigError(f"grid.n_cells: need at least 2, got {g['n_cells']}")

    lam_star = max_stable_lambda(model)
    lam_requested = g["lambda"]
    lam = AUTO_LAMBDA_FRACTION * lam_star if lam_requested == "auto" else float(lam_requested)
    if lam <= 0:
        raise ConfigError(f"grid.lambda: must be positive, got {lam}")
    if lam > lam_star * (1.0 + 1e-12):
        raise StabilityError(f"CFL: lambda {lam:.6g} > lambda* {lam_star:.6g}")

    grid = build_grid(g["x_min"], g["x_max"], g["n_cells"], lam,
                      kernel_radius=model.kernel.radius)
    if not check_mesh_condition(grid, model):
        raise StabilityError(
            f"mesh condition: h {grid.h:.6g} >= 1/C {1.0 / model.C:.6g}")

    tme = values["time"]
    if tme["t_final"] < 0:
        raise ConfigError(f"time.t_final: must be >= 0, got {tme['t_final']}")
    snaps = tme["snapshot_times"]
    if snaps is None:
        snaps = (tme["t_final"],)
    if any(t < 0 or t > tme["t_final"] + grid.tau / 2 for t in snaps):
        raise ConfigError("time.snapshot_times: times must lie in [0, t_final]")

    d = values["datum"]
    try:
        datum = PiecewiseConstantDatum(pieces=d["pieces"], background=d["background"])
    except Exception as exc:
        raise ConfigError(f"datum: {exc}") from None

    o = values["output"]
    if o["diag_stride"] < 1:
        raise ConfigError(f"output.diag_stride: must be >= 1, got {o['diag_stride']}")
    if o["entropy_points"] < 3:
        raise ConfigError(f"output.entropy_points: must be >= 3, got {o['entropy_points']}")

    return RunConfig(
        model_name=m["name"],
        model_params=model_params,
        mode=m["mode"],
        x_min=float(g["x_min"]),
        x_max=float(g["x_max"]),
        n_cells=int(g["n_cells"]),
        lam=lam,
        lam_requested=str(lam_requested),
        t_final=float(tme["t_final"]),
        snapshot_times=tuple(float(t) for t in snaps),
        datum=datum,
        output_dir=o["dir"],
        diagnostics_on=bool(o["diagnostics"]),
        diag_stride=int(o["diag_stride"]),
        entropy_points=int(o["entropy_points"]),
        strict=bool(o["strict"]),
    )


def instantiate(config: RunConfig) -> tuple[ModelSpec, Grid, KernelTable | None,
                                            PiecewiseConstantDatum]:
    """Build the model, grid, kernel table, and datum a run needs."""
    model = builtin_model(config.model_name, **config.model_params)
    grid = build_grid(config.x_min, config.x_max, config.n_cells, config.lam,
                      kernel_radius=model.kernel.radius)
    table = None
    if config.mode == "nonlocal":
        table = kernel_cell_averages(model.kernel, grid)
    return model, grid, table, config.datum


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def sections_to_text(sections: dict[str, dict[str, str]]) -> str:
    """Render a section/key/value mapping as canonical config text."""
    lines = []
    for sec, keys in sections.items():
        lines.append(f"[{sec}]")
        for key, val in keys.items():
            lines.append(f"{key} = {val}")
        lines.append("")
    return "\n".join(lines)


def config_to_sections(config: RunConfig) -> dict[str, dict[str, str]]:
    """Canonical text form of a config; parse_config inverts it exactly."""
    model: dict[str, str] = {"name": config.model_name}
    for key in ("v_max", "kernel_a", "kernel_b", "width"):
        if key in config.model_params:
            model[key] = _fmt(config.model_params[key])
    model["mode"] = config.mode

    def piece_str(piece):
        lo, hi, value = piece
        def num(x):
            if x == math.inf:
                return "inf"
            if x == -math.inf:
                return "-inf"
            return _fmt(x)
        return f"{num(lo)}:{num(hi)}:{_fmt(value)}"

    return {
        "model": model,
        "grid": {
            "x_min": _fmt(config.x_min),
            "x_max": _fmt(config.x_max),
            "n_cells": str(config.n_cells),
            "lambda": config.lam_requested,
        },
        "time": {
            "t_final": _fmt(config.t_final),
            "snapshot_times": ", ".join(_fmt(t) for t in config.snapshot_times),
        },
        "datum": {
            "pieces": ", ".join(piece_str(p) for p in config.datum.pieces),
            "background": _fmt(config.datum.background),
        },
        "output": {
            "dir": config.output_dir,
            "diagnostics": "true" if config.diagnostics_on else "false",
            "diag_stride": str(config.diag_stride),
            "entropy_points": str(config.entropy_points),
            "strict": "true" if config.strict else "false",
        },
    }


def config_to_text(config: RunConfig) -> str:
    return sections_to_text(config_to_sections(config))
