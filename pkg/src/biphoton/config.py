"""Run configuration: JSON loading, full validation and serialisation helpers."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .multiplex import Evaluator, GeometryFamily, GeometrySpec, ShiftSet
from .params import RB85_MASS, RB87_MASS, PhysicalParams
from .schmidt import FrequencyGrid
from .spectral import DEFAULT_QUAD_NODES, PropagationScheme

UNITS = {"frequency": "gamma3", "time": "1/gamma3", "entropy": "bits"}

_SECTIONS = ("physical_params", "geometry", "grid", "options")
_OPTION_DEFAULTS = {"evaluator": "closed", "quad_nodes": DEFAULT_QUAD_NODES, "scheme": "co"}
_GRID_DEFAULTS = {"half_width": 400.0, "n_points": 512}


class ConfigError(ValueError):
    """Collects every problem found in a configuration.

    Attributes:
        errors: list of ``(path, reason)`` pairs, e.g.
            ``("physical_params.temperature", "must be finite and > 0")``.
    """

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = errors
        super().__init__("; ".join(f"{p}: {r}" for p, r in errors))


@dataclass(frozen=True)
class RunConfig:
    physical_params: PhysicalParams = field(default_factory=PhysicalParams)
    geometry: GeometrySpec = field(default_factory=GeometrySpec)
    grid: FrequencyGrid = field(default_factory=lambda: FrequencyGrid(400.0, 512))
    evaluator: Evaluator = Evaluator.CLOSED
    quad_nodes: int = DEFAULT_QUAD_NODES
    scheme: PropagationScheme = PropagationScheme.CO

    def to_dict(self) -> dict:
        """Fully resolved configuration, suitable for echoing into outputs."""
        return {
            "physical_params": self.physical_params.to_dict(),
            "geometry": self.geometry.to_dict(),
            "grid": {"half_width": float(self.grid.half_width), "n_points": self.grid.n_points},
            "options": {"evaluator": self.evaluator.value, "quad_nodes": self.quad_nodes,
                        "scheme": self.scheme.value},
        }

    def echo(self) -> str:
        return dump_json(self.to_dict())


def species_label(mass: float) -> str:
    for name, ref in (("Rb-87", RB87_MASS), ("Rb-85", RB85_MASS)):
        if math.isclose(mass, ref, rel_tol=1e-9):
            return name
    return "custom"


def _number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _parse_physical(block, errors):
    if not isinstance(block, dict):
        errors.append(("physical_params", "must be an object"))
        return None
    defaults = PhysicalParams().to_dict()
    for key in block:
        if key not in defaults:
            errors.append((f"physical_params.{key}", "unknown field"))
    values = {k: block.get(k, v) for k, v in defaults.items()}
    # Construct without validation to gather every problem at once.
    probe = object.__new__(PhysicalParams)
    for k, v in values.items():
        object.__setattr__(probe, k, v)
    found = probe.problems()
    errors.extend((f"physical_params.{f}", r) for f, r in found)
    return None if found else PhysicalParams(**values)


def _parse_geometry(block, errors):
    if not isinstance(block, dict):
        errors.append(("geometry", "must be an object"))
        return None
    allowed = {"family", "dq", "n_mp", "explicit_shifts"}
    for key in block:
        if key not in allowed:
            errors.append((f"geometry.{key}", "unknown field"))
    try:
        family = GeometryFamily.parse(block.get("family", "anti_correlation"))
    except ValueError as exc:
        errors.append(("geometry.family", str(exc)))
        return None
    dq = block.get("dq", 0.0)
    n_mp = block.get("n_mp", 1)
    explicit = None
    if "explicit_shifts" in block:
        raw = block["explicit_shifts"]
        ok = (isinstance(raw, list) and raw and all(
            isinstance(p, (list, tuple)) and len(p) == 2 and all(_number(v) and math.isfinite(v) for v in p)
            for p in raw))
        if ok:
            explicit = ShiftSet.from_pairs(raw)
        else:
            errors.append(("geometry.explicit_shifts", "must be a non-empty list of finite [s, i] pairs"))
            return None
        if family is GeometryFamily.EXPLICIT and "n_mp" not in block:
            n_mp = explicit.n_mp
    probe = object.__new__(GeometrySpec)
    for k, v in dict(family=family, dq=dq, n_mp=n_mp, explicit_shifts=explicit).items():
        object.__setattr__(probe, k, v)
    found = [] if _number(dq) else [("dq", f"must be a number, got {dq!r}")]
    if not found:
        found = probe.problems()
    if (family is GeometryFamily.EXPLICIT and explicit is not None and isinstance(n_mp, int)
            and n_mp != explicit.n_mp):
        found.append(("n_mp", f"explicit_shifts has {explicit.n_mp} entries, n_mp is {n_mp}"))
    errors.extend((f"geometry.{f}", r) for f, r in found)
    return None if found else GeometrySpec(family, float(dq), n_mp, explicit)


def _parse_grid(block, errors):
    if not isinstance(block, dict):
        errors.append(("grid", "must be an object"))
        return None
    values = {**_GRID_DEFAULTS, **block}
    found = []
    for key in block:
        if key not in _GRID_DEFAULTS:
            found.append((f"grid.{key}", "unknown field"))
    hw, n = values["half_width"], values["n_points"]
    if not (_number(hw) and math.isfinite(hw) and hw > 0):
        found.append(("grid.half_width", f"must be > 0, got {hw!r}"))
    if not (isinstance(n, int) and not isinstance(n, bool) and n >= 64):
        found.append(("grid.n_points", f"must be an integer >= 64, got {n!r}"))
    errors.extend(found)
    return None if found else FrequencyGrid(float(hw), n)


def _parse_options(block, errors):
    if not isinstance(block, dict):
        errors.append(("options", "must be an object"))
        return None
    values = {**_OPTION_DEFAULTS, **block}
    out = {}
    for key in block:
        if key not in _OPTION_DEFAULTS:
            errors.append((f"options.{key}", "unknown field"))
    try:
        out["evaluator"] = Evaluator.parse(values["evaluator"])
    except ValueError:
        errors.append(("options.evaluator", f"must be 'closed' or 'quad', got {values['evaluator']!r}"))
    try:
        out["scheme"] = PropagationScheme.parse(values["scheme"])
    except ValueError:
        errors.append(("options.scheme", f"must be 'co' or 'counter', got {values['scheme']!r}"))
    nodes = values["quad_nodes"]
    if isinstance(nodes, int) and not isinstance(nodes, bool) and nodes >= 16:
        out["quad_nodes"] = nodes
    else:
        errors.append(("options.quad_nodes", f"must be an integer >= 16, got {nodes!r}"))
    if (out.get("evaluator") is Evaluator.CLOSED and out.get("scheme") is PropagationScheme.COUNTER):
        errors.append(("options.scheme", "counter-propagating excitation needs evaluator 'quad'"))
    return out


def parse_config(data: Any) -> RunConfig:
    """Validate a decoded JSON document, reporting every error together.

    Raises:
        ConfigError: listing each invalid field by its dotted path.
    """
    if not isinstance(data, dict):
        raise ConfigError([("", "configuration must be a JSON object")])
    errors: list[tuple[str, str]] = []
    for key in data:
        if key not in _SECTIONS:
            errors.append((key, "unknown section"))
    pp = _parse_physical(data.get("physical_params", {}), errors)
    geom = _parse_geometry(data.get("geometry", {}), errors)
    grid = _parse_grid(data.get("grid", {}), errors)
    opts = _parse_options(data.get("options", {}), errors)
    if errors:
        raise ConfigError(errors)
    return RunConfig(pp, geom, grid, opts["evaluator"], opts["quad_nodes"], opts["scheme"])


def validate_config(path: str | os.PathLike) -> RunConfig:
    """Load and validate a JSON configuration file.

    Raises:
        ConfigError: on invalid JSON or invalid fields.
        OSError: if the file cannot be read.
    """
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([("", f"invalid JSON: {exc}")]) from None
    return parse_config(data)


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def write_text(path: str | os.PathLike, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def config_comments(config: dict) -> list[str]:
    """Header lines embedding the resolved configuration in CSV outputs."""
    return [f"units: {json.dumps(UNITS, sort_keys=True)}",
            f"config: {json.dumps(config, sort_keys=True)}"]


def read_csv_config(path: str | os.PathLike) -> dict:
    """Recover the configuration embedded by :func:`config_comments`."""
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            if line.startswith("# config: "):
                return json.loads(line[len("# config: "):])
    raise ValueError(f"{path} has no embedded config")
