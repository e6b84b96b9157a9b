"""Experiment configuration files (YAML) and their validation.

A config has a required ``recipe`` key plus optional sections::

    recipe: theorem-2-1
    seed: 0
    output: results/theorem
    graph: {n_edges: 3, edge_length: 400.0, points_per_edge: 16384}
    vertex: {kind: kirchhoff}
    evolution: {p: 0.5, lambda: 1, dt: 0.005, t_end: 150.0}
    initial: {kind: gaussian-bump, center: 10.0, width: 3.0, edges: [0]}
    diagnostics: {...}

Missing sections are filled from the recipe's defaults.  Errors carry the
line number of the offending node.
"""

from __future__ import annotations

import copy
import os
from dataclasses import dataclass, field

import yaml

from .errors import ParseError, PhysicalInconsistency, SchemaViolation
from .nls import MAX_DT
from .propagators import BACKENDS

SECTIONS = ("graph", "vertex", "evolution", "initial", "diagnostics")
OUTPUT_ROOT_ENV = "STARGRAPH_OUTPUT_ROOT"

_NUMBER = (int, float)
_SCHEMA = {
    "graph": {"n_edges": int, "edge_length": _NUMBER, "points_per_edge": int},
    "vertex": {"kind": str, "n": int, "alpha": _NUMBER + (type(None),), "A": list, "B": list},
    "evolution": {"p": _NUMBER, "lambda": int, "dt": _NUMBER, "t_end": _NUMBER,
                  "backend": (str, type(None)), "snapshot_interval": _NUMBER},
}
_TOP = {"recipe": str, "seed": int, "output": str, **{s: dict for s in SECTIONS}}
_VERTEX_KINDS = ("kirchhoff", "delta", "dirichlet", "delta_prime", "custom")


@dataclass
class ExperimentSpec:
    recipe: str
    seed: int = 0
    output: str = "results"
    graph: dict = field(default_factory=dict)
    vertex: dict = field(default_factory=dict)
    evolution: dict = field(default_factory=dict)
    initial: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    source: str | None = None

    def to_dict(self) -> dict:
        return {
            "recipe": self.recipe, "seed": self.seed, "output": self.output,
            **{s: copy.deepcopy(getattr(self, s)) for s in SECTIONS},
        }

    def echo(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True, default_flow_style=False)

    def output_dir(self) -> str:
        root = os.environ.get(OUTPUT_ROOT_ENV)
        if root and not os.path.isabs(self.output):
            return os.path.join(root, self.output)
        return self.output


# ----------------------------------------------------------------- parsing

def _to_python(node, lines, path=()):
    """Convert a composed YAML node, recording each path's line number."""
    lines[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for k, v in node.value:
            key = yaml.safe_load(yaml.serialize(k)) if k.tag != "tag:yaml.org,2002:str" else k.value
            out[key] = _to_python(v, lines, path + (key,))
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_to_python(v, lines, path + (i,)) for i, v in enumerate(node.value)]
    return yaml.safe_load(yaml.serialize(node))


def parse_text(text: str):
    """Parse YAML text to ``(data, line_map)``."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}: " if mark is not None else ""
        raise ParseError(f"{where}{getattr(exc, 'problem', None) or exc}") from None
    if node is None:
        raise ParseError("config file is empty")
    lines = {}
    data = _to_python(node, lines)
    if not isinstance(data, dict):
        raise ParseError("line 1: top level must be a mapping")
    return data, lines


# --------------------------------------------------------------- validation

class _Errors:
    def __init__(self, lines):
        self.lines = lines
        self.schema = []
        self.physics = []

    def _where(self, path):
        while path and path not in self.lines:
            path = path[:-1]
        line = self.lines.get(path)
        name = ".".join(str(p) for p in path) or "<root>"
        return f"line {line}: {name}" if line else name

    def schema_error(self, path, msg):
        self.schema.append(f"{self._where(path)}: {msg}")

    def physics_error(self, path, msg):
        self.physics.append(f"{self._where(path)}: {msg}")


def _check_types(data, schema, path, errs):
    for key, value in data.items():
        if key not in schema:
            errs.schema_error(path + (key,), f"unknown key {key!r}")
            continue
        want = schema[key]
        if not isinstance(value, want) or isinstance(value, bool):
            errs.schema_error(path + (key,), f"expected {_type_name(want)}, got {type(value).__name__}")


def _type_name(t):
    if isinstance(t, tuple):
        return " or ".join(_type_name(x) for x in t)
    return {int: "integer", float: "number", str: "string", dict: "mapping", list: "list",
            type(None): "null"}.get(t, t.__name__)


def _merge(defaults: dict, given: dict) -> dict:
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def build_spec(data: dict, lines: dict | None = None, source: str | None = None) -> ExperimentSpec:
    """Validate parsed config data and fill recipe defaults."""
    from .recipes import RECIPES

    errs = _Errors(lines or {})
    _check_types(data, _TOP, (), errs)
    recipe = data.get("recipe")
    if recipe is None:
        errs.schema_error(("recipe",), "missing required key 'recipe'")
    elif isinstance(recipe, str) and recipe not in RECIPES:
        errs.schema_error(("recipe",), f"unknown recipe {recipe!r}; known: {', '.join(RECIPES)}")
    if errs.schema:
        raise SchemaViolation(errs.schema)

    defaults = RECIPES[recipe].defaults
    merged = {s: _merge(defaults.get(s, {}), data.get(s) or {}) for s in SECTIONS}
    for s in ("graph", "vertex", "evolution"):
        _check_types(data.get(s) or {}, _SCHEMA[s], (s,), errs)
    if errs.schema:
        raise SchemaViolation(errs.schema)

    g, v, ev = merged["graph"], merged["vertex"], merged["evolution"]
    if g:
        if g.get("n_edges", 2) < 2:
            errs.schema_error(("graph", "n_edges"), "need at least 2 edges")
        if not g.get("edge_length", 1.0) > 0:
            errs.schema_error(("graph", "edge_length"), "must be positive")
        if g.get("points_per_edge", 8) < 8:
            errs.schema_error(("graph", "points_per_edge"), "must be at least 8")
    if v:
        kind = str(v.get("kind", "")).replace("-", "_")
        if kind not in _VERTEX_KINDS:
            errs.schema_error(("vertex", "kind"), f"unknown vertex condition {v.get('kind')!r}")
        v["kind"] = kind
    if ev:
        p = ev.get("p", 0.5)
        if not (0 < p <= 4):
            errs.schema_error(("evolution", "p"), f"p must lie in (0, 4], got {p}")
        if ev.get("lambda", 1) not in (-1, 0, 1):
            errs.schema_error(("evolution", "lambda"), "lambda must be +1, -1 or 0")
        if not ev.get("dt", 1e-3) > 0:
            errs.schema_error(("evolution", "dt"), "dt must be positive")
        if not ev.get("t_end", 1.0) > 0:
            errs.schema_error(("evolution", "t_end"), "t_end must be positive")
        if ev.get("backend") not in (None,) + BACKENDS:
            errs.schema_error(("evolution", "backend"), f"backend must be one of {BACKENDS}")
    seed = data.get("seed", 0)
    if seed < 0:
        errs.schema_error(("seed",), "seed must be non-negative")
    if errs.schema:
        raise SchemaViolation(errs.schema)

    _check_physics(merged, errs)
    if errs.physics:
        raise PhysicalInconsistency(errs.physics)
    return ExperimentSpec(recipe=recipe, seed=seed, output=data.get("output", f"results/{recipe}"),
                          source=source, **merged)


def _check_physics(merged, errs):
    g, v, ev = merged["graph"], merged["vertex"], merged["evolution"]
    if v:
        kind = v.get("kind")
        alpha = v.get("alpha")
        if kind == "delta" and (alpha is None or alpha == 0):
            errs.physics_error(("vertex", "alpha"),
                               "the delta condition needs a nonzero coupling alpha (alpha != 0)")
        if kind == "custom" and not ("A" in v and "B" in v):
            errs.physics_error(("vertex",), "custom vertex conditions need matrices A and B")
        n = v.get("n")
        if g and n is not None and n != g.get("n_edges"):
            errs.physics_error(("vertex", "n"), f"vertex condition has n={n} but the graph has "
                                                f"{g.get('n_edges')} edges")
        if kind in ("delta", "delta_prime", "custom") and ev.get("backend") in (
                "dirichlet-spectral", "kirchhoff-kernel"):
            errs.physics_error(("evolution", "backend"), f"backend {ev['backend']} cannot evolve a {kind} condition")
        if ev.get("backend") == "dirichlet-spectral" and kind != "dirichlet":
            errs.physics_error(("evolution", "backend"), "dirichlet-spectral needs vertex kind dirichlet")
        if ev.get("backend") == "kirchhoff-kernel" and kind != "kirchhoff":
            errs.physics_error(("evolution", "backend"), "kirchhoff-kernel needs vertex kind kirchhoff")
    if ev:
        dt, t_end = ev.get("dt"), ev.get("t_end")
        if dt is not None and dt > MAX_DT:
            errs.physics_error(("evolution", "dt"), f"dt={dt} exceeds {MAX_DT}; splitting error "
                                                    "would swamp the requested tolerances")
        if dt and t_end and abs(t_end / dt - round(t_end / dt)) > 1e-6:
            errs.physics_error(("evolution", "t_end"), "t_end must be a multiple of dt")
        si = ev.get("snapshot_interval")
        if dt and si and abs(si / dt - round(si / dt)) > 1e-6:
            errs.physics_error(("evolution", "snapshot_interval"), "snapshot_interval must be a multiple of dt")


def validate_config(path) -> ExperimentSpec:
    """Read and validate a config file; raises a :class:`ConfigError` subclass."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    data, lines = parse_text(text)
    return build_spec(data, lines, source=str(path))


def spec_from_dict(data: dict) -> ExperimentSpec:
    return build_spec(copy.deepcopy(data))

