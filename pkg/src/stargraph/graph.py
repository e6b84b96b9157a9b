"""Discretized star graphs and complex fields living on them.

A star graph with ``n`` half-line edges is truncated to ``n`` copies of
``[0, L]`` that share one uniform grid ``x_k = k*h``, ``h = L/m``.  Edge
``j`` is row ``j`` of every value array; column 0 is the vertex and column
``m`` the far wall, where fields are expected to vanish.
"""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    GraphMismatch,
    InvalidExponent,
    InvalidParameter,
    ShapeMismatch,
    UnknownPreset,
)

MIN_POINTS = 8


@dataclass(frozen=True)
class StarGraph:
    """``n_edges`` truncated half-lines of length ``edge_length``."""

    n_edges: int
    edge_length: float
    points_per_edge: int

    def __post_init__(self):
        if int(self.n_edges) != self.n_edges or self.n_edges < 2:
            raise InvalidParameter(f"need at least 2 edges, got {self.n_edges}")
        if not (math.isfinite(self.edge_length) and self.edge_length > 0):
            raise InvalidParameter(f"edge length must be positive, got {self.edge_length}")
        if int(self.points_per_edge) != self.points_per_edge or self.points_per_edge < MIN_POINTS:
            raise InvalidParameter(
                f"points_per_edge must be an integer >= {MIN_POINTS}, got {self.points_per_edge}"
            )
        object.__setattr__(self, "n_edges", int(self.n_edges))
        object.__setattr__(self, "points_per_edge", int(self.points_per_edge))
        object.__setattr__(self, "edge_length", float(self.edge_length))

    @property
    def spacing(self) -> float:
        return self.edge_length / self.points_per_edge

    @property
    def nodes(self) -> np.ndarray:
        """Grid nodes ``k*h`` for ``k = 0..m`` (shared by all edges)."""
        return np.arange(self.points_per_edge + 1) * self.spacing

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_edges, self.points_per_edge + 1)

    def weights(self) -> np.ndarray:
        """Trapezoidal quadrature weights on one edge."""
        w = np.full(self.points_per_edge + 1, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return w

    def dual(self) -> "StarGraph":
        """Frequency grid ``xi_q = q*pi/L`` of the discrete sine transform."""
        m = self.points_per_edge
        return StarGraph(self.n_edges, math.pi * m / self.edge_length, m)

    def rescaled(self, factor: float) -> "StarGraph":
        """Same node count, edge length multiplied by ``factor``."""
        return StarGraph(self.n_edges, self.edge_length * factor, self.points_per_edge)

    def same_grid(self, other: "StarGraph", rtol: float = 1e-12) -> bool:
        return (
            self.n_edges == other.n_edges
            and self.points_per_edge == other.points_per_edge
            and math.isclose(self.edge_length, other.edge_length, rel_tol=rtol)
        )

    def zeros(self) -> "GraphFunction":
        return GraphFunction(self, np.zeros(self.shape, dtype=complex))

    def from_profile(self, profile, edges=None) -> "GraphFunction":
        """Evaluate a callable ``profile(x)`` on the selected edges."""
        values = np.zeros(self.shape, dtype=complex)
        x = self.nodes
        for j in _edge_list(self, edges):
            values[j] = profile(x)
        return GraphFunction(self, values)


def build_graph(n: int, L: float, m: int) -> StarGraph:
    return StarGraph(n, L, m)


@dataclass(frozen=True, eq=False)
class GraphFunction:
    """Complex samples ``values[j, k] ~ f_j(x_k)``; immutable."""

    graph: StarGraph
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=complex, copy=True)
        if values.shape != self.graph.shape:
            raise ShapeMismatch(f"values have shape {values.shape}, graph needs {self.graph.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidParameter("graph function contains non-finite entries")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    # arithmetic keeps the graph and returns new objects
    def _other(self, other):
        if isinstance(other, GraphFunction):
            _check_same(self, other)
            return other.values
        return other

    def __add__(self, other):
        return GraphFunction(self.graph, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GraphFunction(self.graph, self.values - self._other(other))

    def __rsub__(self, other):
        return GraphFunction(self.graph, self._other(other) - self.values)

    def __mul__(self, other):
        return GraphFunction(self.graph, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GraphFunction(self.graph, self.values / self._other(other))

    def __neg__(self):
        return GraphFunction(self.graph, -self.values)

    def conj(self) -> "GraphFunction":
        return GraphFunction(self.graph, self.values.conj())

    def edge(self, j: int) -> np.ndarray:
        return self.values[j]

    def only_edge(self, j: int) -> "GraphFunction":
        """Copy of ``self`` with every edge but ``j`` set to zero."""
        out = np.zeros_like(self.values)
        out[j] = self.values[j]
        return GraphFunction(self.graph, out)

    @property
    def vertex_values(self) -> np.ndarray:
        return self.values[:, 0]

    def norm(self) -> float:
        return lp_norm(self, 2)


def _check_same(f: GraphFunction, g: GraphFunction):
    if not f.graph.same_grid(g.graph):
        raise GraphMismatch(f"functions live on different graphs: {f.graph} vs {g.graph}")


def _edge_list(graph: StarGraph, edges) -> list[int]:
    if edges is None or edges == "all":
        return list(range(graph.n_edges))
    if isinstance(edges, (int, np.integer)):
        edges = [int(edges)]
    out = [int(j) for j in edges]
    for j in out:
        if not 0 <= j < graph.n_edges:
            raise InvalidParameter(f"edge index {j} out of range for {graph.n_edges} edges")
    return out


def edge_inner_product(f: GraphFunction, g: GraphFunction, j: int) -> complex:
    """``<f, g>_j = int f_j conj(g_j) dx`` by the trapezoidal rule."""
    _check_same(f, g)
    w = f.graph.weights()
    return complex(np.sum(w * f.values[j] * np.conj(g.values[j])))


def inner_product(f: GraphFunction, g: GraphFunction) -> complex:
    _check_same(f, g)
    w = f.graph.weights()
    return complex(np.sum(w * f.values * np.conj(g.values)))


def edge_norms(f: GraphFunction) -> np.ndarray:
    """``||f_j||_{L^2(e_j)}`` for every edge."""
    w = f.graph.weights()
    return np.sqrt(np.sum(w * np.abs(f.values) ** 2, axis=1))


def _parse_exponent(p) -> float:
    if isinstance(p, str):
        if p.lower() in ("inf", "infinity", "oo"):
            return math.inf
        p = float(p)
    p = float(p)
    if math.isnan(p) or p < 1:
        raise InvalidExponent(f"L^p exponent must satisfy p >= 1, got {p}")
    return p


def edge_lp_norms(values: np.ndarray, weights: np.ndarray, p) -> np.ndarray:
    """Per-row ``L^p`` norms of a sampled array for trapezoid ``weights``."""
    p = _parse_exponent(p)
    a = np.abs(values)
    if math.isinf(p):
        return a.max(axis=-1)
    return np.sum(weights * a**p, axis=-1) ** (1.0 / p)


def lp_norm(f: GraphFunction, p) -> float:
    """``L^p(G)`` norm: l^p-sum of edge norms, or the sup over edges."""
    p = _parse_exponent(p)
    per_edge = edge_lp_norms(f.values, f.graph.weights(), p)
    if math.isinf(p):
        return float(per_edge.max())
    return float(np.sum(per_edge**p) ** (1.0 / p))


def h1_seminorm(f: GraphFunction) -> float:
    """Forward-difference ``(sum_j int |f_j'|^2)^(1/2)``."""
    h = f.graph.spacing
    d = np.diff(f.values, axis=1)
    return float(np.sqrt(np.sum(np.abs(d) ** 2) / h))


def h1_norm(f: GraphFunction) -> float:
    return math.hypot(lp_norm(f, 2), h1_seminorm(f))


# ---------------------------------------------------------------- presets

def _gaussian(x, center, width):
    return np.exp(-((x - center) ** 2) / (2.0 * width**2))


def _preset_zero(graph, **_):
    return np.zeros(graph.shape, dtype=complex)


def _preset_gaussian_bump(graph, center=10.0, width=2.0, edges=None, phase_velocity=0.0,
                          amplitude=1.0, dirichlet=False):
    if width <= 0:
        raise InvalidParameter("gaussian-bump width must be positive")
    x = graph.nodes
    profile = _gaussian(x, center, width) * np.exp(1j * phase_velocity * x)
    if dirichlet:
        # odd reflection through the vertex
        profile = profile - _gaussian(-x, center, width) * np.exp(-1j * phase_velocity * x)
    values = np.zeros(graph.shape, dtype=complex)
    for j in _edge_list(graph, edges):
        values[j] = amplitude * profile
    return values


def _preset_mexican_hat(graph, center=0.0, width=3.0, edges=None, phase_velocity=0.0, amplitude=1.0):
    # zero integral about its center; with center 0 it is smooth under even reflection
    if width <= 0:
        raise InvalidParameter("mexican-hat width must be positive")
    x = graph.nodes
    s = (x - center) / width
    profile = (1.0 - s**2) * np.exp(-0.5 * s**2 + 1j * phase_velocity * x)
    values = np.zeros(graph.shape, dtype=complex)
    for j in _edge_list(graph, edges):
        values[j] = amplitude * profile
    return values


def _preset_exponential_decay(graph, rate=1.0, edges=None, amplitude=1.0, dirichlet=False):
    if rate <= 0:
        raise InvalidParameter("exponential-decay rate must be positive")
    x = graph.nodes
    profile = np.exp(-rate * x)
    if dirichlet:
        profile = profile - np.exp(-2.0 * rate * x)
    values = np.zeros(graph.shape, dtype=complex)
    for j in _edge_list(graph, edges):
        values[j] = amplitude * profile
    return values


def _preset_symmetric_copy(graph, profile=None, dirichlet=False, tol=1e-10, **_):
    if profile is None:
        raise InvalidParameter("symmetric-copy needs a profile")
    x = graph.nodes
    half = np.asarray(profile(x) if callable(profile) else profile, dtype=complex)
    if half.shape != x.shape:
        raise ShapeMismatch(f"profile has {half.shape[0]} samples, grid has {x.size}")
    if dirichlet and abs(half[0]) > tol * max(np.abs(half).max(), 1.0):
        raise InvalidParameter("symmetric-copy profile does not vanish at the vertex")
    return np.tile(half, (graph.n_edges, 1))


PRESETS = {
    "zero": _preset_zero,
    "gaussian-bump": _preset_gaussian_bump,
    "mexican-hat": _preset_mexican_hat,
    "exponential-decay": _preset_exponential_decay,
    "symmetric-copy": _preset_symmetric_copy,
}


def sample_function(graph: StarGraph, preset, **params) -> GraphFunction:
    """Build deterministic initial data from a named preset.

    ``preset`` is a preset name, or a mapping with a ``kind`` key plus the
    preset parameters (the form used in experiment configs).  With
    ``dirichlet=True`` every preset vanishes at the vertex.
    """
    if isinstance(preset, Mapping):
        params = {**{k: v for k, v in preset.items() if k != "kind"}, **params}
        preset = preset.get("kind")
    try:
        builder = PRESETS[preset]
    except KeyError:
        raise UnknownPreset(f"unknown preset {preset!r}; known: {sorted(PRESETS)}") from None
    params = {k.replace("-", "_"): v for k, v in params.items()}
    return GraphFunction(graph, builder(graph, **params))


# --------------------------------------------------------- serialization

_HEADER_KEYS = ("n_edges", "edge_length", "points_per_edge")


def write_graph_function(f: GraphFunction, target) -> None:
    """Write columns ``edge_index x re im`` with 17 significant digits.

    The single header line also records the graph so the reader does not
    have to infer ``L`` from rounded node positions.
    """
    g = f.graph
    lines = [
        "# edge_index x re im | "
        f"n_edges={g.n_edges} edge_length={g.edge_length!r} points_per_edge={g.points_per_edge}"
    ]
    x = g.nodes
    for j in range(g.n_edges):
        row = f.values[j]
        lines.extend(
            f"{j} {xk:.17g} {v.real:.17g} {v.imag:.17g}" for xk, v in zip(x, row)
        )
    text = "\n".join(lines) + "\n"
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w") as fh:
            fh.write(text)
    else:
        target.write(text)


def read_graph_function(source) -> GraphFunction:
    if isinstance(source, (str, os.PathLike)):
        with open(source) as fh:
            text = fh.read()
    else:
        text = source.read()
    header, _, body = text.partition("\n")
    if not header.startswith("#") or "|" not in header:
        raise InvalidParameter("missing graph-function header line")
    meta = dict(item.split("=") for item in header.split("|", 1)[1].split())
    missing = [k for k in _HEADER_KEYS if k not in meta]
    if missing:
        raise InvalidParameter(f"header lacks {missing}")
    graph = StarGraph(int(meta["n_edges"]), float(meta["edge_length"]), int(meta["points_per_edge"]))
    data = np.loadtxt(io.StringIO(body), ndmin=2)
    if data.shape != (graph.n_edges * (graph.points_per_edge + 1), 4):
        raise ShapeMismatch(f"body has shape {data.shape}, expected rows for {graph}")
    edge = data[:, 0].astype(int)
    values = np.zeros(graph.shape, dtype=complex)
    for j in range(graph.n_edges):
        rows = data[edge == j]
        values[j] = rows[:, 2] + 1j * rows[:, 3]
    return GraphFunction(graph, values)


def stack(functions: Iterable[GraphFunction]) -> np.ndarray:
    """Values of several functions on one graph as a ``(T, n, m+1)`` array."""
    functions = list(functions)
    for f in functions[1:]:
        _check_same(functions[0], f)
    return np.stack([f.values for f in functions])
