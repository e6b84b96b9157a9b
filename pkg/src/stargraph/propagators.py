"""Linear Schroedinger propagators ``exp(it Delta_M)`` on the star graph.

Sign convention: ``i u_t + Delta u = 0``, so a Laplacian eigenmode with
``-Delta f = E f`` picks up ``exp(-i E t)``; a bound state of energy
``-kappa^2`` rotates as ``exp(i kappa^2 t)``.

Three backends:

``dirichlet-spectral``
    exact in time; DST-I diagonalizes the Dirichlet problem edge by edge.
``kirchhoff-kernel``
    exact in time; the edge mean evolves as a Neumann half-line problem
    and the deviations from it as Dirichlet problems.  This is the kernel
    ``delta_jl G_t(x-y) + S_jl G_t(x+y)`` with ``S = (2/n)J - I`` written
    in its eigenbasis.
``cn-general``
    Crank-Nicolson for any admissible ``(A, B)``.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.fft
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    BackendMismatch,
    IllPosedVertexElimination,
    InvalidParameter,
    NonHermitianDiscretization,
    NonpositiveTime,
)
from .graph import GraphFunction, StarGraph
from .vertex import VertexCondition, canonical

BACKENDS = ("dirichlet-spectral", "kirchhoff-kernel", "cn-general")
HERMITIAN_TOL = 1e-8
_KERNEL_CHUNK = 256


# ------------------------------------------------------------ spectral steps

def _dirichlet_frequencies(graph: StarGraph) -> np.ndarray:
    return np.arange(1, graph.points_per_edge) * (math.pi / graph.edge_length)


def _neumann_frequencies(graph: StarGraph) -> np.ndarray:
    # cos((q + 1/2) pi x / L): zero slope at the vertex, zero at the wall
    return (np.arange(graph.points_per_edge) + 0.5) * (math.pi / graph.edge_length)


def _dirichlet_step(values: np.ndarray, phase: np.ndarray) -> np.ndarray:
    out = np.zeros(values.shape, dtype=complex)
    c = scipy.fft.dst(values[..., 1:-1], type=1, norm="ortho", axis=-1)
    out[..., 1:-1] = scipy.fft.dst(c * phase, type=1, norm="ortho", axis=-1)
    return out


def _neumann_step(values: np.ndarray, phase: np.ndarray) -> np.ndarray:
    # the trapezoid weight h/2 at the vertex makes z = (psi_0/sqrt2, psi_1, ...)
    # the orthonormal coordinates; DCT-III/II (ortho) is then an exact basis
    z = np.array(values[..., :-1], dtype=complex)
    z[..., 0] /= math.sqrt(2.0)
    a = scipy.fft.dct(z, type=3, norm="ortho", axis=-1)
    z = scipy.fft.dct(a * phase, type=2, norm="ortho", axis=-1)
    z[..., 0] *= math.sqrt(2.0)
    out = np.zeros(values.shape, dtype=complex)
    out[..., :-1] = z
    return out


def dirichlet_propagate(t: float, phi: GraphFunction) -> GraphFunction:
    """``exp(it Delta_D) phi``, exact in time.

    Vertex and wall samples are treated as zero.
    """
    phase = np.exp(-1j * float(t) * _dirichlet_frequencies(phi.graph) ** 2)
    return GraphFunction(phi.graph, _dirichlet_step(phi.values, phase))


def kirchhoff_propagate(t: float, phi: GraphFunction) -> GraphFunction:
    """``exp(it Delta_K) phi``, exact in time."""
    g = phi.graph
    t = float(t)
    mean = phi.values.mean(axis=0)
    dev = phi.values - mean
    out = _dirichlet_step(dev, np.exp(-1j * t * _dirichlet_frequencies(g) ** 2))
    out += _neumann_step(mean, np.exp(-1j * t * _neumann_frequencies(g) ** 2))
    return GraphFunction(g, out)


def image_kernel_propagate(t: float, phi: GraphFunction) -> GraphFunction:
    """Dirichlet propagator by direct quadrature of the method-of-images kernel.

    ``(4 pi i t)^{-1/2} int (e^{i(x-y)^2/4t} - e^{i(x+y)^2/4t}) phi(y) dy``.
    Quadratic cost; meant as an independent oracle, and accurate only while
    ``phi`` and the evolved field stay clear of the far wall.
    """
    t = float(t)
    if t <= 0:
        raise NonpositiveTime(f"image kernel needs t > 0, got {t}")
    g = phi.graph
    x = g.nodes
    wy = g.weights() * phi.values  # (n, m+1)
    pref = 1.0 / np.sqrt(4j * math.pi * t)
    out = np.empty(g.shape, dtype=complex)
    for start in range(0, x.size, _KERNEL_CHUNK):
        xs = x[start:start + _KERNEL_CHUNK, None]
        K = np.exp(1j * (xs - x) ** 2 / (4 * t)) - np.exp(1j * (xs + x) ** 2 / (4 * t))
        out[:, start:start + _KERNEL_CHUNK] = pref * (wy @ K.T)
    return GraphFunction(g, out)


def boundary_flux(phi: GraphFunction, t, j: int):
    """``d/dx (exp(it Delta_D) phi)_j`` at the vertex.

    Evaluates ``2 (4 pi i t)^{-1/2} int e^{i y^2/4t} phi_j'(y) dy`` with a
    second-order finite-difference ``phi'``.  ``t`` may be an array.
    """
    g = phi.graph
    y = g.nodes
    dphi = np.gradient(phi.values[j], g.spacing, edge_order=2)
    wd = g.weights() * dphi
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts <= 0):
        raise NonpositiveTime("boundary flux needs t > 0")
    vals = np.array([
        2.0 / np.sqrt(4j * math.pi * s) * np.sum(np.exp(1j * y * y / (4 * s)) * wd) for s in ts
    ])
    return vals if np.ndim(t) else complex(vals[0])


def derivative_at_vertex(values: np.ndarray, spacing: float) -> np.ndarray:
    """One-sided second-order ``f'(0+)`` for each edge."""
    return (-3.0 * values[..., 0] + 4.0 * values[..., 1] - values[..., 2]) / (2.0 * spacing)


def vertex_residual(vc: VertexCondition, u: GraphFunction) -> float:
    """``||A u(0) + B u'(0+)||`` with a one-sided second-order derivative."""
    du = derivative_at_vertex(u.values, u.graph.spacing)
    return float(np.linalg.norm(vc.A @ u.values[:, 0] + vc.B @ du))


# ---------------------------------------------------------- Crank-Nicolson

class CNOperator:
    """Discrete ``-Delta_M`` in orthonormal coordinates.

    Unknowns are the vertex coordinates ``c`` (``f(0) = V c``) followed by
    the interior nodes ``1..m-1`` of every edge.  The quadratic form
    ``sum_j sum_k |f_{j,k+1} - f_{j,k}|^2 / h + c^* Lam c`` with trapezoid
    mass gives a Hermitian matrix; its interior rows are the centered
    second difference and its vertex rows the centered ghost-point
    elimination of the boundary condition.
    """

    def __init__(self, vc: VertexCondition, graph: StarGraph):
        if vc.n != graph.n_edges:
            raise InvalidParameter(f"vertex condition has n={vc.n}, graph has {graph.n_edges} edges")
        self.vc = vc
        self.graph = graph
        V, Lam = vc.boundary_form()
        if not np.all(np.isfinite(Lam)):
            raise IllPosedVertexElimination("vertex condition has an infinite Robin parameter")
        self.V = V
        self.Lam = Lam
        self.r = V.shape[1]
        n, m, h = graph.n_edges, graph.points_per_edge, graph.spacing
        self.n_interior = m - 1
        self.size = self.r + n * (m - 1)
        self.mass_sqrt = np.concatenate([
            np.full(self.r, math.sqrt(h / 2.0)), np.full(n * (m - 1), math.sqrt(h))
        ])
        self.matrix = self._assemble(n, m, h)
        self._check_hermitian()

    def _index(self, j, k):
        return self.r + j * (self.n_interior) + (k - 1)

    def _assemble(self, n, m, h):
        r = self.r
        rows, cols, data = [], [], []
        # vertex block
        blk = np.eye(r) / h + self.Lam
        for a in range(r):
            for b in range(r):
                if blk[a, b] != 0:
                    rows.append(a); cols.append(b); data.append(blk[a, b])
        # vertex <-> first interior node
        for j in range(n):
            for a in range(r):
                v = self.V[j, a]
                if v != 0:
                    k1 = self._index(j, 1)
                    rows += [a, k1]; cols += [k1, a]
                    data += [-np.conj(v) / h, -v / h]
        # interior second differences
        idx = self.r + np.arange(n * (m - 1))
        rows += list(idx); cols += list(idx); data += [2.0 / h] * idx.size
        for j in range(n):
            e = self._index(j, 1) + np.arange(m - 2)
            rows += list(e) + list(e + 1); cols += list(e + 1) + list(e)
            data += [-1.0 / h] * (2 * e.size)
        K = sp.coo_matrix((np.asarray(data, dtype=complex), (rows, cols)),
                          shape=(self.size, self.size)).tocsc()
        Minv = sp.diags(1.0 / self.mass_sqrt)
        return (Minv @ K @ Minv).tocsc()

    def _check_hermitian(self):
        H = self.matrix
        defect = abs(H - H.conj().T).max()
        scale = abs(H).max()
        if defect > HERMITIAN_TOL * scale:
            raise NonHermitianDiscretization(f"assembled operator has Hermitian defect {defect:.3e}")

    def to_coordinates(self, values: np.ndarray) -> np.ndarray:
        c = self.V.conj().T @ values[:, 0]
        z = np.concatenate([c, values[:, 1:-1].reshape(-1)])
        return self.mass_sqrt * z

    def from_coordinates(self, z: np.ndarray) -> np.ndarray:
        z = z / self.mass_sqrt
        n, m = self.graph.n_edges, self.graph.points_per_edge
        out = np.zeros(self.graph.shape, dtype=complex)
        out[:, 0] = self.V @ z[: self.r]
        out[:, 1:-1] = z[self.r:].reshape(n, m - 1)
        return out


class LinearPropagator:
    """``exp(it Delta_M)`` for a vertex condition on a graph.

    Parameters
    ----------
    vc, graph
        Vertex condition and discretization.
    backend
        One of ``BACKENDS``.  Defaults to the exact kernel for Dirichlet and
        Kirchhoff conditions and to ``cn-general`` otherwise.
    dt
        Crank-Nicolson step (``cn-general`` only).
    """

    def __init__(self, vc: VertexCondition, graph: StarGraph, backend: str | None = None,
                 dt: float | None = None):
        if backend is None:
            backend = {"dirichlet": "dirichlet-spectral",
                       "kirchhoff": "kirchhoff-kernel"}.get(vc.kind, "cn-general")
        if backend not in BACKENDS:
            raise BackendMismatch(f"unknown backend {backend!r}; choose from {BACKENDS}")
        need = {"dirichlet-spectral": "dirichlet", "kirchhoff-kernel": "kirchhoff"}.get(backend)
        if need is not None and not vc.equivalent(canonical(need, vc.n)):
            raise BackendMismatch(f"backend {backend} requires a {need} vertex condition")
        if vc.n != graph.n_edges:
            raise InvalidParameter("vertex condition and graph disagree on the edge count")
        self.vc = vc
        self.graph = graph
        self.backend = backend
        self.dt = None
        self._phases = {}
        self._solvers = {}
        if backend == "cn-general":
            if dt is None or not dt > 0:
                raise InvalidParameter("cn-general needs a positive dt")
            self.dt = float(dt)
            self.operator = CNOperator(vc, graph)

    def __repr__(self):
        return f"LinearPropagator({self.backend}, n={self.graph.n_edges}, dt={self.dt})"

    # -- spectral helpers
    def _spectral_phase(self, t):
        key = float(t)
        ph = self._phases.get(key)
        if ph is None:
            if len(self._phases) > 8:
                self._phases.clear()
            d = np.exp(-1j * key * _dirichlet_frequencies(self.graph) ** 2)
            nm = None
            if self.backend == "kirchhoff-kernel":
                nm = np.exp(-1j * key * _neumann_frequencies(self.graph) ** 2)
            ph = self._phases[key] = (d, nm)
        return ph

    # -- CN helpers
    def _solver(self, step):
        key = float(step)
        lu = self._solvers.get(key)
        if lu is None:
            H = self.operator.matrix
            I = sp.identity(H.shape[0], dtype=complex, format="csc")
            lu = self._solvers[key] = spla.splu((I + 0.5j * key * H).tocsc())
        return lu

    def _cayley(self, z, step):
        return 2.0 * self._solver(step).solve(z) - z

    def apply_values(self, values: np.ndarray, t: float) -> np.ndarray:
        """Array-level ``exp(it Delta_M)``; ``values`` has the graph's shape."""
        t = float(t)
        if self.backend == "dirichlet-spectral":
            return _dirichlet_step(values, self._spectral_phase(t)[0])
        if self.backend == "kirchhoff-kernel":
            d, nm = self._spectral_phase(t)
            mean = values.mean(axis=0)
            return _dirichlet_step(values - mean, d) + _neumann_step(mean, nm)
        z = self.operator.to_coordinates(values)
        for step in self.cn_schedule(t):
            z = self._cayley(z, step)
        return self.operator.from_coordinates(z)

    def cn_schedule(self, t: float) -> list[float]:
        """Steps of size ``dt`` plus one shorter remainder step to land on ``t``."""
        if t == 0:
            return []
        dt = math.copysign(self.dt, t)
        k = int(math.floor(abs(t) / self.dt + 1e-9))
        rem = t - k * dt
        steps = [dt] * k
        if abs(rem) > 1e-12 * max(1.0, abs(t)):
            steps.append(rem)
        return steps

    def apply(self, u: GraphFunction, t: float) -> GraphFunction:
        return GraphFunction(u.graph, self.apply_values(u.values, t))

    def step(self, u: GraphFunction) -> GraphFunction:
        if self.dt is None:
            raise BackendMismatch("step() is defined for the cn-general backend")
        return self.apply(u, self.dt)


def cn_step(prop: LinearPropagator, u: GraphFunction) -> GraphFunction:
    if prop.backend != "cn-general":
        raise BackendMismatch("cn_step requires a cn-general propagator")
    return prop.step(u)


def cn_evolve(prop: LinearPropagator, u: GraphFunction, t: float) -> GraphFunction:
    if prop.backend != "cn-general":
        raise BackendMismatch("cn_evolve requires a cn-general propagator")
    return prop.apply(u, t)
