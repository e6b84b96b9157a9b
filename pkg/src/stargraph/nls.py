"""Strang-split integrator for ``i u_t + Delta_M u + lam |u|^p u = 0``.

The nonlinear substep is solved exactly: ``|u|`` is constant along the
flow of ``i u_t + lam |u|^p u = 0``, so ``u <- exp(i lam |u|^p s) u``.
The linear substep is any :class:`~stargraph.propagators.LinearPropagator`.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import trapezoid

from .errors import (
    EscapeGuardViolation,
    InvalidParameter,
    MissingSnapshot,
    NaNDetected,
    TestFunctionViolatesBoundary,
)
from .graph import GraphFunction, StarGraph, write_graph_function
from .propagators import LinearPropagator
from .vertex import VertexCondition

MAX_DT = 1e-2
MASS_DRIFT_TOL = 1e-6
ESCAPE_TOL = 1e-6
ESCAPE_CELLS = 5
STRICHARTZ_WINDOW = 0.5


def nonlinear_step(u, dt: float, lam: float, p: float):
    """Exact flow of ``i u_t + lam |u|^p u = 0`` over time ``dt``.

    Accepts a :class:`GraphFunction` or a plain array.
    """
    if not p > 0:
        raise InvalidParameter(f"nonlinearity exponent must be positive, got {p}")
    vals = u.values if isinstance(u, GraphFunction) else np.asarray(u)
    out = vals * np.exp((1j * lam * dt) * np.abs(vals) ** p)
    return GraphFunction(u.graph, out) if isinstance(u, GraphFunction) else out


def admissible_pair_check(q, r) -> bool:
    """``2/q = 1/2 - 1/r`` with ``2 <= q, r <= inf``."""
    def inv(x):
        x = float(x)
        return 0.0 if math.isinf(x) else 1.0 / x

    try:
        q, r = float(q), float(r)
    except (TypeError, ValueError):
        return False
    if not (q >= 2 and r >= 2):
        return False
    return math.isclose(2 * inv(q), 0.5 - inv(r), abs_tol=1e-12)


def tail_fraction(values: np.ndarray, graph: StarGraph, cells: int = ESCAPE_CELLS) -> float:
    """Share of the mass on the last ``cells`` grid cells before the wall."""
    dens = np.abs(values) ** 2 * graph.weights()
    total = dens.sum()
    return 0.0 if total == 0 else float(dens[:, -(cells + 1):].sum() / total)


@dataclass(frozen=True)
class EvolutionConfig:
    """Parameters of one NLS run.

    ``lam = 0`` switches the nonlinearity off.  ``snapshot_times`` defaults
    to every ``snapshot_interval`` time units.  Each entry of
    ``weak_tests`` is a pair ``(phi, j)`` whose weak-formulation terms are
    accumulated at every step.  ``offset_profile`` is carried along for
    diagnostics only; the equation has no offset term.
    """

    vc: VertexCondition
    graph: StarGraph
    p: float = 0.5
    lam: float = 1.0
    dt: float = 5e-3
    t_end: float = 10.0
    backend: str | None = None
    snapshot_times: tuple | None = None
    snapshot_interval: float = 0.5
    offset_profile: GraphFunction | None = None
    weak_tests: tuple = ()
    escape_tol: float = ESCAPE_TOL
    strichartz_window: float = STRICHARTZ_WINDOW

    def __post_init__(self):
        if not (0 < self.p <= 4):
            raise InvalidParameter(f"p must lie in (0, 4], got {self.p}")
        if self.lam not in (-1, 0, 1):
            raise InvalidParameter(f"lam must be +1, -1 or 0, got {self.lam}")
        if not (0 < self.dt <= MAX_DT):
            raise InvalidParameter(f"dt must lie in (0, {MAX_DT}], got {self.dt}")
        if not self.t_end > 0:
            raise InvalidParameter("t_end must be positive")
        if self.vc.n != self.graph.n_edges:
            raise InvalidParameter("vertex condition and graph disagree on the edge count")
        n_steps = self.t_end / self.dt
        if abs(n_steps - round(n_steps)) > 1e-6:
            raise InvalidParameter("t_end must be a multiple of dt")
        if self.snapshot_times is None:
            k = int(math.floor(self.t_end / self.snapshot_interval + 1e-9))
            times = tuple(i * self.snapshot_interval for i in range(k + 1))
            if not math.isclose(times[-1], self.t_end):
                times = times + (self.t_end,)
            object.__setattr__(self, "snapshot_times", times)
        times = tuple(float(s) for s in self.snapshot_times)
        if any(b <= a for a, b in zip(times, times[1:])):
            raise InvalidParameter("snapshot_times must be strictly increasing")
        if times and (times[0] < 0 or times[-1] > self.t_end * (1 + 1e-12)):
            raise InvalidParameter("snapshot_times must lie in [0, t_end]")
        for s in times:
            if abs(s / self.dt - round(s / self.dt)) > 1e-6:
                raise InvalidParameter(f"snapshot time {s} is not a multiple of dt")
        object.__setattr__(self, "snapshot_times", times)
        if self.offset_profile is not None and not self.offset_profile.graph.same_grid(self.graph):
            raise InvalidParameter("offset profile lives on a different graph")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def to_dict(self) -> dict:
        return {
            "vertex_condition": self.vc.to_dict(),
            "graph": {"n_edges": self.graph.n_edges, "edge_length": self.graph.edge_length,
                      "points_per_edge": self.graph.points_per_edge},
            "p": self.p, "lam": self.lam, "dt": self.dt, "t_end": self.t_end,
            "backend": self.backend, "snapshot_times": list(self.snapshot_times),
            "has_offset_profile": self.offset_profile is not None,
        }


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Result of :func:`evolve`.  Arrays are read-only.

    ``step_times``, ``mass``, ``sup_norm`` and ``vertex_trace`` are sampled
    at every step; ``snapshots`` at ``snapshot_times``.
    """

    config: EvolutionConfig
    snapshot_times: np.ndarray
    snapshots: tuple
    step_times: np.ndarray
    mass: np.ndarray
    sup_norm: np.ndarray
    vertex_trace: np.ndarray
    escape: np.ndarray
    weak_terms: tuple = ()
    valid: bool = True
    message: str = ""

    @property
    def graph(self) -> StarGraph:
        return self.config.graph

    @property
    def initial(self) -> GraphFunction:
        return self.snapshots[0]

    @property
    def final(self) -> GraphFunction:
        return self.snapshots[-1]

    def snapshot(self, t: float, tol: float = 1e-9) -> GraphFunction:
        i = int(np.argmin(np.abs(self.snapshot_times - t))) if len(self.snapshot_times) else -1
        if i < 0 or abs(self.snapshot_times[i] - t) > tol * max(1.0, abs(t)):
            raise MissingSnapshot(f"no snapshot at t={t}")
        return self.snapshots[i]

    def mass_drift(self) -> float:
        m0 = self.mass[0]
        return float(np.max(np.abs(self.mass - m0)) / m0) if m0 > 0 else 0.0

    def strichartz_windows(self, window: float | None = None):
        """``(t0, ||u||_{L^4(t0, t0+T; L^inf)})`` on consecutive windows."""
        T = self.config.strichartz_window if window is None else window
        t = self.step_times
        f = self.sup_norm ** 4
        out = []
        for i in range(int(math.floor(t[-1] / T + 1e-9))):
            start = i * T
            sel = (t >= start - 1e-9) & (t <= start + T + 1e-9)
            out.append((start, float(trapezoid(f[sel], t[sel]) ** 0.25)))
        return np.array(out).reshape(-1, 2)

    def weak_residual_series(self, index: int = 0) -> np.ndarray:
        """``(t, residual)`` at every step for the ``index``-th monitored test."""
        return self.weak_terms[index]["series"]


def _weak_setup(phi: GraphFunction, j: int):
    g = phi.graph
    h = g.spacing
    f = phi.values[j]
    scale = max(np.abs(f).max(), 1e-300)
    if abs(f[0]) > 1e-8 * scale:
        raise TestFunctionViolatesBoundary(f"test function has phi_j(0) = {f[0]:.3e}, expected 0")
    d2 = np.zeros_like(f)
    d2[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / h**2
    d1_0 = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h)
    w = g.weights()
    return {"phi": np.conj(f) * w, "phi2": np.conj(d2) * w, "dphi0": np.conj(d1_0)}


def _weak_integrands(setup, row, lam, p):
    lin = np.dot(row, setup["phi2"])
    nl = lam * np.dot(np.abs(row) ** p * row, setup["phi"]) if lam else 0.0
    bd = row[0] * setup["dphi0"]
    pair = np.dot(row, setup["phi"])
    return pair, lin + bd + nl


def evolve(config: EvolutionConfig, u0: GraphFunction) -> Trajectory:
    """Integrate from ``u0`` to ``config.t_end`` with Strang splitting.

    Raises :class:`EscapeGuardViolation` (mass at the far wall) or
    :class:`NaNDetected`; both carry the partial trajectory.
    """
    if not u0.graph.same_grid(config.graph):
        raise InvalidParameter("initial data lives on a different graph")
    graph = config.graph
    prop = LinearPropagator(config.vc, graph, backend=config.backend, dt=config.dt)
    dt, lam, p = config.dt, config.lam, config.p
    half = 0.5 * dt
    n_steps = config.n_steps
    snap_idx = {int(round(s / dt)): s for s in config.snapshot_times}
    w = graph.weights()

    u = np.array(u0.values)
    mass = np.empty(n_steps + 1)
    sup = np.empty(n_steps + 1)
    trace = np.empty((n_steps + 1, graph.n_edges), dtype=complex)
    snaps_t, snaps = [], []
    escape = []
    weak = [dict(_weak_setup(phi, j), j=j) for phi, j in config.weak_tests]
    for wk in weak:
        wk["pair"] = np.empty(n_steps + 1, dtype=complex)
        wk["rhs"] = np.empty(n_steps + 1, dtype=complex)

    def record(k, u):
        mass[k] = math.sqrt(float(np.sum(np.abs(u) ** 2 * w)))
        sup[k] = float(np.abs(u).max())
        trace[k] = u[:, 0]
        for wk in weak:
            wk["pair"][k], wk["rhs"][k] = _weak_integrands(wk, u[wk["j"]], lam, p)
        if k in snap_idx:
            frac = tail_fraction(u, graph)
            escape.append(frac)
            snaps_t.append(snap_idx[k])
            snaps.append(GraphFunction(graph, u))
            if frac > config.escape_tol:
                raise EscapeGuardViolation(
                    f"{frac:.2e} of the mass reached the far wall at t={snap_idx[k]:g}",
                    trajectory=partial(k),
                )

    def partial(k, message="", valid=False):
        return _make_trajectory(config, snaps_t, snaps, dt, k, mass, sup, trace, escape,
                                weak, valid, message)

    record(0, u)
    for k in range(1, n_steps + 1):
        if lam:
            u = nonlinear_step(u, half, lam, p)
        u = prop.apply_values(u, dt)
        if lam:
            u = nonlinear_step(u, half, lam, p)
        if not np.isfinite(u).all():
            raise NaNDetected(f"non-finite values at step {k}", trajectory=partial(k - 1))
        record(k, u)
    return partial(n_steps, valid=True)


def _make_trajectory(config, snaps_t, snaps, dt, k, mass, sup, trace, escape, weak, valid, message):
    step_times = np.arange(k + 1) * dt
    weak_terms = []
    for wk in weak:
        rhs = wk["rhs"][: k + 1]
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (rhs[1:] + rhs[:-1]) * dt)])
        pair = wk["pair"][: k + 1]
        series = np.abs(1j * (pair - pair[0]) + cum)
        weak_terms.append({"j": wk["j"], "series": _ro(np.column_stack([step_times, series]))})
    return Trajectory(
        config=config,
        snapshot_times=_ro(np.array(snaps_t, dtype=float)),
        snapshots=tuple(snaps),
        step_times=_ro(step_times),
        mass=_ro(mass[: k + 1].copy()),
        sup_norm=_ro(sup[: k + 1].copy()),
        vertex_trace=_ro(trace[: k + 1].copy()),
        escape=_ro(np.array(escape, dtype=float)),
        weak_terms=tuple(weak_terms),
        valid=valid,
        message=message,
    )


def _ro(a):
    a = np.asarray(a)
    a.flags.writeable = False
    return a


def weak_residual(traj: Trajectory, phi: GraphFunction, j: int, tau: float) -> float:
    """Residual of the weak formulation on edge ``j`` over ``[0, tau]``.

    Uses the per-step accumulation when ``(phi, j)`` was monitored during
    :func:`evolve`; otherwise integrates over the snapshots (trapezoid)
    and the per-step vertex trace.
    """
    for (mphi, mj), terms in zip(traj.config.weak_tests, traj.weak_terms):
        if mphi is phi and mj == j:
            t, r = terms["series"].T
            i = int(np.argmin(np.abs(t - tau)))
            if abs(t[i] - tau) > 1e-9 * max(1.0, tau):
                raise MissingSnapshot(f"tau={tau} is not a step time")
            return float(r[i])
    setup = _weak_setup(phi, j)
    lam, p = traj.config.lam, traj.config.p
    ts = traj.snapshot_times
    sel = ts <= tau + 1e-12
    if not np.any(np.isclose(ts[sel], tau)):
        raise MissingSnapshot(f"no snapshot at tau={tau}")
    ts = ts[sel]
    pairs, bulk = [], []
    for s in traj.snapshots[: ts.size]:
        row = s.values[j]
        pairs.append(np.dot(row, setup["phi"]))
        nl = lam * np.dot(np.abs(row) ** p * row, setup["phi"]) if lam else 0.0
        bulk.append(np.dot(row, setup["phi2"]) + nl)
    st = traj.step_times
    ssel = st <= tau + 1e-12
    bd = trapezoid(traj.vertex_trace[ssel, j] * setup["dphi0"], st[ssel])
    total = 1j * (pairs[-1] - pairs[0]) + trapezoid(np.array(bulk), ts) + bd
    return float(abs(total))


def self_convergence_order(config: EvolutionConfig, u0: GraphFunction, t: float | None = None):
    """Temporal order from runs at ``dt``, ``dt/2``, ``dt/4``.

    Returns ``(order, e1, e2)`` with ``e1 = ||u_dt - u_dt/2||`` and
    ``e2 = ||u_dt/2 - u_dt/4||`` at time ``t`` (default ``t_end``).
    """

    t = config.t_end if t is None else t
    finals = []
    for k in range(3):
        cfg = replace(config, dt=config.dt / 2**k, t_end=t, snapshot_times=(0.0, t), weak_tests=())
        finals.append(evolve(cfg, u0).final)
    e1 = (finals[0] - finals[1]).norm()
    e2 = (finals[1] - finals[2]).norm()
    return math.log2(e1 / e2), e1, e2


def export_trajectory(traj: Trajectory, directory) -> None:
    """Write config, snapshots and monitor series to ``directory``."""
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, "config.json"), "w") as fh:
        json.dump(traj.config.to_dict(), fh, indent=2, sort_keys=True)
    snapdir = os.path.join(directory, "snapshots")
    os.makedirs(snapdir, exist_ok=True)
    for t, s in zip(traj.snapshot_times, traj.snapshots):
        write_graph_function(s, os.path.join(snapdir, f"u_t{t:012.6f}.txt"))
    windows = {round(a, 9): b for a, b in traj.strichartz_windows()}
    idx = {round(t / traj.config.dt): i for i, t in enumerate(traj.snapshot_times)}
    weak = traj.weak_terms[0]["series"][:, 1] if traj.weak_terms else None
    with open(os.path.join(directory, "monitors.txt"), "w") as fh:
        fh.write("# t mass strichartz_window escape weak_residual\n")
        for k, t in enumerate(traj.step_times):
            if k not in idx:
                continue
            win = windows.get(round(float(t), 9), float("nan"))
            res = weak[k] if weak is not None else float("nan")
            fh.write(f"{t:.17g} {traj.mass[k]:.17g} {win:.17g} {traj.escape[idx[k]]:.17g} {res:.17g}\n")
