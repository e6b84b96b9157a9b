"""Measurements of (non-)scattering on the star graph.

Free pullbacks and their Cauchy defects, Dollard profiles, the adversarial
test function whose pairing with the nonlinearity has a fixed sign, the
pairing audit of ``d/dt <u, w>_j`` with ``w = exp(it Delta_D) phi``, and a
numerical wave operator.  Everything here is read-only over trajectories.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import stats
from scipy.integrate import cumulative_trapezoid

from .errors import (
    DomainEscape,
    InsufficientHorizon,
    InvalidParameter,
    SignConstructionFailed,
    ZeroInput,
)
from .graph import GraphFunction, StarGraph, edge_inner_product, edge_norms, write_graph_function
from .nls import Trajectory
from .propagators import LinearPropagator, boundary_flux, dirichlet_propagate, kirchhoff_propagate
from .transforms import (
    SpectralField,
    dilation_inverse,
    multiplier_inverse,
    resample,
    sine_inverse,
    sine_transform,
)
from .vertex import VertexCondition, find_bound_states

MIN_HORIZON = 20.0
FIT_START = 20.0
PROFILE_EPS = 0.05
TRUNCATION = 0.8
MARGIN = 0.25


# ----------------------------------------------------------------- fitting

class PowerFit(NamedTuple):
    exponent: float
    stderr: float
    ci_low: float
    ci_high: float
    prefactor: float
    n_points: int


def fit_power_law(t, y, t_min: float | None = None, t_max: float | None = None,
                  confidence: float = 0.95) -> PowerFit:
    """Least-squares slope of ``log|y|`` against ``log t``."""
    t = np.asarray(t, dtype=float)
    y = np.abs(np.asarray(y))
    sel = (t > 0) & (y > 0) & np.isfinite(y)
    if t_min is not None:
        sel &= t >= t_min - 1e-12
    if t_max is not None:
        sel &= t <= t_max + 1e-12
    if sel.sum() < 3:
        raise InvalidParameter("need at least three positive samples for a power-law fit")
    res = stats.linregress(np.log(t[sel]), np.log(y[sel]))
    q = stats.t.ppf(0.5 + confidence / 2, sel.sum() - 2)
    return PowerFit(float(res.slope), float(res.stderr), float(res.slope - q * res.stderr),
                    float(res.slope + q * res.stderr), float(math.exp(res.intercept)),
                    int(sel.sum()))


# --------------------------------------------------------------- pullbacks

def _free_propagator(which: str):
    if which == "kirchhoff":
        return kirchhoff_propagate
    if which == "dirichlet":
        return dirichlet_propagate
    raise InvalidParameter(f"pullback needs 'kirchhoff' or 'dirichlet', got {which!r}")


def free_pullback_series(traj: Trajectory, which: str, times) -> list:
    """``[(t, V(t), ||V(t) - V(t_prev)||)]`` with ``V(t) = exp(-it Delta)(u(t) - l)``.

    The first defect is ``nan``.
    """
    prop = _free_propagator(which)
    offset = traj.config.offset_profile
    out = []
    prev = None
    for t in times:
        u = traj.snapshot(t)
        if offset is not None:
            u = u - offset
        V = prop(-t, u)
        defect = float("nan") if prev is None else (V - prev).norm()
        out.append((float(t), V, defect))
        prev = V
    return out


def pullback_decay(series) -> PowerFit:
    """Power-law fit of the defects against the later time of each pair."""
    t = [s[0] for s in series[1:]]
    d = [s[2] for s in series[1:]]
    return fit_power_law(t, d)


# ---------------------------------------------------------- Dollard profile

def dollard_profile(u_t: GraphFunction, t: float, target: StarGraph | None = None,
                    outside: str = "raise") -> GraphFunction:
    """``D(t)^{-1} M(t)^{-1} u(t)``, a function of frequency.

    The default ``target`` is the grid of ``u`` shrunk by ``2t`` (frequencies
    up to ``L/2t``), where the dilation needs no interpolation.
    """
    if t < 1:
        raise InvalidParameter(f"Dollard profiles are taken for t >= 1, got {t}")
    return dilation_inverse(t, multiplier_inverse(t, u_t), target=target, outside=outside)


def profile_defect(profile: GraphFunction, spectral: SpectralField) -> float:
    """``L^2`` distance between a profile and a transform on the profile's grid.

    ``spectral`` is resampled onto the profile grid by cubic splines; its
    mass beyond the profile's last frequency is added to the defect.
    """
    F = spectral.as_function()
    grid = profile.graph
    if grid.edge_length > F.graph.edge_length * (1 + 1e-12):
        raise DomainEscape("profile grid extends past the transform's frequency range")
    vals = resample(F, grid, 1.0, outside="raise")
    diff = GraphFunction(grid, profile.values - vals).norm()
    xi = F.graph.nodes
    beyond = xi > grid.edge_length
    tail = float(np.sum(np.abs(F.values[:, beyond]) ** 2 * F.graph.weights()[beyond]))
    return math.sqrt(diff**2 + tail)


def _quasi_norm(values: np.ndarray, weights: np.ndarray, r: float) -> float:
    return float(np.sum(np.abs(values) ** r * weights) ** (1.0 / r))


def nonlinear_profile_series(traj: Trajectory, v_plus: GraphFunction, times,
                             eps: float = PROFILE_EPS) -> np.ndarray:
    """``(t, ||F(u~) - F(Fv+)||_r, ||.||_{r-eps})`` with ``r = 2/(p+1)``.

    Measurement only; nothing is asserted about convergence.
    """
    p, lam = traj.config.p, traj.config.lam
    Fv = sine_transform(v_plus).as_function()
    r = 2.0 / (p + 1.0)
    rows = []
    for t in times:
        prof = dollard_profile(traj.snapshot(t), t)
        ref = resample(Fv, prof.graph, 1.0, outside="zero")
        d = lam * (np.abs(prof.values) ** p * prof.values - np.abs(ref) ** p * ref)
        w = prof.graph.weights()
        rows.append((t, _quasi_norm(d, w, r), _quasi_norm(d, w, r - eps)))
    return np.array(rows)


# ------------------------------------------------ adversarial test function

class AdversarialFunction(NamedTuple):
    phi: GraphFunction
    delta: float
    pairing: float
    rotation: complex
    width: float


def _rotation(V: np.ndarray, tol: float) -> complex:
    for c in (1.0, -1.0, 1j, -1j):
        if np.count_nonzero((np.conj(c) * V).real > tol) >= 2:
            return c
    raise SignConstructionFailed("the transform has no component with a positive real part")


def nonlinear_pairing(v_plus: GraphFunction, phi: GraphFunction, p: float, lam: float, j: int) -> float:
    """``Re <F(F v+), F phi>_j`` on the frequency grid."""
    V = sine_transform(v_plus).coefficients[j]
    P = sine_transform(phi).coefficients[j]
    w = v_plus.graph.dual().weights()
    return float(np.sum(w * lam * np.abs(V) ** p * V * np.conj(P)).real)


def adversarial_test_function(v_plus: GraphFunction, p: float, lam: float, j: int,
                              width: float = 1.0, truncation: float = TRUNCATION,
                              margin: float = MARGIN) -> AdversarialFunction:
    """Test function whose transform pairs negatively with ``F(F v+)`` on edge ``j``.

    With ``V = F v+`` rotated by a unit ``c`` so that ``Re(conj(c) V)`` is
    positive somewhere, ``g = (Re(conj(c) V) v 0)^{1-p}`` and ``F phi = -lam c g``,
    so ``Re <F(V), F phi> = -int |V|^p Re(conj(c) V)_+^{2-p} = -2 delta``.
    ``g`` is cut at ``truncation`` times the top frequency and smoothed by a
    Gaussian of width ``width`` in frequency (a Gaussian envelope in space).
    The width is halved until the pairing is below ``-(1 + margin) delta``.
    """
    if not p > 0 or p >= 2:
        raise InvalidParameter(f"need 0 < p < 2, got {p}")
    if lam not in (-1, 1):
        raise InvalidParameter("lam must be +1 or -1")
    graph = v_plus.graph
    if edge_norms(v_plus)[j] <= 1e-8:
        raise ZeroInput(f"v_plus vanishes on edge {j}")
    V = sine_transform(v_plus).coefficients[j]
    c = _rotation(V, 1e-12 * np.abs(V).max())
    R = (np.conj(c) * V).real
    Rp = np.maximum(R, 0.0)
    dual = graph.dual()
    wxi = dual.weights()
    delta = 0.5 * float(np.sum(wxi * np.abs(V) ** p * R * Rp ** (1 - p)))

    xi = dual.nodes
    g = Rp ** (1 - p)
    g[xi > truncation * dual.edge_length] = 0.0
    g[-1] = 0.0
    G = np.zeros(graph.shape, dtype=complex)
    G[j] = g
    # phi = F^{-1}(-lam c g) = lam c F g, computed on the frequency grid
    base = -lam * c * sine_inverse(SpectralField(graph, G)).values[j]
    x = graph.nodes
    s_min = 7.4 / graph.edge_length
    s = width
    while s >= s_min:
        vals = np.zeros(graph.shape, dtype=complex)
        vals[j] = base * np.exp(-0.5 * (s * x) ** 2)
        vals[j, 0] = vals[j, -1] = 0.0
        phi = GraphFunction(graph, vals)
        pairing = nonlinear_pairing(v_plus, phi, p, lam, j)
        if -pairing - delta >= margin * delta:
            return AdversarialFunction(phi, delta, pairing, c, s)
        s /= 2
    raise SignConstructionFailed(
        f"pairing {pairing:.3e} did not reach -(1+{margin}) delta = {-(1 + margin) * delta:.3e}"
    )


# --------------------------------------------------------------- the audit

@dataclass(frozen=True, eq=False)
class PairingAudit:
    """Series of the pairing identity on one edge.

    ``times`` are snapshot times in ``[1, tau_max]``; ``step_times`` carry the
    dense boundary series.  ``h = <u, w>_j``, ``g = <F(u), w>_j``,
    ``g_scaled = <F(u~), w~>_j``, ``b = u_j(t, 0) conj(w_j'(t, 0))``.
    """

    j: int
    p: float
    lam: float
    phi: GraphFunction = field(repr=False)
    times: np.ndarray = field(repr=False)
    h: np.ndarray = field(repr=False)
    g: np.ndarray = field(repr=False)
    g_scaled: np.ndarray = field(repr=False)
    step_times: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    boundary_cumulative: np.ndarray = field(repr=False)
    nonlinear_cumulative: np.ndarray = field(repr=False)
    identity_residual: np.ndarray = field(repr=False)
    scaling_defect: np.ndarray = field(repr=False)
    h_bound: float = 0.0
    boundary_fit: PowerFit | None = None
    nonlinear_fit: PowerFit | None = None
    delta: float | None = None

    @property
    def h_bounded(self) -> bool:
        return bool(np.max(np.abs(self.h)) <= self.h_bound * (1 + 1e-6))

    def summary(self) -> dict:
        def fit(f):
            return None if f is None else dict(f._asdict())

        return {
            "edge": self.j, "p": self.p, "lambda": self.lam, "delta": self.delta,
            "tau_max": float(self.times[-1]),
            "max_abs_h": float(np.max(np.abs(self.h))), "h_bound": self.h_bound,
            "h_bounded": self.h_bounded,
            "boundary_fit": fit(self.boundary_fit), "nonlinear_fit": fit(self.nonlinear_fit),
            "max_identity_residual": float(np.max(self.identity_residual)),
            "max_scaling_defect": float(np.max(self.scaling_defect)),
        }


def pairing_audit(traj: Trajectory, phi: GraphFunction, j: int, tau_max: float,
                  delta: float | None = None, fit_start: float = FIT_START) -> PairingAudit:
    """Evaluate the pairing identity for ``w = exp(it Delta_D) phi`` on edge ``j``."""
    if tau_max < MIN_HORIZON:
        raise InsufficientHorizon(f"tau_max={tau_max} < {MIN_HORIZON}; exponent fits need longer runs")
    if tau_max > traj.step_times[-1] + 1e-9:
        raise InsufficientHorizon(f"trajectory ends at {traj.step_times[-1]}, before tau_max={tau_max}")
    p, lam = traj.config.p, traj.config.lam
    only = phi.only_edge(j)

    sel = (traj.snapshot_times >= 1.0 - 1e-12) & (traj.snapshot_times <= tau_max + 1e-12)
    times = traj.snapshot_times[sel]
    snaps = [s for s, k in zip(traj.snapshots, sel) if k]
    h, g, gs, sd = [], [], [], []
    for t, u in zip(times, snaps):
        w = dirichlet_propagate(t, only)
        Fu = GraphFunction(u.graph, lam * np.abs(u.values) ** p * u.values)
        h.append(edge_inner_product(u, w, j))
        g.append(edge_inner_product(Fu, w, j))
        ut = dollard_profile(u, t)
        wt = dollard_profile(w, t)
        Fut = GraphFunction(ut.graph, lam * np.abs(ut.values) ** p * ut.values)
        gs.append(edge_inner_product(Fut, wt, j))
        sd.append(abs(g[-1] - (2 * t) ** (-p / 2) * gs[-1]) / max(abs(gs[-1]), 1e-300))
    h, g, gs = np.array(h), np.array(g), np.array(gs)

    ssel = (traj.step_times >= 1.0 - 1e-12) & (traj.step_times <= tau_max + 1e-12)
    st = traj.step_times[ssel]
    flux = boundary_flux(only, st, j)
    b = traj.vertex_trace[ssel, j] * np.conj(flux)

    B = np.abs(cumulative_trapezoid(b, st, initial=0.0))
    G = cumulative_trapezoid(g, times, initial=0.0).real
    dh = np.gradient(h, times, edge_order=2)
    idx = np.searchsorted(st, times - 1e-9)
    resid = np.abs(1j * dh + b[idx] + g)

    h_bound = traj.initial.norm() * only.norm()
    bfit = _safe_fit(st, B, fit_start, tau_max)
    gfit = _safe_fit(times, G, fit_start, tau_max)
    return PairingAudit(j, p, lam, phi, times, h, g, gs, st, b, B, G, resid, np.array(sd),
                        h_bound, bfit, gfit, delta)


def _safe_fit(t, y, t0, t1):
    try:
        return fit_power_law(t, y, t0, t1)
    except InvalidParameter:
        return None


# ----------------------------------------------------------- wave operator

@dataclass(frozen=True, eq=False)
class WaveOperatorResult:
    v_plus: GraphFunction = field(repr=False)
    schedule: tuple = ()
    cauchy_defects: np.ndarray = field(default=None, repr=False)
    bound_states_removed: tuple = ()
    removed_amplitudes: tuple = ()
    converged: bool = False
    tolerance: float = 1e-2
    reference_norm: float = 0.0

    @property
    def monotone(self) -> bool:
        d = self.cauchy_defects
        return bool(np.all(np.diff(d) < 0))

    def summary(self) -> dict:
        return {
            "schedule": list(self.schedule),
            "cauchy_defects": [float(d) for d in self.cauchy_defects],
            "bound_states": [{"kappa": s.kappa, "amplitude": [a.real, a.imag]}
                             for s, a in zip(self.bound_states_removed, self.removed_amplitudes)],
            "converged": self.converged, "strictly_decreasing": self.monotone,
            "tolerance": self.tolerance, "u_plus_norm": self.reference_norm,
            "v_plus_norm": self.v_plus.norm(),
        }


def project_continuous(vc: VertexCondition, u: GraphFunction):
    """``P_ac u`` by subtracting bound-state components.

    Returns ``(projected, states, amplitudes)``.  Degenerate eigenfunctions
    are orthonormalized in the discrete inner product first.
    """
    states = find_bound_states(vc)
    basis = []
    for s in states:
        f = s.eigenfunction(u.graph)
        for e in basis:
            f = f - e * _ip(f, e)
        basis.append(f / f.norm())
    amps = []
    out = u
    for e in basis:
        a = _ip(u, e)
        amps.append(a)
        out = out - e * a
    return out, tuple(states), tuple(amps)


def _ip(f, g):
    w = f.graph.weights()
    return complex(np.sum(w * f.values * np.conj(g.values)))


def wave_operator(vc: VertexCondition, u_plus: GraphFunction, schedule, backend: str | None = None,
                  dt: float = 1e-3, tolerance: float = 1e-2) -> WaveOperatorResult:
    """``v+ = lim exp(-iT Delta_D) exp(iT Delta_M) P_ac u+`` along ``schedule``.

    Never raises on non-convergence; ``converged`` reports it.
    """
    schedule = tuple(float(t) for t in schedule)
    if len(schedule) < 3 or any(b <= a for a, b in zip(schedule, schedule[1:])) or schedule[0] <= 0:
        raise InvalidParameter("schedule needs at least three increasing positive times")
    pac, states, amps = project_continuous(vc, u_plus)
    prop = LinearPropagator(vc, u_plus.graph, backend=backend, dt=dt)
    vals = pac.values
    now = 0.0
    pulls = []
    for T in schedule:
        vals = prop.apply_values(vals, T - now)
        now = T
        pulls.append(dirichlet_propagate(-T, GraphFunction(u_plus.graph, vals)))
    defects = np.array([(b - a).norm() for a, b in zip(pulls, pulls[1:])])
    ref = u_plus.norm()
    converged = bool(defects[-1] < tolerance * max(ref, 1e-300)) if ref > 0 else True
    return WaveOperatorResult(pulls[-1], schedule, defects, states, amps, converged, tolerance, ref)


# ----------------------------------------------------------------- export

def _write_columns(path, header, columns):
    with open(path, "w") as fh:
        fh.write("# " + " ".join(header) + "\n")
        for row in zip(*columns):
            fh.write(" ".join(f"{float(v):.17g}" for v in row) + "\n")


def export_audit(audit: PairingAudit, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    _write_columns(
        os.path.join(directory, "pairing.txt"),
        ["t", "re_h", "im_h", "re_g", "im_g", "re_g_scaled", "im_g_scaled",
         "nonlinear_cumulative", "identity_residual", "scaling_defect"],
        [audit.times, audit.h.real, audit.h.imag, audit.g.real, audit.g.imag,
         audit.g_scaled.real, audit.g_scaled.imag, audit.nonlinear_cumulative,
         audit.identity_residual, audit.scaling_defect],
    )
    _write_columns(
        os.path.join(directory, "boundary.txt"),
        ["t", "re_b", "im_b", "boundary_cumulative"],
        [audit.step_times, audit.b.real, audit.b.imag, audit.boundary_cumulative],
    )
    with open(os.path.join(directory, "audit_summary.json"), "w") as fh:
        json.dump(audit.summary(), fh, indent=2, sort_keys=True)


def export_wave_operator(result: WaveOperatorResult, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    _write_columns(os.path.join(directory, "cauchy_defects.txt"), ["T", "defect"],
                   [result.schedule[1:], result.cauchy_defects])
    write_graph_function(result.v_plus, os.path.join(directory, "v_plus.txt"))
    with open(os.path.join(directory, "wave_operator_summary.json"), "w") as fh:
        json.dump(result.summary(), fh, indent=2, sort_keys=True)
