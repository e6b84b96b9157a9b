"""Acceptance suite: one test per criterion, tolerances pinned here.

The measurements come from ``stargraph.recipes``; the thresholds below are
fixed in this file and do not read recipe defaults or config files.  Each
test records its sub-checks so the terminal summary prints one PASS/FAIL
line per criterion.
"""

import filecmp
import os

import numpy as np
import pytest

from stargraph import build_graph, canonical, sample_function
from stargraph.cli import main
from stargraph.recipes import (
    measure_adversarial,
    measure_boundary_cumulative,
    measure_dollard,
    measure_flux_bound,
    measure_nls,
    measure_pairing,
    measure_propagators,
    measure_pullbacks,
    measure_spectral,
    measure_transforms,
    measure_wave_operator,
)

# criterion 1
S_UNITARY_TOL = 1e-10
KIRCHHOFF_S_TOL = 1e-10
BOUND_KAPPA_TOL = 1e-6
# criterion 2
TRANSFORM_TOL = 1e-10
CLOSED_FORM_TOL = 1e-6
CLOSED_FORM_BAND = 10.0
# criterion 3
ORACLE_TOL = 1e-3
SPECTRAL_UNITARY_TOL = 1e-10
CN_UNITARY_TOL = 1e-8
BOUND_PHASE_TOL = 1e-3
# criterion 4
DOLLARD_TOL = 1e-3
PROFILE_EXPONENT = (-1.2, -0.8)
# criterion 5
CUMULATIVE_EXPONENT_MAX = 0.6
# criterion 6
MASS_DRIFT_TOL = 1e-6
ORDER_RANGE = (1.7, 2.3)
WEAK_ORDER_MIN = 1.0
# criterion 7
DELTA_MATCH_TOL = 1e-6
# criterion 8
HEADLINE_GRAPH = (3, 400.0, 16384)
HEADLINE_INITIAL = dict(kind="mexican-hat", center=0.0, width=3.0)
HEADLINE_DT, HEADLINE_T_END, HEADLINE_P = 5e-3, 150.0, 0.5
AUDIT_AMPLITUDE = 1e-5
PULLBACK_INITIAL = dict(kind="gaussian-bump", center=0.0, width=5.0)
PULLBACK_AMPLITUDE = 0.5
PULLBACK_SCHEDULE = (18.75, 37.5, 75.0, 150.0)
NONLINEAR_EXPONENT = (0.75 - 0.15, 0.75 + 0.15)
BOUNDARY_EXPONENT_MAX = 0.6
PLATEAU_EXPONENT = (-0.1, 0.1)
CONTROL_FACTOR_MIN = 2.0
# criterion 9
WAVE_RELATIVE_TOL = 1e-2
IDENTITY_TOL = 1e-6
BOUND_REMOVED_TOL = 1e-6


@pytest.mark.criterion(1, "spectral suite", 60)
def test_criterion_1_spectral_suite(criterion):
    m = measure_spectral(ns=(2, 3, 5))
    c = criterion.check
    c("conditions failing (A1)/(A2) validation", m["validate_failures"], m["validate_failures"] == 0, "0")
    c("max |S S* - I|", m["unitarity"], m["unitarity"] <= S_UNITARY_TOL, f"<= {S_UNITARY_TOL}")
    c("max |S_D + I|", m["dirichlet_S"], m["dirichlet_S"] == 0.0, "== 0")
    c("max |S_K - ((2/n)J - I)|", m["kirchhoff_S"], m["kirchhoff_S"] <= KIRCHHOFF_S_TOL, f"<= {KIRCHHOFF_S_TOL}")
    c("max |kappa + alpha/n|", m["delta_kappa_error"], m["delta_kappa_error"] <= BOUND_KAPPA_TOL,
      f"<= {BOUND_KAPPA_TOL}")
    c("delta(alpha<0) cases without exactly one state", m["missing_bound_states"],
      m["missing_bound_states"] == 0, "0")
    c("bound states of Kirchhoff/Dirichlet", m["spurious_bound_states"], m["spurious_bound_states"] == 0, "0")
    c("max |rank(G(D)-G(K)) - 1|", m["rank_GD_GK_max_dev"], m["rank_GD_GK_max_dev"] == 0, "0")
    c("max (resolvent rank - n)", m["resolvent_rank_excess"], m["resolvent_rank_excess"] <= 0, "<= 0")
    assert criterion.passed, criterion.failures()


@pytest.mark.criterion(2, "transform suite", 60)
def test_criterion_2_transform_suite(criterion):
    m = measure_transforms(seed=0, n_random=50, band=CLOSED_FORM_BAND)
    c = criterion.check
    c("max |F F f + f| / |f|", m["ff_identity"], m["ff_identity"] <= TRANSFORM_TOL, f"<= {TRANSFORM_TOL}")
    c("max Parseval defect", m["parseval"], m["parseval"] <= TRANSFORM_TOL, f"<= {TRANSFORM_TOL}")
    c("max ||F f||_r / ||f||_r' over r in {2,4,inf}", m["hausdorff_young_ratio"],
      m["hausdorff_young_ratio"] <= 1 + TRANSFORM_TOL, f"<= 1 + {TRANSFORM_TOL}")
    c(f"closed form F(e^-x) error on xi <= {CLOSED_FORM_BAND}", m["closed_form_band"],
      m["closed_form_band"] <= CLOSED_FORM_TOL, f"<= {CLOSED_FORM_TOL}")
    # reported, not asserted: grid-scale frequencies see the O(h^2 xi^3) quadrature error
    c("closed form error over the whole frequency grid (info)", m["closed_form_full"], True, "reported")
    assert criterion.passed, criterion.failures()


@pytest.mark.criterion(3, "propagator oracle triangle", 300)
def test_criterion_3_propagator_triangle(criterion):
    m = measure_propagators(L=100.0, m=4096, dt=1e-3, t_dir=5.0, t_kir=10.0, t_bound=10.0)
    c = criterion.check
    for key in ("spectral_vs_kernel", "spectral_vs_cn", "kernel_vs_cn"):
        c(f"Dirichlet {key.replace('_', ' ')} at t=5", m[key], m[key] < ORACLE_TOL, f"< {ORACLE_TOL}")
    c("Kirchhoff kernel vs CN at t=10", m["kirchhoff_vs_cn"], m["kirchhoff_vs_cn"] < ORACLE_TOL, f"< {ORACLE_TOL}")
    c("spectral norm drift", m["unitarity_spectral"], m["unitarity_spectral"] <= SPECTRAL_UNITARY_TOL,
      f"<= {SPECTRAL_UNITARY_TOL}")
    c("Kirchhoff kernel norm drift", m["unitarity_kernel"], m["unitarity_kernel"] <= SPECTRAL_UNITARY_TOL,
      f"<= {SPECTRAL_UNITARY_TOL}")
    for key in ("unitarity_cn_dirichlet", "unitarity_cn_kirchhoff"):
        c(key.replace("_", " "), m[key], m[key] <= CN_UNITARY_TOL, f"<= {CN_UNITARY_TOL}")
    c("CN bound-state phase error delta(3,-1), t=10", m["bound_phase"], m["bound_phase"] < BOUND_PHASE_TOL,
      f"< {BOUND_PHASE_TOL}")
    assert criterion.passed, criterion.failures()


@pytest.mark.criterion(4, "Dollard factorization", 120)
def test_criterion_4_dollard(criterion):
    m = measure_dollard(L=400.0, m=16384, times=(5.0, 20.0, 80.0),
                        profile_times=(5.0, 10.0, 20.0, 40.0, 80.0))
    c = criterion.check
    for t, e in zip(m["times"], m["factorization_errors"]):
        c(f"||exp(it D)phi - MDFM phi|| at t={t:g}", e, e < DOLLARD_TOL, f"< {DOLLARD_TOL}")
    ex = m["profile_fit"].exponent
    c("profile defect decay exponent over t in [5,80]", ex, PROFILE_EXPONENT[0] <= ex <= PROFILE_EXPONENT[1],
      f"in {PROFILE_EXPONENT}")
    assert criterion.passed, criterion.failures()


@pytest.mark.criterion(5, "boundary flux", 60)
def test_criterion_5_boundary_flux(criterion):
    table = measure_flux_bound(L=400.0, m=4096, times=tuple(2.0**k for k in range(8)))
    cum = measure_boundary_cumulative(L=400.0, m=4096, tau_max=150.0)
    c = criterion.check
    rows_ok = sum(f <= b for _, _, f, b in table["table"])
    c("rows with |w'(t,0)| <= t^-1/2 ||phi'||_1 (5 phi x 8 t)", rows_ok, rows_ok == 40, "40")
    c("max |flux| / bound", table["max_ratio"], table["max_ratio"] <= 1.0, "<= 1")
    ex = cum["fit"].exponent
    c("cumulative boundary exponent over [20,150]", ex, ex <= CUMULATIVE_EXPONENT_MAX,
      f"<= {CUMULATIVE_EXPONENT_MAX}")
    assert criterion.passed, criterion.failures()


@pytest.mark.criterion(6, "NLS solver", 600)
def test_criterion_6_nls(criterion):
    m = measure_nls(L=400.0, m=4096, dt=5e-3, t_end=100.0)
    c = criterion.check
    for (p, lam), d in sorted(m["mass_drift"].items()):
        c(f"relative mass drift p={p:g} lambda={lam:+d} over t=100", d, d < MASS_DRIFT_TOL, f"< {MASS_DRIFT_TOL}")
    c("dt-halving order", m["order"], ORDER_RANGE[0] <= m["order"] <= ORDER_RANGE[1], f"in {ORDER_RANGE}")
    c("weak-formula residuals under (h, dt) refinement", m["weak_residuals"], True, "reported")
    c("min weak-residual refinement order", min(m["weak_orders"]), min(m["weak_orders"]) >= WEAK_ORDER_MIN,
      f">= {WEAK_ORDER_MIN}")
    assert criterion.passed, criterion.failures()


@pytest.mark.criterion(7, "adversarial test function", 60)
def test_criterion_7_adversarial(criterion):
    m = measure_adversarial(seed=0, count=10, p=0.5)
    c = criterion.check
    worst = max(r[4] + r[2] for r in m["rows"])
    c("max (pairing + delta) over 10 samples", worst, m["all_negative"], "<= 0")
    c("min delta", min(r[2] for r in m["rows"]), m["all_delta_positive"], "> 0")
    c("max |delta - defining integral|", m["max_delta_mismatch"], m["max_delta_mismatch"] <= DELTA_MATCH_TOL,
      f"<= {DELTA_MATCH_TOL}")
    assert criterion.passed, criterion.failures()


@pytest.mark.criterion(8, "failure-of-scattering headline", 1800)
def test_criterion_8_headline(criterion):
    g = build_graph(*HEADLINE_GRAPH)
    kir = canonical("kirchhoff", 3)
    c = criterion.check

    u_small = sample_function(g, HEADLINE_INITIAL, amplitude=AUDIT_AMPLITUDE)
    pm = measure_pairing(g, kir, p=HEADLINE_P, lam=1, dt=HEADLINE_DT, t_end=HEADLINE_T_END, initial=u_small)
    a = pm["audit"]
    ex = a.nonlinear_fit.exponent if a.nonlinear_fit else float("nan")
    c("(a) nonlinear cumulative exponent over [20,150]", ex, NONLINEAR_EXPONENT[0] <= ex <= NONLINEAR_EXPONENT[1],
      f"in ({NONLINEAR_EXPONENT[0]:.2f}, {NONLINEAR_EXPONENT[1]:.2f})")
    bx = a.boundary_fit.exponent if a.boundary_fit else float("nan")
    c("(a) boundary cumulative exponent over [20,150]", bx, bx <= BOUNDARY_EXPONENT_MAX,
      f"<= {BOUNDARY_EXPONENT_MAX}")
    c("(a) max |<u,w>| / (||u0|| ||phi||)", float(np.max(np.abs(a.h)) / a.h_bound), a.h_bounded,
      "<= 1 + 1e-6")

    u_big = sample_function(g, PULLBACK_INITIAL, amplitude=PULLBACK_AMPLITUDE)
    lr = measure_pullbacks(g, kir, HEADLINE_P, -1, PULLBACK_AMPLITUDE, PULLBACK_SCHEDULE, HEADLINE_DT,
                           initial=u_big)
    fx = lr["fit"].exponent
    c("(b) p=0.5 pullback defects", lr["defects"], True, "reported")
    floor = [d / (np.sqrt(2.0) * lr["u0_norm"]) for d in lr["defects"]]
    c("(b) p=0.5 defects / (sqrt(2) ||u0||)", floor, True, "reported")
    c("(b) p=0.5 fitted decay exponent", fx, PLATEAU_EXPONENT[0] <= fx <= PLATEAU_EXPONENT[1],
      f"in {PLATEAU_EXPONENT}")
    sr = measure_pullbacks(g, kir, 3.0, -1, PULLBACK_AMPLITUDE, PULLBACK_SCHEDULE, HEADLINE_DT, initial=u_big)
    c("(b) p=3 pullback defects", sr["defects"], True, "reported")
    c("(b) p=3 min decay factor per doubling", min(sr["ratios"]), min(sr["ratios"]) >= CONTROL_FACTOR_MIN,
      f">= {CONTROL_FACTOR_MIN}")
    assert criterion.passed, criterion.failures()


@pytest.mark.criterion(9, "wave operator", 600)
def test_criterion_9_wave_operator(criterion):
    m = measure_wave_operator(L=400.0, m=16384, schedule=(10.0, 20.0, 40.0, 80.0))
    k = m["kirchhoff"]
    c = criterion.check
    c("Kirchhoff Cauchy defects", list(k.cauchy_defects), k.monotone, "strictly decreasing")
    rel = float(k.cauchy_defects[-1] / m["u_plus_norm"])
    c("final defect / ||u+||", rel, rel < WAVE_RELATIVE_TOL, f"< {WAVE_RELATIVE_TOL}")
    c("Dirichlet ||v+ - u+||", m["dirichlet_identity_error"], m["dirichlet_identity_error"] < IDENTITY_TOL,
      f"< {IDENTITY_TOL}")
    v = m["delta"].v_plus.norm()
    c("delta(3,-1) bound state: ||v+||", v, v < BOUND_REMOVED_TOL, f"< {BOUND_REMOVED_TOL}")
    assert criterion.passed, criterion.failures()


def _tree(root):
    out = []
    for d, _, files in os.walk(root):
        out.extend(os.path.relpath(os.path.join(d, f), root) for f in files)
    return sorted(out)


@pytest.mark.criterion(10, "determinism", None)
def test_criterion_10_determinism(criterion, tmp_path):
    c = criterion.check
    configs = {
        "lemma-3-5": "recipe: lemma-3-5\nseed: 7\ndiagnostics: {count: 4}\n",
        "spectral-suite": "recipe: spectral-suite\nseed: 3\n",
        "lemma-3-3": "recipe: lemma-3-3\n",
    }
    for name, text in configs.items():
        cfg = tmp_path / f"{name}.yaml"
        cfg.write_text(text)
        dirs = [tmp_path / f"{name}-{k}" for k in range(2)]
        codes = [main(["run", str(cfg), "-o", str(d)]) for d in dirs]
        files = _tree(dirs[0])
        same = files == _tree(dirs[1]) and all(
            filecmp.cmp(dirs[0] / f, dirs[1] / f, shallow=False) for f in files)
        n_series = sum(f.startswith("series") for f in files)
        c(f"{name}: exit codes", codes, codes[0] == codes[1] == 0, "[0, 0]")
        c(f"{name}: {len(files)} files ({n_series} series) byte-identical", same, same and n_series > 0, "True")
    assert criterion.passed, criterion.failures()
