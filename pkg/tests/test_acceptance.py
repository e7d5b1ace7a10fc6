"""Acceptance suite: one PASS/FAIL line per criterion.

Each test records its verdict with :func:`record`; the lines are printed
immediately (visible with ``-s``) and again in the terminal summary.
"""

import math

import numpy as np
import pytest

from adiabatic_search.bounds import audit_theorem
from adiabatic_search.dynamics import evolve_reduced, final_fidelity
from adiabatic_search.model import PathSpec, max_ground_energy
from adiabatic_search.oracle import evolve_full, evolve_shifted, verify_degeneracy, verify_reduction
from adiabatic_search.scheduler import LinearRamp, ProblemSpec, scan_alpha, synthesize, t_min

ACCEPTANCE_LINES = []
LIMIT = 1 + math.pi / 2

# gathered across the suite for criterion 9
_DRIFTS = []
_RESIDUALS = []


def record(name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _synth(N, A, eps):
    sched = synthesize(ProblemSpec(PathSpec.quadratic(N, A), eps))
    _RESIDUALS.append(sched.saturation_residual)
    return sched


def _reduced(sched, samples=1000):
    trace = evolve_reduced(sched.spec, sched, samples=samples)
    _DRIFTS.append(trace.max_norm_drift)
    return trace


def test_c1_linear_run_time():
    worst = 0.0
    for N in (2, 101, 10**4, 10**6):
        val = 0.01 * t_min(ProblemSpec(PathSpec.linear(N), 0.01))
        worst = max(worst, abs(val / math.sqrt(N - 1) - 1))
    record("C1 eps*T_min = sqrt(N-1) for A=0", worst <= 1e-6, f"max rel err {worst:.2e} (tol 1e-6)")


def test_c2_constant_time_limit():
    errs = []
    vals = {}
    for N in (10**3, 10**4, 10**5, 10**6):
        vals[N] = 0.01 * t_min(ProblemSpec(PathSpec.quadratic(N, math.sqrt(N)), 0.01))
        errs.append(abs(vals[N] - LIMIT))
    rel = abs(vals[10**5] / LIMIT - 1)
    mono = all(b < a for a, b in zip(errs, errs[1:]))
    record("C2 constant-time limit 1+pi/2", rel <= 0.01 and mono,
           f"N=1e5 value {vals[10**5]:.6f} rel err {rel:.2%} (tol 1%); "
           f"errors {', '.join(f'{e:.4f}' for e in errs)} monotone={mono}")


def test_c3_figure_reproduction():
    eps, N = 0.002, 10**5
    sched = _synth(N, math.sqrt(N), eps)
    trace = _reduced(sched, samples=2000)
    p_min = float(trace.P_minus.min())
    eps_t = eps * trace.t[-1]
    ok = p_min >= 1 - 10 * eps**2 and 2.55 <= eps_t <= 2.59
    record("C3 figure trace N=1e5 eps=0.002", ok,
           f"min P- {p_min:.7f} (>= {1 - 10 * eps**2:.5f}), final eps*t {eps_t:.5f} (in [2.55, 2.59])")


def test_c4_reduction_exact():
    devs = {}
    for A in (0.0, 8.0):
        sched = _synth(64, A, 0.05)
        devs[(A, "saturating")] = verify_reduction(sched.spec, sched, m=17, samples=200)
        devs[(A, "quench")] = verify_reduction(sched.spec.path, LinearRamp(1e-6), m=17, samples=50)
    worst = max(devs.values())
    record("C4 reduced vs full at N=64", worst <= 1e-6, f"max |dP-| {worst:.2e} (tol 1e-6)")


def test_c5_spectrum_structure():
    spread = forbidden = 0.0
    for A in (0.0, 4.0):
        for s in (0.0, 0.2, 0.5, 0.7, 1.0):
            rep = verify_degeneracy(PathSpec.quadratic(16, A), s, m=5)
            spread = max(spread, rep.spread)
            forbidden = max(forbidden, rep.forbidden)
    record("C5 degenerate spectrum at N=16", spread <= 1e-10 and forbidden <= 1e-10,
           f"spread {spread:.1e}, forbidden elements {forbidden:.1e} (tol 1e-10)")


def test_c6_peak_ground_energy():
    _, e_max = max_ground_energy(PathSpec.quadratic(10**4, 100.0))
    rel = abs(e_max / 25.25 - 1)
    record("C6 peak ground energy N=1e4 A=100", rel <= 0.01,
           f"max E- {e_max:.6f} vs 25.25, rel err {rel:.2%} (tol 1%)")


def test_c7_theorem_audit():
    base = _synth(64, 0.0, 0.01)
    reports = {k: audit_theorem(base.spec.path, base.scaled(k) if k != 1 else base)
               for k in (1e-3, 1.0, 10.0)}
    ineq = all(r.pass_time5 for r in reports.values())
    good = reports[1.0]
    detail = "; ".join(f"{k:g}xT_min lhs {r.lhs_sum:.4g} <= rhs {r.rhs:.4g}"
                       for k, r in reports.items())
    record("C7 overlap-sum inequality and action bound", ineq and good.pass_bound,
           f"{detail}; action {good.oracle_action:.4f} >= k*sqrt(N)/4 = {good.bound_rhs:.4f} "
           f"(k_measured {good.k_measured:.6f})")


def test_c8_gauge_shift():
    sched = _synth(64, 8.0, 0.05)
    plain = evolve_full(sched.spec, sched, m=3, samples=200)
    shifted = evolve_shifted(sched.spec, sched, m=3, samples=200)
    phase_err = abs(abs(np.vdot(shifted.final_state, plain.final_state)) - 1)
    trace_err = float(np.max(np.abs(shifted.P_minus - plain.P_minus)))
    record("C8 gauge shift H - E-(t) I", phase_err <= 1e-8 and trace_err <= 1e-8,
           f"| |<a|b>| - 1 | {phase_err:.1e}, max |dP-| {trace_err:.1e} (tol 1e-8)")


def test_c9_property_suites():
    for N, A, eps in ((100, 0.0, 0.01), (1000, math.sqrt(1000), 0.01), (64, 8.0, 0.1),
                      (10**4, 100.0, 0.05)):
        _reduced(_synth(N, A, eps), samples=200)
    ratios = []
    for A in (0.0, 3.0, 100.0):
        path = PathSpec.quadratic(10**4, A)
        vals = [eps * t_min(ProblemSpec(path, eps)) for eps in (0.5, 0.05, 0.001)]
        ratios.append(max(abs(v / vals[0] - 1) for v in vals))
    drift, resid, eps_dep = max(_DRIFTS), max(_RESIDUALS), max(ratios)
    ok = drift <= 1e-9 and resid <= 1e-6 and eps_dep <= 1e-9
    record("C9 property suites", ok,
           f"norm drift {drift:.1e} over {len(_DRIFTS)} runs (tol 1e-9); saturation residual "
           f"{resid:.1e} over {len(_RESIDUALS)} schedules (tol 1e-6); eps-dependence {eps_dep:.1e} (tol 1e-9)")


def test_plateau_alpha_half():
    rows = scan_alpha([10**4, 10**6], [0.5], 0.01)
    rel = abs(rows[1].eps_Tmin / rows[0].eps_Tmin - 1)
    record("Plateau alpha=0.5, N=1e6 vs N=1e4", rel <= 0.05,
           f"{rows[1].eps_Tmin:.5f} vs {rows[0].eps_Tmin:.5f}, rel diff {rel:.2%} (tol 5%)")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
