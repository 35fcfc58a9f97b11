"""Acceptance criteria, one PASS/FAIL line each (printed in the terminal summary).

Tolerances are the ones fixed in the build contract; none are relaxed here.
"""
import math
import subprocess
import sys
import time
import warnings

import numpy as np
import pytest

import bridge_mc
from airypersist import airy1, airy2, persistence as ps
from airypersist.specfun import airy_ai
from conftest import record_criterion

TABLE_TOL = 0.01
DET_TOL, DET_RTOL = 1e-10, 1e-7  # the tolerances every pipeline determinant is requested with


def _line(ok, name, detail):
    record_criterion(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return ok


@pytest.fixture(scope="module")
def table_run():
    """Curves and fits for all 51 thresholds of the published table."""
    out = []
    t0 = time.perf_counter()
    for c, k_ref in ps.reference_table1():
        lo, hi = ps.default_window("airy1", c)
        pts = ps.curve("airy1", c, ps.parse_grid(lo, hi, ps.DEFAULT_STEP), DET_TOL)
        out.append((c, k_ref, ps.fit_exponential(pts, (lo, hi)), pts))
    return out, time.perf_counter() - t0


def test_criterion_1_table(table_run):
    rows, seconds = table_run
    diffs = [(c, abs(f.kappa - k)) for c, k, f, _ in rows]
    worst_c, worst = max(diffs, key=lambda t: t[1])
    bad = [c for c, d in diffs if d > TABLE_TOL]
    ok = len(rows) == 51 and not bad
    _line(ok, "1 reference kappa table (51 thresholds, +-0.01)",
          f"max |kappa - ref| = {worst:.4f} at c={worst_c:+.2f}; {len(bad)} outside tolerance; {seconds:.0f}s")
    assert ok


def test_table_invariants(table_run):
    rows, _ = table_run
    kappas = [f.kappa for _, _, f, _ in rows]
    assert all(a > b for a, b in zip(kappas, kappas[1:]))
    assert max(f.rms_residual for _, _, f, _ in rows) < 0.01


def test_criterion_2_fitted_constants():
    checks = []
    for c, k_ref, c_ref in [(-0.6033, 2.91, 0.370), (0.0, 1.10, 0.733)]:
        f = ps.fit_curve("airy1", c)
        checks.append((c, f, abs(f.kappa - k_ref) <= 0.01 and abs(f.C - c_ref) <= 0.005, k_ref, c_ref))
    ok = all(ch[2] for ch in checks)
    detail = "; ".join(
        f"c={c}: kappa={f.kappa:.4f} (ref {k:.2f}+-0.01), C={f.C:.4f} (ref {C:.3f}+-0.005) window {f.window}"
        f" -> {'ok' if good else 'off'}" for c, f, good, k, C in checks
    )
    _line(ok, "2 fitted constants", detail)
    assert ok


def test_criterion_3_slope():
    s = ps.kappa_slope("airy1", -0.6033, 0.02)
    ok = abs(s + 4.07) <= 0.05
    _line(ok, "3 slope dkappa/dc at -0.6033", f"{s:.4f} (ref -4.07+-0.05)")
    assert ok


def test_criterion_4_one_point_law_airy1():
    parts = []
    for c in (-0.5, 0.0):
        p = airy1.persistence_airy1(c, 0.05).value
        f1 = airy1.f1_determinant(c).value
        parts.append((c, p, f1, abs(p - f1)))
    ok = all(d <= 5e-3 for *_, d in parts)
    _line(ok, "4 |P(A1,c,0.05) - F1(2c)| <= 5e-3",
          "; ".join(f"c={c}: P={p:.6f}, F1={f:.6f}, gap={d:.4f}" for c, p, f, d in parts))
    assert ok


def test_criterion_5_identity():
    g = np.linspace(-2, 2, 5)
    x, y = np.meshgrid(g, g)
    errs = {L: float(np.max(np.abs(airy1.heat_identity_lhs(x, y, L) - airy_ai(x + y)))) for L in (0.25, 1.0, 2.0)}
    ok = max(errs.values()) <= 1e-8
    _line(ok, "5 heat identity on 25 points", ", ".join(f"L={L}: {e:.1e}" for L, e in errs.items()) + " (tol 1e-8)")
    assert ok


def test_criterion_6a_smoothed_kernel_at_zero():
    g = np.linspace(-4, 4, 9)
    x, y = np.meshgrid(g, g)
    err = float(np.max(np.abs(airy2.airy_kernel_smoothed(x, y, 0.0) - airy2.airy_kernel(x, y))))
    ok = err <= 1e-10
    _line(ok, "6a K_Ai,L at L=0 equals K_Ai", f"max deviation {err:.1e} (tol 1e-10)")
    assert ok


def test_criterion_6b_bridge_monte_carlo():
    pts = [(-1.0, -1.0, 0.5), (-0.5, -2.0, 1.0), (-2.0, -1.5, 0.3)]
    parts = []
    for i, (x, z, L) in enumerate(pts):
        est, se = bridge_mc.killed_kernel(x, z, L, n_paths=1_000_000, n_steps=2000, seed=2024 + i)
        spectral = airy2.lambda0(x, z, L)
        parts.append((x, z, L, spectral, est, se, abs(spectral - est) / se))
    ok = all(r <= 3 for *_, r in parts)
    _line(ok, "6b spectral kernel vs bridge Monte Carlo (1e6 paths)",
          "; ".join(f"({x},{z},{L}): {s:.5f} vs {e:.5f}+-{se:.1e} ({r:.1f} se)" for x, z, L, s, e, se, r in parts))
    assert ok


def test_criterion_6c_one_point_law_airy2():
    p = airy2.persistence_airy2(0.0, 0.05).value
    f2 = airy2.f2_determinant(0.0).value
    ok = abs(p - f2) <= 1e-2
    _line(ok, "6c |P(A2,0,0.05) - F2(0)| <= 1e-2", f"P={p:.6f}, F2={f2:.6f}, gap={abs(p - f2):.4f}")
    assert ok


def test_criterion_6d_airy2_kappa_best_effort():
    c = -1.7711
    grid = ps.parse_grid(0.5, 1.5, 0.1)
    pts = ps.curve("airy2", c, grid)
    f = ps.fit_exponential(pts, (0.5, 1.5))
    local = -math.log(pts[-1].p / pts[-2].p) / (pts[-1].L - pts[-2].L)
    ok = 0.8 <= f.kappa <= 1.0
    detail = (f"kappa={f.kappa:.4f} over [0.5, 1.5] (target [0.8, 1.0]); local slope at L=1.5 {local:.3f}; "
              f"best effort, failure downgraded to a warning")
    _line(ok, "6d Airy2 kappa at -1.7711", detail)
    if not ok:
        warnings.warn(f"criterion 6d not met: {detail}")


def _airy1_widened(c, L):
    tm, tp = airy1.default_cutoffs(c, L)
    return airy1.persistence_airy1(c, L, cutoff=(1.25 * tm, 1.25 * tp))


def _airy2_widened(c, L):
    cut = tuple(1.25 * t for t in airy2.default_cutoffs(c, L))
    return airy2.persistence_airy2(c, L, params=airy2.Airy2KernelParams(c, L).widened(1.25), cutoff=cut)


def test_criterion_7_robustness(table_run):
    rows, _ = table_run
    cases = [("airy1", c, pt, _airy1_widened) for c, _, _, pts in rows for pt in pts]
    cases += [("airy2", -1.7711, ps.PersistencePoint(L, r.value, r.error_estimate), _airy2_widened)
              for L in ps.parse_grid(0.5, 1.5, 0.1) for r in [airy2.persistence_airy2(-1.7711, L)]]
    over_req = over_abs = widen_bad = widen_bad_joint = 0
    worst = (0.0, None)
    for process, c, pt, widened in cases:
        over_req += pt.err >= max(DET_TOL, DET_RTOL * pt.p)
        over_abs += pt.err >= DET_TOL
        w = widened(c, pt.L)
        d = abs(w.value - pt.p)
        # a change at rounding level counts as no change
        if d > max(pt.err, 1e-14):
            widen_bad += 1
            ratio = d / max(pt.err, 1e-14)
            if ratio > worst[0]:
                worst = (ratio, f"{process} c={c} L={pt.L}: delta {d:.1e} vs err {pt.err:.1e} (widened run err {w.error_estimate:.1e})")
        widen_bad_joint += d > max(pt.err + w.error_estimate, 1e-14)
    t0 = time.perf_counter()
    res = subprocess.run([sys.executable, "-m", "airypersist.cli", "selftest"], capture_output=True, text=True)
    secs = time.perf_counter() - t0
    lines = res.stdout.strip().splitlines()
    # the two one-point checks are criteria 4 and 6c, judged above on their own
    other_fail = [l for l in lines if l.startswith("FAIL") and "one-point" not in l]
    ok = over_req == 0 and widen_bad == 0 and secs < 600 and not other_fail and len(lines) >= 10
    detail = (f"{len(cases)} determinants: {over_req} above requested tolerance max(1e-10, 1e-7 p) "
              f"({over_abs} above 1e-10 absolute); {widen_bad} move under 25% cutoff widening by more than "
              f"their error estimate ({widen_bad_joint} beyond the sum of both runs' estimates)")
    if worst[1]:
        detail += f", worst {worst[0]:.1f}x at {worst[1]}"
    detail += f"; selftest {secs:.0f}s with {len(other_fail)} invariant failures"
    _line(ok, "7 robustness", detail)
    assert ok
