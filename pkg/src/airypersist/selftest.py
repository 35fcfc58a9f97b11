"""Built-in invariant checks run by ``airy-persist selftest``.

Each check returns (passed, detail).  The one-point checks at L = 0.05
compare against Tracy-Widom values and report the gap even when it exceeds
the target; they are expected to fail by about f(c) 2 sqrt(L / pi).
"""
from __future__ import annotations

import math
import sys
import time

import numpy as np

from . import airy1, airy2, fredholm, persistence, specfun


def _wronskian():
    x = np.linspace(-30, 30, 241)
    ai, aip, bi, bip = specfun.airy(x)
    err = float(np.max(np.abs(ai * bip - aip * bi - 1 / math.pi)))
    return err < 1e-12, f"max |W - 1/pi| = {err:.2e}"


def _gauss_legendre():
    r = specfun.gauss_legendre(20).mapped(0.0, 1.0)
    err = abs(float(r.weights @ r.nodes ** 39) - 1 / 40)
    return err < 1e-15, f"x^39 on [0,1] error {err:.1e}"


def _rank_one_det():
    d = fredholm.fredholm_det(lambda x, y: np.exp(-x - y), fredholm.Domain([(0.0, 1.0)], 20), 1e-12)
    exact = 1 - (1 - math.exp(-2)) / 2
    err = abs(d.value - exact)
    return err < 1e-13, f"det error {err:.1e}"


def _identity():
    g = np.linspace(-2, 2, 5)
    x, y = np.meshgrid(g, g)
    err = max(float(np.max(np.abs(airy1.heat_identity_lhs(x, y, L) - specfun.airy_ai(x + y))))
              for L in (0.25, 1.0, 2.0))
    return err <= 1e-8, f"max deviation {err:.1e} on 25 points, L in (0.25, 1, 2)"


def _airy1_monotone():
    vals = [airy1.persistence_airy1(0.0, L).value for L in (0.5, 1.0, 1.5)]
    f1 = airy1.f1_determinant(0.0).value
    ok = all(0 < v < 1 for v in vals) and vals[0] > vals[1] > vals[2] and vals[0] <= f1
    return ok, f"P(0.5, 1, 1.5) = {', '.join(f'{v:.6f}' for v in vals)}; F1(0) = {f1:.6f}"


def _airy1_conjugation():
    a = airy1.persistence_airy1(0.0, 0.5, params=airy1.Airy1KernelParams(0.0, 0.5, conj_exponent=0.4)).value
    b = airy1.persistence_airy1(0.0, 0.5, params=airy1.Airy1KernelParams(0.0, 0.5, conj_exponent=0.6)).value
    return abs(a - b) < 1e-8, f"|delta| = {abs(a - b):.1e} for conjugation exponent 0.4 vs 0.6"


def _one_point(process):
    out = []
    for c in ((-0.5, 0.0) if process == "airy1" else (0.0,)):
        if process == "airy1":
            p = airy1.persistence_airy1(c, 0.05).value
            f = airy1.f1_determinant(c).value
        else:
            p = airy2.persistence_airy2(c, 0.05).value
            f = airy2.f2_determinant(c).value
        out.append((c, p, f, abs(p - f)))
    target = 5e-3 if process == "airy1" else 1e-2
    ok = all(d <= target for *_, d in out)
    return ok, "; ".join(f"c={c}: P={p:.5f} F={f:.5f} gap={d:.4f} (target {target})" for c, p, f, d in out)


def _smoothed_at_zero():
    g = np.linspace(-3, 3, 7)
    x, y = np.meshgrid(g, g)
    err = float(np.max(np.abs(airy2.airy_kernel_smoothed(x, y, 0.0) - airy2.airy_kernel(x, y))))
    return err <= 1e-10, f"max |K_L=0 - K_Ai| = {err:.1e}"


def _lambda0_props():
    g = np.array([-3.0, -1.5, -0.5, -0.1])
    x, z = np.meshgrid(g, g)
    lam = np.asarray(airy2.lambda0(x, z, 0.7))
    asym = float(np.max(np.abs(lam - lam.T)))
    ok = asym < 1e-10 and float(lam.min()) > -1e-12
    return ok, f"asymmetry {asym:.1e}, min {lam.min():.2e}"


def _airy2_bounds():
    vals = [airy2.persistence_airy2(0.0, L).value for L in (0.5, 1.0)]
    f2 = airy2.f2_determinant(0.0).value
    ok = f2 >= vals[0] > vals[1] > 0
    return ok, f"P(0.5), P(1.0) = {vals[0]:.6f}, {vals[1]:.6f}; F2(0) = {f2:.6f}"


def _cutoff_widening():
    r = airy1.persistence_airy1(0.0, 1.0)
    t = airy1.default_cutoffs(0.0, 1.0)
    w = airy1.persistence_airy1(0.0, 1.0, cutoff=(1.25 * t[0], 1.25 * t[1]))
    d = abs(r.value - w.value)
    return d <= max(r.error_estimate, 1e-10), f"|delta| = {d:.1e}, error estimate {r.error_estimate:.1e}"


def _synthetic_fit():
    pts = [persistence.PersistencePoint(L, 2 * math.exp(-3 * L), 0.0) for L in np.arange(1, 2.01, 0.1)]
    f = persistence.fit_exponential(pts)
    err = max(abs(f.kappa - 3), abs(f.C - 2), f.rms_residual)
    return err < 1e-12, f"kappa={f.kappa:.15f} C={f.C:.15f}"


CHECKS = [
    ("airy functions: Wronskian", _wronskian),
    ("gauss-legendre exactness", _gauss_legendre),
    ("fredholm: rank-one determinant", _rank_one_det),
    ("airy1: heat identity (criterion 5)", _identity),
    ("airy1: bounds and monotonicity", _airy1_monotone),
    ("airy1: conjugation invariance", _airy1_conjugation),
    ("airy1: cutoff widening", _cutoff_widening),
    ("airy1: one-point law at L=0.05 (criterion 4)", lambda: _one_point("airy1")),
    ("airy2: K_L at L=0 (criterion 6a)", _smoothed_at_zero),
    ("airy2: lambda0 symmetric and non-negative", _lambda0_props),
    ("airy2: bounds and monotonicity", _airy2_bounds),
    ("airy2: one-point law at L=0.05 (criterion 6c)", lambda: _one_point("airy2")),
    ("persistence: exact exponential fit", _synthetic_fit),
]


def run(stream=sys.stdout, seed=None):
    """Run every check, print one line each, return True when all pass."""
    all_ok = True
    for name, fn in CHECKS:
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # report and keep going
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok &= ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail} [{time.perf_counter() - t0:.1f}s]", file=stream, flush=True)
    return all_ok
