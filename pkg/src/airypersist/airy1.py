"""Persistence kernel of the Airy1 process and its Fredholm determinant.

For threshold c and length L the persistence probability is det(I - K) on
L^2(R) with

    K(x, y) = Ai(|x| + y + 2c) + 1[x <= 0] (Kt(x, y + 2c) - Kt(-x, y + 2c)),
    Kt(x, y) = (4 pi L)^(-1/2) int_0^inf exp(-(x - z)^2 / 4L) h(y + z) dz,
    h(w) = exp(-2L^3/3 - L w) Ai(w + L^2).

For x <= 0 the difference Ai - Kt loses about e^{L^3/3} to cancellation.  The
determinant instead uses the first-passage form of the same kernel,

    K(x, y) = int_0^L |x| (4 pi s^3)^(-1/2) e^{-x^2/4s} e^{-2s^3/3 - s y'} Ai(y' + s^2) ds,

y' = y + 2c, obtained by splitting heat flow paths from x < 0 at their first
visit to the origin.  It is taken on L^2(-T-, 0) (+) L^2(0, T+), where both
kernel blocks are analytic, after the diagonal similarity K(x, y) w(y) / w(x)
with w(t) = e^{a min(t, 0)} that keeps the matrix entries bounded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fredholm
from .fredholm import DetResult, Domain
from .specfun import airy_ai, airy_scaled, composite_gauss_legendre, gauss_legendre, panel_breaks

__all__ = [
    "Airy1KernelParams",
    "PrecisionWallError",
    "NumericalFailure",
    "heat_b0",
    "ktilde",
    "khat",
    "heat_identity_lhs",
    "airy1_domains",
    "k1",
    "k1_conjugated",
    "default_cutoffs",
    "airy1_blocks",
    "persistence_airy1",
    "f1_determinant",
    "precision_wall",
]

_EXP_MAX = 700.0


class PrecisionWallError(ValueError):
    """Requested L lies beyond what double precision can resolve."""


class NumericalFailure(ArithmeticError):
    """The determinant left the admissible range [-eps, 1 + eps]."""


def precision_wall(c):
    """Largest L accepted for threshold c."""
    return 3.5 if c >= 0 else 2.5


@dataclass(frozen=True)
class Airy1KernelParams:
    c: float
    L: float
    conj_exponent: float | None = None  # defaults to L
    inner_nodes: int = 24  # Gauss-Legendre nodes per panel of the z-integral
    inner_cut: float | None = None  # upper limit of the z-integral, default from L

    def __post_init__(self):
        if not (math.isfinite(self.c) and math.isfinite(self.L)) or self.L <= 0:
            raise ValueError(f"need finite c and L > 0, got c={self.c}, L={self.L}")
        if self.inner_cut is not None and self.inner_cut < 8 + 10 * math.sqrt(self.L):
            raise ValueError("inner_cut must be at least 8 + 10 sqrt(L)")

    @property
    def a(self):
        return self.L if self.conj_exponent is None else self.conj_exponent


def _ai_exp(u, expo):
    """exp(expo) * Ai(u) without intermediate overflow."""
    u = np.asarray(u, dtype=float)
    ais = airy_scaled(u)[0]
    zeta = np.where(u > 0, 2.0 / 3.0 * np.abs(u) ** 1.5, 0.0)
    e = expo - zeta
    if np.any(e > _EXP_MAX):
        raise OverflowError("exponential prefactor overflows")
    with np.errstate(under="ignore"):
        return ais * np.exp(e)


def heat_b0(z, y, c, L):
    """exp(-2L^3/3 - (z + y + 2c) L) Ai(z + y + 2c + L^2)."""
    w = np.asarray(z, dtype=float) + np.asarray(y, dtype=float) + 2 * c
    out = _ai_exp(w + L * L, -2 * L ** 3 / 3 - L * w)
    return float(out) if out.ndim == 0 else out


def _inner_rule(L, lo, hi, per_panel):
    width = min(1.0, math.sqrt(2 * L))
    return composite_gauss_legendre(panel_breaks(lo, hi, width), per_panel)


def _gauss(x, z, L):
    return np.exp(-((x - z) ** 2) / (4 * L)) / math.sqrt(4 * math.pi * L)


def _smoothed_b0(x, y, L, lo, hi, per_panel):
    """(4 pi L)^(-1/2) int_lo^hi e^{-(x-z)^2/4L} h(y + z) dz on a shared z rule."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    rule = _inner_rule(L, lo, hi, per_panel)
    z = rule.nodes
    vals = _gauss(x[..., None], z, L) * heat_b0(z, y[..., None], 0.0, L)
    out = vals @ rule.weights
    if not np.all(np.isfinite(out)):
        raise fredholm.KernelEvaluationError(x, y, "non-finite inner quadrature")
    return float(out) if out.ndim == 0 else out


def _tail(L):
    return 12 * math.sqrt(L) + 8


def ktilde(x, y, params: Airy1KernelParams):
    """(4 pi L)^(-1/2) int_0^Z e^{-(x-z)^2/4L} h(y + z) dz, h as in the module docstring."""
    L = params.L
    top = max(float(np.max(x, initial=0.0)), 0.0) + _tail(L)
    hi = max(top, params.inner_cut or 0.0)
    return _smoothed_b0(x, y, L, 0.0, hi, params.inner_nodes)


def khat(x, y, params: Airy1KernelParams):
    """The same Gaussian integral over the negative half line; equals Ai(x + y) - ktilde."""
    L = params.L
    # the integrand peaks near z = x - 2L^2 because of the factor e^{-Lz}
    lo = min(float(np.min(x, initial=0.0)), 0.0) - 2 * L * L - _tail(L)
    return _smoothed_b0(x, y, L, lo, 0.0, params.inner_nodes)


def heat_identity_lhs(x, y, L, inner_nodes=24):
    """(4 pi L)^(-1/2) int_R e^{-(x-z)^2/4L} e^{-L Delta}B0(z, y) dz, which equals Ai(x + y)."""
    params = Airy1KernelParams(0.0, L, inner_nodes=inner_nodes)
    return ktilde(x, y, params) + khat(x, y, params)


def k1(x, y, params: Airy1KernelParams):
    """Pointwise Airy1 persistence kernel."""
    c = params.c
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xb, yb = np.broadcast_arrays(x, y)
    out = np.asarray(airy_ai(np.abs(xb) + yb + 2 * c), dtype=float).copy()
    neg = xb <= 0
    if np.any(neg):
        yp = yb[neg] + 2 * c
        out[neg] += ktilde(xb[neg], yp, params) - ktilde(-xb[neg], yp, params)
    return float(out) if out.ndim == 0 else out


def k1_conjugated(x, y, params: Airy1KernelParams):
    """exp(a (y - x)) k1(x, y), a = conj_exponent; same Fredholm determinant."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.exp(params.a * (y - x)) * k1(x, y, params)
    return float(out) if np.ndim(out) == 0 else out


def default_cutoffs(c, L):
    """(T-, T+) so that truncation errors are far below double precision."""
    t_minus = max(4.0, 2 * L * L + math.sqrt(4 * L * (40 + L ** 3 / 3)))
    t_plus = 12.0 + max(0.0, -2 * c)
    return t_minus, t_plus


def _log_weight(t, a, one_sided):
    return a * (np.minimum(t, 0.0) if one_sided else t)


def _hitting_rule(L, x_min_abs, width=0.25, per_panel=16):
    # geometric panels resolve the first-passage density for x near 0
    s_min = max(x_min_abs, 1e-8) ** 2 / 400
    top = min(width, L)
    breaks = [top]
    while breaks[-1] > s_min:
        breaks.append(breaks[-1] / 2)
    breaks = np.array(breaks[::-1])
    if L > top:
        breaks = np.concatenate([breaks, panel_breaks(top, L, width)[1:]])
    return composite_gauss_legendre(breaks, per_panel)


def airy1_blocks(params: Airy1KernelParams, one_sided=True, method="hitting"):
    """2x2 kernel array on L^2(R-) (+) L^2(R+), conjugated by w(t) = e^{a min(t,0)}.

    With ``one_sided=False`` the weight is e^{a t} on the whole line.  Rows
    x < 0 are evaluated either from the first-passage representation

        K(x, y) = int_0^L |x| (4 pi s^3)^(-1/2) e^{-x^2/4s} e^{-2s^3/3 - s y'} Ai(y' + s^2) ds

    (``method="hitting"``, free of cancellation), or from the Gaussian
    z-integral (``method="gaussian"``), which loses about e^{L^3/3} in accuracy.
    """
    c, L, a = params.c, params.L, params.a
    if method not in ("hitting", "gaussian"):
        raise ValueError(f"unknown method {method!r}")

    def pos_rows(x, y):
        expo = _log_weight(y, a, one_sided) - _log_weight(x, a, one_sided)
        return _ai_exp(x + y + 2 * c, expo)

    def neg_rows_gaussian(x, y):
        xr = np.asarray(x, dtype=float).reshape(-1)
        yr = np.asarray(y, dtype=float).reshape(-1)
        yp = yr + 2 * c
        zmax = max(float(xr.max()) + 2 * L * L, 0.0) + 12 * math.sqrt(L) + 8
        if params.inner_cut is not None:
            zmax = max(zmax, params.inner_cut)
        rule = _inner_rule(L, 0.0, zmax, params.inner_nodes)
        z, wz = rule.nodes, rule.weights
        # Gaussian side, rescaled by e^{Lz} and the row weight 1/w(x)
        ga = -((xr[:, None] - z[None, :]) ** 2) / (4 * L) + L * z[None, :] - _log_weight(xr, a, one_sided)[:, None]
        A = wz[None, :] * np.exp(ga) / math.sqrt(4 * math.pi * L)
        # Airy side, rescaled by e^{-Lz} and the column weight w(y)
        base = -2 * L ** 3 / 3 - L * yp + _log_weight(yr, a, one_sided)
        Bp = _ai_exp(yp[None, :] + z[:, None] + L * L, base[None, :] - 2 * L * z[:, None])
        Bm = _ai_exp(yp[None, :] - z[:, None] + L * L, np.broadcast_to(base[None, :], (len(z), len(yr))))
        return A @ (Bp + Bm)

    def neg_rows_hitting(x, y):
        xr = np.asarray(x, dtype=float).reshape(-1)
        yr = np.asarray(y, dtype=float).reshape(-1)
        yp = yr + 2 * c
        rule = _hitting_rule(L, float(np.min(np.abs(xr))))
        s, ws = rule.nodes, rule.weights
        ep = (np.log(np.abs(xr))[:, None] - 0.5 * np.log(4 * math.pi * s ** 3)[None, :]
              - xr[:, None] ** 2 / (4 * s[None, :]) - _log_weight(xr, a, one_sided)[:, None])
        with np.errstate(under="ignore"):
            P = ws[None, :] * np.exp(ep)
        F = _ai_exp(yp[None, :] + s[:, None] ** 2,
                    -2 * s[:, None] ** 3 / 3 - s[:, None] * yp[None, :] + _log_weight(yr, a, one_sided)[None, :])
        return P @ F

    neg_rows = neg_rows_hitting if method == "hitting" else neg_rows_gaussian
    return [[neg_rows, neg_rows], [pos_rows, pos_rows]]


def airy1_domains(c, L, nodes=fredholm.DEFAULT_NODES, cutoff=None):
    t_minus, t_plus = default_cutoffs(c, L) if cutoff is None else cutoff
    if isinstance(nodes, (int, np.integer)):
        nodes = (nodes, nodes)
    return Domain([(-t_minus, 0.0)], nodes[0]), Domain([(0.0, t_plus)], nodes[1])


def persistence_airy1(c, L, tol=1e-10, *, rtol=1e-7, nodes=fredholm.DEFAULT_NODES, cutoff=None,
                      params: Airy1KernelParams | None = None, one_sided=True,
                      max_nodes=fredholm.MAX_NODES, enforce_wall=True) -> DetResult:
    """P(A1(t) <= c for 0 <= t <= L) as a block Fredholm determinant."""
    if not (math.isfinite(c) and math.isfinite(L)) or L <= 0:
        raise ValueError(f"need finite c and L > 0, got c={c}, L={L}")
    if enforce_wall and L > precision_wall(c) + 1e-12:
        raise PrecisionWallError(
            f"L={L} exceeds the double-precision limit {precision_wall(c)} for c={c}; use a smaller L"
        )
    params = params or Airy1KernelParams(c, L)
    res = fredholm.block_fredholm_det(
        airy1_blocks(params, one_sided), airy1_domains(c, L, nodes, cutoff), tol, max_nodes, rtol
    )
    eps = max(1e-8, 10 * res.error_estimate)
    if not -eps <= res.value <= 1 + eps:
        raise NumericalFailure(f"determinant {res.value} outside [0, 1] at c={c}, L={L}")
    return res


def f1_determinant(c, tol=1e-12, nodes=40, cutoff=None):
    """F1(2c) = det(I - B0) on L^2(c, inf), B0(x, y) = Ai(x + y)."""
    hi = cutoff if cutoff is not None else 12.0 + max(0.0, -2 * c)
    kern = lambda x, y: airy_ai(x + y + 2 * c)  # noqa: E731
    return fredholm.fredholm_det(kern, Domain([(0.0, hi)], nodes), tol)
