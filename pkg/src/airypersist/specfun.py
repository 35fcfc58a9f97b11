"""Real-argument Airy functions and Gauss-Legendre rules.

Ai, Ai', Bi, Bi' are evaluated from a table of values at equally spaced
centres on [-R, R] followed by a local Taylor expansion of the Airy
equation y'' = x y.  The table is generated once at import time by Taylor
stepping, started from the exact values at the origin (Bi everywhere, Ai
on the negative axis) and from the large-argument asymptotic series at
x = R (Ai on the positive axis, stepping towards the origin so that the
recessive solution is never amplified).  Outside [-R, R] the asymptotic
expansions are used directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "QuadratureRule",
    "airy",
    "airy_scaled",
    "airy_ai",
    "airy_aip",
    "airy_bi",
    "airy_bip",
    "gauss_legendre",
    "composite_gauss_legendre",
    "panel_breaks",
]

AI0 = 0.35502805388781723926  # 3^(-2/3) / Gamma(2/3)
AIP0 = -0.25881940379280679840  # -3^(-1/3) / Gamma(1/3)
BI0 = 0.61492662744600073515
BIP0 = 0.44828835735382635791

BI_MAX_ARG = 100.0

_R = 12.0
_STEP = 0.5
_NTAYLOR = 32
_NASYM = 24
_SQRT_PI = math.sqrt(math.pi)


def _asymptotic_coefficients(n):
    u = np.empty(n)
    u[0] = 1.0
    for k in range(1, n):
        # u_k = (2k+1)(2k+3)...(6k-1) / (216^k k!)
        u[k] = u[k - 1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / (216.0 * k * (2 * k - 1))
    k = np.arange(n)
    v = -(6 * k + 1) / (6 * k - 1) * u
    return u, v


_U, _V = _asymptotic_coefficients(_NASYM)
_SIGN = (-1.0) ** np.arange(_NASYM)


def _series(coef, t):
    # Horner in t = 1/zeta
    out = np.zeros_like(t)
    for c in coef[::-1]:
        out = out * t + c
    return out


def _asym_positive_scaled(x):
    """Scaled asymptotic values for large positive x.

    Returns Ai*e^z, Ai'*e^z, Bi*e^-z, Bi'*e^-z with z = 2/3 x^1.5.
    """
    zeta = 2.0 / 3.0 * x ** 1.5
    t = 1.0 / zeta
    q = x ** 0.25
    ai = _series(_SIGN * _U, t) / (2 * _SQRT_PI * q)
    aip = -q * _series(_SIGN * _V, t) / (2 * _SQRT_PI)
    bi = _series(_U, t) / (_SQRT_PI * q)
    bip = q * _series(_V, t) / _SQRT_PI
    return ai, aip, bi, bip


def _asym_negative(x):
    """Asymptotic values at -x for large positive x."""
    zeta = 2.0 / 3.0 * x ** 1.5
    t2 = 1.0 / zeta ** 2
    alt = (-1.0) ** np.arange(_NASYM // 2)
    ue, uo = alt * _U[0::2], alt * _U[1::2]
    ve, vo = alt * _V[0::2], alt * _V[1::2]
    pu, qu = _series(ue, t2), _series(uo, t2) / zeta
    pv, qv = _series(ve, t2), _series(vo, t2) / zeta
    th = zeta - math.pi / 4
    c, s = np.cos(th), np.sin(th)
    q = x ** 0.25
    ai = (c * pu + s * qu) / (_SQRT_PI * q)
    aip = q * (s * pv - c * qv) / _SQRT_PI
    bi = (-s * pu + c * qu) / (_SQRT_PI * q)
    bip = q * (c * pv + s * qv) / _SQRT_PI
    return ai, aip, bi, bip


def _taylor(x0, y0, dy0, h, nterms=_NTAYLOR):
    """Value and derivative at x0 + h of the solution of y'' = x y."""
    x0, y0, dy0, h = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x0, y0, dy0, h)))
    val = y0 + dy0 * h
    der = dy0.copy()
    hp = np.ones_like(h)  # h^(n+1) once updated inside the loop
    a_nm1, a_n, a_np1 = np.zeros_like(y0), y0, dy0
    for n in range(nterms - 2):
        # (n+2)(n+1) a_{n+2} = x0 a_n + a_{n-1}
        a_new = (x0 * a_n + a_nm1) / ((n + 2) * (n + 1))
        hp = hp * h
        der = der + (n + 2) * a_new * hp
        val = val + a_new * hp * h
        a_nm1, a_n, a_np1 = a_n, a_np1, a_new
    return val, der


def _build_table():
    centres = np.arange(-_R, _R + 0.5 * _STEP, _STEP)
    n = len(centres)
    i0 = int(round(_R / _STEP))
    tab = np.zeros((4, n))
    tab[:, i0] = AI0, AIP0, BI0, BIP0
    # negative axis: both solutions oscillate, march outward from the origin
    for i in range(i0, 0, -1):
        for f in (0, 2):
            v, d = _taylor(centres[i], tab[f, i], tab[f + 1, i], -_STEP)
            tab[f, i - 1], tab[f + 1, i - 1] = v, d
    # Bi on the positive axis is dominant: march outward
    for i in range(i0, n - 1):
        v, d = _taylor(centres[i], tab[2, i], tab[3, i], _STEP)
        tab[2, i + 1], tab[3, i + 1] = v, d
    # Ai on the positive axis is recessive: start at R and march inward
    xr = np.array(_R)
    ai_s, aip_s, _, _ = _asym_positive_scaled(xr)
    e = math.exp(-2.0 / 3.0 * _R ** 1.5)
    tab[0, -1], tab[1, -1] = ai_s * e, aip_s * e
    for i in range(n - 1, i0 + 1, -1):
        v, d = _taylor(centres[i], tab[0, i], tab[1, i], -_STEP)
        tab[0, i - 1], tab[1, i - 1] = v, d
    tab.setflags(write=False)
    centres.setflags(write=False)
    return centres, tab


_CENTRES, _TABLE = _build_table()


def _check_finite(x):
    if not np.all(np.isfinite(x)):
        raise ValueError("Airy functions require finite real arguments")


def airy_scaled(x):
    """Exponentially scaled Airy functions of real argument.

    For x > 0 returns (Ai e^z, Ai' e^z, Bi e^-z, Bi' e^-z) with
    z = 2/3 x^(3/2); for x <= 0 the unscaled values.  Never overflows.
    """
    x = np.asarray(x, dtype=float)
    _check_finite(x)
    out = [np.empty_like(x) for _ in range(4)]
    inner = np.abs(x) <= _R
    if np.any(inner):
        xi = x[inner]
        idx = np.rint((xi + _R) / _STEP).astype(int)
        x0 = _CENTRES[idx]
        h = xi - x0
        ai, aip = _taylor(x0, _TABLE[0, idx], _TABLE[1, idx], h)
        bi, bip = _taylor(x0, _TABLE[2, idx], _TABLE[3, idx], h)
        zeta = np.where(xi > 0, 2.0 / 3.0 * np.abs(xi) ** 1.5, 0.0)
        ep, em = np.exp(zeta), np.exp(-zeta)
        out[0][inner], out[1][inner] = ai * ep, aip * ep
        out[2][inner], out[3][inner] = bi * em, bip * em
    pos = x > _R
    if np.any(pos):
        for o, v in zip(out, _asym_positive_scaled(x[pos])):
            o[pos] = v
    neg = x < -_R
    if np.any(neg):
        for o, v in zip(out, _asym_negative(-x[neg])):
            o[neg] = v
    return tuple(out)


def airy(x):
    """Return (Ai, Ai', Bi, Bi') at real x.

    Raises OverflowError where Bi exceeds double range (x > 100).
    """
    x = np.asarray(x, dtype=float)
    _check_finite(x)
    if np.any(x > BI_MAX_ARG):
        raise OverflowError(f"Bi overflows for x > {BI_MAX_ARG}")
    ai, aip, bi, bip = airy_scaled(x)
    zeta = np.where(x > 0, 2.0 / 3.0 * np.abs(x) ** 1.5, 0.0)
    with np.errstate(under="ignore"):
        em = np.exp(-zeta)
    ep = np.exp(zeta)
    return ai * em, aip * em, bi * ep, bip * ep


def _ai_pair(x):
    x = np.asarray(x, dtype=float)
    _check_finite(x)
    ai, aip, _, _ = airy_scaled(x)
    zeta = np.where(x > 0, 2.0 / 3.0 * np.abs(x) ** 1.5, 0.0)
    with np.errstate(under="ignore"):
        em = np.exp(-zeta)
    return ai * em, aip * em


def _scalar(x, v):
    return float(v) if np.ndim(x) == 0 else v


def airy_ai(x):
    """Ai(x); underflows to 0 for large positive x."""
    return _scalar(x, _ai_pair(x)[0])


def airy_aip(x):
    return _scalar(x, _ai_pair(x)[1])


def airy_bi(x):
    """Bi(x) for x <= 100."""
    return _scalar(x, airy(x)[2])


def airy_bip(x):
    return _scalar(x, airy(x)[3])


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights of a quadrature rule on [-1, 1] (or a mapped interval)."""

    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.nodes)

    def mapped(self, a, b):
        """The rule affinely mapped to [a, b]."""
        half = 0.5 * (b - a)
        return QuadratureRule(0.5 * (a + b) + half * self.nodes, half * self.weights)


@lru_cache(maxsize=64)
def _gauss_legendre(n):
    k = np.arange(1, n + 1)
    # Chebyshev-type initial guesses, descending
    x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
    for _ in range(100):
        p0, p1 = np.ones_like(x), x.copy()
        for j in range(2, n + 1):
            p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
        if n == 1:
            p0 = np.ones_like(x)
        dp = n * (x * p1 - p0) / (x * x - 1.0)
        dx = p1 / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    # one more derivative at the converged nodes for the weights
    p0, p1 = np.ones_like(x), x.copy()
    for j in range(2, n + 1):
        p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
    if n == 1:
        p0 = np.ones_like(x)
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    x = x[::-1].copy()
    w = w[::-1].copy()
    # enforce exact symmetry
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n):
    """The n-point Gauss-Legendre rule on [-1, 1], 1 <= n <= 2000."""
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or not 1 <= n <= 2000:
        raise ValueError(f"Gauss-Legendre order must be an integer in [1, 2000], got {n!r}")
    x, w = _gauss_legendre(int(n))
    return QuadratureRule(x, w)


def composite_gauss_legendre(breaks, n):
    """n-point rule on each panel [breaks[i], breaks[i+1]], concatenated."""
    breaks = np.asarray(breaks, dtype=float)
    if breaks.ndim != 1 or len(breaks) < 2 or np.any(np.diff(breaks) <= 0):
        raise ValueError("panel breaks must be strictly increasing")
    ref = gauss_legendre(n)
    half = 0.5 * np.diff(breaks)[:, None]
    mid = 0.5 * (breaks[1:] + breaks[:-1])[:, None]
    nodes = (mid + half * ref.nodes).ravel()
    weights = (half * ref.weights).ravel()
    return QuadratureRule(nodes, weights)


def panel_breaks(a, b, width):
    """Equal panels covering [a, b] with widths at most `width`."""
    m = max(1, int(math.ceil((b - a) / width - 1e-12)))
    return np.linspace(a, b, m + 1)
