"""Persistence kernel of the Airy2 process and its Fredholm determinant.

With H = -d^2/dx^2 + x and the smoothed Airy kernel

    K_L(x, y) = int_0^inf e^{-L lam} Ai(x + lam) Ai(y + lam) dlam,

the persistence probability below c on [0, L] is det(I - K2) on L^2(R), where

    K2(x, y) = K_Ai(x + c, y + c) - 1[x <= 0] e^{-cL} int_{z<0} Lam(x, z) K_L(z + c, y + c) dz,
    Lam(x, z) = int_R e^{mu L} phi(x, mu) phi(z, mu) dmu,
    phi(x, mu) = (Ai(mu) Bi(x + mu) - Ai(x + mu) Bi(mu)) / sqrt(Ai(mu)^2 + Bi(mu)^2).

Lam is the kernel of e^{-LH} killed at the origin.  Written literally, the
subtraction cancels terms of size e^{L|x|} for x << 0.  The determinant is
therefore assembled from the equivalent form

    K2(x, y) = int_{z>0} E_c(x, z) K_L(z + c, y + c) dz
               + e^{-cL} int_{z<0} D(x, z) K_L(z + c, y + c) dz,       x <= 0,

where E_c(x, z) = e^{-cL} G_L(x - z) exp(L^3/12 - L(x + z)/2) is the free
kernel of e^{-LH} (G_L the heat kernel of variance 2L) and D = e^{-LH} - Lam is the
part carried by paths that touch the origin.  Expanding phi in Ai and Bi, with
alpha = Bi(mu)/N and beta = Ai(mu)/N, gives

    D(x, z) = int e^{mu L} [beta^2 (Ai Ai - Bi Bi) + alpha beta (Ai Bi + Bi Ai)] dmu,

in which every term is bounded by its own exponentially small factor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fredholm
from .airy1 import NumericalFailure, PrecisionWallError
from .fredholm import ConvergenceError, DetResult, Domain, KernelEvaluationError
from .specfun import airy, airy_scaled, composite_gauss_legendre, panel_breaks

__all__ = [
    "Airy2KernelParams",
    "airy_kernel",
    "airy_kernel_smoothed",
    "phi",
    "lambda0",
    "crossing_kernel",
    "free_kernel",
    "k2",
    "airy2_blocks",
    "airy2_domains",
    "default_cutoffs",
    "persistence_airy2",
    "f2_determinant",
    "precision_wall",
]

_MU_CHUNK = 2048


def precision_wall(c=None):
    """Largest L accepted for the Airy2 determinant."""
    return 2.0


def _zeta(u):
    return np.where(u > 0, 2.0 / 3.0 * np.abs(u) ** 1.5, 0.0)


def _default_mu_hi(L):
    # smallest mu with 4/3 mu^1.5 - mu L >= 45, i.e. e^{mu L} Ai(mu)^2 below 1e-19
    mu = 1.0
    while 4.0 / 3.0 * mu ** 1.5 - mu * L < 45.0:
        mu += 0.5
    return mu + 1.0


@dataclass(frozen=True)
class Airy2KernelParams:
    """Truncations and per-panel Gauss-Legendre orders of the nested integrals."""

    c: float
    L: float
    mu_cut_lo: float | None = None  # default -40/L - 10
    mu_cut_hi: float | None = None  # default from the decay of e^{mu L} Ai(mu)^2; lambda0 adds the depth
    lambda_cut: float | None = None  # default 12 beyond the most negative argument
    z_cut: float | None = None  # half-width of the z-integral, default the row cutoff
    z_nodes: int = 16
    mu_nodes: int = 16
    lambda_nodes: int = 20

    def __post_init__(self):
        if not (math.isfinite(self.c) and math.isfinite(self.L)) or self.L <= 0:
            raise ValueError(f"need finite c and L > 0, got c={self.c}, L={self.L}")
        if not self.mu_lo < 0 < self.mu_hi:
            raise ValueError("need mu_cut_lo < 0 < mu_cut_hi")
        if self.lambda_cut is not None and self.lambda_cut <= 0:
            raise ValueError("lambda_cut must be positive")
        if self.z_cut is not None and self.z_cut <= 0:
            raise ValueError("z_cut must be positive")
        if min(self.z_nodes, self.mu_nodes, self.lambda_nodes) < 1:
            raise ValueError("node counts must be positive")

    @property
    def mu_lo(self):
        return -40.0 / self.L - 10.0 if self.mu_cut_lo is None else self.mu_cut_lo

    @property
    def mu_hi(self):
        return _default_mu_hi(self.L) if self.mu_cut_hi is None else self.mu_cut_hi

    @property
    def zcut(self):
        return default_cutoffs(self.c, self.L)[0] if self.z_cut is None else self.z_cut

    def widened(self, factor=1.25):
        """Copy with every truncation pushed outwards by `factor`."""
        lam = self.lambda_cut
        return Airy2KernelParams(
            self.c, self.L, self.mu_lo * factor, self.mu_hi * factor,
            None if lam is None else lam * factor, self.zcut * factor,
            self.z_nodes, self.mu_nodes, self.lambda_nodes,
        )


def default_cutoffs(c, L):
    """(T-, T+): the crossing rows decay like exp(-x^2/4L + L|x|/2)."""
    t_minus = L * L + math.sqrt(L ** 4 + 160 * L) + 1.0
    t_plus = 12.0 + max(0.0, -c)
    return t_minus, t_plus


def _out(v):
    v = np.asarray(v)
    return float(v) if v.ndim == 0 else v


# --- Airy kernel -------------------------------------------------------------------------


def airy_kernel(x, y):
    """K_Ai(x, y) = int_0^inf Ai(x + t) Ai(y + t) dt."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    ax, apx, _, _ = airy(x)
    ay, apy, _, _ = airy(y)
    d = x - y
    near = np.abs(d) < 1e-4
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(near, 0.0, (ax * apy - apx * ay) / np.where(near, 1.0, d))
    if np.any(near):
        # expansion about the midpoint m: c0(m) + d^2/4 int_m^inf (t Ai^2 - Ai'^2) dt
        m = 0.5 * (x[near] + y[near])
        am, apm, _, _ = airy(m)
        c0 = apm ** 2 - m * am ** 2
        c1 = -(2.0 / 3.0 * (m * m * am ** 2 - m * apm ** 2) - am * apm / 3.0)
        out[near] = c0 + d[near] ** 2 / 4.0 * c1
    return _out(out)


def _lambda_rule(lo_arg, lam_cut, per_panel):
    width = min(1.0, 3.0 / math.sqrt(1.0 + max(0.0, -lo_arg)))
    return composite_gauss_legendre(panel_breaks(0.0, lam_cut, width), per_panel)


def _default_lambda_cut(lo_arg):
    return 12.0 + max(0.0, -lo_arg)


def airy_kernel_smoothed(x, y, L, lambda_cut=None, nodes=20):
    """int_0^lambda_cut e^{-L lam} Ai(x + lam) Ai(y + lam) dlam by composite Gauss-Legendre."""
    if not L >= 0:
        raise ValueError("L must be non-negative")
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    lo = min(float(np.min(x, initial=0.0)), float(np.min(y, initial=0.0)))
    cut = _default_lambda_cut(lo) if lambda_cut is None else float(lambda_cut)
    rule = _lambda_rule(lo, cut, nodes)
    lam, w = rule.nodes, rule.weights * np.exp(-L * rule.nodes)
    ax = airy_scaled(x[..., None] + lam)[0] * np.exp(-_zeta(x[..., None] + lam))
    ay = airy_scaled(y[..., None] + lam)[0] * np.exp(-_zeta(y[..., None] + lam))
    out = (ax * ay) @ w
    if not np.all(np.isfinite(out)):
        raise KernelEvaluationError(x, y, "non-finite lambda quadrature")
    return _out(out)


def _smoothed_matrix(u, v, L, lambda_cut, nodes):
    """K_L(u_i, v_j) on a product grid via one matrix product."""
    lo = min(float(u.min()), float(v.min()), 0.0)
    cut = _default_lambda_cut(lo) if lambda_cut is None else lambda_cut
    rule = _lambda_rule(lo, cut, nodes)
    lam, w = rule.nodes, rule.weights * np.exp(-L * rule.nodes)

    def ai(t):
        t = t[:, None] + lam[None, :]
        return airy_scaled(t)[0] * np.exp(-_zeta(t))

    return (ai(u) * w[None, :]) @ ai(v).T


# --- the bridge operator -----------------------------------------------------------------


def _phi_parts(x, mu):
    """Ai(x+mu), Bi(x+mu) e^{-s}, alpha, gamma = beta e^{s}, s = zeta(mu), for x <= 0."""
    am, _, bm, _ = airy_scaled(mu)
    s = _zeta(mu)
    n = np.sqrt(bm ** 2 + (am * np.exp(-2 * s)) ** 2)
    alpha = bm / n
    gamma = am / n * np.exp(-s)
    t = x + mu
    at, _, bt, _ = airy_scaled(t)
    zt = _zeta(t)
    with np.errstate(under="ignore"):
        ai_x = at * np.exp(-zt)
        bi_x = bt * np.exp(zt - s)
    return ai_x, bi_x, alpha, gamma, s


def phi(x, mu):
    """(Ai(mu) Bi(x+mu) - Ai(x+mu) Bi(mu)) / sqrt(Ai(mu)^2 + Bi(mu)^2), overflow-free."""
    x, mu = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(mu, dtype=float))
    am, _, bm, _ = airy_scaled(mu)
    s = _zeta(mu)
    n = np.sqrt(bm ** 2 + (am * np.exp(-2 * s)) ** 2)
    t = x + mu
    at, _, bt, _ = airy_scaled(t)
    zt = _zeta(t)
    with np.errstate(under="ignore", over="ignore"):
        out = (am * bt * np.exp(zt - 2 * s) - at * bm * np.exp(-zt)) / n
    if not np.all(np.isfinite(out)):
        raise OverflowError("phi overflows; x + mu too large")
    return _out(out)


def _mu_rule(params: Airy2KernelParams, depth, shift_hi=False):
    """Composite rule on [mu_lo, mu_hi] resolving Ai(t + mu) for t >= -depth.

    With ``shift_hi`` the upper cut is counted from `depth`: the integrand
    e^{mu L} phi(x, mu) phi(z, mu) is not small until Ai(x + mu) has decayed.
    """
    lo, hi = params.mu_lo, params.mu_hi
    if shift_hi:
        hi += depth
    breaks = [lo]
    while breaks[-1] < hi:
        m = breaks[-1]
        breaks.append(min(hi, m + min(1.0, 4.5 / math.sqrt(max(depth - m, 0.0) + 1.0))))
    return composite_gauss_legendre(np.array(breaks), params.mu_nodes)


def _check_wall(L, enforce=True):
    if enforce and L > precision_wall() + 1e-12:
        raise PrecisionWallError(f"L={L} exceeds the Airy2 conditioning limit {precision_wall()}")


def lambda0(x, z, L, params: Airy2KernelParams | None = None, tol=None):
    """Kernel of e^{-LH} killed at 0: int e^{mu L} phi(x, mu) phi(z, mu) dmu for x, z <= 0.

    With ``tol`` set, the cuts are widened by 25% and a ConvergenceError is
    raised if the value moves by more than ``tol``.
    """
    x, z = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(z, dtype=float))
    if np.any(x > 0) or np.any(z > 0):
        raise ValueError("lambda0 is defined for x, z <= 0")
    _check_wall(L)
    params = params or Airy2KernelParams(0.0, L)
    depth = max(-float(np.min(x, initial=0.0)), -float(np.min(z, initial=0.0)))

    def evaluate(p):
        rule = _mu_rule(p, depth, shift_hi=True)
        total = np.zeros(x.shape)
        for k in range(0, len(rule.nodes), _MU_CHUNK):
            mu = rule.nodes[k:k + _MU_CHUNK]
            w = rule.weights[k:k + _MU_CHUNK] * np.exp(mu * L)
            total += (phi(x[..., None], mu) * phi(z[..., None], mu)) @ w
        return total

    val = evaluate(params)
    if tol is not None:
        wide = evaluate(params.widened())
        if np.max(np.abs(wide - val), initial=0.0) > tol:
            raise ConvergenceError("lambda0 moved when the mu cuts were widened", [(0, val), (1, wide)])
    return _out(val)


def free_kernel(x, z, L):
    """Kernel of e^{-LH} on the whole line: G_L(x - z) exp(L^3/12 - L(x + z)/2)."""
    x, z = np.asarray(x, dtype=float), np.asarray(z, dtype=float)
    e = -((x - z) ** 2) / (4 * L) + L ** 3 / 12 - L * (x + z) / 2
    with np.errstate(under="ignore"):
        return _out(np.exp(e) / math.sqrt(4 * math.pi * L))


def _crossing_matrix(x, z, params: Airy2KernelParams):
    """D(x_i, z_j) = (e^{-LH} - Lam)(x_i, z_j) for x, z <= 0."""
    L = params.L
    depth = max(-float(x.min()), -float(z.min()), 0.0)
    rule = _mu_rule(params, depth, shift_hi=True)
    out = np.zeros((len(x), len(z)))
    for k in range(0, len(rule.nodes), _MU_CHUNK):
        mu = rule.nodes[k:k + _MU_CHUNK]
        w = rule.weights[k:k + _MU_CHUNK] * np.exp(mu * L)
        ax, bx, alpha, gamma, s = _phi_parts(x[:, None], mu[None, :])
        az, bz, _, _, _ = _phi_parts(z[:, None], mu[None, :])
        beta2 = (gamma * np.exp(-s)) ** 2
        left = np.hstack([ax * (w * beta2), bx * (w * alpha * gamma), ax * (w * alpha * gamma), -bx * (w * gamma ** 2)])
        right = np.hstack([az, az, bz, bz])
        out += left @ right.T
    return out


def crossing_kernel(x, z, L, params: Airy2KernelParams | None = None):
    """(e^{-LH} - Lam)(x, z) for x, z <= 0: the contribution of paths that reach 0."""
    x, z = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(z, dtype=float))
    if np.any(x > 0) or np.any(z > 0):
        raise ValueError("crossing_kernel is defined for x, z <= 0")
    params = params or Airy2KernelParams(0.0, L)
    xs, zs = x.reshape(-1), z.reshape(-1)
    vals = np.array([_crossing_matrix(xs[i:i + 1], zs[i:i + 1], params)[0, 0] for i in range(len(xs))])
    return _out(vals.reshape(x.shape))


def _z_rules(params: Airy2KernelParams):
    width = min(1.0, math.sqrt(2 * params.L))
    zc = params.zcut
    neg = composite_gauss_legendre(panel_breaks(-zc, 0.0, width), params.z_nodes)
    pos = composite_gauss_legendre(panel_breaks(0.0, zc, width), params.z_nodes)
    return neg, pos


def k2(x, y, params: Airy2KernelParams):
    """Airy2 persistence kernel evaluated literally by nested quadrature (reference form).

    Loses about e^{L|x|} relative accuracy for x << 0; the determinant uses
    the cancellation-free form in airy2_blocks.
    """
    c, L = params.c, params.L
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    out = np.asarray(airy_kernel(x + c, y + c), dtype=float).copy()
    neg = x <= 0
    if np.any(neg):
        zr = _z_rules(params)[0]
        z, wz = zr.nodes, zr.weights
        xs, ys = x[neg], y[neg]
        # Lam(x_i, z_k) on the distinct x values, then K_L(z_k + c, y_i + c)
        ux, inv = np.unique(xs, return_inverse=True)
        lam = np.asarray(lambda0(ux[:, None], z[None, :], L, params))
        uy, invy = np.unique(ys, return_inverse=True)
        kl = _smoothed_matrix(z + c, uy + c, L, params.lambda_cut, params.lambda_nodes)
        sub = (lam * wz[None, :]) @ kl
        out[neg] -= math.exp(-c * L) * sub[inv, invy]
    return _out(out)


def airy2_blocks(params: Airy2KernelParams):
    """2x2 kernel array on L^2(R-) (+) L^2(R+) in the cancellation-free form."""
    c, L = params.c, params.L
    zneg, zpos = _z_rules(params)
    cache = {}

    def left_factor(x):
        # rows x<0 as weighted functionals of K_L(z + c, .) on the z grid (negative then positive)
        key = x.tobytes()
        if key not in cache:
            d = _crossing_matrix(x, zneg.nodes, params) * zneg.weights[None, :]
            e = free_kernel(x[:, None], zpos.nodes[None, :], L) * zpos.weights[None, :]
            cache.clear()
            cache[key] = math.exp(-c * L) * np.hstack([d, e])
        return cache[key]

    zall = np.concatenate([zneg.nodes, zpos.nodes])

    def neg_rows(x, y):
        xr = np.asarray(x, dtype=float).reshape(-1)
        yr = np.asarray(y, dtype=float).reshape(-1)
        kl = _smoothed_matrix(zall + c, yr + c, L, params.lambda_cut, params.lambda_nodes)
        return left_factor(xr) @ kl

    def pos_rows(x, y):
        return airy_kernel(x + c, y + c)

    return [[neg_rows, neg_rows], [pos_rows, pos_rows]]


def airy2_domains(c, L, nodes=fredholm.DEFAULT_NODES, cutoff=None):
    t_minus, t_plus = default_cutoffs(c, L) if cutoff is None else cutoff
    if isinstance(nodes, (int, np.integer)):
        nodes = (nodes, nodes)
    return Domain([(-t_minus, 0.0)], nodes[0]), Domain([(0.0, t_plus)], nodes[1])


def persistence_airy2(c, L, tol=1e-10, *, rtol=1e-7, nodes=40, cutoff=None,
                      params: Airy2KernelParams | None = None,
                      max_nodes=fredholm.MAX_NODES, enforce_wall=True) -> DetResult:
    """P(A2(t) <= c for 0 <= t <= L) as a block Fredholm determinant."""
    if not (math.isfinite(c) and math.isfinite(L)) or L <= 0:
        raise ValueError(f"need finite c and L > 0, got c={c}, L={L}")
    _check_wall(L, enforce_wall)
    params = params or Airy2KernelParams(c, L)
    res = fredholm.block_fredholm_det(airy2_blocks(params), airy2_domains(c, L, nodes, cutoff), tol, max_nodes, rtol)
    eps = max(1e-8, 10 * res.error_estimate)
    if not -eps <= res.value <= 1 + eps:
        raise NumericalFailure(f"determinant {res.value} outside [0, 1] at c={c}, L={L}")
    return res


def f2_determinant(c, tol=1e-12, nodes=40, cutoff=None):
    """F2(c) = det(I - K_Ai) on L^2(c, inf)."""
    hi = cutoff if cutoff is not None else 12.0 + max(0.0, -c)
    return fredholm.fredholm_det(lambda x, y: airy_kernel(x + c, y + c), Domain([(0.0, hi)], nodes), tol)
