"""Persistence curves, exponential fits P(L) ~ C exp(-kappa L), and kappa tables."""
from __future__ import annotations

import csv
import io
import logging
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import airy1, airy2

log = logging.getLogger(__name__)

__all__ = [
    "PersistencePoint",
    "ExpFit",
    "FitError",
    "EvaluationError",
    "PersistenceWarning",
    "PROCESSES",
    "precision_wall",
    "validated_c_range",
    "evaluate",
    "curve",
    "fit_exponential",
    "fit_curve",
    "kappa_table",
    "kappa_slope",
    "reference_table1",
    "parse_grid",
]

PROCESSES = ("airy1", "airy2")
DEFAULT_STEP = 0.1
DEFAULT_WINDOW_START = 1.0
MAX_REL_ERR = 0.05  # points with err/p above this stay out of fits
MODEL_REL_ERR = 1e-3  # relative error floor added in quadrature to the fit weights

_VALIDATED_C = {"airy1": (-1.1, 0.1), "airy2": (-2.5, 0.5)}


class FitError(ValueError):
    """Too few usable points for an exponential fit."""


class EvaluationError(RuntimeError):
    """No point of a curve could be evaluated."""


class PersistenceWarning(UserWarning):
    """A grid point was dropped from a curve."""


@dataclass(frozen=True)
class PersistencePoint:
    L: float
    p: float
    err: float


@dataclass(frozen=True)
class ExpFit:
    kappa: float
    C: float
    rms_residual: float  # root mean square of log-space residuals
    window: tuple[float, float]
    n_points: int = 0


def _check_process(process):
    if process not in PROCESSES:
        raise ValueError(f"unknown process {process!r}; expected one of {PROCESSES}")


def precision_wall(process, c):
    _check_process(process)
    return airy1.precision_wall(c) if process == "airy1" else airy2.precision_wall(c)


def validated_c_range(process):
    _check_process(process)
    return _VALIDATED_C[process]


def evaluate(process, c, L, tol=1e-10, **kwargs):
    """One determinant; extra keyword arguments go to the process backend."""
    _check_process(process)
    fn = airy1.persistence_airy1 if process == "airy1" else airy2.persistence_airy2
    return fn(c, L, tol, **kwargs)


def _threads(threads):
    if threads is None:
        threads = int(os.environ.get("AIRY_PERSIST_THREADS", "1") or 1)
    return max(1, int(threads))


def curve(process, c, L_grid, tol=1e-10, threads=None, **kwargs):
    """Persistence probabilities on an increasing grid of L.

    Grid points where the determinant engine fails are dropped with a
    PersistenceWarning; an entirely failed curve raises EvaluationError.
    """
    _check_process(process)
    grid = [float(L) for L in L_grid]
    if not grid:
        raise ValueError("empty L grid")
    if any(L <= 0 for L in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("L grid must be positive and strictly increasing")
    wall = precision_wall(process, c)
    if grid[-1] > wall + 1e-9:
        raise airy1.PrecisionWallError(f"L={grid[-1]} beyond the precision wall {wall} of {process} at c={c}")

    def one(L):
        try:
            r = evaluate(process, c, L, tol, **kwargs)
        except (ArithmeticError, ValueError) as exc:
            return L, exc
        return L, PersistencePoint(L, r.value, r.error_estimate)

    n = _threads(threads)
    if n > 1:
        with ThreadPoolExecutor(n) as pool:
            results = list(pool.map(one, grid))
    else:
        results = [one(L) for L in grid]
    points = []
    for L, r in results:
        if isinstance(r, PersistencePoint):
            points.append(r)
        else:
            msg = f"{process} c={c} L={L}: {type(r).__name__}: {r}"
            log.warning("dropping point %s", msg)
            warnings.warn(msg, PersistenceWarning, stacklevel=2)
    if not points:
        raise EvaluationError(f"no point of the {process} curve at c={c} could be evaluated")
    return points


def fit_exponential(points, window=None):
    """Weighted least squares of log p against L inside `window`.

    Weights are 1 / (s^2 + MODEL_REL_ERR^2) with s = err/p, so the numerical
    error estimates only matter once they approach the size of the
    corrections to pure exponential decay.
    """
    pts = list(points)
    if any(not pt.p > 0 for pt in pts):
        raise ValueError("exponential fit needs p > 0 for every point")
    lo, hi = (-math.inf, math.inf) if window is None else (float(window[0]), float(window[1]))
    if lo > hi:
        raise ValueError(f"window [{lo}, {hi}] is reversed")
    eps = 1e-9 * max(1.0, abs(hi) if math.isfinite(hi) else 1.0)
    use = [pt for pt in pts if lo - eps <= pt.L <= hi + eps and pt.err / pt.p <= MAX_REL_ERR]
    if len(use) < 3:
        raise FitError(f"need at least 3 usable points in window [{lo}, {hi}], got {len(use)}")
    L = np.array([pt.L for pt in use])
    y = np.log([pt.p for pt in use])
    s = np.array([pt.err / pt.p for pt in use])
    w = 1.0 / (s ** 2 + MODEL_REL_ERR ** 2)
    A = np.stack([np.ones_like(L), L], axis=1) * np.sqrt(w)[:, None]
    (b0, b1), *_ = np.linalg.lstsq(A, y * np.sqrt(w), rcond=None)
    res = y - (b0 + b1 * L)
    win = (float(L.min()), float(L.max())) if window is None else (lo, hi)
    return ExpFit(-float(b1), math.exp(b0), float(np.sqrt(np.mean(res ** 2))), win, len(use))


def default_window(process, c):
    return (DEFAULT_WINDOW_START, precision_wall(process, c))


def parse_grid(lo, hi, step):
    """Inclusive grid lo, lo + step, ..., hi (endpoint kept within half a step)."""
    if not step > 0:
        raise ValueError("step must be positive")
    if hi < lo:
        raise ValueError(f"empty range {lo}:{hi}")
    n = int(math.floor((hi - lo) / step + 0.5))
    return [round(lo + k * step, 12) for k in range(n + 1)]


def fit_curve(process, c, window=None, step=DEFAULT_STEP, tol=1e-10, threads=None, **kwargs):
    """kappa and C for one threshold from a curve on the fit window."""
    lo, hi = default_window(process, c) if window is None else window
    pts = curve(process, c, parse_grid(lo, hi, step), tol, threads, **kwargs)
    return fit_exponential(pts, (lo, hi))


def _check_c(process, c):
    a, b = validated_c_range(process)
    if not a - 1e-12 <= c <= b + 1e-12:
        raise ValueError(f"c={c} outside the validated range [{a}, {b}] for {process}")


def kappa_table(process, c_list, window=None, step=DEFAULT_STEP, tol=1e-10, threads=None, **kwargs):
    """[(c, kappa)] with each kappa fitted on its own precision-wall window."""
    out = []
    for c in c_list:
        _check_c(process, c)
        out.append((float(c), fit_curve(process, c, window, step, tol, threads, **kwargs).kappa))
    return out


def kappa_slope(process, c0, h=0.02, kappa_fn=None, **fit_kwargs):
    """Central difference (kappa(c0 + h) - kappa(c0 - h)) / 2h.

    `kappa_fn(c)` replaces the fitted kappa when given.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    if kappa_fn is None:
        _check_process(process)
        _check_c(process, c0 - h)
        _check_c(process, c0 + h)
        kappa_fn = lambda c: fit_curve(process, c, **fit_kwargs).kappa  # noqa: E731
    return (kappa_fn(c0 + h) - kappa_fn(c0 - h)) / (2 * h)


def reference_table1():
    """Published kappa values of the Airy1 process as [(c, kappa)]."""
    text = resources.files("airypersist").joinpath("data/table1_kappa.csv").read_text()
    rows = csv.DictReader(io.StringIO("".join(l for l in text.splitlines(True) if not l.startswith("#"))))
    return [(float(r["c"]), float(r["kappa"])) for r in rows]
