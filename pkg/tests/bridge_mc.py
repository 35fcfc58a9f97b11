"""Monte Carlo estimate of the killed Airy bridge kernel (test oracle only).

For x, z <= 0 the kernel of e^{-LH} killed at 0 equals

    exp(-L z + L^3/3) G_L(x - z + L^2) P(b(s) <= -s^2 for 0 <= s <= L),

where b is a Brownian bridge with diffusion coefficient 2 from x at time 0 to
z - L^2 at time L and G_L is the heat kernel of variance 2L.  The bridge
is sampled step by step; between grid times the chance of touching the
(linearly interpolated) barrier is exp(-d0 d1 / dt) with d0, d1 the
distances below it at the two ends.
"""
import math

import numpy as np


def heat(u, L):
    return math.exp(-u * u / (4 * L)) / math.sqrt(4 * math.pi * L)


def survival(x, z, L, n_paths, n_steps=2000, seed=0, batch=250_000):
    """(mean, standard error) of the bridge survival probability."""
    rng = np.random.default_rng(seed)
    dt = L / n_steps
    end = z - L * L
    total = total_sq = 0.0
    done = 0
    while done < n_paths:
        m = min(batch, n_paths - done)
        b = np.full(m, float(x))
        w = np.ones(m)
        for k in range(n_steps):
            t = k * dt
            rem = L - t
            mean = b + (end - b) * dt / rem
            sd = math.sqrt(max(2 * dt * (rem - dt) / rem, 0.0))
            nb = mean + sd * rng.standard_normal(m)
            d0 = -t * t - b
            d1 = -(t + dt) ** 2 - nb
            w *= (d1 > 0) * (1 - np.exp(-np.clip(d0 * d1, 0, None) / dt))
            b = nb
        total += w.sum()
        total_sq += (w * w).sum()
        done += m
    mean = total / n_paths
    var = max(total_sq / n_paths - mean * mean, 0.0)
    return mean, math.sqrt(var / n_paths)


def killed_kernel(x, z, L, n_paths, n_steps=2000, seed=0):
    """(estimate, standard error) of the killed kernel from the Girsanov form."""
    p, se = survival(x, z, L, n_paths, n_steps, seed)
    pref = math.exp(-L * z + L ** 3 / 3) * heat(x - z + L * L, L)
    return pref * p, pref * se


def literal_prefactor(x, z, L):
    """exp(-L z - L^3/3) G_L(x - z), the prefactor as printed."""
    return math.exp(-L * z - L ** 3 / 3) * heat(x - z, L)
