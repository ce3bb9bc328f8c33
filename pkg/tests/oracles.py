"""Independent reference computations used by several test modules."""

import math

import numpy as np
from scipy import integrate, special, stats


def grid_dual(coeffs, n_grid=1_000_001):
    """Brute-force scan of the convex dual objective on a uniform grid.

    Returns ``(lambda_argmin, g_min)`` for a single instance.
    """
    lam = np.linspace(0.0, 1.0, n_grid)
    best_l, best_g = None, math.inf
    for chunk in np.array_split(np.arange(n_grid), max(1, n_grid // 20_000)):
        l = lam[chunk][:, None]
        p = l * coeffs.a + (1 - l) * coeffs.b
        q = l * coeffs.c + (1 - l) * coeffs.d
        g = np.hypot(p, q).sum(axis=1)
        k = int(np.argmin(g))
        if g[k] < best_g:
            best_l, best_g = float(l[k, 0]), float(g[k])
    return best_l, best_g


def primal_min(coeffs, lam):
    """min(real branch, imaginary branch) of the closed-form phases at ``lam``.

    In sign-absorbed coordinates the real branch is sum(A*tr + C*ti) and
    the imaginary branch sum(B*tr + D*ti).
    """
    lam = np.atleast_1d(np.asarray(lam, float))[:, None]
    p = lam * coeffs.a + (1 - lam) * coeffs.b
    q = lam * coeffs.c + (1 - lam) * coeffs.d
    rho = np.hypot(p, q)
    tr, ti = p / rho, q / rho
    real = (coeffs.a * tr + coeffs.c * ti).sum(axis=1)
    imag = (coeffs.b * tr + coeffs.d * ti).sum(axis=1)
    return np.minimum(real, imag)


def grid_primal(coeffs, n_grid=100_001):
    """Best min-branch value over a grid of lambda1 values and its location."""
    lam = np.linspace(0.0, 1.0, n_grid)
    vals = np.concatenate([primal_min(coeffs, c) for c in np.array_split(lam, max(1, n_grid // 20_000))])
    k = int(np.argmax(vals))
    return float(lam[k]), float(vals[k])


def pep_quadrature(pair):
    """Pr(Z1^2 < Z2^2) by a real-line integral over Z2 (no characteristic functions).

    Pr = E_{Z2}[ Phi((|Z2|-m1)/s1) - Phi((-|Z2|-m1)/s1) ] with Z2 ~ N(m2, v2).
    """
    s1, s2 = math.sqrt(pair.var1), math.sqrt(pair.var2)

    def f(z):
        inner = special.ndtr((z - pair.mean1) / s1) - special.ndtr((-z - pair.mean1) / s1)
        dens = stats.norm.pdf(z, pair.mean2, s2) + stats.norm.pdf(-z, pair.mean2, s2)
        return inner * dens

    # integrand is concentrated around |z| ~ mean1 and at the Z2 scale
    pts = sorted({0.0, pair.mean1, 10 * s2, pair.mean1 + 10 * s1})
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        total += integrate.quad(f, a, b, epsabs=1e-15, epsrel=1e-12, limit=400)[0]
    total += integrate.quad(f, pts[-1], np.inf, epsabs=1e-15, limit=400)[0]
    return total


def avg_q_quadrature(mean, variance, scale):
    """E[Q(sqrt(scale) |Y|)] for Y ~ N(mean, variance), by direct integration over Y."""
    sd = math.sqrt(variance)
    f = lambda y: special.ndtr(-math.sqrt(scale) * abs(y)) * stats.norm.pdf(y, mean, sd)
    lo, hi = mean - 12 * sd, mean + 12 * sd
    pts = sorted({lo, hi, min(max(0.0, lo), hi)})
    return sum(integrate.quad(f, a, b, epsabs=1e-15, epsrel=1e-12, limit=400)[0] for a, b in zip(pts[:-1], pts[1:]))
