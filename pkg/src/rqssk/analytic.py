"""Analytical error-probability pipeline for RQSSK with greedy detection.

The pairwise error event for the real branch is ``Z1**2 < Z2**2`` where
``Z1`` (targeted antenna) and ``Z2`` (competing antenna) are independent
Gaussians whose parameters depend on how the competing antenna relates
to the imaginary-branch target. Three evaluators of ``Pr(Z1**2 < Z2**2)``
are provided: exact characteristic-function inversion, a three-cumulant
chi-square fit, and a large-array Chernoff asymptote.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import ConfigurationError, NumericalError

SQRT_PI_OVER_8 = math.sqrt(math.pi / 8.0)


class Case(str, enum.Enum):
    """Relation of (m, n, m_hat) for one pairwise event."""

    I = "case_i"      # m != n, m_hat != n
    II = "case_ii"    # m != n, m_hat == n
    III = "case_iii"  # m == n, m_hat != n


class Method(str, enum.Enum):
    GIL_PELAEZ = "gil_pelaez"
    PEARSON = "pearson"
    CHERNOFF = "chernoff"


@dataclass(frozen=True)
class GaussianPair:
    mean1: float
    var1: float
    mean2: float
    var2: float

    def __post_init__(self):
        if not (self.var1 > 0 and self.var2 > 0):
            raise ConfigurationError("var", f"variances must be positive, got {self.var1}, {self.var2}")


@dataclass(frozen=True)
class PearsonParams:
    delta1: float
    delta2: float
    b1_sq: float
    c1: float
    c2: float
    c3: float
    v: float
    q_bar: float


# per-element variances of the targeted (Y) and competing (Y_hat) sums
_Y_VAR = {Case.I: (6 - math.pi) / 8, Case.II: (6 - math.pi) / 8, Case.III: (4 - math.pi) / 8}
_YHAT_VAR = {Case.I: 0.5, Case.II: 0.25, Case.III: 0.5}


def _check_link(n_ris, es, n0):
    if n_ris < 1:
        raise ConfigurationError("n_ris", "must be >= 1")
    if not es > 0:
        raise ConfigurationError("es", "must be positive")
    if not n0 > 0:
        raise ConfigurationError("n0", "must be positive")


def z_params(case, n_ris, es, n0):
    """Gaussian parameters of (Z1, Z2) for one of the three cases."""
    case = Case(case)
    _check_link(n_ris, es, n0)
    return GaussianPair(
        mean1=n_ris * math.sqrt(es) * SQRT_PI_OVER_8,
        var1=n_ris * _Y_VAR[case] * es + n0 / 2,
        mean2=0.0,
        var2=n_ris * _YHAT_VAR[case] * es + n0 / 2,
    )


# -- exact inversion -------------------------------------------------------

def _cf_noncentral_sq(t, mean, var):
    """Characteristic function of X**2 for X ~ N(mean, var)."""
    denom = 1.0 - 2j * var * t
    return denom ** -0.5 * np.exp(1j * mean * mean * t / denom)


def cf_difference(t, pair):
    """Characteristic function of ``Z1**2 - Z2**2``."""
    return _cf_noncentral_sq(t, pair.mean1, pair.var1) * _cf_noncentral_sq(-t, pair.mean2, pair.var2)


def _tail_bound(pair, T):
    # |phi_Q(t)| <= exp(-mu^2 * 2 s1^2 t^2 / (1 + 4 s1^4 t^2)) / (2 s1 s2 t), decreasing in t
    s1, s2 = pair.var1, pair.var2
    expo = pair.mean1 ** 2 * 2 * s1 * T * T / (1 + 4 * s1 * s1 * T * T)
    expo += pair.mean2 ** 2 * 2 * s2 * T * T / (1 + 4 * s2 * s2 * T * T)
    return math.exp(-expo) / (2 * math.sqrt(s1 * s2) * T)


def pep_gil_pelaez(pair, tol=1e-9):
    """``Pr(Z1**2 - Z2**2 < 0)`` by Gil-Pelaez inversion.

    The integral over t is taken in log(t); below ``t0`` the integrand is
    replaced by its limit ``E[Q]`` and beyond ``T`` by an analytic bound.
    Raises :class:`NumericalError` when the combined error bound exceeds
    ``tol``.
    """
    scale = pair.mean1 ** 2 + pair.mean2 ** 2 + pair.var1 + pair.var2
    t0 = 1e-6 / scale
    mean_q = pair.mean1 ** 2 + pair.var1 - pair.mean2 ** 2 - pair.var2
    head = mean_q * t0

    T = 1.0 / math.sqrt(pair.var1 * pair.var2)
    while _tail_bound(pair, T) > 1e-3 * tol or abs(cf_difference(T, pair)) / T > 1e-12:
        T *= 4.0

    def integrand(u):
        t = math.exp(u)
        return cf_difference(t, pair).imag

    lo, hi = math.log(t0), math.log(T)
    knots = sorted({lo, hi, *(min(max(-math.log(x), lo), hi) for x in (pair.var1, pair.var2, scale))})
    body, err = 0.0, 0.0
    for a, b in zip(knots[:-1], knots[1:]):
        if b <= a:
            continue
        val, e = integrate.quad(integrand, a, b, epsabs=1e-15, epsrel=1e-13, limit=500)
        body += val
        err += e
    # dropped O(t0^3) term of the head and the tail bound
    bound = err + _tail_bound(pair, T) + t0 ** 3 * scale ** 3
    p = 0.5 - (head + body) / math.pi
    if bound / math.pi > tol:
        raise NumericalError(
            f"Gil-Pelaez integral did not converge (bound {bound:.3g})", estimate=p, bound=bound
        )
    return _clamp(p)


def _clamp(p, what="probability"):
    if p < -1e-9 or p > 1 + 1e-9:
        raise NumericalError(f"{what} {p!r} outside [0, 1] before clamping", estimate=p)
    return min(max(p, 0.0), 1.0)


# -- Pearson three-cumulant fit -------------------------------------------

def pearson_params(pair, q=0.0):
    """Chi-square fit of ``Q = var1*(X1 + b1)**2 - var2*X2**2``."""
    d1, d2 = pair.var1, -pair.var2
    b1_sq = pair.mean1 ** 2 / pair.var1
    b2_sq = pair.mean2 ** 2 / pair.var2
    c = [d1 ** k * (1 + k * b1_sq) + d2 ** k * (1 + k * b2_sq) for k in (1, 2, 3)]
    c1, c2, c3 = c
    if c3 == 0:
        v = math.inf
        q_bar = math.inf
    else:
        v = c2 ** 3 / c3 ** 2
        q_bar = (q - c1) * math.sqrt(v / c2) + v
    return PearsonParams(d1, d2, b1_sq, c1, c2, c3, v, q_bar)


def pep_pearson(params):
    """``Pr(Q < q)`` under the fitted chi-square law.

    For ``c3 > 0`` this is the regularised lower incomplete gamma
    ``P(v/2, q_bar/2)``. A negative ``c3`` (competing branch dominates the
    skew) mirrors the fitted law, and ``c3 = 0`` degenerates to the normal
    limit.
    """
    if params.c3 > 0:
        if params.q_bar <= 0:
            return 0.0
        return float(special.gammainc(params.v / 2, params.q_bar / 2))
    if params.c3 < 0:
        upper = 2 * params.v - params.q_bar
        if upper <= 0:
            return 1.0
        return float(special.gammaincc(params.v / 2, upper / 2))
    return float(special.ndtr(-params.c1 / math.sqrt(2 * params.c2)))


# -- Chernoff asymptote ----------------------------------------------------

CHERNOFF_BASE = 2.0 / math.exp(3.0 / 8.0)


CHERNOFF_MARGIN = 10.0


def chernoff_regime(n_ris, snr, margin=CHERNOFF_MARGIN):
    """(low_snr_ok, array_gain_ok) for the asymptote behind the bound.

    The asymptote needs ``N*snr << 1`` and ``N**2*snr >> 1``; "much" is
    read as a factor ``margin``, so the flags are ``N*snr <= 1/margin``
    and ``N**2*snr >= margin``. ``margin=1`` gives the bare inequalities.
    """
    if not margin >= 1:
        raise ConfigurationError("margin", "must be >= 1")
    return n_ris * snr <= 1.0 / margin, n_ris * n_ris * snr >= margin


def pep_chernoff(n_ris, snr, return_flags=False, margin=CHERNOFF_MARGIN):
    """``(2 / e**(3/8)) ** (-(2 N^2 pi / 9) * snr)``.

    The bound is evaluated for any input; ``return_flags=True`` also
    returns ``chernoff_regime`` so callers can tell whether the large-N,
    low-SNR assumptions behind it hold.
    """
    if n_ris < 1:
        raise ConfigurationError("n_ris", "must be >= 1")
    if not snr > 0:
        raise ConfigurationError("snr", "must be positive")
    exponent = -(2 * n_ris * n_ris * math.pi / 9) * snr
    value = CHERNOFF_BASE ** exponent
    if return_flags:
        return value, chernoff_regime(n_ris, snr, margin)
    return value


# -- mixtures and union bounds ---------------------------------------------

def case_weights(n_rx):
    if n_rx < 2:
        raise ConfigurationError("n_rx", "must be >= 2")
    return {Case.I: (n_rx - 2) / n_rx, Case.II: 1 / n_rx, Case.III: 1 / n_rx}


def pep_case(case, n_ris, es, n0, method=Method.GIL_PELAEZ):
    method = Method(method)
    if method is Method.CHERNOFF:
        _check_link(n_ris, es, n0)
        return pep_chernoff(n_ris, es / n0)
    pair = z_params(case, n_ris, es, n0)
    if method is Method.GIL_PELAEZ:
        return pep_gil_pelaez(pair)
    return pep_pearson(pearson_params(pair))


def pep_ssk_mixture(n_rx, n_ris, es, n0, method=Method.GIL_PELAEZ):
    """Antenna-index PEP averaged over where the imaginary target sits."""
    method = Method(method)
    if method is Method.CHERNOFF:
        _check_link(n_ris, es, n0)
        case_weights(n_rx)
        return pep_chernoff(n_ris, es / n0)
    total = 0.0
    for case, w in case_weights(n_rx).items():
        if w > 0:
            total += w * pep_case(case, n_ris, es, n0, method)
    return total


def abep_no_polarity(n_rx, n_ris, es, n0, method=Method.GIL_PELAEZ):
    """Union bound ``(Nr/2) * PEP`` on the bit error rate, clamped to 1."""
    return min(1.0, n_rx / 2 * pep_ssk_mixture(n_rx, n_ris, es, n0, method))


# -- polarity bits ---------------------------------------------------------

def craig_avg_q(mean, variance, scale, rtol=1e-10, nodes=64, max_nodes=1 << 10):
    """``E[Q(sqrt(scale * Y**2))]`` for ``Y ~ N(mean, variance)``.

    Uses Craig's finite-range form of Q with the MGF of ``scale * Y**2``
    and Gauss-Legendre quadrature on [0, pi/2], doubling the node count
    until two successive estimates agree to ``rtol``.
    """
    if not variance > 0:
        raise ConfigurationError("variance", "must be positive")
    if not scale > 0:
        raise ConfigurationError("scale", "must be positive")

    # panel edges follow the two angular scales of the integrand so a
    # tiny variance or a large mean does not starve the quadrature
    half_pi = math.pi / 2
    edges = {0.0, half_pi}
    for width in (math.sqrt(scale * variance), math.sqrt(scale) * abs(mean)):
        for k in range(-2, 4):
            e = width * 10.0 ** k
            if 0 < e < half_pi:
                edges.add(e)
    edges = np.array(sorted(edges))
    lo, hi = edges[:-1], edges[1:]

    def estimate(k):
        x, w = np.polynomial.legendre.leggauss(k)
        half = (hi - lo)[:, None] / 2
        phi = lo[:, None] + half * (x + 1)
        s2 = np.sin(phi) ** 2
        # M_V(-1 / (2 sin^2 phi)) rewritten to stay finite as phi -> 0
        g = s2 + scale * variance
        mgf = np.sqrt(s2 / g) * np.exp(-scale * mean * mean / (2 * g))
        return float(np.sum(half * w * mgf) / math.pi)

    prev = estimate(nodes)
    while nodes < max_nodes:
        nodes *= 2
        cur = estimate(nodes)
        if abs(cur - prev) <= rtol * max(abs(cur), 1e-300):
            return cur
        prev = cur
    raise NumericalError(
        f"Craig quadrature not converged at {nodes} nodes", estimate=prev, bound=abs(cur - prev)
    )


def pep_polarity_given_correct(n_rx, n_ris, es, n0):
    """Polarity error averaged over the targeted-component law (antenna right)."""
    _check_link(n_ris, es, n0)
    mean = n_ris * SQRT_PI_OVER_8
    scale = 2 * es / n0
    same = craig_avg_q(mean, n_ris * _Y_VAR[Case.III], scale)
    diff = craig_avg_q(mean, n_ris * _Y_VAR[Case.I], scale)
    return same / n_rx + (n_rx - 1) / n_rx * diff


def pep_polarity_given_wrong(n_rx, n_ris, es, n0):
    """Polarity error averaged over the competing-component law (antenna wrong)."""
    if n_rx < 2:
        raise ConfigurationError("n_rx", "needs at least two antennas")
    _check_link(n_ris, es, n0)
    scale = 2 * es / n0
    hit_n = craig_avg_q(0.0, n_ris * _YHAT_VAR[Case.II], scale)
    other = craig_avg_q(0.0, n_ris * _YHAT_VAR[Case.I], scale)
    return hit_n / (n_rx - 1) + (n_rx - 2) / (n_rx - 1) * other


def polarity_coefficients(n_rx):
    """Weights (k_correct, k_wrong_right_sign, k_wrong_flipped) of the bound."""
    k = math.log2(n_rx)
    return (
        1 / (k + 1),
        n_rx * k / (2 * (k + 1)),
        (n_rx / 2 * k + n_rx - 1) / (k + 1),
    )


def combine_polarity(n_rx, pep_ssk, pol_correct, pol_wrong):
    c0, c1, c2 = polarity_coefficients(n_rx)
    value = (
        c0 * (1 - (n_rx - 1) * pep_ssk) * pol_correct
        + c1 * pep_ssk * (1 - pol_wrong)
        + c2 * pep_ssk * pol_wrong
    )
    return min(max(value, 0.0), 1.0)


def abep_with_polarity(n_rx, n_ris, es, n0, method=Method.GIL_PELAEZ):
    """Union bound on the bit error rate including both polarity bits."""
    return combine_polarity(
        n_rx,
        pep_ssk_mixture(n_rx, n_ris, es, n0, method),
        pep_polarity_given_correct(n_rx, n_ris, es, n0),
        pep_polarity_given_wrong(n_rx, n_ris, es, n0),
    )
