"""Per-element moments behind the Gaussian decision statistics.

Closed forms are kept as exact ``a + b*pi`` (or ``k*sqrt(pi)``) values and
checked against a brute-force sampler of the defining random expressions,
with (A, B, C, D) i.i.d. N(0, 1/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .analytic import Case
from .channel import _as_generator
from .errors import ConfigurationError

SQRT_PI = math.sqrt(math.pi)
SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class PiLinear:
    """Exact value ``rational + pi_coeff * pi``."""

    rational: Fraction
    pi_coeff: Fraction = Fraction(0)

    def __float__(self):
        return float(self.rational) + float(self.pi_coeff) * math.pi

    def __add__(self, other):
        return PiLinear(self.rational + other.rational, self.pi_coeff + other.pi_coeff)

    def __sub__(self, other):
        return PiLinear(self.rational - other.rational, self.pi_coeff - other.pi_coeff)

    def scale(self, k):
        k = Fraction(k)
        return PiLinear(self.rational * k, self.pi_coeff * k)


def _f(x):
    return PiLinear(Fraction(x))


# E{Y}^2 = pi/8 in every case; kept exact so V{Y} can be rebuilt symbolically
E_Y_SQUARED = PiLinear(Fraction(0), Fraction(1, 8))

E_U1 = Fraction(5, 16)
E_U3 = Fraction(3, 16)
E_U4 = Fraction(-1, 16)
E_UHAT1 = Fraction(3, 16)
E_UHAT3 = Fraction(-1, 8)


def v_y_from_second_moments():
    """``2 E{U1} + E{U3} + E{U4} - E{Y}^2`` as an exact ``a + b*pi``."""
    return _f(2 * E_U1 + E_U3 + E_U4) - E_Y_SQUARED


V_Y_EXACT = {
    Case.I: PiLinear(Fraction(6, 8), Fraction(-1, 8)),
    Case.II: PiLinear(Fraction(6, 8), Fraction(-1, 8)),
    Case.III: PiLinear(Fraction(4, 8), Fraction(-1, 8)),
}

V_YHAT_EXACT = {
    Case.I: Fraction(1, 2),
    Case.II: 2 * E_UHAT1 + E_UHAT3,
    Case.III: Fraction(1, 2),
}


@dataclass(frozen=True)
class MomentSet:
    case: Case
    e_y: float
    v_y: float
    e_yhat: float
    v_yhat: float
    e_w1: float | None = None
    e_w3: float | None = None
    e_u1: float | None = None
    e_u3: float | None = None
    e_u4: float | None = None
    e_uhat1: float | None = None
    e_uhat3: float | None = None

    def fields(self):
        return {
            k: v for k, v in self.__dict__.items() if k != "case" and v is not None
        }


@dataclass(frozen=True)
class SamplingReport:
    estimate: float
    std_error: float
    closed_form: float

    @property
    def z_score(self):
        if self.std_error == 0:
            return 0.0 if self.estimate == self.closed_form else math.inf
        return (self.estimate - self.closed_form) / self.std_error


def closed_form_moments(case):
    case = Case(case)
    e_y = SQRT_PI / (2 * SQRT2)
    common = dict(case=case, e_y=e_y, v_y=float(V_Y_EXACT[case]), e_yhat=0.0,
                  v_yhat=float(V_YHAT_EXACT[case]))
    if case is Case.III:
        return MomentSet(**common)
    extra = dict(
        e_w1=3 * SQRT_PI / (8 * SQRT2),
        e_w3=-SQRT_PI / (8 * SQRT2),
        e_u1=float(E_U1),
        e_u3=float(E_U3),
        e_u4=float(E_U4),
    )
    if case is Case.II:
        extra.update(e_uhat1=float(E_UHAT1), e_uhat3=float(E_UHAT3))
    return MomentSet(**common, **extra)


class _Accumulator:
    """Streaming power sums, shifted by the first chunk's mean for stability."""

    def __init__(self):
        self.shift = {}
        self.sums = {}

    def add(self, name, x):
        x = np.asarray(x, dtype=float)
        if name not in self.shift:
            self.shift[name] = float(x.mean())
            self.sums[name] = np.zeros(4)
        d = x - self.shift[name]
        self.sums[name] += [np.sum(d ** p) for p in (1, 2, 3, 4)]

    def mean(self, name, n):
        m1, m2 = self.sums[name][:2] / n
        return self.shift[name] + m1, math.sqrt(max(m2 - m1 * m1, 0.0) / n)

    def variance(self, name, n):
        m1, m2, m3, m4 = self.sums[name] / n
        c2 = m2 - m1 * m1
        c4 = m4 - 4 * m1 * m3 + 6 * m1 * m1 * m2 - 3 * m1 ** 4
        return c2 * n / (n - 1), math.sqrt(max(c4 - c2 * c2, 0.0) / n)


def _draw(gen, size, k):
    return np.sqrt(0.5) * gen.standard_normal((k, size))


def _sample_terms(case, gen, size):
    a, b, c, d, a_hat, c_hat = _draw(gen, size, 6)
    if case is Case.III:
        # m == n: A = D and C = -B
        d, c = a, -b
    z = (a + b) ** 2 + (c + d) ** 2
    root = np.sqrt(z)
    out = {"e_y": (a * a + c * c + a * b + c * d) / root}
    theta_r, theta_i = (a + b) / root, (c + d) / root
    if case is Case.II:
        out["e_yhat"] = (d * (a + b) - b * (c + d)) / root
    else:
        out["e_yhat"] = a_hat * theta_r + c_hat * theta_i
    if case is not Case.III:
        out["e_w1"] = a * a / root
        out["e_w3"] = a * b / root
        out["e_u1"] = (a ** 4 + a * a * b * b + 2 * a ** 3 * b) / z
        out["e_u3"] = (2 * a * a * c * d + 2 * a * a * c * c) / z
        out["e_u4"] = (2 * a * b * c * c + 2 * a * b * c * d) / z
    if case is Case.II:
        out["e_uhat1"] = d * d * (a + b) ** 2 / z
        out["e_uhat3"] = -2 * b * d * (a + b) * (c + d) / z
    return out


def empirical_moments(case, samples, rng, chunk=1_000_000):
    """Sample estimates of every field of :func:`closed_form_moments`.

    Returns ``(MomentSet, {field: SamplingReport})``.
    """
    case = Case(case)
    if samples < 10_000:
        raise ConfigurationError("samples", "need at least 1e4 samples")
    gen = _as_generator(rng)
    acc = _Accumulator()
    done = 0
    while done < samples:
        k = min(chunk, samples - done)
        for name, x in _sample_terms(case, gen, k).items():
            acc.add(name, x)
        done += k

    closed = closed_form_moments(case).fields()
    est, reports = {}, {}
    for name, target in closed.items():
        if name in ("v_y", "v_yhat"):
            src = "e_y" if name == "v_y" else "e_yhat"
            value, se = acc.variance(src, samples)
        else:
            value, se = acc.mean(name, samples)
        est[name] = value
        reports[name] = SamplingReport(value, se, target)
    return MomentSet(case=case, **est), reports


def ratio_moment_oracle(samples, rng, term="e_u4", chunk=1_000_000):
    """Direct sampling check of one of the ratio-type expectations.

    ``term`` is ``e_u4`` (default), ``e_u3`` or ``e_uhat3``.
    """
    if samples < 1_000_000:
        raise ConfigurationError("samples", "need at least 1e6 samples")
    targets = {"e_u4": E_U4, "e_u3": E_U3, "e_uhat3": E_UHAT3}
    if term not in targets:
        raise ConfigurationError("term", f"unknown term {term!r}")
    case = Case.II if term == "e_uhat3" else Case.I
    gen = _as_generator(rng)
    acc = _Accumulator()
    done = 0
    while done < samples:
        k = min(chunk, samples - done)
        acc.add(term, _sample_terms(case, gen, k)[term])
        done += k
    value, se = acc.mean(term, samples)
    return SamplingReport(value, se, float(targets[term]))


def exact_lambda_yhat_variance(n_ris, realizations, rng):
    """Sample variance of the competing component under the optimised phases.

    Reported for comparison with the lambda1 = 1/2 value of 1/2 per element;
    not a closed form.
    """
    from .optimizer import solve_lambda_batch, case_coefficients, compute_phases
    from .channel import complex_normal

    gen = _as_generator(rng)
    h = complex_normal(gen, (realizations, 3, n_ris))
    coeffs = case_coefficients(h[:, 0], h[:, 1])
    lam, _ = solve_lambda_batch(coeffs)
    th = compute_phases(lam, coeffs)
    yhat = (h[:, 2].real * th.theta_r - h[:, 2].imag * th.theta_i).sum(axis=-1)
    return float(np.var(yhat, ddof=1) / n_ris)
