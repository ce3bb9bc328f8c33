"""Max-min RIS phase design for the two targeted signal components.

The reflection vector has to make the real part at antenna ``m`` and the
imaginary part at antenna ``n`` both large, with requested signs. The
Lagrange dual of that problem collapses to a single scalar ``lambda1`` in
[0, 1]; for a given ``lambda1`` every element phase has a closed form, and
the optimal ``lambda1`` is the root of the derivative of the convex dual
objective

    g(lambda1) = sum_i sqrt((l*A_i + (1-l)*B_i)**2 + (l*C_i + (1-l)*D_i)**2)

By the envelope theorem ``g'(lambda1)`` is exactly (real branch) minus
(imaginary branch) evaluated at the phases produced by ``lambda1``, so the
root balances both branches and attains the dual bound.

Every function broadcasts over leading axes; the element axis is last.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ConfigurationError, SolverError

DEGENERATE_EPS = 1e-30
DEFAULT_TOL = 1e-10
MAX_ITER = 200


class Boundary(str, enum.Enum):
    INTERIOR = "interior"
    AT_ZERO = "at_zero"
    AT_ONE = "at_one"


class LambdaMode(str, enum.Enum):
    EXACT = "exact"
    FIXED_HALF = "fixed_half"


@dataclass(frozen=True)
class CaseCoefficients:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        shapes = {np.shape(x) for x in (self.a, self.b, self.c, self.d)}
        if len(shapes) != 1:
            raise DimensionError(f"coefficient vectors differ in shape: {sorted(shapes)}")

    @property
    def n(self):
        return np.shape(self.a)[-1]

    def mixed(self, lambda1):
        """Numerators (p, q) of the closed-form phases for ``lambda1``."""
        lam = np.asarray(lambda1, dtype=float)[..., None]
        p = lam * self.a + (1.0 - lam) * self.b
        q = lam * self.c + (1.0 - lam) * self.d
        return p, q


@dataclass(frozen=True)
class DualSolution:
    lambda1: float
    boundary: Boundary
    residual: float
    iterations: int = 0
    degenerate: bool = False


@dataclass(frozen=True)
class PhaseVector:
    theta_r: np.ndarray
    theta_i: np.ndarray
    degenerate: np.ndarray = field(default=None, compare=False)

    @property
    def complex(self):
        return self.theta_r + 1j * self.theta_i

    def __len__(self):
        return np.shape(self.theta_r)[-1]


def _sign_array(s, name):
    s = np.asarray(s)
    if not np.all(np.isin(s, (-1, 1))):
        raise ConfigurationError(name, "polarity must be +1 or -1")
    return s.astype(float)


def case_coefficients(h_m, h_n, d_r=1, d_i=1):
    """Coefficients of the sign-absorbed problem.

    With ``d_r = d_i = +1`` this is the plain case where both targeted
    components must be non-negative; a negative target flips the sign of
    the corresponding coefficient pair, which maps all four polarity
    combinations onto the same dual problem.
    """
    h_m = np.asarray(h_m, dtype=complex)
    h_n = np.asarray(h_n, dtype=complex)
    if h_m.shape != h_n.shape:
        raise DimensionError(f"h_m has shape {h_m.shape} but h_n has {h_n.shape}")
    sr = _sign_array(d_r, "d_r")[..., None]
    si = _sign_array(d_i, "d_i")[..., None]
    return CaseCoefficients(
        a=sr * h_m.real,
        b=si * h_n.imag,
        c=-sr * h_m.imag,
        d=si * h_n.real,
    )


def _derivative(lambda1, coeffs):
    p, q = coeffs.mixed(lambda1)
    rho = np.hypot(p, q)
    ok = rho >= DEGENERATE_EPS
    num = (coeffs.a - coeffs.b) * p + (coeffs.c - coeffs.d) * q
    terms = np.where(ok, num / np.where(ok, rho, 1.0), 0.0)
    return terms.sum(axis=-1), ~ok.all(axis=-1)


def dual_objective_derivative(lambda1, coeffs, return_flag=False):
    """Derivative of the dual objective with respect to ``lambda1``.

    Terms whose denominator falls below 1e-30 are dropped; pass
    ``return_flag=True`` to also get whether any term was dropped.
    """
    value, flag = _derivative(lambda1, coeffs)
    if np.ndim(value) == 0:
        value, flag = float(value), bool(flag)
    return (value, flag) if return_flag else value


def dual_objective(lambda1, coeffs):
    """The convex function ``g(lambda1)`` whose minimiser is ``lambda1*``."""
    p, q = coeffs.mixed(lambda1)
    return np.hypot(p, q).sum(axis=-1)


def _safe_ratio_sum(num, den_sq):
    den = np.sqrt(den_sq)
    ok = den >= DEGENERATE_EPS
    return np.where(ok, num / np.where(ok, den, 1.0), 0.0).sum(axis=-1)


def boundary_sums(coeffs):
    """(beta, alpha): positive beta means lambda1 = 1, positive alpha lambda1 = 0."""
    a, b, c, d = coeffs.a, coeffs.b, coeffs.c, coeffs.d
    cross = a * b + c * d
    beta = _safe_ratio_sum(cross - (a * a + c * c), a * a + c * c)
    alpha = _safe_ratio_sum(cross - (b * b + d * d), b * b + d * d)
    return beta, alpha


def check_boundary(coeffs):
    """Return 1.0 or 0.0 when a KKT boundary case holds, else None."""
    beta, alpha = boundary_sums(coeffs)
    if beta > 0:
        return 1.0
    if alpha > 0:
        return 0.0
    return None


def solve_lambda_batch(coeffs, tol=DEFAULT_TOL, max_iter=MAX_ITER):
    """Vectorised solver.

    Returns ``(lambda1, code)`` arrays where code is 0 interior,
    1 boundary at zero, 2 boundary at one.
    """
    if not tol > 0:
        raise ConfigurationError("tol", "must be positive")
    beta, alpha = boundary_sums(coeffs)
    at_one = beta > 0
    at_zero = (alpha > 0) & ~at_one
    interior = ~(at_one | at_zero)

    lo = np.zeros(np.shape(beta))
    hi = np.ones(np.shape(beta))
    if np.any(interior):
        f_lo, _ = _derivative(lo, coeffs)
        f_hi, _ = _derivative(hi, coeffs)
        bad = interior & ((f_lo > 0) | (f_hi < 0))
        if np.any(bad):
            raise SolverError(
                "no sign change of the dual derivative on [0, 1] although no "
                "boundary condition holds; coefficients are inconsistent"
            )
        n_iter = 0
        while n_iter < max_iter and np.max(np.where(interior, hi - lo, 0.0)) > tol:
            mid = 0.5 * (lo + hi)
            f_mid, _ = _derivative(mid, coeffs)
            go_right = f_mid < 0
            lo = np.where(go_right, mid, lo)
            hi = np.where(go_right, hi, mid)
            n_iter += 1
    lam = np.where(interior, 0.5 * (lo + hi), np.where(at_one, 1.0, 0.0))
    code = np.where(at_one, 2, np.where(at_zero, 1, 0))
    return lam, code


def solve_lambda(coeffs, tol=DEFAULT_TOL):
    """Optimal dual variable for a single instance."""
    if np.ndim(coeffs.a) != 1:
        raise DimensionError("solve_lambda expects one instance; use solve_lambda_batch")
    beta, alpha = boundary_sums(coeffs)
    if beta > 0:
        value, flag = dual_objective_derivative(1.0, coeffs, return_flag=True)
        return DualSolution(1.0, Boundary.AT_ONE, value, 0, flag)
    if alpha > 0:
        value, flag = dual_objective_derivative(0.0, coeffs, return_flag=True)
        return DualSolution(0.0, Boundary.AT_ZERO, value, 0, flag)
    if not tol > 0:
        raise ConfigurationError("tol", "must be positive")

    lo, hi = 0.0, 1.0
    if dual_objective_derivative(lo, coeffs) > 0 or dual_objective_derivative(hi, coeffs) < 0:
        raise SolverError("dual derivative does not change sign on [0, 1]")
    it = 0
    while hi - lo > tol and it < MAX_ITER:
        mid = 0.5 * (lo + hi)
        if dual_objective_derivative(mid, coeffs) < 0:
            lo = mid
        else:
            hi = mid
        it += 1
    lam = 0.5 * (lo + hi)
    value, flag = dual_objective_derivative(lam, coeffs, return_flag=True)
    return DualSolution(lam, Boundary.INTERIOR, value, it, flag)


def compute_phases(lambda1, coeffs):
    """Closed-form unit-modulus phases for a given ``lambda1``.

    Elements whose numerators both vanish get theta = 1 and are flagged
    in ``PhaseVector.degenerate``.
    """
    lam = np.asarray(lambda1, dtype=float)
    if np.any((lam < 0) | (lam > 1)):
        raise ConfigurationError("lambda1", "must lie in [0, 1]")
    p, q = coeffs.mixed(lam)
    rho = np.hypot(p, q)
    bad = rho < DEGENERATE_EPS
    safe = np.where(bad, 1.0, rho)
    theta_r = np.where(bad, 1.0, p / safe)
    theta_i = np.where(bad, 0.0, q / safe)
    return PhaseVector(theta_r, theta_i, bad)


def optimize(h_m, h_n, d_r=1, d_i=1, mode=LambdaMode.EXACT, tol=DEFAULT_TOL):
    """Phases for target antennas ``(m, n)`` and polarities ``(d_r, d_i)``.

    Inputs may carry leading batch axes, in which case the vectorised
    solver is used.
    """
    mode = LambdaMode(mode)
    coeffs = case_coefficients(h_m, h_n, d_r, d_i)
    if mode is LambdaMode.FIXED_HALF:
        lam = np.full(np.shape(coeffs.a)[:-1], 0.5)
    elif np.ndim(coeffs.a) == 1:
        lam = solve_lambda(coeffs, tol).lambda1
    else:
        lam, _ = solve_lambda_batch(coeffs, tol)
    return compute_phases(lam, coeffs)


def branch_values(h_m, h_n, theta):
    """Noiseless targeted components: Re(h_m . theta) and Im(h_n . theta)."""
    theta = theta.complex if isinstance(theta, PhaseVector) else np.asarray(theta)
    real_branch = np.sum(np.asarray(h_m) * theta, axis=-1).real
    imag_branch = np.sum(np.asarray(h_n) * theta, axis=-1).imag
    return real_branch, imag_branch
