"""Special functions: Gaussian tail, its inverse, log-gamma and the regularized incomplete gamma.

Everything is double precision on top of :mod:`math`. The incomplete gamma uses the
series / continued-fraction split at ``x = n + 1`` with the prefactor evaluated in log
space, so shape parameters in the millions do not overflow.
"""
import math
import sys
import logging
from dataclasses import dataclass

from covert.errors import ConvergenceError, require

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
FPMIN = sys.float_info.min / sys.float_info.epsilon
GAMMA_EPS = 1.0e-15


@dataclass(frozen=True)
class Tolerance:
    """Stopping rule for the iterative solvers.

    Attributes:
        abs_tol: Absolute residual tolerance
        rel_tol: Residual tolerance relative to the target value
        max_iter: Iteration budget
    """
    abs_tol: float = 1.0e-12
    rel_tol: float = 1.0e-12
    max_iter: int = 200

    def __post_init__(self):
        require(self.abs_tol >= 0.0 and self.rel_tol >= 0.0,
                f"tolerances must be non-negative, got abs_tol={self.abs_tol}, rel_tol={self.rel_tol}")
        require(self.abs_tol > 0.0 or self.rel_tol > 0.0,
                "at least one of abs_tol, rel_tol must be strictly positive")
        require(isinstance(self.max_iter, int) and self.max_iter >= 1,
                f"max_iter must be a positive integer, got {self.max_iter!r}")

    def threshold(self, target: float) -> float:
        """Largest acceptable residual when solving for ``target``."""
        return max(self.abs_tol, self.rel_tol * abs(target))


DEFAULT_TOLERANCE = Tolerance()


def _require_finite(value: float, name: str):
    require(math.isfinite(value), f"{name} must be finite, got {value!r}")


def q_func(x: float) -> float:
    """Standard Gaussian upper-tail probability Q(x) = Pr(Z > x)."""
    _require_finite(x, "x")
    return 0.5 * math.erfc(x / SQRT2)


def _rational_guess(t: float) -> float:
    # Abramowitz & Stegun 26.2.23, |error| < 4.5e-4
    c0, c1, c2 = 2.515517, 0.802853, 0.010328
    d1, d2, d3 = 1.432788, 0.189269, 0.001308
    return t - (c0 + c1 * t + c2 * t * t) / (1.0 + d1 * t + d2 * t * t + d3 * t * t * t)


def q_inv(p: float, max_iter: int = 50) -> float:
    """Inverse of the Gaussian tail function: the x with Q(x) = p.

    A rational approximation seeds Newton iterations on :func:`q_func`.

    Args:
        p: Tail probability, strictly between 0 and 1
        max_iter: Newton iteration budget

    Returns:
        The quantile x

    Raises:
        DomainError: If p is not in the open interval (0, 1)
    """
    require(isinstance(p, (int, float)) and 0.0 < p < 1.0,
            f"q_inv requires 0 < p < 1, got {p!r} (the quantile is infinite at the endpoints)")
    if p == 0.5:
        return 0.0
    if p > 0.5:
        return -q_inv(1.0 - p, max_iter)

    x = _rational_guess(math.sqrt(-2.0 * math.log(p)))
    target_residual = GAMMA_EPS * p
    for _ in range(max_iter):
        residual = q_func(x) - p
        density = INV_SQRT_2PI * math.exp(-0.5 * x * x)
        if density == 0.0:
            break
        step = residual / density
        x += step
        if abs(residual) <= target_residual or abs(step) <= 4.0 * sys.float_info.epsilon * max(1.0, abs(x)):
            break
    return x


def ln_gamma(n: float) -> float:
    """Natural logarithm of the gamma function for n > 0."""
    _require_finite(n, "n")
    require(n > 0.0, f"ln_gamma requires n > 0, got {n}")
    return math.lgamma(n)


def _iteration_budget(n: float) -> int:
    # both expansions need O(sqrt(n)) terms near the transition x ~ n
    return 200 + 20 * math.isqrt(int(n) + 1)


def _log_prefactor(n: float, x: float) -> float:
    return -x + n * math.log(x) - math.lgamma(n)


def _lower_series(n: float, x: float) -> float:
    """Regularized lower function by its power series; valid for x < n + 1."""
    term = 1.0 / n
    total = term
    ap = n
    budget = _iteration_budget(n)
    for _ in range(budget):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * GAMMA_EPS:
            return math.exp(_log_prefactor(n, x) + math.log(total))
    raise ConvergenceError(f"incomplete gamma series did not converge for n={n}, x={x}", iterations=budget)


def _upper_continued_fraction(n: float, x: float) -> float:
    """Regularized upper function by modified Lentz evaluation; valid for x >= n + 1."""
    b = x + 1.0 - n
    c = 1.0 / FPMIN
    d = 1.0 / b
    h = d
    budget = _iteration_budget(n)
    for i in range(1, budget + 1):
        an = -i * (i - n)
        b += 2.0
        d = an * d + b
        if abs(d) < FPMIN:
            d = FPMIN
        c = b + an / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < GAMMA_EPS:
            return math.exp(_log_prefactor(n, x) + math.log(h))
    raise ConvergenceError(f"incomplete gamma continued fraction did not converge for n={n}, x={x}",
                           iterations=budget)


def _check_gamma_args(n: float, x: float):
    _require_finite(n, "n")
    require(n > 0.0, f"incomplete gamma requires n > 0, got {n}")
    require(not math.isnan(x) and x >= 0.0, f"incomplete gamma requires x >= 0, got {x}")


def reg_gamma_lower(n: float, x: float) -> float:
    """Regularized lower incomplete gamma function gamma(n, x) / Gamma(n).

    Args:
        n: Shape parameter, n > 0
        x: Upper integration limit, x >= 0

    Returns:
        Probability in [0, 1]

    Raises:
        DomainError: If n <= 0 or x < 0
    """
    _check_gamma_args(n, x)
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < n + 1.0:
        return min(1.0, _lower_series(n, x))
    return max(0.0, 1.0 - _upper_continued_fraction(n, x))


def reg_gamma_upper(n: float, x: float) -> float:
    """Regularized upper incomplete gamma function, 1 - reg_gamma_lower(n, x).

    Evaluated directly on the continued-fraction side so that small tail
    probabilities keep their relative accuracy.
    """
    _check_gamma_args(n, x)
    if x == 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < n + 1.0:
        return max(0.0, 1.0 - _lower_series(n, x))
    return min(1.0, _upper_continued_fraction(n, x))


def poisson_tail_closed_form(n: int, x: float) -> float:
    """gamma(n, x) / Gamma(n) for integer n via 1 - exp(-x) * sum_{k<n} x^k / k!.

    Used as an independent reference for small integer shapes.
    """
    require(isinstance(n, int) and n >= 1, f"closed form needs a positive integer n, got {n!r}")
    require(x >= 0.0, f"closed form needs x >= 0, got {x}")
    term = 1.0
    total = 0.0
    for k in range(n):
        if k > 0:
            term *= x / k
        total += term
    return 1.0 - math.exp(-x) * total

