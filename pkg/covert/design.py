"""Covert throughput design: transmit over the whole block, solve for the power, then pick the rate.

The maximum power P* per channel use meets the covertness budget with n = N. Under the KL
formulation this is the root of f(P / s_w^2) = 2 eps^2 / N with

    f(g) = ln(1 + g) - g / (1 + g),

which is strictly increasing, so a doubling bracket plus bisection always converges. The
exact formulation instead keeps the radiometer's total error at or above 1 - eps.
Given P*, the throughput N R (1 - delta) is maximised over delta with R from the
normal approximation (clamped at zero).
"""
import enum
import math
import logging
from dataclasses import dataclass, asdict
from typing import Callable, List, Tuple

from covert.channel import (
    ChannelParams,
    CodingPoint,
    LN2,
    channel_dispersion,
    delta_from_snr,
    effective_throughput,
    rate_from_snr,
    shannon_capacity,
)
from covert.detection import kl_per_use, scan_total_error, total_error
from covert.errors import ConvergenceError, DomainError, require
from covert.specfun import DEFAULT_TOLERANCE, Tolerance

logger = logging.getLogger(__name__)

EPSILON_MAX = 0.5
DELTA_MIN = 1.0e-9
DELTA_MAX = 1.0 - 1.0e-9
DELTA_GRID_POINTS = 64
RATE_GRID_POINTS = 64
OPTIMIZER_TOL = 1.0e-9
TIE_RTOL = 1.0e-12
GAMMA_DAGGER_BRACKET = (1.0, 4.0)
MAX_DOUBLINGS = 1100
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class ConstraintMode(str, enum.Enum):
    KL = "kl"
    EXACT = "exact"


class SolverPath(str, enum.Enum):
    KL_BISECTION = "kl-bisection"
    EXACT_BISECTION = "exact-bisection"
    EXACT_SCAN_REFINE = "exact-scan-refine"


@dataclass(frozen=True)
class CovertConstraint:
    """Covertness budget eps in (0, 0.5] and the formulation that enforces it."""
    epsilon: float
    mode: ConstraintMode = ConstraintMode.KL

    def __post_init__(self):
        require(isinstance(self.epsilon, (int, float)) and 0.0 < self.epsilon <= EPSILON_MAX,
                f"epsilon must lie in (0, {EPSILON_MAX}], got {self.epsilon!r}")
        object.__setattr__(self, "mode", ConstraintMode(self.mode))

    @property
    def kl_budget(self) -> float:
        """Largest KL divergence allowed, 2 eps^2."""
        return 2.0 * self.epsilon ** 2


@dataclass(frozen=True)
class RootResult:
    root: float
    iterations: int
    residual: float


@dataclass(frozen=True)
class PowerSolution:
    power: float
    iterations: int
    residual: float
    path: SolverPath


@dataclass(frozen=True)
class DesignResult:
    """Optimal operating point for a block of N channel uses.

    ``iterations`` and ``residual`` describe the power solve; ``residual`` is the relative
    KL residual in KL mode and xi - (1 - eps) in exact mode.
    """
    n_star: int
    p_star: float
    r_star: float
    delta_star: float
    eta_star: float
    total_power: float
    iterations: int
    residual: float
    epsilon: float
    mode: ConstraintMode
    sigma_b2: float
    sigma_w2: float
    solver_path: SolverPath
    optimizer_iterations: int = 0

    @property
    def eta_per_use(self) -> float:
        return self.eta_star / self.n_star

    def as_row(self) -> dict:
        row = asdict(self)
        row["mode"] = self.mode.value
        row["solver_path"] = self.solver_path.value
        row["eta_per_use"] = self.eta_per_use
        return row


def f_gamma(gamma_w: float) -> float:
    """KL divergence per channel use, ln(1 + g) - g / (1 + g); f(0) = 0, strictly increasing."""
    return kl_per_use(gamma_w)


def g_gamma(gamma_w: float) -> float:
    """f(g) / g = ln(1 + g) / g - 1 / (1 + g); rises up to g-dagger and falls beyond it."""
    require(gamma_w > 0.0, f"g is defined for gamma_w > 0 only, got {gamma_w}")
    return f_gamma(gamma_w) / gamma_w


def h_gamma(gamma_w: float) -> float:
    """2 g^2 + g - (1 + g)^2 ln(1 + g): the sign of the derivative of g, up to a positive factor."""
    require(gamma_w >= 0.0, f"h is defined for gamma_w >= 0, got {gamma_w}")
    return 2.0 * gamma_w ** 2 + gamma_w - (1.0 + gamma_w) ** 2 * math.log1p(gamma_w)


def bisect(func: Callable[[float], float], lo: float, hi: float, target: float = 0.0,
           tol: Tolerance = DEFAULT_TOLERANCE) -> RootResult:
    """Find x in [lo, hi] with func(x) = target by bisection.

    Stops once |func(x) - target| is within ``tol.threshold(target)``, or when the bracket
    can no longer be split in floating point.

    Raises:
        DomainError: If func(lo) - target and func(hi) - target have the same strict sign
        ConvergenceError: If ``tol.max_iter`` halvings do not meet the tolerance
    """
    r_lo = func(lo) - target
    r_hi = func(hi) - target
    limit = tol.threshold(target)
    if abs(r_lo) <= limit:
        return RootResult(lo, 0, r_lo)
    if abs(r_hi) <= limit:
        return RootResult(hi, 0, r_hi)
    if (r_lo > 0.0) == (r_hi > 0.0):
        raise DomainError(f"bracket [{lo}, {hi}] does not straddle the target {target}")

    best = (lo, r_lo) if abs(r_lo) < abs(r_hi) else (hi, r_hi)
    for iteration in range(1, tol.max_iter + 1):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            logger.debug(f"Bisection bracket exhausted at {mid} after {iteration} iterations")
            return RootResult(best[0], iteration, best[1])
        r_mid = func(mid) - target
        if abs(r_mid) < abs(best[1]):
            best = (mid, r_mid)
        if abs(r_mid) <= limit:
            return RootResult(mid, iteration, r_mid)
        if (r_mid > 0.0) == (r_lo > 0.0):
            lo, r_lo = mid, r_mid
        else:
            hi = mid
    raise ConvergenceError(
        f"bisection did not reach tolerance {limit:g} in {tol.max_iter} iterations",
        iterations=tol.max_iter,
        residual=best[1],
    )


def golden_section_max(func: Callable[[float], float], lo: float, hi: float,
                       tol: float = OPTIMIZER_TOL, max_iter: int = 200) -> Tuple[float, float, int]:
    """Maximise a unimodal ``func`` on [lo, hi] until the bracket is narrower than ``tol``.

    Returns:
        Tuple (x, func(x), iterations)
    """
    c = hi - GOLDEN * (hi - lo)
    d = lo + GOLDEN * (hi - lo)
    fc, fd = func(c), func(d)
    iterations = 0
    while hi - lo > tol and iterations < max_iter:
        iterations += 1
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - GOLDEN * (hi - lo)
            fc = func(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + GOLDEN * (hi - lo)
            fd = func(d)
    if fc >= fd:
        return c, fc, iterations
    return d, fd, iterations


def _grid_argmax(points: List[float], values: List[float]) -> int:
    """Index of the largest value; ties within TIE_RTOL go to the earliest point."""
    best = 0
    for k in range(1, len(points)):
        if values[k] - values[best] > TIE_RTOL * abs(values[best]):
            best = k
    return best


def gamma_dagger(tol: Tolerance = DEFAULT_TOLERANCE) -> float:
    """The positive root of h, where g peaks (about 2.1626)."""
    lo, hi = GAMMA_DAGGER_BRACKET
    return bisect(h_gamma, lo, hi, 0.0, tol).root


def solve_kl_snr(kl_per_use_target: float, tol: Tolerance = DEFAULT_TOLERANCE) -> RootResult:
    """Solve f(g) = ``kl_per_use_target`` for g >= 0.

    The residual test is purely relative to the target.
    """
    require(kl_per_use_target >= 0.0, f"KL target must be non-negative, got {kl_per_use_target}")
    if kl_per_use_target == 0.0:
        return RootResult(0.0, 0, 0.0)
    hi = 1.0
    doublings = 0
    while f_gamma(hi) <= kl_per_use_target:
        hi *= 2.0
        doublings += 1
        if doublings > MAX_DOUBLINGS or math.isinf(hi):
            raise ConvergenceError(f"could not bracket f(g) = {kl_per_use_target}", iterations=doublings)
    relative = Tolerance(abs_tol=0.0, rel_tol=tol.rel_tol, max_iter=tol.max_iter)
    result = bisect(f_gamma, 0.0, hi, kl_per_use_target, relative)
    logger.debug(f"f(g) = {kl_per_use_target:.6g} solved at g = {result.root:.12g} "
                 f"({doublings} doublings, {result.iterations} bisections)")
    return RootResult(result.root, result.iterations + doublings, result.residual / kl_per_use_target)


def _require_block(N: int):
    require(isinstance(N, int) and not isinstance(N, bool) and N >= 1,
            f"maximum blocklength must be a positive integer, got {N!r}")


def _kl_power(N: int, constraint: CovertConstraint, sigma_w2: float, tol: Tolerance) -> PowerSolution:
    _require_block(N)
    require(sigma_w2 > 0.0, f"sigma_w2 must be positive, got {sigma_w2}")
    root = solve_kl_snr(constraint.kl_budget / N, tol)
    return PowerSolution(sigma_w2 * root.root, root.iterations, root.residual, SolverPath.KL_BISECTION)


def solve_p_star_kl(N: int, constraint: CovertConstraint, sigma_w2: float,
                    tol: Tolerance = DEFAULT_TOLERANCE) -> float:
    """Maximum power per channel use with D(P0 || P1) = 2 eps^2 over N observations.

    This is the fixed point P = (s^2 + P)[ln(P / s^2 + 1) - 2 eps^2 / N], solved as the root
    of f(P / s^2) = 2 eps^2 / N.
    """
    return _kl_power(N, constraint, sigma_w2, tol).power


def _exact_power(N: int, constraint: CovertConstraint, sigma_w2: float, tol: Tolerance) -> PowerSolution:
    _require_block(N)
    target = 1.0 - constraint.epsilon

    def xi(power: float) -> float:
        return total_error(ChannelParams(sigma_w2=sigma_w2, power=power), N).xi

    # the KL power is feasible by Pinsker's inequality
    p_lo = _kl_power(N, constraint, sigma_w2, tol).power
    p_hi = 2.0 * p_lo
    doublings = 0
    while xi(p_hi) >= target:
        p_lo, p_hi = p_hi, 2.0 * p_hi
        doublings += 1
        if doublings > MAX_DOUBLINGS or math.isinf(p_hi):
            raise ConvergenceError(f"could not bracket xi = {target} for N={N}", iterations=doublings)

    scan = scan_total_error(sigma_w2, N, p_hi)
    if scan.monotone:
        path = SolverPath.EXACT_BISECTION
    else:
        path = SolverPath.EXACT_SCAN_REFINE
        logger.warning(f"Falling back to scan refinement for the exact power solve at N={N}")
        feasible = [k for k, value in enumerate(scan.xi) if value >= target]
        if feasible:
            last = feasible[-1]
            p_lo = scan.powers[last]
            if last + 1 < len(scan.powers):
                p_hi = scan.powers[last + 1]
        else:
            p_hi = scan.powers[0]
            p_lo = 0.0

    # keep p_lo feasible and p_hi infeasible while the bracket shrinks
    iterations = doublings
    for _ in range(tol.max_iter):
        if p_hi - p_lo <= max(tol.abs_tol, tol.rel_tol * p_hi):
            break
        mid = 0.5 * (p_lo + p_hi)
        if mid <= p_lo or mid >= p_hi:
            break
        iterations += 1
        if xi(mid) >= target:
            p_lo = mid
        else:
            p_hi = mid
    else:
        raise ConvergenceError(f"exact power bisection did not converge for N={N}",
                               iterations=iterations, residual=p_hi - p_lo)
    residual = xi(p_lo) - target
    return PowerSolution(p_lo, iterations, residual, path)


def solve_p_star_exact(N: int, constraint: CovertConstraint, sigma_w2: float,
                       tol: Tolerance = DEFAULT_TOLERANCE) -> float:
    """Largest power per channel use with P_F + P_M >= 1 - eps over N observations.

    The solve starts from the KL power (always feasible), scans the total error on 200 points
    to confirm it decreases in power, and bisects; a non-monotone scan switches to refining
    the last feasible grid cell instead.
    """
    return _exact_power(N, constraint, sigma_w2, tol).power


def solve_power(N: int, constraint: CovertConstraint, sigma_w2: float,
                tol: Tolerance = DEFAULT_TOLERANCE) -> PowerSolution:
    """Dispatch to the KL or exact power solve with full diagnostics."""
    if constraint.mode is ConstraintMode.EXACT:
        return _exact_power(N, constraint, sigma_w2, tol)
    return _kl_power(N, constraint, sigma_w2, tol)


def _clamped_rate(gamma_b: float, n: int, delta: float) -> float:
    return max(0.0, rate_from_snr(gamma_b, n, delta))


def throughput_at_delta(gamma_b: float, n: int, delta: float) -> float:
    """N R (1 - delta) with R from the normal approximation, zero where R would be negative."""
    return n * _clamped_rate(gamma_b, n, delta) * (1.0 - delta)


def delta_grid(points: int = DELTA_GRID_POINTS) -> List[float]:
    """Log-spaced decoding error grid from DELTA_MIN to DELTA_MAX."""
    a, b = math.log10(DELTA_MIN), math.log10(DELTA_MAX)
    grid = [10.0 ** (a + (b - a) * k / (points - 1)) for k in range(points)]
    grid[0], grid[-1] = DELTA_MIN, DELTA_MAX
    return grid


def maximize_over_delta(gamma_b: float, n: int) -> Tuple[float, float, int]:
    """Throughput-maximising delta: grid seed plus golden section.

    Returns:
        Tuple (delta, throughput, iterations)
    """
    grid = delta_grid()
    values = [throughput_at_delta(gamma_b, n, d) for d in grid]
    k = _grid_argmax(grid, values)
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]

    def objective(delta: float) -> float:
        return throughput_at_delta(gamma_b, n, delta)

    delta, value, iterations = golden_section_max(objective, lo, hi)
    if values[k] > value or (values[k] >= value - TIE_RTOL * abs(value) and grid[k] <= delta):
        return grid[k], values[k], iterations
    return delta, value, iterations


def _result(N: int, constraint: CovertConstraint, sigma_b2: float, sigma_w2: float,
            power: PowerSolution, rate: float, delta: float, optimizer_iterations: int) -> DesignResult:
    point = CodingPoint(n=N, rate=rate, delta=delta)
    return DesignResult(
        n_star=N,
        p_star=power.power,
        r_star=rate,
        delta_star=delta,
        eta_star=effective_throughput(point),
        total_power=N * power.power,
        iterations=power.iterations,
        residual=power.residual,
        epsilon=constraint.epsilon,
        mode=constraint.mode,
        sigma_b2=sigma_b2,
        sigma_w2=sigma_w2,
        solver_path=power.path,
        optimizer_iterations=optimizer_iterations,
    )


def optimize_design(N: int, constraint: CovertConstraint, sigma_b2: float, sigma_w2: float,
                    tol: Tolerance = DEFAULT_TOLERANCE) -> DesignResult:
    """Full design for a block of N channel uses.

    Uses all N channel uses, solves the power under the constraint's formulation and
    maximises N R (1 - delta) over delta in (1e-9, 1 - 1e-9).

    Args:
        N: Maximum (and, at the optimum, actual) blocklength
        constraint: Covertness budget and formulation
        sigma_b2: Noise power at Bob
        sigma_w2: Noise power at Willie
        tol: Root-finding tolerance

    Returns:
        DesignResult with n* = N

    Raises:
        DomainError: On invalid inputs
        ConvergenceError: If the power solve fails
    """
    params = ChannelParams(sigma_b2=sigma_b2, sigma_w2=sigma_w2)
    power = solve_power(N, constraint, params.sigma_w2, tol)
    gamma_b = power.power / params.sigma_b2
    delta, _, iterations = maximize_over_delta(gamma_b, N)
    rate = _clamped_rate(gamma_b, N, delta)
    result = _result(N, constraint, sigma_b2, sigma_w2, power, rate, delta, iterations)
    logger.info(f"Design N={N} eps={constraint.epsilon} mode={constraint.mode.value}: "
                f"P*={result.p_star:.6g} delta*={result.delta_star:.4g} eta*={result.eta_star:.6g}")
    return result


def design_at_delta(N: int, constraint: CovertConstraint, sigma_b2: float, sigma_w2: float,
                    delta: float, tol: Tolerance = DEFAULT_TOLERANCE) -> DesignResult:
    """Operating point with n = N, P = P* and a caller-chosen decoding error probability."""
    require(0.0 < delta < 1.0, f"delta must lie in (0, 1), got {delta}")
    params = ChannelParams(sigma_b2=sigma_b2, sigma_w2=sigma_w2)
    power = solve_power(N, constraint, params.sigma_w2, tol)
    rate = _clamped_rate(power.power / params.sigma_b2, N, delta)
    return _result(N, constraint, sigma_b2, sigma_w2, power, rate, delta, 0)


def optimize_rate(N: int, constraint: CovertConstraint, sigma_b2: float, sigma_w2: float,
                  tol: Tolerance = DEFAULT_TOLERANCE) -> DesignResult:
    """Same optimum as :func:`optimize_design`, searched over the rate instead of delta.

    Maximises N R (1 - delta(P*, N, R)) for R between 0 and a rate where decoding
    almost surely fails.
    """
    params = ChannelParams(sigma_b2=sigma_b2, sigma_w2=sigma_w2)
    power = solve_power(N, constraint, params.sigma_w2, tol)
    gamma_b = power.power / params.sigma_b2
    r_max = (shannon_capacity(gamma_b) + math.log2(N) / (2.0 * N)
             + 8.0 * math.sqrt(channel_dispersion(gamma_b) / N) / LN2)

    def objective(rate: float) -> float:
        return N * rate * (1.0 - delta_from_snr(gamma_b, N, rate))

    grid = [r_max * k / (RATE_GRID_POINTS - 1) for k in range(RATE_GRID_POINTS)]
    values = [objective(r) for r in grid]
    k = _grid_argmax(grid, values)
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    rate, _, iterations = golden_section_max(objective, lo, hi, tol=OPTIMIZER_TOL * max(r_max, 1.0))
    delta = delta_from_snr(gamma_b, N, rate)
    return _result(N, constraint, sigma_b2, sigma_w2, power, rate, delta, iterations)


def constrained_gamma(n: float, epsilon: float, tol: Tolerance = DEFAULT_TOLERANCE) -> float:
    """SNR at Willie that spends the whole KL budget over n observations (n may be fractional)."""
    require(n > 0.0, f"n must be positive, got {n}")
    require(0.0 < epsilon <= EPSILON_MAX, f"epsilon must lie in (0, {EPSILON_MAX}], got {epsilon}")
    return solve_kl_snr(2.0 * epsilon ** 2 / n, tol).root


def constrained_n_gamma(n: float, epsilon: float, tol: Tolerance = DEFAULT_TOLERANCE) -> float:
    """Total SNR n * g under the constraint f(g) = 2 eps^2 / n, equal to 2 eps^2 / g(g)."""
    return n * constrained_gamma(n, epsilon, tol)


def n_dagger(epsilon: float, tol: Tolerance = DEFAULT_TOLERANCE) -> float:
    """Blocklength at which n * g stops decreasing: 2 eps^2 / f(g-dagger)."""
    require(0.0 < epsilon <= EPSILON_MAX, f"epsilon must lie in (0, {EPSILON_MAX}], got {epsilon}")
    return 2.0 * epsilon ** 2 / f_gamma(gamma_dagger(tol))

