"""Parameter sweeps over N, eps, delta, power or sigma_b^2 for figure data."""
import enum
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

from covert.channel import ChannelParams, rate_from_snr
from covert.design import (
    EPSILON_MAX,
    ConstraintMode,
    CovertConstraint,
    DesignResult,
    design_at_delta,
    maximize_over_delta,
    optimize_design,
)
from covert.detection import total_error
from covert.errors import ConvergenceError, CovertError, ParameterError
from covert.result_cache import DesignCache
from covert.specfun import DEFAULT_TOLERANCE, Tolerance

logger = logging.getLogger(__name__)

DESIGN_COLUMNS = ["p_star", "total_power", "r_star", "delta_star", "eta_star", "eta_per_use",
                  "constraint_mode", "residual"]
POWER_COLUMNS = ["p_false", "p_miss", "xi", "kl", "covert"]


class SweepVariable(str, enum.Enum):
    N = "N"
    EPSILON = "epsilon"
    DELTA = "delta"
    POWER = "power"
    SIGMA_B2 = "sigma_b2"


@dataclass(frozen=True)
class FixedParams:
    """Parameters held constant across a sweep."""
    sigma_b2: float = 1.0
    sigma_w2: float = 1.0
    epsilon: float = 0.1
    max_blocklength: int = 100
    mode: ConstraintMode = ConstraintMode.KL
    delta: Optional[float] = None

    def constraint(self, epsilon: Optional[float] = None) -> CovertConstraint:
        return CovertConstraint(self.epsilon if epsilon is None else epsilon, self.mode)


class SweepAborted(ConvergenceError):
    """A sweep point failed; ``rows`` holds the points completed before it, in grid order."""

    def __init__(self, message: str, rows: List[Dict[str, Any]], failed_value: Any):
        super().__init__(message)
        self.rows = rows
        self.failed_value = failed_value


def _check_value(variable: SweepVariable, value: Any) -> Any:
    try:
        number = float(value)
    except (TypeError, ValueError) as e:
        raise ParameterError(f"{variable.value} values must be numbers, got {value!r}") from e
    if not math.isfinite(number):
        raise ParameterError(f"{variable.value} values must be finite, got {value!r}")
    if variable is SweepVariable.N:
        if number != int(number) or number < 1:
            raise ParameterError(f"N values must be positive integers, got {value!r}")
        return int(number)
    value = number
    if variable is SweepVariable.EPSILON and not 0.0 < value <= EPSILON_MAX:
        raise ParameterError(f"epsilon values must lie in (0, {EPSILON_MAX}], got {value}")
    if variable is SweepVariable.DELTA and not 0.0 < value < 1.0:
        raise ParameterError(f"delta values must lie in (0, 1), got {value}")
    if variable in (SweepVariable.POWER, SweepVariable.SIGMA_B2) and not value > 0.0:
        raise ParameterError(f"{variable.value} values must be positive, got {value}")
    return value


@dataclass(frozen=True)
class SweepSpec:
    """Grid over one variable, the held-constant parameters and the output target."""
    variable: SweepVariable
    values: Tuple[Any, ...]
    fixed: FixedParams
    output_format: str = "csv"
    output_path: Optional[str] = None

    def __post_init__(self):
        try:
            variable = SweepVariable(self.variable)
        except ValueError:
            raise ParameterError(f"unknown sweep variable {self.variable!r}; "
                                 f"choose from {', '.join(v.value for v in SweepVariable)}")
        object.__setattr__(self, "variable", variable)
        if not self.values:
            raise ParameterError("sweep values must be non-empty")
        values = tuple(_check_value(variable, v) for v in self.values)
        if any(later <= earlier for earlier, later in zip(values, values[1:])):
            raise ParameterError("sweep values must be strictly increasing")
        object.__setattr__(self, "values", values)
        if self.output_format not in ("csv", "json"):
            raise ParameterError(f"output format must be csv or json, got {self.output_format!r}")
        # surfaces invalid fixed parameters before any point is solved
        ChannelParams(sigma_b2=self.fixed.sigma_b2, sigma_w2=self.fixed.sigma_w2)
        self.fixed.constraint()
        if self.fixed.max_blocklength < 1:
            raise ParameterError(f"max_blocklength must be >= 1, got {self.fixed.max_blocklength}")
        if self.fixed.delta is not None and not 0.0 < self.fixed.delta < 1.0:
            raise ParameterError(f"fixed delta must lie in (0, 1), got {self.fixed.delta}")

    @property
    def columns(self) -> List[str]:
        columns = [self.variable.value] + DESIGN_COLUMNS
        if self.variable is SweepVariable.POWER:
            columns += POWER_COLUMNS
        return columns


def _design_row(variable: SweepVariable, value: Any, result: DesignResult) -> Dict[str, Any]:
    return {
        variable.value: value,
        "p_star": result.p_star,
        "total_power": result.total_power,
        "r_star": result.r_star,
        "delta_star": result.delta_star,
        "eta_star": result.eta_star,
        "eta_per_use": result.eta_per_use,
        "constraint_mode": result.mode.value,
        "residual": result.residual,
    }


def _design_inputs(spec: SweepSpec, value: Any) -> Tuple[int, CovertConstraint, float, Optional[float]]:
    fixed = spec.fixed
    N, epsilon, sigma_b2, delta = fixed.max_blocklength, None, fixed.sigma_b2, fixed.delta
    if spec.variable is SweepVariable.N:
        N = value
    elif spec.variable is SweepVariable.EPSILON:
        epsilon = value
    elif spec.variable is SweepVariable.SIGMA_B2:
        sigma_b2 = value
    elif spec.variable is SweepVariable.DELTA:
        delta = value
    return N, fixed.constraint(epsilon), sigma_b2, delta


def _solve_design(spec: SweepSpec, value: Any, tol: Tolerance) -> DesignResult:
    N, constraint, sigma_b2, delta = _design_inputs(spec, value)
    if delta is None:
        return optimize_design(N, constraint, sigma_b2, spec.fixed.sigma_w2, tol)
    return design_at_delta(N, constraint, sigma_b2, spec.fixed.sigma_w2, delta, tol)


def _power_row(spec: SweepSpec, power: float) -> Dict[str, Any]:
    """Throughput and detectability when the transmit power is forced to ``power``."""
    fixed = spec.fixed
    N = fixed.max_blocklength
    gamma_b = power / fixed.sigma_b2
    if fixed.delta is None:
        delta, _, _ = maximize_over_delta(gamma_b, N)
    else:
        delta = fixed.delta
    rate = max(0.0, rate_from_snr(gamma_b, N, delta))
    eta = N * rate * (1.0 - delta)
    report = total_error(ChannelParams(sigma_b2=fixed.sigma_b2, sigma_w2=fixed.sigma_w2, power=power), N)
    margin = report.xi - (1.0 - fixed.epsilon)
    return {
        "power": power,
        "p_star": power,
        "total_power": N * power,
        "r_star": rate,
        "delta_star": delta,
        "eta_star": eta,
        "eta_per_use": eta / N,
        "constraint_mode": fixed.mode.value,
        "residual": margin,
        "p_false": report.p_false,
        "p_miss": report.p_miss,
        "xi": report.xi,
        "kl": report.kl,
        "covert": int(margin >= 0.0),
    }


def evaluate_point(spec: SweepSpec, value: Any, tol: Tolerance = DEFAULT_TOLERANCE) -> Dict[str, Any]:
    """One output row of the sweep."""
    row, _ = _evaluate_task((spec, value, tol))
    return row


def _evaluate_task(task: Tuple[SweepSpec, Any, Tolerance]) -> Tuple[Dict[str, Any], Optional[DesignResult]]:
    spec, value, tol = task
    if spec.variable is SweepVariable.POWER:
        return _power_row(spec, value), None
    result = _solve_design(spec, value, tol)
    return _design_row(spec.variable, value, result), result


def _cached_row(spec: SweepSpec, value: Any, cache: DesignCache, tol: Tolerance) -> Optional[Dict[str, Any]]:
    N, constraint, sigma_b2, delta = _design_inputs(spec, value)
    result = cache.get(N, constraint, sigma_b2, spec.fixed.sigma_w2, tol, delta)
    return _design_row(spec.variable, value, result) if result else None


def run_sweep(spec: SweepSpec, workers: int = 1, cache: Optional[DesignCache] = None,
              tol: Tolerance = DEFAULT_TOLERANCE) -> List[Dict[str, Any]]:
    """Evaluate every grid value and return the rows in grid order.

    Points not found in ``cache`` are computed, across ``workers`` processes when more than
    one is requested, and written back to the cache.

    Raises:
        SweepAborted: If a point fails; carries the rows completed before it
    """
    use_cache = cache is not None and spec.variable is not SweepVariable.POWER
    rows: List[Optional[Dict[str, Any]]] = [None] * len(spec.values)
    if use_cache:
        for k, value in enumerate(spec.values):
            rows[k] = _cached_row(spec, value, cache, tol)
    pending = [k for k, row in enumerate(rows) if row is None]
    logger.info(f"Sweeping {spec.variable.value} over {len(spec.values)} values "
                f"({len(spec.values) - len(pending)} cached, {workers} workers)")

    tasks = [(spec, spec.values[k], tol) for k in pending]
    solved: List[Tuple[int, Optional[DesignResult]]] = []
    try:
        if workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for k, (row, result) in zip(pending, pool.map(_evaluate_task, tasks)):
                    rows[k] = row
                    solved.append((k, result))
        else:
            for k, task in zip(pending, tasks):
                rows[k], result = _evaluate_task(task)
                solved.append((k, result))
    except CovertError as e:
        failed = next(k for k in pending if rows[k] is None)
        value = spec.values[failed]
        logger.error(f"Sweep aborted at {spec.variable.value}={value}: {e}")
        raise SweepAborted(f"sweep aborted at {spec.variable.value}={value}: {e}",
                           rows=list(rows[:failed]), failed_value=value)

    if use_cache:
        for k, result in solved:
            cache.set(result, tol, _design_inputs(spec, spec.values[k])[3])
    return rows
