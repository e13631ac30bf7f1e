"""Willie's radiometer: threshold, chi-square error rates, KL divergence and the Pinsker bound."""
import math
import logging
from dataclasses import dataclass
from typing import List

from covert.channel import ChannelParams
from covert.errors import require
from covert.specfun import reg_gamma_lower, reg_gamma_upper

logger = logging.getLogger(__name__)

SCAN_POINTS = 200
# below this SNR the KL per channel use is summed as a power series to avoid cancellation
KL_SERIES_CUTOFF = 0.05


@dataclass(frozen=True)
class DetectionReport:
    """Radiometer operating point for a given transmit power and number of observations."""
    threshold: float
    p_false: float
    p_miss: float
    xi: float
    kl: float
    pinsker_bound: float

    def as_row(self) -> dict:
        return {
            "threshold": self.threshold,
            "p_false": self.p_false,
            "p_miss": self.p_miss,
            "xi": self.xi,
            "kl": self.kl,
            "pinsker_bound": self.pinsker_bound,
        }


@dataclass(frozen=True)
class TotalErrorScan:
    """Total error rate sampled on a power grid, with its monotonicity verdict."""
    powers: List[float]
    xi: List[float]
    monotone: bool


def _require_observations(n: int):
    require(isinstance(n, int) and not isinstance(n, bool) and n >= 1,
            f"number of observations must be a positive integer, got {n!r}")


def kl_per_use(gamma_w: float) -> float:
    """ln(1 + g) - g / (1 + g): KL divergence per observation at SNR g."""
    require(gamma_w >= 0.0, f"gamma_w must be non-negative, got {gamma_w}")
    if gamma_w < KL_SERIES_CUTOFF:
        # sum_{k>=2} (-1)^k (k - 1) / k * g^k
        total = 0.0
        power = -gamma_w
        for k in range(2, 40):
            power *= -gamma_w
            term = power * (k - 1) / k
            total += term
            if abs(term) <= 1e-18 * abs(total):
                break
        return total
    return math.log1p(gamma_w) - gamma_w / (1.0 + gamma_w)


def radiometer_threshold(params: ChannelParams) -> float:
    """Optimal threshold on the average received power at Willie.

    Gamma = (P + s^2) s^2 / P * ln((P + s^2) / s^2), which lies strictly between s^2 and
    P + s^2. As P -> 0 it tends to s^2, but it is undefined at P = 0.

    Raises:
        DomainError: If the transmit power is zero
    """
    require(params.power > 0.0, "radiometer threshold is undefined for zero transmit power")
    gamma_w = params.gamma_w
    return params.sigma_w2 * (1.0 + gamma_w) * math.log1p(gamma_w) / gamma_w


def false_positive_rate(params: ChannelParams, n: int) -> float:
    """Pr(T > Gamma | H0) = 1 - gamma(n, n Gamma / s^2) / Gamma(n)."""
    _require_observations(n)
    threshold = radiometer_threshold(params)
    return reg_gamma_upper(n, n * threshold / params.sigma_w2)


def miss_detection_rate(params: ChannelParams, n: int) -> float:
    """Pr(T < Gamma | H1) = gamma(n, n Gamma / (P + s^2)) / Gamma(n)."""
    _require_observations(n)
    threshold = radiometer_threshold(params)
    return reg_gamma_lower(n, n * threshold / (params.power + params.sigma_w2))


def kl_divergence(params: ChannelParams, n: int) -> float:
    """D(P0 || P1) = n [ln((P + s^2) / s^2) - P / (P + s^2)]; zero iff P = 0."""
    _require_observations(n)
    return n * kl_per_use(params.gamma_w)


def pinsker_lower_bound(kl: float) -> float:
    """1 - sqrt(D / 2); negative (vacuous) once D exceeds 2."""
    require(kl >= 0.0, f"KL divergence must be non-negative, got {kl}")
    return 1.0 - math.sqrt(kl / 2.0)


def total_error(params: ChannelParams, n: int) -> DetectionReport:
    """Assemble the full radiometer report for power ``params.power`` and ``n`` observations."""
    p_false = false_positive_rate(params, n)
    p_miss = miss_detection_rate(params, n)
    kl = kl_divergence(params, n)
    return DetectionReport(
        threshold=radiometer_threshold(params),
        p_false=p_false,
        p_miss=p_miss,
        xi=p_false + p_miss,
        kl=kl,
        pinsker_bound=pinsker_lower_bound(kl),
    )


def scan_total_error(sigma_w2: float, n: int, p_hi: float, points: int = SCAN_POINTS) -> TotalErrorScan:
    """Evaluate the total error rate on ``points`` evenly spaced powers in (0, p_hi].

    The scan reports whether the samples are nonincreasing in power, which the exact
    power solver relies on for bisection.
    """
    require(p_hi > 0.0, f"scan upper power must be positive, got {p_hi}")
    require(points >= 2, f"scan needs at least two points, got {points}")
    powers = [p_hi * (k + 1) / points for k in range(points)]
    xi = [total_error(ChannelParams(sigma_w2=sigma_w2, power=p), n).xi for p in powers]
    monotone = all(later <= earlier + 1e-12 for earlier, later in zip(xi, xi[1:]))
    if not monotone:
        logger.warning(f"Total error is not monotone in power for n={n} on (0, {p_hi}]")
    return TotalErrorScan(powers=powers, xi=xi, monotone=monotone)
