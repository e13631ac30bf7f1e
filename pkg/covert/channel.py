"""Finite-blocklength coding on the Alice-to-Bob link (normal approximation)."""
import math
import logging
from dataclasses import dataclass

from covert.errors import DomainError, require
from covert.specfun import q_func, q_inv

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)


@dataclass(frozen=True)
class ChannelParams:
    """Noise powers at Bob and Willie and the transmit power per channel use (all linear)."""
    sigma_b2: float = 1.0
    sigma_w2: float = 1.0
    power: float = 0.0

    def __post_init__(self):
        require(self.sigma_b2 > 0.0 and math.isfinite(self.sigma_b2),
                f"sigma_b2 must be a finite positive noise power, got {self.sigma_b2}")
        require(self.sigma_w2 > 0.0 and math.isfinite(self.sigma_w2),
                f"sigma_w2 must be a finite positive noise power, got {self.sigma_w2}")
        require(self.power >= 0.0 and math.isfinite(self.power),
                f"power must be finite and non-negative, got {self.power}")

    @property
    def gamma_b(self) -> float:
        """SNR at Bob."""
        return self.power / self.sigma_b2

    @property
    def gamma_w(self) -> float:
        """SNR at Willie."""
        return self.power / self.sigma_w2

    def with_power(self, power: float) -> "ChannelParams":
        return ChannelParams(sigma_b2=self.sigma_b2, sigma_w2=self.sigma_w2, power=power)


@dataclass(frozen=True)
class CodingPoint:
    """Blocklength n, rate R (bits per channel use) and decoding error probability delta."""
    n: int
    rate: float
    delta: float

    def __post_init__(self):
        _require_blocklength(self.n)
        require(self.rate >= 0.0, f"rate must be non-negative, got {self.rate}")
        require(0.0 <= self.delta <= 1.0, f"delta must be a probability, got {self.delta}")


def _require_blocklength(n: int):
    require(isinstance(n, int) and not isinstance(n, bool) and n >= 1,
            f"blocklength must be a positive integer, got {n!r}")


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def shannon_capacity(gamma: float) -> float:
    """log2(1 + gamma) in bits per channel use."""
    return math.log1p(gamma) / LN2


def channel_dispersion(gamma: float) -> float:
    """Dispersion term gamma(gamma + 2) / (gamma + 1)^2 (nats^2)."""
    return gamma * (gamma + 2.0) / (gamma + 1.0) ** 2


def rate_from_snr(gamma_b: float, n: int, delta: float) -> float:
    """Normal-approximation rate at SNR ``gamma_b``; see :func:`rate_fbl`."""
    _require_blocklength(n)
    require(0.0 < delta < 1.0, f"delta must lie in (0, 1), got {delta}")
    require(gamma_b >= 0.0, f"gamma_b must be non-negative, got {gamma_b}")
    overhead = math.log2(n) / (2.0 * n)
    if gamma_b == 0.0:
        if delta != 0.5:
            raise DomainError("rate at gamma_b = 0 is only defined for delta = 0.5")
        return overhead
    penalty = math.sqrt(channel_dispersion(gamma_b) / n) * q_inv(delta) / LN2
    return shannon_capacity(gamma_b) - penalty + overhead


def delta_from_snr(gamma_b: float, n: int, rate: float) -> float:
    """Decoding error probability at SNR ``gamma_b``; see :func:`delta_fbl`."""
    _require_blocklength(n)
    require(math.isfinite(rate), f"rate must be a finite number, got {rate}")
    require(gamma_b >= 0.0, f"gamma_b must be non-negative, got {gamma_b}")
    if gamma_b == 0.0:
        return 1.0 if rate > 0.0 else 0.0
    margin = math.log1p(gamma_b) + math.log(n) / (2.0 * n) - rate * LN2
    argument = math.sqrt(n) * (1.0 + gamma_b) * margin / math.sqrt(gamma_b * (gamma_b + 2.0))
    return q_func(argument)


def rate_fbl(params: ChannelParams, n: int, delta: float) -> float:
    """Achievable coding rate for blocklength n and decoding error delta.

    R = log2(1 + g) - sqrt(g(g + 2) / (n (g + 1)^2)) * Qinv(delta) / ln 2 + log2(n) / (2n)

    The value is returned unclamped and can be negative for short blocks or low SNR.

    Args:
        params: Channel parameters (only the SNR at Bob is used)
        n: Blocklength in channel uses
        delta: Decoding error probability in (0, 1)

    Returns:
        Rate in bits per channel use

    Raises:
        DomainError: If delta is outside (0, 1), or the SNR is zero with delta != 0.5
    """
    return rate_from_snr(params.gamma_b, n, delta)


def delta_fbl(params: ChannelParams, n: int, rate: float) -> float:
    """Decoding error probability for blocklength n and rate R; exact inverse of :func:`rate_fbl`.

    Any finite rate is accepted, including the negative values :func:`rate_fbl` returns for short
    blocks. At zero SNR, any positive rate fails with certainty and a non-positive rate never fails.
    """
    return delta_from_snr(params.gamma_b, n, rate)


def effective_throughput(point: CodingPoint) -> float:
    """Expected reliably delivered bits per block, n * R * (1 - delta)."""
    return point.n * point.rate * (1.0 - point.delta)
