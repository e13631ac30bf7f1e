"""Monte Carlo oracle for Willie's radiometer.

Trials are split into fixed-size batches. Batch ``k`` draws from PCG64 generators seeded by
``SeedSequence(seed, spawn_key=(k,))`` (one child stream per hypothesis), so estimates depend
only on the configuration and never on how many workers ran the batches. Complex Gaussian
samples come from Box-Muller on uniform pairs.
"""
import enum
import math
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from covert.channel import ChannelParams
from covert.detection import false_positive_rate, miss_detection_rate, radiometer_threshold
from covert.errors import require

logger = logging.getLogger(__name__)

DEFAULT_TRIALS = 100_000
SAMPLES_PER_BATCH = 1 << 20
SEED_MAX = (1 << 64) - 1
TWO_PI = 2.0 * math.pi


class Hypothesis(enum.IntEnum):
    H0 = 0  # noise only
    H1 = 1  # signal plus noise


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo run: trials of n observations each at Willie."""
    trials: int
    seed: int
    n: int
    params: ChannelParams

    def __post_init__(self):
        require(isinstance(self.trials, int) and self.trials >= 1,
                f"trials must be a positive integer, got {self.trials!r}")
        require(isinstance(self.seed, int) and 0 <= self.seed <= SEED_MAX,
                f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        require(isinstance(self.n, int) and self.n >= 1,
                f"n must be a positive integer, got {self.n!r}")

    @property
    def batch_trials(self) -> int:
        return max(1, SAMPLES_PER_BATCH // self.n)

    def batches(self) -> List[Tuple[int, int]]:
        """(batch index, trials in batch) covering all trials."""
        size = self.batch_trials
        return [(k, min(size, self.trials - start)) for k, start in enumerate(range(0, self.trials, size))]


@dataclass(frozen=True)
class McEstimate:
    """Empirical false-positive and miss rates with binomial standard errors."""
    p_false_hat: float
    p_miss_hat: float
    stderr_false: float
    stderr_miss: float
    trials: int

    @classmethod
    def from_counts(cls, false_alarms: int, misses: int, trials: int) -> "McEstimate":
        p_false = false_alarms / trials
        p_miss = misses / trials
        return cls(
            p_false_hat=p_false,
            p_miss_hat=p_miss,
            stderr_false=binomial_stderr(p_false, trials),
            stderr_miss=binomial_stderr(p_miss, trials),
            trials=trials,
        )


@dataclass(frozen=True)
class ValidationRow:
    """Analytic versus simulated error rates at one (n, P) point."""
    blocklength: int
    power: float
    p_false: float
    p_false_hat: float
    stderr_false: float
    p_miss: float
    p_miss_hat: float
    stderr_miss: float
    passed: bool

    def as_row(self) -> dict:
        return {
            "blocklength": self.blocklength,
            "power": self.power,
            "p_false": self.p_false,
            "p_false_hat": self.p_false_hat,
            "stderr_false": self.stderr_false,
            "p_miss": self.p_miss,
            "p_miss_hat": self.p_miss_hat,
            "stderr_miss": self.stderr_miss,
            "passed": int(self.passed),
        }


def binomial_stderr(p: float, trials: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / trials)


def _generators(seed: int, batch: int) -> Tuple[np.random.Generator, np.random.Generator]:
    children = np.random.SeedSequence(entropy=seed, spawn_key=(batch,)).spawn(len(Hypothesis))
    return (np.random.Generator(np.random.PCG64(children[Hypothesis.H0])),
            np.random.Generator(np.random.PCG64(children[Hypothesis.H1])))


def complex_gaussian(rng: np.random.Generator, shape: Tuple[int, ...], variance: float) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with E|z|^2 = variance (Box-Muller)."""
    u1 = 1.0 - rng.random(shape)  # (0, 1], keeps the log finite
    u2 = rng.random(shape)
    radius = np.sqrt(-2.0 * np.log(u1)) * math.sqrt(variance / 2.0)
    angle = TWO_PI * u2
    return radius * np.cos(angle) + 1j * radius * np.sin(angle)


def _batch_statistic(config: McConfig, batch: int, size: int, hypothesis: Hypothesis) -> np.ndarray:
    """Average received power T for ``size`` trials of one batch under ``hypothesis``."""
    rng_h0, rng_h1 = _generators(config.seed, batch)
    shape = (size, config.n)
    if hypothesis is Hypothesis.H0:
        received = complex_gaussian(rng_h0, shape, config.params.sigma_w2)
    else:
        signal = complex_gaussian(rng_h1, shape, config.params.power)
        received = signal + complex_gaussian(rng_h1, shape, config.params.sigma_w2)
    return np.mean(np.abs(received) ** 2, axis=1)


def _run_batches(config: McConfig, job, workers: int) -> list:
    batches = config.batches()
    if workers <= 1 or len(batches) == 1:
        return [job(k, size) for k, size in batches]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda item: job(*item), batches))


def sample_statistic(config: McConfig, hypothesis: Hypothesis, workers: int = 1) -> np.ndarray:
    """All ``config.trials`` samples of T under one hypothesis, in batch order."""
    parts = _run_batches(config, lambda k, size: _batch_statistic(config, k, size, hypothesis), workers)
    return np.concatenate(parts)


def simulate_detection(config: McConfig, workers: int = 1) -> McEstimate:
    """Estimate the radiometer's false-positive and miss rates by simulation.

    Args:
        config: Trials, seed, observations per trial and channel parameters
        workers: Threads used to run batches; results do not depend on it

    Returns:
        McEstimate with binomial standard errors

    Raises:
        DomainError: If the transmit power is zero (no threshold exists)
    """
    threshold = radiometer_threshold(config.params)

    def count(k: int, size: int) -> Tuple[int, int]:
        t_h0 = _batch_statistic(config, k, size, Hypothesis.H0)
        t_h1 = _batch_statistic(config, k, size, Hypothesis.H1)
        return int(np.count_nonzero(t_h0 >= threshold)), int(np.count_nonzero(t_h1 < threshold))

    counts = _run_batches(config, count, workers)
    false_alarms = sum(c[0] for c in counts)
    misses = sum(c[1] for c in counts)
    estimate = McEstimate.from_counts(false_alarms, misses, config.trials)
    logger.debug(f"Simulated n={config.n} P={config.params.power} over {config.trials} trials: "
                 f"P_F~{estimate.p_false_hat:.5g} P_M~{estimate.p_miss_hat:.5g}")
    return estimate


def simulate_statistic_moments(config: McConfig, workers: int = 1) -> Tuple[float, float]:
    """Empirical mean of T under H0 and under H1 (about s^2 and P + s^2)."""
    mean_h0 = float(np.mean(sample_statistic(config, Hypothesis.H0, workers)))
    mean_h1 = float(np.mean(sample_statistic(config, Hypothesis.H1, workers)))
    return mean_h0, mean_h1


def validate_point(config: McConfig, sigmas: float = 3.0, workers: int = 1) -> ValidationRow:
    """Compare simulated rates with the chi-square formulas at one point.

    A point passes when both estimates sit within ``sigmas`` binomial standard errors of the
    analytic values, the standard errors taken at the analytic probabilities.
    """
    p_false = false_positive_rate(config.params, config.n)
    p_miss = miss_detection_rate(config.params, config.n)
    estimate = simulate_detection(config, workers)
    passed = (abs(estimate.p_false_hat - p_false) <= sigmas * binomial_stderr(p_false, config.trials)
              and abs(estimate.p_miss_hat - p_miss) <= sigmas * binomial_stderr(p_miss, config.trials))
    if not passed:
        logger.warning(f"Validation failed at n={config.n}, P={config.params.power}: "
                       f"P_F {p_false:.6g} vs {estimate.p_false_hat:.6g}, "
                       f"P_M {p_miss:.6g} vs {estimate.p_miss_hat:.6g}")
    return ValidationRow(
        blocklength=config.n,
        power=config.params.power,
        p_false=p_false,
        p_false_hat=estimate.p_false_hat,
        stderr_false=estimate.stderr_false,
        p_miss=p_miss,
        p_miss_hat=estimate.p_miss_hat,
        stderr_miss=estimate.stderr_miss,
        passed=passed,
    )
