"""Tests for finite-blocklength channel module."""
import math
import pytest
from scipy import stats

from covert.channel import (
    ChannelParams,
    CodingPoint,
    channel_dispersion,
    db_to_linear,
    delta_fbl,
    delta_from_snr,
    effective_throughput,
    rate_fbl,
    rate_from_snr,
    shannon_capacity,
)
from covert.errors import DomainError


@pytest.fixture
def unit_params():
    return ChannelParams(sigma_b2=1.0, sigma_w2=1.0, power=1.0)


# --- ChannelParams ---

def test_params_snr():
    params = ChannelParams(sigma_b2=2.0, sigma_w2=4.0, power=1.0)
    assert params.gamma_b == pytest.approx(0.5)
    assert params.gamma_w == pytest.approx(0.25)


def test_params_with_power_keeps_noise():
    params = ChannelParams(sigma_b2=2.0, sigma_w2=3.0).with_power(6.0)
    assert params.power == 6.0
    assert params.sigma_b2 == 2.0
    assert params.sigma_w2 == 3.0


@pytest.mark.parametrize("kwargs", [
    {"sigma_b2": 0.0},
    {"sigma_w2": -1.0},
    {"power": -0.1},
    {"sigma_b2": math.inf},
])
def test_params_reject_invalid(kwargs):
    with pytest.raises(DomainError):
        ChannelParams(**kwargs)


# --- helpers ---

def test_db_conversions():
    assert db_to_linear(10.0) == pytest.approx(10.0)
    assert db_to_linear(-3.0) == pytest.approx(0.501187, rel=1e-5)
    assert db_to_linear(0.0) == 1.0


def test_capacity_and_dispersion_at_unit_snr():
    assert shannon_capacity(1.0) == pytest.approx(1.0)
    assert channel_dispersion(1.0) == pytest.approx(0.75)


# --- rate_fbl ---

def test_rate_at_half_delta_is_capacity_plus_overhead(unit_params):
    # Qinv(0.5) = 0 leaves log2(1 + 1) + log2(100) / 200
    assert rate_fbl(unit_params, 100, 0.5) == pytest.approx(1.0 + math.log2(100) / 200.0, rel=1e-14)


@pytest.mark.parametrize("gamma", [0.01, 0.5, 1.0, 10.0])
@pytest.mark.parametrize("n", [1, 10, 1000])
@pytest.mark.parametrize("delta", [1e-6, 0.01, 0.3, 0.9])
def test_rate_matches_formula(gamma, n, delta):
    params = ChannelParams(power=gamma)
    expected = (math.log2(1.0 + gamma)
                - math.sqrt(gamma * (gamma + 2.0) / (n * (gamma + 1.0) ** 2)) * stats.norm.isf(delta) / math.log(2.0)
                + math.log2(n) / (2.0 * n))
    assert rate_fbl(params, n, delta) == pytest.approx(expected, rel=1e-9, abs=1e-12)


def test_rate_reference_value(unit_params):
    assert rate_fbl(unit_params, 200, 0.01) == pytest.approx(0.8135845581, abs=1e-9)


def test_rate_grows_with_blocklength(unit_params):
    assert rate_fbl(unit_params, 400, 0.01) > rate_fbl(unit_params, 200, 0.01)


def test_rate_approaches_capacity_for_long_blocks(unit_params):
    assert abs(rate_fbl(unit_params, 10 ** 6, 0.01) - 1.0) < 0.01


def test_rate_can_be_negative_for_short_blocks():
    assert rate_fbl(ChannelParams(power=0.01), 10, 1e-6) < 0.0


def test_rate_increases_with_delta(unit_params):
    rates = [rate_fbl(unit_params, 50, d) for d in (1e-6, 1e-3, 0.1, 0.5, 0.9)]
    assert rates == sorted(rates)


def test_rate_increases_with_snr():
    rates = [rate_from_snr(g, 50, 0.01) for g in (0.1, 0.5, 1.0, 5.0)]
    assert rates == sorted(rates)


def test_rate_at_zero_snr():
    assert rate_fbl(ChannelParams(power=0.0), 16, 0.5) == pytest.approx(math.log2(16) / 32.0)
    with pytest.raises(DomainError):
        rate_fbl(ChannelParams(power=0.0), 16, 0.1)


@pytest.mark.parametrize("delta", [0.0, 1.0, -0.5])
def test_rate_rejects_delta_outside_open_interval(unit_params, delta):
    with pytest.raises(DomainError):
        rate_fbl(unit_params, 10, delta)


@pytest.mark.parametrize("n", [0, -3, 2.5])
def test_rate_rejects_bad_blocklength(unit_params, n):
    with pytest.raises(DomainError):
        rate_fbl(unit_params, n, 0.1)


# --- delta_fbl ---

@pytest.mark.parametrize("gamma", [0.01, 0.1, 1.0, 10.0])
@pytest.mark.parametrize("n", [1, 10, 100, 1000])
@pytest.mark.parametrize("delta", [1e-6, 1e-3, 0.1, 0.5, 0.9])
def test_delta_inverts_rate(gamma, n, delta):
    params = ChannelParams(power=gamma)
    assert delta_fbl(params, n, rate_fbl(params, n, delta)) == pytest.approx(delta, abs=1e-9)


def test_delta_at_zero_snr():
    assert delta_from_snr(0.0, 10, 0.2) == 1.0
    assert delta_from_snr(0.0, 10, 0.0) == 0.0


def test_delta_increases_with_rate(unit_params):
    deltas = [delta_fbl(unit_params, 100, r) for r in (0.5, 0.9, 1.0, 1.1, 1.5)]
    assert deltas == sorted(deltas)
    assert all(0.0 <= d <= 1.0 for d in deltas)


@pytest.mark.parametrize("gamma", [0.01, 0.1, 1.0, 10.0])
@pytest.mark.parametrize("n", [10, 100, 1000])
@pytest.mark.parametrize("delta", [1e-4, 0.01, 0.1, 0.4])
def test_round_trip_through_negative_rates(gamma, n, delta):
    params = ChannelParams(power=gamma)
    rate = rate_fbl(params, n, delta)
    assert abs(delta_fbl(params, n, rate) - delta) <= 1e-9


def test_delta_accepts_negative_rate():
    params = ChannelParams(power=0.01)
    rate = rate_fbl(params, 10, 1e-6)
    assert rate < 0.0
    assert delta_fbl(params, 10, rate) == pytest.approx(1e-6, rel=1e-6)
    assert delta_fbl(params, 10, rate - 1.0) < 1e-6


@pytest.mark.parametrize("rate", [float("nan"), float("inf"), -float("inf")])
def test_delta_rejects_non_finite_rate(unit_params, rate):
    with pytest.raises(DomainError):
        delta_fbl(unit_params, 10, rate)


def test_delta_at_zero_snr_with_negative_rate():
    assert delta_from_snr(0.0, 10, -0.3) == 0.0


# --- effective_throughput ---

def test_effective_throughput():
    assert effective_throughput(CodingPoint(n=100, rate=0.5, delta=0.1)) == pytest.approx(45.0)


def test_coding_point_rejects_invalid():
    with pytest.raises(DomainError):
        CodingPoint(n=10, rate=-0.1, delta=0.1)
    with pytest.raises(DomainError):
        CodingPoint(n=10, rate=0.1, delta=1.5)
