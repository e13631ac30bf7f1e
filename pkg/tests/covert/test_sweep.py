"""Tests for parameter sweeps."""
import pytest
from unittest.mock import Mock

from covert.database import Database
from covert.design import ConstraintMode, optimize_design
from covert.errors import ConvergenceError, ParameterError
from covert.result_cache import DesignCache
from covert.sweep import (
    DESIGN_COLUMNS,
    POWER_COLUMNS,
    FixedParams,
    SweepAborted,
    SweepSpec,
    SweepVariable,
    evaluate_point,
    run_sweep,
)


@pytest.fixture
def fixed():
    return FixedParams(sigma_b2=1.0, sigma_w2=1.0, epsilon=0.1, max_blocklength=100, mode=ConstraintMode.KL)


@pytest.fixture
def memory_cache():
    db = Database(db_path=":memory:")
    yield DesignCache(db)
    db.close()


# --- grid validation ---

def test_variable_from_string(fixed):
    spec = SweepSpec(variable="epsilon", values=(0.05, 0.1), fixed=fixed)
    assert spec.variable is SweepVariable.EPSILON


def test_n_values_become_integers(fixed):
    spec = SweepSpec(variable="N", values=(100.0, 200.0), fixed=fixed)
    assert spec.values == (100, 200)
    assert all(isinstance(v, int) for v in spec.values)


@pytest.mark.parametrize("variable,values", [
    ("N", ()),
    ("N", (200, 100)),
    ("N", (100, 100)),
    ("N", (0,)),
    ("N", (10.5,)),
    ("N", (float("nan"),)),
    ("N", (100, float("inf"))),
    ("N", ("many",)),
    ("power", (float("inf"),)),
    ("sigma_b2", (1.0, float("nan"))),
    ("epsilon", (0.1, 0.6)),
    ("delta", (0.0, 0.5)),
    ("delta", (0.5, 1.0)),
    ("power", (-1.0,)),
    ("sigma_b2", (0.0, 1.0)),
    ("blocklength", (1, 2)),
])
def test_invalid_grid_rejected(fixed, variable, values):
    with pytest.raises(ParameterError):
        SweepSpec(variable=variable, values=values, fixed=fixed)


def test_invalid_fixed_parameters_rejected():
    with pytest.raises(ParameterError):
        SweepSpec(variable="N", values=(10,), fixed=FixedParams(max_blocklength=0))
    with pytest.raises(ParameterError):
        SweepSpec(variable="N", values=(10,), fixed=FixedParams(delta=1.5))
    with pytest.raises(ParameterError):
        SweepSpec(variable="N", values=(10,), fixed=FixedParams(), output_format="xlsx")


def test_columns(fixed):
    assert SweepSpec(variable="N", values=(10,), fixed=fixed).columns == ["N"] + DESIGN_COLUMNS
    assert SweepSpec(variable="power", values=(1.0,), fixed=fixed).columns == ["power"] + DESIGN_COLUMNS + POWER_COLUMNS


# --- sweep results ---

def test_rows_follow_grid_order(fixed):
    spec = SweepSpec(variable="N", values=(100, 200, 400), fixed=fixed)
    rows = run_sweep(spec)
    assert [row["N"] for row in rows] == [100, 200, 400]
    assert all(set(spec.columns) <= set(row) for row in rows)


def test_point_matches_direct_design(fixed):
    row = evaluate_point(SweepSpec(variable="N", values=(100,), fixed=fixed), 100)
    result = optimize_design(100, fixed.constraint(), 1.0, 1.0)
    assert row["p_star"] == result.p_star
    assert row["eta_star"] == result.eta_star
    assert row["constraint_mode"] == "kl"


def test_blocklength_sweep_trends(fixed):
    rows = run_sweep(SweepSpec(variable="N", values=(100, 200, 400, 800), fixed=fixed))
    p_star = [row["p_star"] for row in rows]
    total = [row["total_power"] for row in rows]
    eta = [row["eta_star"] for row in rows]
    per_use = [row["eta_per_use"] for row in rows]
    assert all(b < a for a, b in zip(p_star, p_star[1:]))
    assert all(b > a for a, b in zip(total, total[1:]))
    assert all(b > a for a, b in zip(eta, eta[1:]))
    assert all(b < a for a, b in zip(per_use, per_use[1:]))


def test_epsilon_sweep_throughput_increases(fixed):
    rows = run_sweep(SweepSpec(variable="epsilon", values=(0.05, 0.1, 0.2, 0.4), fixed=fixed))
    per_use = [row["eta_per_use"] for row in rows]
    assert all(b > a for a, b in zip(per_use, per_use[1:]))


def test_sigma_b2_sweep_throughput_decreases(fixed):
    rows = run_sweep(SweepSpec(variable="sigma_b2", values=(0.5, 1.0, 2.0), fixed=fixed))
    eta = [row["eta_star"] for row in rows]
    assert all(b < a for a, b in zip(eta, eta[1:]))


def test_delta_sweep_is_unimodal(fixed):
    rows = run_sweep(SweepSpec(variable="delta", values=(0.1, 0.35, 0.9), fixed=fixed))
    eta = [row["eta_star"] for row in rows]
    assert eta[1] > eta[0]
    assert eta[1] > eta[2]
    assert [row["delta_star"] for row in rows] == [0.1, 0.35, 0.9]
    assert eta[1] == pytest.approx(3.32, rel=0.01)


def test_fixed_delta_applies_to_blocklength_sweep():
    fixed = FixedParams(max_blocklength=100, delta=0.2)
    rows = run_sweep(SweepSpec(variable="N", values=(100, 200), fixed=fixed))
    assert all(row["delta_star"] == 0.2 for row in rows)


def test_power_sweep_covert_flag(fixed):
    rows = run_sweep(SweepSpec(variable="power", values=(0.001, 1.0), fixed=fixed))
    quiet, loud = rows
    assert quiet["covert"] == 1
    assert quiet["xi"] > 0.9
    assert quiet["residual"] == pytest.approx(quiet["xi"] - 0.9)
    assert loud["covert"] == 0
    assert loud["xi"] < 0.9
    assert loud["eta_star"] > quiet["eta_star"]
    assert quiet["total_power"] == pytest.approx(0.1)


# --- failure handling ---

def test_failed_point_aborts_with_partial_rows(fixed, monkeypatch):
    def failing_design(N, *args, **kwargs):
        if N == 200:
            raise ConvergenceError("bisection stalled", iterations=200, residual=1e-3)
        return optimize_design(N, *args, **kwargs)

    monkeypatch.setattr("covert.sweep.optimize_design", failing_design)
    with pytest.raises(SweepAborted) as excinfo:
        run_sweep(SweepSpec(variable="N", values=(100, 200, 400), fixed=fixed))
    assert excinfo.value.failed_value == 200
    assert [row["N"] for row in excinfo.value.rows] == [100]
    assert isinstance(excinfo.value, ConvergenceError)


# --- caching ---

def test_cache_is_filled_then_reused(fixed, memory_cache, monkeypatch):
    spec = SweepSpec(variable="N", values=(100, 200), fixed=fixed)
    first = run_sweep(spec, cache=memory_cache)
    assert memory_cache.count() == 2

    def unreachable(*args, **kwargs):
        raise AssertionError("design solved despite cached result")

    monkeypatch.setattr("covert.sweep.optimize_design", unreachable)
    assert run_sweep(spec, cache=memory_cache) == first


def test_cache_miss_writes_back():
    cache = Mock(spec=DesignCache)
    cache.get.return_value = None
    spec = SweepSpec(variable="epsilon", values=(0.1, 0.2), fixed=FixedParams(max_blocklength=50))
    run_sweep(spec, cache=cache)
    assert cache.get.call_count == 2
    assert cache.set.call_count == 2


def test_power_sweep_skips_cache(fixed):
    cache = Mock(spec=DesignCache)
    run_sweep(SweepSpec(variable="power", values=(0.01,), fixed=fixed), cache=cache)
    cache.get.assert_not_called()
    cache.set.assert_not_called()


# --- parallel execution ---

def test_process_pool_matches_sequential(fixed):
    spec = SweepSpec(variable="N", values=(10, 20, 40, 80), fixed=fixed)
    assert run_sweep(spec, workers=2) == run_sweep(spec, workers=1)
