"""Tests for the persistent design cache."""
import pytest
from unittest.mock import Mock

from covert.database import Database
from covert.design import ConstraintMode, CovertConstraint, DesignResult, SolverPath
from covert.result_cache import DesignCache
from covert.specfun import DEFAULT_TOLERANCE, Tolerance


@pytest.fixture
def db():
    database = Database(db_path=":memory:")
    yield database
    database.close()


@pytest.fixture
def cache(db):
    return DesignCache(db, tool_version="1.0.0")


@pytest.fixture
def result():
    return DesignResult(
        n_star=100,
        p_star=0.0202696,
        r_star=0.0478,
        delta_star=0.3457,
        eta_star=3.324,
        total_power=2.02696,
        iterations=48,
        residual=1e-13,
        epsilon=0.1,
        mode=ConstraintMode.KL,
        sigma_b2=1.0,
        sigma_w2=1.0,
        solver_path=SolverPath.KL_BISECTION,
        optimizer_iterations=37,
    )


KL_CONSTRAINT = CovertConstraint(0.1, ConstraintMode.KL)


def test_miss_on_empty_cache(cache):
    assert cache.get(100, KL_CONSTRAINT, 1.0, 1.0, DEFAULT_TOLERANCE) is None


def test_round_trip(cache, result):
    cache.set(result, DEFAULT_TOLERANCE)
    assert cache.get(100, KL_CONSTRAINT, 1.0, 1.0, DEFAULT_TOLERANCE) == result
    assert cache.count() == 1


def test_overwrite_keeps_one_row(cache, result):
    cache.set(result, DEFAULT_TOLERANCE)
    cache.set(result, DEFAULT_TOLERANCE)
    assert cache.count() == 1


def test_key_separates_inputs(cache, result):
    cache.set(result, DEFAULT_TOLERANCE)
    assert cache.get(200, KL_CONSTRAINT, 1.0, 1.0, DEFAULT_TOLERANCE) is None
    assert cache.get(100, CovertConstraint(0.1, ConstraintMode.EXACT), 1.0, 1.0, DEFAULT_TOLERANCE) is None
    assert cache.get(100, KL_CONSTRAINT, 2.0, 1.0, DEFAULT_TOLERANCE) is None
    assert cache.get(100, KL_CONSTRAINT, 1.0, 1.0, Tolerance(abs_tol=1e-9)) is None
    assert cache.get(100, KL_CONSTRAINT, 1.0, 1.0, DEFAULT_TOLERANCE, delta=0.3) is None


def test_fixed_delta_stored_separately(cache, result):
    cache.set(result, DEFAULT_TOLERANCE, delta=0.3457)
    assert cache.get(100, KL_CONSTRAINT, 1.0, 1.0, DEFAULT_TOLERANCE) is None
    assert cache.get(100, KL_CONSTRAINT, 1.0, 1.0, DEFAULT_TOLERANCE, delta=0.3457) == result


def test_stale_version_is_a_miss(db, result):
    DesignCache(db, tool_version="0.9.0").set(result, DEFAULT_TOLERANCE)
    assert DesignCache(db, tool_version="1.0.0").get(100, KL_CONSTRAINT, 1.0, 1.0, DEFAULT_TOLERANCE) is None


def test_clear(cache, result):
    cache.set(result, DEFAULT_TOLERANCE)
    cache.clear()
    assert cache.count() == 0


def test_generate_key_is_stable(cache):
    key = cache._generate_key(100, KL_CONSTRAINT, 1.0, 1.0, DEFAULT_TOLERANCE)
    assert key == cache._generate_key(100, KL_CONSTRAINT, 1.0, 1.0, DEFAULT_TOLERANCE)
    assert len(key) == 32


def test_get_queries_by_key():
    mock_db = Mock(spec=Database)
    mock_db.fetchone.return_value = None
    cache = DesignCache(mock_db)
    assert cache.get(10, KL_CONSTRAINT, 1.0, 1.0, DEFAULT_TOLERANCE) is None
    query, params = mock_db.fetchone.call_args[0]
    assert "design_results" in query
    assert params == (cache._generate_key(10, KL_CONSTRAINT, 1.0, 1.0, DEFAULT_TOLERANCE),)
