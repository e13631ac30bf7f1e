"""Tests for database module."""
import pytest
import tempfile
import os
from covert.database import Database


@pytest.fixture
def temp_db():
    """Create a temporary database for testing."""
    fd, db_path = tempfile.mkstemp(suffix='.db')
    os.close(fd)

    # DuckDB refuses an empty existing file
    if os.path.exists(db_path):
        os.unlink(db_path)

    db = Database(db_path=db_path)
    yield db

    db.close()
    if os.path.exists(db_path):
        os.unlink(db_path)
    if os.path.exists(db_path + '.wal'):
        os.unlink(db_path + '.wal')


def insert_row(db, key="k1", p_star=0.02):
    db.execute("""
        INSERT INTO design_results (cache_key, tool_version, n, epsilon, mode, sigma_b2, sigma_w2,
            p_star, r_star, delta_star, eta_star, total_power, iterations, residual, solver_path,
            optimizer_iterations, computed_at)
        VALUES (?, '0.1.0', 100, 0.1, 'kl', 1.0, 1.0, ?, 0.05, 0.35, 3.3, 2.0, 40, 1e-13,
            'kl-bisection', 30, '2026-01-01T00:00:00+00:00')
    """, (key, p_star))
    db.commit()


def test_database_initialization(temp_db):
    """Test database initialization creates the design table."""
    tables = temp_db.fetchall("""
        SELECT table_name FROM information_schema.tables
        WHERE table_name = 'design_results'
    """)
    assert [row[0] for row in tables] == ['design_results']


def test_design_results_structure(temp_db):
    insert_row(temp_db)
    result = temp_db.fetchone("SELECT n, mode, p_star, solver_path FROM design_results WHERE cache_key = 'k1'")
    assert result[0] == 100
    assert result[1] == 'kl'
    assert result[2] == pytest.approx(0.02)
    assert result[3] == 'kl-bisection'


def test_cache_key_is_primary(temp_db):
    insert_row(temp_db)
    with pytest.raises(Exception):
        insert_row(temp_db)


def test_schema_is_idempotent(temp_db):
    """Reopening an existing file keeps its rows."""
    insert_row(temp_db)
    path = temp_db.db_path
    temp_db.close()

    reopened = Database(db_path=path)
    try:
        assert reopened.fetchone("SELECT COUNT(*) FROM design_results")[0] == 1
    finally:
        reopened.close()


def test_in_memory_database():
    with Database(db_path=":memory:") as db:
        insert_row(db)
        assert db.fetchone("SELECT COUNT(*) FROM design_results")[0] == 1
    assert db.conn is None


def test_creates_parent_directory(tmp_path):
    path = tmp_path / "nested" / "dir" / "covert.db"
    with Database(db_path=str(path)):
        pass
    assert path.exists()
