"""Persistent cache of design solves, keyed by the inputs that determine them."""
import hashlib
import logging
from datetime import datetime, timezone
from typing import Optional

from covert import __version__
from covert.database import Database
from covert.design import ConstraintMode, CovertConstraint, DesignResult, SolverPath
from covert.specfun import Tolerance

logger = logging.getLogger(__name__)

_COLUMNS = (
    "n, epsilon, mode, sigma_b2, sigma_w2, p_star, r_star, delta_star, eta_star, "
    "total_power, iterations, residual, solver_path, optimizer_iterations"
)


class DesignCache:
    """Stores DesignResult rows in DuckDB so repeated sweeps skip the solver."""

    def __init__(self, db: Database, tool_version: str = __version__):
        """Initialize the cache.

        Args:
            db: Database instance
            tool_version: Rows written by other versions are treated as misses
        """
        self.db = db
        self.tool_version = tool_version

    def _generate_key(self, N: int, constraint: CovertConstraint, sigma_b2: float, sigma_w2: float,
                      tol: Tolerance, delta: Optional[float] = None) -> str:
        """MD5 of the canonical parameter string."""
        canonical = (f"N={N};eps={constraint.epsilon!r};mode={constraint.mode.value};"
                     f"sb2={sigma_b2!r};sw2={sigma_w2!r};abs={tol.abs_tol!r};rel={tol.rel_tol!r};"
                     f"iter={tol.max_iter};delta={delta!r}")
        return hashlib.md5(canonical.encode()).hexdigest()

    def get(self, N: int, constraint: CovertConstraint, sigma_b2: float, sigma_w2: float,
            tol: Tolerance, delta: Optional[float] = None) -> Optional[DesignResult]:
        """Return the cached result, or None on a miss or a stale tool version."""
        cache_key = self._generate_key(N, constraint, sigma_b2, sigma_w2, tol, delta)
        row = self.db.fetchone(
            f"SELECT tool_version, {_COLUMNS} FROM design_results WHERE cache_key = ?",
            (cache_key,)
        )
        if not row:
            return None
        if row[0] != self.tool_version:
            logger.debug(f"Ignoring cached design from version {row[0]}")
            return None
        logger.debug(f"Cache hit for N={N}, eps={constraint.epsilon}, mode={constraint.mode.value}")
        return DesignResult(
            n_star=int(row[1]),
            epsilon=float(row[2]),
            mode=ConstraintMode(row[3]),
            sigma_b2=float(row[4]),
            sigma_w2=float(row[5]),
            p_star=float(row[6]),
            r_star=float(row[7]),
            delta_star=float(row[8]),
            eta_star=float(row[9]),
            total_power=float(row[10]),
            iterations=int(row[11]),
            residual=float(row[12]),
            solver_path=SolverPath(row[13]),
            optimizer_iterations=int(row[14] or 0),
        )

    def set(self, result: DesignResult, tol: Tolerance, delta: Optional[float] = None):
        """Store a result under the key of the inputs that produced it."""
        constraint = CovertConstraint(result.epsilon, result.mode)
        cache_key = self._generate_key(result.n_star, constraint, result.sigma_b2, result.sigma_w2, tol, delta)
        now = datetime.now(timezone.utc).isoformat()
        self.db.execute(f"""
            INSERT INTO design_results (cache_key, tool_version, {_COLUMNS}, computed_at)
            VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
            ON CONFLICT (cache_key) DO UPDATE SET
                tool_version = excluded.tool_version,
                p_star = excluded.p_star,
                r_star = excluded.r_star,
                delta_star = excluded.delta_star,
                eta_star = excluded.eta_star,
                total_power = excluded.total_power,
                iterations = excluded.iterations,
                residual = excluded.residual,
                solver_path = excluded.solver_path,
                optimizer_iterations = excluded.optimizer_iterations,
                computed_at = excluded.computed_at
        """, (
            cache_key,
            self.tool_version,
            result.n_star,
            result.epsilon,
            result.mode.value,
            result.sigma_b2,
            result.sigma_w2,
            result.p_star,
            result.r_star,
            result.delta_star,
            result.eta_star,
            result.total_power,
            result.iterations,
            result.residual,
            result.solver_path.value,
            result.optimizer_iterations,
            now,
        ))
        self.db.commit()

    def count(self) -> int:
        row = self.db.fetchone("SELECT COUNT(*) FROM design_results")
        return int(row[0]) if row else 0

    def clear(self):
        """Remove every cached design."""
        self.db.execute("DELETE FROM design_results")
        self.db.commit()
