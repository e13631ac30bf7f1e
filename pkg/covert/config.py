"""Settings resolution: command-line flags > config file > environment (.env) > defaults."""
import os
import json
import logging
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv

from covert.design import EPSILON_MAX, ConstraintMode
from covert.errors import ParameterError
from covert.montecarlo import DEFAULT_TRIALS, SEED_MAX

load_dotenv()

logger = logging.getLogger(__name__)

OUTPUT_FORMATS = ("csv", "json")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")

# environment variable -> settings field
ENV_VARS = {
    "SIGMA_B2": "sigma_b2",
    "SIGMA_W2": "sigma_w2",
    "EPSILON": "epsilon",
    "MAX_BLOCKLENGTH": "max_blocklength",
    "CONSTRAINT_MODE": "mode",
    "OUTPUT_FORMAT": "output_format",
    "OUTPUT_PRECISION": "precision",
    "MC_SEED": "seed",
    "MC_TRIALS": "trials",
    "SWEEP_WORKERS": "workers",
    "RESULT_CACHE_PATH": "cache_path",
    "LOG_LEVEL": "log_level",
}


@dataclass(frozen=True)
class Settings:
    """Fully resolved run parameters."""
    sigma_b2: float = 1.0
    sigma_w2: float = 1.0
    epsilon: float = 0.1
    max_blocklength: int = 100
    mode: str = ConstraintMode.KL.value
    output_format: str = "csv"
    precision: int = 9
    seed: int = 42
    trials: int = DEFAULT_TRIALS
    workers: int = 1
    cache_path: Optional[str] = None
    log_level: str = "WARNING"

    def as_dict(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


_FIELD_TYPES = {
    "sigma_b2": float,
    "sigma_w2": float,
    "epsilon": float,
    "max_blocklength": int,
    "mode": str,
    "output_format": str,
    "precision": int,
    "seed": int,
    "trials": int,
    "workers": int,
    "cache_path": str,
    "log_level": str,
}


def _coerce(name: str, value: Any) -> Any:
    if value is None:
        return None
    kind = _FIELD_TYPES[name]
    try:
        if kind is int:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError(value)
            return int(value)
        if kind is float:
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ParameterError(f"{name} must be of type {kind.__name__}, got {value!r}")


def _from_environment() -> Dict[str, Any]:
    values = {}
    for var, name in ENV_VARS.items():
        raw = os.getenv(var)
        if raw not in (None, ""):
            values[name] = _coerce(name, raw)
    return values


def load_config_file(path: str) -> Dict[str, Any]:
    """Read a JSON object whose keys are Settings field names.

    Raises:
        ParameterError: If the file is missing, malformed or has unknown keys
    """
    config_path = Path(path)
    if not config_path.is_file():
        raise ParameterError(f"config file not found: {path}")
    try:
        data = json.loads(config_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParameterError(f"config file {path} is not valid JSON: {e}")
    if not isinstance(data, dict):
        raise ParameterError(f"config file {path} must contain a JSON object")
    unknown = sorted(set(data) - set(_FIELD_TYPES))
    if unknown:
        raise ParameterError(f"unknown keys in config file {path}: {', '.join(unknown)}")
    return {name: _coerce(name, value) for name, value in data.items()}


def validate_settings(settings: Settings) -> Settings:
    """Check every field against its allowed range.

    Raises:
        ParameterError: On the first violation
    """
    checks = [
        (settings.sigma_b2 > 0.0, f"sigma_b2 must be positive, got {settings.sigma_b2}"),
        (settings.sigma_w2 > 0.0, f"sigma_w2 must be positive, got {settings.sigma_w2}"),
        (0.0 < settings.epsilon <= EPSILON_MAX, f"epsilon must lie in (0, {EPSILON_MAX}], got {settings.epsilon}"),
        (settings.max_blocklength >= 1, f"max_blocklength must be >= 1, got {settings.max_blocklength}"),
        (settings.mode in {m.value for m in ConstraintMode}, f"mode must be kl or exact, got {settings.mode!r}"),
        (settings.output_format in OUTPUT_FORMATS, f"format must be csv or json, got {settings.output_format!r}"),
        (1 <= settings.precision <= 17, f"precision must lie in [1, 17], got {settings.precision}"),
        (0 <= settings.seed <= SEED_MAX, f"seed must be an unsigned 64-bit integer, got {settings.seed}"),
        (settings.trials >= 1, f"trials must be >= 1, got {settings.trials}"),
        (settings.workers >= 1, f"workers must be >= 1, got {settings.workers}"),
        (settings.log_level in LOG_LEVELS, f"log level must be one of {', '.join(LOG_LEVELS)}, got {settings.log_level!r}"),
    ]
    for ok, message in checks:
        if not ok:
            raise ParameterError(message)
    return settings


def resolve_settings(overrides: Optional[Dict[str, Any]] = None, config_path: Optional[str] = None) -> Settings:
    """Merge the configuration layers into validated Settings.

    Args:
        overrides: Values given on the command line; ``None`` entries are ignored
        config_path: Optional JSON config file

    Returns:
        Validated Settings
    """
    layers: Dict[str, Any] = {}
    layers.update(_from_environment())
    if config_path:
        layers.update(load_config_file(config_path))
    for name, value in (overrides or {}).items():
        if value is not None:
            layers[name] = _coerce(name, value)
    if "mode" in layers:
        layers["mode"] = layers["mode"].lower()
    if "output_format" in layers:
        layers["output_format"] = layers["output_format"].lower()
    if "log_level" in layers:
        layers["log_level"] = layers["log_level"].upper()
    settings = replace(Settings(), **layers)
    logger.debug(f"Resolved settings: {settings.as_dict()}")
    return validate_settings(settings)
