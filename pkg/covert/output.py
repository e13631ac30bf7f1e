"""CSV and JSON renderers for result rows."""
import csv
import sys
import json
import logging
from contextlib import contextmanager
from typing import Any, Dict, Iterator, List, Optional, Sequence, TextIO

logger = logging.getLogger(__name__)

DEFAULT_PRECISION = 9


def format_value(value: Any, precision: int = DEFAULT_PRECISION) -> str:
    """Decimal text for one cell: integers verbatim, floats to ``precision`` significant digits."""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.{precision}g}"
    return str(value)


def _json_value(value: Any, precision: int) -> Any:
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, float):
        return float(f"{value:.{precision}g}")
    return value


def write_csv(rows: Sequence[Dict[str, Any]], columns: Sequence[str], stream: TextIO,
              precision: int = DEFAULT_PRECISION):
    """Header row plus one line per row, comma-separated with LF line endings."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row[column], precision) for column in columns])


def write_json(rows: Sequence[Dict[str, Any]], columns: Sequence[str], stream: TextIO,
               meta: Dict[str, Any], precision: int = DEFAULT_PRECISION):
    """One object with ``meta`` (resolved parameters, tool version) and ``rows``."""
    document = {
        "meta": meta,
        "rows": [{column: _json_value(row[column], precision) for column in columns} for row in rows],
    }
    stream.write(json.dumps(document, indent=2))
    stream.write("\n")


@contextmanager
def open_output(path: Optional[str]) -> Iterator[TextIO]:
    """Yield the file at ``path`` (UTF-8, no newline translation) or standard output."""
    if not path or path == "-":
        yield sys.stdout
        return
    with open(path, "w", encoding="utf-8", newline="") as handle:
        yield handle
    logger.info(f"Wrote {path}")


def emit(rows: List[Dict[str, Any]], columns: Sequence[str], output_format: str, path: Optional[str],
         meta: Dict[str, Any], precision: int = DEFAULT_PRECISION):
    """Render ``rows`` in the requested format to ``path`` or standard output."""
    with open_output(path) as stream:
        if output_format == "json":
            write_json(rows, columns, stream, meta, precision)
        else:
            write_csv(rows, columns, stream, precision)
