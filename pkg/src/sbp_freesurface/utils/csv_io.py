"""CSV reading and writing with shortest round-trip float formatting."""

import csv
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Union

logger = logging.getLogger(__name__)

Cell = Union[float, int, str]


def format_float(value: float) -> str:
    """Shortest decimal string that reads back to the same 64-bit float."""
    return repr(float(value))


def _format_cell(value: Cell) -> str:
    if isinstance(value, bool) or isinstance(value, str):
        return str(value)
    if isinstance(value, int):
        return str(value)
    return format_float(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Cell]]) -> Path:
    """Write ``header`` and ``rows`` to ``path``, creating parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([_format_cell(value) for value in row])
            count += 1
    logger.debug(f"Wrote {count} rows to {path}")
    return path


def read_csv_columns(path: Path) -> Dict[str, List[str]]:
    """Read a CSV file into raw string columns keyed by header name."""
    with open(Path(path), newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        columns: Dict[str, List[str]] = {name: [] for name in header}
        for row in reader:
            for name, value in zip(header, row):
                columns[name].append(value)
    return columns
