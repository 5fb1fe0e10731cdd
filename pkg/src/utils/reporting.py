import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np

from src.fields.grid import ScalarField, VectorField
from src.fields.snapshot import write_snapshot

Column = Tuple[str, str]


def _format(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if np.isfinite(value) else str(value)
    return value


class ReportWriter:
    """
    Writes CSV series, JSON reports and snapshots into one output directory.
    Output is deterministic: no timestamps, sorted JSON keys, repr-formatted floats.
    """
    def __init__(self, output_dir: Union[str, Path]):
        self.output_dir = Path(output_dir)
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            logging.error(f"Cannot create output directory {self.output_dir}: {e}")
            raise

    def write_csv(self, name: str, columns: Sequence[Column], rows: Iterable[Sequence]) -> Path:
        """
        Writes a CSV file whose first line is '# ' followed by 'name [unit]' per column.

        Args:
            name: File name inside the output directory
            columns: (name, unit) pairs
            rows: Row values in column order

        Returns:
            Path: Path to the written file
        """
        path = self.output_dir / name
        header = "# " + ",".join(f"{col} [{unit}]" for col, unit in columns)
        lines: List[str] = [header]
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"row {row} does not match the {len(columns)} columns of {name}")
            lines.append(",".join(_format(v) for v in row))
        try:
            path.write_text("\n".join(lines) + "\n")
            logging.info(f"CSV written: {path}")
            return path
        except OSError as e:
            logging.error(f"Failed to write CSV {path}: {e}")
            raise

    def write_json(self, name: str, payload: Dict) -> Path:
        """Writes a JSON report with sorted keys and two-space indentation."""
        path = self.output_dir / name
        try:
            path.write_text(json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n")
            logging.info(f"JSON written: {path}")
            return path
        except OSError as e:
            logging.error(f"Failed to write JSON {path}: {e}")
            raise

    def read_json(self, name: str) -> Dict:
        path = self.output_dir / name
        if not path.exists():
            raise FileNotFoundError(f"Required input not found: {path}")
        try:
            return json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as e:
            logging.error(f"Failed to read JSON {path}: {e}")
            raise

    def read_csv(self, name: str) -> np.ndarray:
        """Reads a CSV written by write_csv (numeric columns only)."""
        path = self.output_dir / name
        if not path.exists():
            raise FileNotFoundError(f"Required input not found: {path}")
        return np.atleast_2d(np.loadtxt(path, delimiter=",", comments="#"))

    def write_snapshot(self, name: str, field: Union[ScalarField, VectorField],
                       rho: float, nu: float) -> Path:
        return write_snapshot(self.output_dir / name, field, rho, nu)
