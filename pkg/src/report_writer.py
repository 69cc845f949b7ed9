import csv
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json")


@dataclass
class Artifact:
    """
    One result table. `header` echoes the configuration that produced it (written as
    `# key=value` lines before the column row), `summary` carries derived scalars
    (written as `# key=value` lines after the data).
    """
    name: str
    columns: Sequence[str]
    rows: List[Sequence]
    header: Dict = field(default_factory=dict)
    summary: Dict = field(default_factory=dict)

    def default_filename(self, fmt: str) -> str:
        return f"{self.name}.{fmt}"


def format_value(value) -> str:
    """Text form used in CSV cells and comment lines; floats keep 17 significant digits."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (tuple, list)):
        return "[" + ",".join(format_value(v) for v in value) + "]"
    return str(value)


def _json_value(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, (tuple, list, np.ndarray)):
        return [_json_value(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _json_value(v) for k, v in value.items()}
    return value


class ReportWriter:
    """Writes artifacts as CSV (with `#` comment lines) or as a JSON document."""

    def __init__(self, fmt: str = "csv"):
        if fmt not in FORMATS:
            raise ValueError(f"format: expected one of {FORMATS}, got '{fmt}'")
        self.fmt = fmt

    def resolve_path(self, artifact: Artifact, output: str | None) -> str:
        return output if output else artifact.default_filename(self.fmt)

    def write(self, artifact: Artifact, output: str | None = None) -> str:
        path = self.resolve_path(artifact, output)
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)

        if self.fmt == "json":
            self._write_json(artifact, path)
        else:
            self._write_csv(artifact, path)
        logger.info(f"Wrote {len(artifact.rows)} rows of {artifact.name} to {path}")
        return path

    def _write_csv(self, artifact: Artifact, path: str):
        with open(path, "w", newline="") as f:
            for key, value in artifact.header.items():
                f.write(f"# {key}={format_value(value)}\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(artifact.columns)
            for row in artifact.rows:
                writer.writerow([format_value(v) for v in row])
            for key, value in artifact.summary.items():
                f.write(f"# {key}={format_value(value) if value is not None else 'none'}\n")

    def _write_json(self, artifact: Artifact, path: str):
        document = {
            "artifact": artifact.name,
            "config": _json_value(artifact.header),
            "columns": list(artifact.columns),
            "rows": [dict(zip(artifact.columns, _json_value(list(row)))) for row in artifact.rows],
            "summary": _json_value(artifact.summary),
        }
        with open(path, "w") as f:
            json.dump(document, f, indent=2)
            f.write("\n")
