"""CSV and JSON artifacts of an experiment run.

The CSV starts with `# schema=1`, `# version=...` and `# config=...` comment lines followed by
one row per sweep point. Numbers are written with a fixed format so that identical runs give
byte-identical files.
"""
from __future__ import annotations
import io
import csv
import json
import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

_logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

type Row = dict[str, Any]


def canonical_json(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False, default=str)


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, complex):
        return f"{format_value(value.real)}{'+' if value.imag >= 0 else '-'}{format_value(abs(value.imag))}j"
    if isinstance(value, float) or hasattr(value, 'dtype'):
        return f"{float(value):.10g}"
    return str(value)


def render_csv(rows: Sequence[Row], columns: Sequence[str], config: dict, version: str) -> str:
    """Text of the CSV artifact; a row missing a column raises KeyError."""
    buffer = io.StringIO()
    buffer.write(f"# schema={SCHEMA_VERSION}\n")
    buffer.write(f"# version={version}\n")
    buffer.write(f"# config={canonical_json(config)}\n")
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row[c]) for c in columns])
    return buffer.getvalue()


def read_csv(path: Path) -> tuple[dict[str, str], list[dict[str, str]]]:
    """(header comments, rows as strings) of an artifact written by write_results."""
    header: dict[str, str] = {}
    lines = []
    with Path(path).open('r') as f:
        for line in f:
            if line.startswith('# '):
                key, _, value = line[2:].rstrip('\n').partition('=')
                header[key] = value
            else:
                lines.append(line)
    return header, list(csv.DictReader(lines))


@dataclass(frozen=True)
class ResultFiles:
    csv_path: Path
    json_path: Path
    digest: str # sha256 of the CSV text


def write_results(output_dir: Path, name: str, rows: Sequence[Row], columns: Sequence[str], config: dict,
                  version: str, metadata: dict | None = None) -> ResultFiles:
    """Writes <name>.csv and the <name>.json sidecar into output_dir."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    text = render_csv(rows, columns, config, version)
    digest = hashlib.sha256(text.encode('utf-8')).hexdigest()
    csv_path = output_dir / f"{name}.csv"
    json_path = output_dir / f"{name}.json"
    csv_path.write_text(text)
    sidecar = {
        'schema': SCHEMA_VERSION,
        'version': version,
        'config': config,
        'columns': list(columns),
        'rows': len(rows),
        'csv_sha256': digest,
        **(metadata or {}),
    }
    json_path.write_text(json.dumps(sidecar, sort_keys=True, indent=2, default=str) + "\n")
    _logger.info(f"wrote {len(rows)} rows to {csv_path}")
    return ResultFiles(csv_path, json_path, digest)
