"""Run-record emission: fixed-column CSV and mirrored JSON lines.

Every estimator run is one record; identical configs and seeds must produce
byte-identical files, so floats are rendered with repr-style shortest
round-trip formatting and JSON keys are emitted in a fixed order.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

CSV_COLUMNS = (
    "alpha", "domain", "t", "method", "value", "err", "seed",
    "n_steps", "level",
)


@dataclass(frozen=True)
class RunRecord:
    alpha: float
    domain: str
    t: float
    method: str
    value: float
    err: float
    seed: int
    n_steps: int | None = None
    level: int | None = None

    def csv_row(self) -> str:
        cells = []
        for col in CSV_COLUMNS:
            v = getattr(self, col)
            if v is None:
                cells.append("")
            elif isinstance(v, float):
                cells.append(repr(v))
            else:
                cells.append(str(v))
        return ",".join(cells)

    def json_line(self) -> str:
        payload = {k: v for k, v in asdict(self).items() if v is not None}
        return json.dumps(payload, sort_keys=True)


def render_csv(records, header_fields: dict | None = None) -> str:
    lines = []
    for key, value in (header_fields or {}).items():
        lines.append(f"# {key}={value}")
    lines.append(",".join(CSV_COLUMNS))
    lines.extend(r.csv_row() for r in records)
    return "\n".join(lines) + "\n"


def render_jsonl(records, header_fields: dict | None = None) -> str:
    lines = []
    if header_fields:
        lines.append(json.dumps({"header": header_fields}, sort_keys=True))
    lines.extend(r.json_line() for r in records)
    return "\n".join(lines) + "\n"
