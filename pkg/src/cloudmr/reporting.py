"""Report emission: CSV and JSON renderings of result rows.

Both formats carry the same twelve columns per row, numbers rounded to
three decimals.  CSV is the bare table with a header line; JSON wraps the
rows in an envelope that also records the delay mode (and the group
number for canned groups), since the column set itself is fixed.
Rendering the same rows twice yields byte-identical output; parsing a
rendered JSON report gives back exactly the rounded values.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Optional

from .runner import REPORT_COLUMNS

_FLOAT_COLUMNS = frozenset((
    "avg_exec_s", "max_exec_s", "min_exec_s", "makespan_s", "delay_s",
    "vm_cost", "network_cost",
))


def render_csv(rows) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for row in rows:
        writer.writerow([f"{row[col]:.3f}" if col in _FLOAT_COLUMNS
                         else row[col] for col in REPORT_COLUMNS])
    return buffer.getvalue()


def render_json(rows, *, mode: str, group: Optional[int] = None) -> str:
    envelope: dict = {"mode": mode}
    if group is not None:
        envelope["group"] = group
    envelope["rows"] = [
        {col: round(row[col], 3) if col in _FLOAT_COLUMNS else row[col]
         for col in REPORT_COLUMNS}
        for row in rows]
    return json.dumps(envelope, indent=2) + "\n"


def write_text(text: str, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)
