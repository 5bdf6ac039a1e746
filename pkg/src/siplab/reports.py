"""Report envelope, serialisation and replay comparison.

Every CLI run emits one JSON document:

    {"schema": "siplab/1", "command": ..., "config": ..., "results": ...,
     "meta": {...}}

``config`` is fully normalised (all defaults resolved), so re-running the
command from the stored config reproduces ``results`` byte-identically;
``meta`` holds timing/timestamp and is excluded from comparisons. Replay
compares floats exactly by default (same-implementation replay is
deterministic); cross-implementation replays pass an ``rtol``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from datetime import datetime, timezone

from .sampling import GENERATOR_NAME

SCHEMA = "siplab/1"

__all__ = ["SCHEMA", "make_report", "dumps", "write_report", "csv_rows", "compare_results"]


def make_report(command: str, config: dict, results: dict, runtime_s: float | None = None) -> dict:
    return {
        "schema": SCHEMA,
        "command": command,
        "config": config,
        "results": results,
        "meta": {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "runtime_s": runtime_s,
            "generator": GENERATOR_NAME,
        },
    }


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _scalar(v) -> bool:
    return isinstance(v, (int, float, str, bool)) or v is None


def _flatten(prefix: str, value, out: dict):
    if _scalar(value):
        out[prefix] = value
    elif isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    elif isinstance(value, (list, tuple)):
        out[prefix] = json.dumps(value)


def csv_rows(doc: dict) -> list[dict]:
    """One row per sample-like entry; scalar context fields repeat per row."""
    results = doc.get("results", {})
    context: dict = {"command": doc.get("command", "")}
    _flatten("", {k: v for k, v in results.items() if _scalar(v)}, context)
    row_lists = [
        (k, v) for k, v in results.items()
        if isinstance(v, list) and v and all(isinstance(e, dict) for e in v)
    ]
    if not row_lists:
        row = dict(context)
        _flatten("", {k: v for k, v in results.items() if not _scalar(v)}, row)
        return [row]
    rows = []
    for name, entries in row_lists:
        for i, entry in enumerate(entries):
            row = dict(context)
            row["rowset"] = name
            row["index"] = i
            _flatten("", entry, row)
            rows.append(row)
    return rows


def to_csv(doc: dict) -> str:
    rows = csv_rows(doc)
    fields: list[str] = []
    for r in rows:
        for k in r:
            if k not in fields:
                fields.append(k)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields)
    writer.writeheader()
    for r in rows:
        writer.writerow(r)
    return buf.getvalue()


def write_report(doc: dict, out: str | None, fmt: str = "json") -> None:
    text = dumps(doc) if fmt == "json" else to_csv(doc)
    if out is None:
        print(text, end="")
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _float_equal(a: float, b: float, rtol: float | None) -> bool:
    if math.isnan(a) and math.isnan(b):
        return True
    if rtol is None:
        return a == b
    return abs(a - b) <= rtol * max(1.0, abs(a), abs(b))


def compare_results(a, b, rtol: float | None = None, path: str = "results") -> list[str]:
    """Paths at which two result payloads differ (empty list: identical)."""
    diffs: list[str] = []
    if isinstance(a, dict) and isinstance(b, dict):
        for k in sorted(set(a) | set(b)):
            if k not in a or k not in b:
                diffs.append(f"{path}.{k} (missing on one side)")
            else:
                diffs.extend(compare_results(a[k], b[k], rtol, f"{path}.{k}"))
    elif isinstance(a, (list, tuple)) and isinstance(b, (list, tuple)):
        if len(a) != len(b):
            diffs.append(f"{path} (length {len(a)} != {len(b)})")
        else:
            for i, (x, y) in enumerate(zip(a, b)):
                diffs.extend(compare_results(x, y, rtol, f"{path}[{i}]"))
    elif isinstance(a, bool) or isinstance(b, bool):
        if a is not b:
            diffs.append(f"{path} ({a!r} != {b!r})")
    elif isinstance(a, (int, float)) and isinstance(b, (int, float)):
        if not _float_equal(float(a), float(b), rtol):
            diffs.append(f"{path} ({a!r} != {b!r})")
    elif a != b:
        diffs.append(f"{path} ({a!r} != {b!r})")
    return diffs


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0
