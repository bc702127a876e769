"""CSV output with a ``#``-prefixed echo of the effective configuration."""

from __future__ import annotations

import csv
import io
from typing import Iterable, Mapping, Sequence


def format_value(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def write_csv(fh, config: Mapping[str, object], header: Sequence[str], rows: Iterable[Sequence]) -> int:
    """Write config echo, header and rows; returns the number of rows."""
    for key in sorted(config):
        fh.write(f"# {key}={format_value(config[key])}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    count = 0
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} fields, header has {len(header)}")
        w.writerow([format_value(v) for v in row])
        count += 1
    return count


def read_csv(text: str) -> tuple[dict[str, str], list[str], list[list[str]]]:
    """Inverse of :func:`write_csv` (values come back as strings)."""
    config: dict[str, str] = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            config[key] = val
        elif line:
            body.append(line)
    if not body:
        return config, [], []
    parsed = list(csv.reader(io.StringIO("\n".join(body))))
    return config, parsed[0], parsed[1:]
