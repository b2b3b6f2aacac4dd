"""CSV reading with loud schema checks.

The tables come from the excitonfim command-line tool; only the documented
headers are relied on, never the producing code.
"""

from __future__ import annotations

import csv

import numpy as np

from .recipe import SchemaError


class Table:
    """A CSV file as named columns (numeric where possible)."""

    def __init__(self, path: str, columns: dict[str, np.ndarray]):
        self.path = path
        self.columns = columns

    @property
    def header(self) -> list[str]:
        return list(self.columns)

    def __len__(self) -> int:
        first = next(iter(self.columns.values()), np.empty(0))
        return len(first)

    def require(self, *names: str) -> None:
        """Fail naming the first missing column."""
        for name in names:
            if name not in self.columns:
                raise SchemaError(f"missing column {name!r} in {self.path}")

    def require_prefix(self, prefix: str) -> list[str]:
        """All columns starting with the prefix; fail if there are none."""
        found = [c for c in self.columns if c.startswith(prefix)]
        if not found:
            raise SchemaError(f"no {prefix}* columns in {self.path}")
        return found

    def __getitem__(self, name: str) -> np.ndarray:
        self.require(name)
        return self.columns[name]


def read_table(path) -> Table:
    """Parse a CSV file; numeric columns become float arrays, the rest strings."""
    path = str(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"empty file: {path}")
    header = rows[0]
    if len(header) != len(set(header)):
        raise SchemaError(f"duplicate column names in {path}")
    body = rows[1:]
    for k, row in enumerate(body):
        if len(row) != len(header):
            raise SchemaError(f"row {k + 2} of {path} has {len(row)} fields, "
                              f"expected {len(header)}")
    columns: dict[str, np.ndarray] = {}
    for j, name in enumerate(header):
        raw = [row[j] for row in body]
        try:
            columns[name] = np.array([float(v) for v in raw])
        except ValueError:
            columns[name] = np.array(raw)
    return Table(path, columns)
