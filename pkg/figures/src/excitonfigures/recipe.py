"""Figure recipes: what to read, which figure kind, where to write."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

FIGURE_KINDS = (
    "populations",
    "fim-heatmap",
    "spectrum",
    "eigenvalues-vs-lambda",
    "importance-bars",
    "sweep-ribbon",
)


class SchemaError(Exception):
    """Input file does not match the documented schema."""


@dataclass(frozen=True)
class FigureRecipe:
    """One figure: input tables, kind, styling options and output path."""

    kind: str
    inputs: tuple[str, ...]
    output: str
    title: str | None = None
    xlabel: str | None = None
    ylabel: str | None = None
    legend: bool = True
    vlines: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise SchemaError(
                f"unknown figure kind {self.kind!r}; expected one of {FIGURE_KINDS}"
            )
        if not self.inputs:
            raise SchemaError("recipe needs at least one input file")
        if isinstance(self.inputs, list):
            object.__setattr__(self, "inputs", tuple(self.inputs))
        if isinstance(self.vlines, list):
            object.__setattr__(self, "vlines", tuple(self.vlines))


def load_recipe(path) -> FigureRecipe:
    """Read a recipe JSON file; unknown keys are rejected."""
    with open(path) as fh:
        data = json.load(fh)
    known = {"kind", "inputs", "output", "title", "xlabel", "ylabel", "legend", "vlines"}
    unknown = set(data) - known
    if unknown:
        raise SchemaError(f"unknown recipe keys: {sorted(unknown)}")
    return FigureRecipe(**data)
