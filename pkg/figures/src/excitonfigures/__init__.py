"""Figure rendering for excitonfim CSV/JSON result files."""

from .io import Table, read_table
from .recipe import FIGURE_KINDS, FigureRecipe, SchemaError, load_recipe
from .render import render

__version__ = "0.1.0"
