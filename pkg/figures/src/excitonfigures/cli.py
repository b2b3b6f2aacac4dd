"""Command-line front end: render one figure from a recipe file or flags."""

from __future__ import annotations

import sys

import click

from .recipe import FIGURE_KINDS, FigureRecipe, SchemaError, load_recipe
from .render import render


@click.command()
@click.option("--recipe", "recipe_path", type=click.Path(exists=True), default=None,
              help="Recipe JSON file (overrides the other flags).")
@click.option("--kind", type=click.Choice(FIGURE_KINDS), default=None)
@click.option("--input", "inputs", multiple=True, type=click.Path(exists=True),
              help="Input CSV file (repeatable).")
@click.option("--out", "output", type=click.Path(), default=None)
@click.option("--title", default=None)
@click.option("--xlabel", default=None)
@click.option("--ylabel", default=None)
@click.option("--no-legend", is_flag=True, default=False)
@click.option("--vline", "vlines", multiple=True, type=float,
              help="Vertical marker position (repeatable).")
def main(recipe_path, kind, inputs, output, title, xlabel, ylabel, no_legend, vlines):
    """Render an excitonfim result table as a figure."""
    try:
        if recipe_path is not None:
            recipe = load_recipe(recipe_path)
        else:
            if kind is None or not inputs or output is None:
                raise SchemaError("--kind, --input and --out are required without --recipe")
            recipe = FigureRecipe(
                kind=kind,
                inputs=tuple(inputs),
                output=output,
                title=title,
                xlabel=xlabel,
                ylabel=ylabel,
                legend=not no_legend,
                vlines=tuple(vlines),
            )
        render(recipe)
    except SchemaError as exc:
        click.echo(f"schema error: {exc}", err=True)
        sys.exit(2)
    click.echo(f"wrote {recipe.output}")


if __name__ == "__main__":
    main()
