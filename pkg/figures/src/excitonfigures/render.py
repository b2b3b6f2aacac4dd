"""Renderers for each figure kind.

All figures are drawn with the Agg backend and pinned styling so a given
input renders pixel-identically across runs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import Table, read_table
from .recipe import FigureRecipe, SchemaError

DPI = 120
FIGSIZE = (6.4, 4.2)

GROUP_COLORS = {
    "energy": "#1f77b4",
    "lifetime": "#2ca02c",
    "position": "#d62728",
    "environment": "#9467bd",
}
LINE_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
               "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def _new_figure():
    plt.rcdefaults()
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    return fig, ax


def _finish(fig, ax, recipe: FigureRecipe, default_xlabel: str, default_ylabel: str):
    ax.set_xlabel(recipe.xlabel or default_xlabel)
    ax.set_ylabel(recipe.ylabel or default_ylabel)
    if recipe.title:
        ax.set_title(recipe.title)
    fig.tight_layout()
    if recipe.output:
        fig.savefig(recipe.output, dpi=DPI, metadata={"Software": ""})
    return fig


def _single_input(recipe: FigureRecipe) -> Table:
    if len(recipe.inputs) != 1:
        raise SchemaError(f"figure kind {recipe.kind!r} takes exactly one input file")
    return read_table(recipe.inputs[0])


def render_populations(recipe: FigureRecipe):
    table = _single_input(recipe)
    table.require("time_ns", "ground", "trap")
    sites = table.require_prefix("site_")
    t = table["time_ns"]
    fig, ax = _new_figure()
    for k, name in enumerate(sites):
        ax.plot(t, table[name], color=LINE_COLORS[k % len(LINE_COLORS)], label=name)
    ax.plot(t, table["ground"], color="0.4", linestyle="--", label="ground")
    ax.plot(t, table["trap"], color="black", linestyle="-.", label="trap")
    if "f_arrival" in table.columns:
        twin = ax.twinx()
        twin.plot(t, table["f_arrival"], color="#ff7f0e", alpha=0.8, label="f_arrival")
        twin.set_ylabel("arrival density (1/ns)")
    if recipe.legend:
        ax.legend(loc="center right", fontsize=8)
    return _finish(fig, ax, recipe, "time (ns)", "population")


def render_fim_heatmap(recipe: FigureRecipe):
    table = _single_input(recipe)
    table.require("label")
    labels = [str(v) for v in table["label"]]
    for lab in labels:
        table.require(lab)
    matrix = np.column_stack([table[lab] for lab in labels])
    fig, ax = _new_figure()
    scale = np.max(np.abs(matrix)) or 1.0
    im = ax.imshow(matrix, cmap="RdBu_r", vmin=-scale, vmax=scale)
    ax.set_xticks(range(len(labels)), labels, rotation=90, fontsize=7)
    ax.set_yticks(range(len(labels)), labels, fontsize=7)
    fig.colorbar(im, ax=ax, shrink=0.8)
    return _finish(fig, ax, recipe, "", "")


def render_spectrum(recipe: FigureRecipe):
    fig, ax = _new_figure()
    for k, path in enumerate(recipe.inputs):
        table = read_table(path)
        table.require("index", "eigenvalue")
        eigs = table["eigenvalue"]
        positive = eigs > 0
        ax.semilogy(
            table["index"][positive], eigs[positive], "o",
            color=LINE_COLORS[k % len(LINE_COLORS)], markersize=5, label=path,
        )
    if recipe.legend and len(recipe.inputs) > 1:
        ax.legend(fontsize=8)
    return _finish(fig, ax, recipe, "eigenvalue index", "FIM eigenvalue")


def render_eigenvalues_vs_lambda(recipe: FigureRecipe):
    table = _single_input(recipe)
    table.require("sweep_value")
    eig_cols = table.require_prefix("eig_")
    x = table["sweep_value"]
    fig, ax = _new_figure()
    for k, name in enumerate(eig_cols):
        y = table[name]
        mask = y > 0
        ax.loglog(x[mask], y[mask], "o-",
                  color=LINE_COLORS[k % len(LINE_COLORS)], label=name)
    if recipe.legend:
        ax.legend(fontsize=8)
    return _finish(fig, ax, recipe, "phonon coupling (eV)", "FIM eigenvalue")


def _importance_columns(table: Table) -> tuple[np.ndarray, np.ndarray | None]:
    """(values, errors) from a single-run or ensemble importance table."""
    if "importance" in table.columns:
        return table["importance"], None
    if "mean_importance" in table.columns:
        table.require("var_importance")
        return table["mean_importance"], np.sqrt(table["var_importance"])
    raise SchemaError(
        f"missing column 'importance' or 'mean_importance' in {table.path}"
    )


def render_importance_bars(recipe: FigureRecipe):
    fig, ax = _new_figure()
    n_series = len(recipe.inputs)
    width = 0.8 / n_series
    labels_ref: list[str] | None = None
    for k, path in enumerate(recipe.inputs):
        table = read_table(path)
        table.require("label", "group")
        values, errors = _importance_columns(table)
        labels = [str(v) for v in table["label"]]
        if labels_ref is None:
            labels_ref = labels
        elif labels != labels_ref:
            raise SchemaError(f"label mismatch between {recipe.inputs[0]} and {path}")
        x = np.arange(len(labels)) + (k - (n_series - 1) / 2.0) * width
        colors = [GROUP_COLORS.get(str(g), "0.5") for g in table["group"]]
        ax.bar(x, values, width=width,
               color=colors if n_series == 1 else LINE_COLORS[k % len(LINE_COLORS)],
               yerr=errors, ecolor="black", capsize=2,
               label=path if n_series > 1 else None)
    ax.set_xticks(range(len(labels_ref)), labels_ref, rotation=90, fontsize=7)
    if recipe.legend and n_series > 1:
        ax.legend(fontsize=8)
    return _finish(fig, ax, recipe, "parameter", "importance")


def render_sweep_ribbon(recipe: FigureRecipe):
    table = _single_input(recipe)
    table.require("nn_coupling")
    total_cols = [c for c in table.header if c.endswith("_total")]
    if not total_cols:
        raise SchemaError(f"no *_total columns in {table.path}")
    x = table["nn_coupling"]
    order = np.argsort(x)
    fig, ax = _new_figure()
    for name in total_cols:
        group = name[: -len("_total")]
        color = GROUP_COLORS.get(group, "0.5")
        ax.plot(x[order], table[name][order], color=color, label=group)
        lo, hi = f"{group}_min", f"{group}_max"
        if lo in table.columns and hi in table.columns:
            ax.fill_between(x[order], table[lo][order], table[hi][order],
                            color=color, alpha=0.2, linewidth=0)
    for v in recipe.vlines:
        ax.axvline(v, color="0.3", linestyle=":", linewidth=1)
    ax.set_xscale("log")
    if recipe.legend:
        ax.legend(fontsize=8)
    return _finish(fig, ax, recipe, "nearest-neighbour coupling (eV)", "group importance")


_RENDERERS = {
    "populations": render_populations,
    "fim-heatmap": render_fim_heatmap,
    "spectrum": render_spectrum,
    "eigenvalues-vs-lambda": render_eigenvalues_vs_lambda,
    "importance-bars": render_importance_bars,
    "sweep-ribbon": render_sweep_ribbon,
}


def render(recipe: FigureRecipe):
    """Draw one figure, save it to recipe.output, and return the Figure."""
    return _RENDERERS[recipe.kind](recipe)
