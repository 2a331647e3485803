"""Figure recipes over the simulation CLI's CSV artifacts.

Each recipe turns one or more CSV files into a static image. Recipes never
recompute physics: they read columns, they draw. Rendering is deterministic,
so identical inputs give byte-identical image files.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

__all__ = [
    "FigureRecipe",
    "SchemaError",
    "FIGURES",
    "read_table",
    "render",
]

# λ-maps: perceptually uniform scale; non-positive exponents (regular
# motion) are all clamped to the lowest color
LAMBDA_CMAP = "viridis"
DPI = 150


class SchemaError(ValueError):
    """Input CSV does not carry the columns the figure needs."""


@dataclass(frozen=True)
class FigureRecipe:
    figure_id: str
    inputs: tuple
    output: str
    zoom_windows: tuple = ()
    style: dict = field(default_factory=dict)


def read_table(path):
    """CSV written by the simulation CLI: '#' comments, header, numeric rows.

    Non-numeric cells (labels, empty trapped-time cells) come back as NaN in
    the data array; the raw strings stay available via the 'raw' entry.
    """
    comments, header, raw = [], None, []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                comments.append(line[1:].strip())
            elif header is None:
                header = line.split(",")
            else:
                raw.append(line.split(","))
    if header is None or not raw:
        raise SchemaError(f"{path}: empty table (no header or no data rows)")

    def to_float(cell):
        try:
            return float(cell)
        except ValueError:
            return float("nan")

    data = np.array([[to_float(c) for c in row] for row in raw])
    return {"comments": comments, "columns": header, "data": data, "raw": raw}


def _require(table, path, *columns):
    missing = [c for c in columns if c not in table["columns"]]
    if missing:
        raise SchemaError(f"{path}: missing columns {missing} "
                          f"(found {table['columns']})")
    return [table["data"][:, table["columns"].index(c)] for c in columns]


def _new_axes(n_rows=1, height=2.6):
    fig, axes = plt.subplots(n_rows, 1, figsize=(7.0, height * n_rows),
                             squeeze=False, constrained_layout=True)
    return fig, axes[:, 0]


def render_inversion_trace(recipe):
    """fig1: population inversion z(tau), one panel per input CSV."""
    fig, axes = _new_axes(len(recipe.inputs))
    for ax, path in zip(axes, recipe.inputs):
        table = read_table(path)
        tau, z = _require(table, path, "tau", "z")
        ax.plot(tau, z, lw=0.8, color="C0")
        ax.set_ylabel("z")
        ax.set_ylim(-1.05, 1.05)
    axes[-1].set_xlabel(r"$\tau$")
    return fig


def _heatmap(recipe, log_both=False):
    path = recipe.inputs[0]
    table = read_table(path)
    missing = [c for c in ("lambda",) if c not in table["columns"]]
    if missing or len(table["columns"]) != 3:
        raise SchemaError(
            f"{path}: need exactly [axis1, axis2, lambda] columns, "
            f"found {table['columns']}")
    name1, name2, _ = table["columns"]
    a, b, lam = (table["data"][:, i] for i in range(3))
    g1, g2 = np.unique(a), np.unique(b)
    grid = np.full((g1.size, g2.size), np.nan)
    i = np.searchsorted(g1, a)
    j = np.searchsorted(g2, b)
    grid[i, j] = lam
    fig, axes = _new_axes(1, height=4.0)
    ax = axes[0]
    clipped = np.clip(grid, 0.0, None)  # regular region -> lowest color
    mesh = ax.pcolormesh(g1, g2, clipped.T, cmap=LAMBDA_CMAP, shading="auto")
    fig.colorbar(mesh, ax=ax, label=r"$\lambda$")
    ax.set_xlabel(name1)
    ax.set_ylabel(name2)
    return fig


def render_lambda_map(recipe):
    """fig2: λ heat map, first sweep axis horizontal, second vertical."""
    return _heatmap(recipe)


def render_lambda_map_loglog(recipe):
    """fig3: same heat map but both sweep axes are log-gridded upstream."""
    return _heatmap(recipe, log_both=True)


def render_inversion_scatter(recipe):
    """fig5: z_out versus z_in scatter, optional perturbed series overlaid."""
    path = recipe.inputs[0]
    table = read_table(path)
    z_in, z_out = _require(table, path, "z_in", "z_out")
    fig, axes = _new_axes(1, height=4.0)
    ax = axes[0]
    ax.plot(z_in, z_out, ".", ms=2.5, color="C0", label="z_out")
    if "z_out_perturbed" in table["columns"]:
        (zp,) = _require(table, path, "z_out_perturbed")
        ax.plot(z_in, zp, ".", ms=2.5, color="C3", alpha=0.6,
                label="perturbed probe")
        ax.legend(loc="upper right", fontsize=8)
    ax.set_xlabel(r"$z_\mathrm{in}$")
    ax.set_ylabel(r"$z_\mathrm{out}$")
    ax.set_xlim(-1.05, 1.05)
    ax.set_ylim(-1.05, 1.05)
    return fig


def render_exit_times(recipe):
    """fig6/fig7: exit time versus initial momentum, stacked zoom panels.

    One panel per input CSV (each a scan of its own momentum window), or a
    single CSV re-windowed through recipe.zoom_windows. T is log-scaled;
    trapped samples have no T and leave gaps.
    """
    if recipe.zoom_windows and len(recipe.inputs) == 1:
        panels = [(recipe.inputs[0], w) for w in recipe.zoom_windows]
    else:
        panels = [(path, None) for path in recipe.inputs]
    fig, axes = _new_axes(len(panels))
    for ax, (path, window) in zip(axes, panels):
        table = read_table(path)
        p0, T = _require(table, path, "p0", "T")
        if window is not None:
            keep = (p0 >= window[0]) & (p0 <= window[1])
            p0, T = p0[keep], T[keep]
        ax.plot(p0, T, lw=0.6, color="C0")
        ax.set_yscale("log")
        ax.set_ylabel("T")
    axes[-1].set_xlabel(r"$p_0$")
    return fig


def render_trajectories(recipe):
    """fig8: position versus time for a handful of trajectories."""
    fig, axes = _new_axes(1, height=4.0)
    ax = axes[0]
    for k, path in enumerate(recipe.inputs):
        table = read_table(path)
        t, x = _require(table, path, "time", "x")
        ax.plot(t, x, lw=0.9, color=f"C{k % 10}", label=Path(path).stem)
    ax.set_xlabel(r"$\tau$")
    ax.set_ylabel("x")
    ax.legend(loc="best", fontsize=8)
    return fig


FIGURES = {
    "fig1": render_inversion_trace,
    "fig2": render_lambda_map,
    "fig3": render_lambda_map_loglog,
    "fig5": render_inversion_scatter,
    "fig6": render_exit_times,
    "fig7": render_exit_times,
    "fig8": render_trajectories,
}


def render(recipe: FigureRecipe):
    """Render one recipe to its output path and return that path."""
    if recipe.figure_id not in FIGURES:
        raise ValueError(f"unknown figure id {recipe.figure_id!r}; "
                         f"known: {sorted(FIGURES)}")
    if not recipe.inputs:
        raise ValueError("recipe has no input CSVs")
    with plt.rc_context({"svg.hashsalt": "cavityplots", **recipe.style}):
        fig = FIGURES[recipe.figure_id](recipe)
        try:
            # strip volatile metadata so identical inputs give identical bytes
            fig.savefig(recipe.output, dpi=DPI,
                        metadata=_stable_metadata(recipe.output))
        finally:
            plt.close(fig)
    return recipe.output


def _stable_metadata(output):
    suffix = Path(output).suffix.lower()
    if suffix == ".png":
        return {"Software": "cavityplots"}
    if suffix == ".svg":
        return {"Date": None}
    return None
