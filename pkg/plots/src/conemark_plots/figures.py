"""Render figure analogues from conemark experiment CSVs.

The renderer consumes the documented CSV schemas only; every plotted
statistic already exists in the files.  The single transformation applied
is presentational: probability confidence bounds are mapped onto the
exponent axis through the same -ln(p)/n reparameterization the exponent
column itself uses, so whiskers and points live in one coordinate system.

Rendering is deterministic: fixed styles, a fixed SVG hash salt, and no
timestamps in either output format, so unchanged CSVs re-render to
byte-identical images.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["FigureRecipe", "SchemaError", "render", "FIGURE_IDS"]

SWEEP_COLUMNS = ["axis_value", "e_fn", "r_star", "q_star", "method"]
SIMULATE_COLUMNS = [
    "n",
    "trials",
    "failures",
    "p_hat",
    "ci_low",
    "ci_high",
    "empirical_exponent",
    "theory_exponent",
    "master_seed",
]
COMPARE_COLUMNS = [
    "lambda",
    "e_fn_theory",
    "emp_exponent_optimal",
    "emp_exponent_sign",
    "lambda1",
    "lambda2",
]

_SCHEMAS = {
    "fig2": SWEEP_COLUMNS,
    "fig3": SWEEP_COLUMNS,
    "fig4": SWEEP_COLUMNS,
    "fig5": SIMULATE_COLUMNS,
    "fig6": SIMULATE_COLUMNS,
    "fig7": COMPARE_COLUMNS,
}
FIGURE_IDS = tuple(sorted(_SCHEMAS))

_X_LABELS = {
    "fig2": "guaranteed false-positive exponent (nats/dim)",
    "fig3": "attack variance",
    "fig4": "host variance",
    "fig5": "dimension n",
    "fig6": "dimension n",
    "fig7": "guaranteed false-positive exponent (nats/dim)",
}
_Y_LABEL = "false-negative exponent (nats/dim)"

_SAVE_DPI = 150
_HASH_SALT = "conemark-plots"


class SchemaError(ValueError):
    """A CSV header does not match the documented schema."""


@dataclass(frozen=True)
class FigureRecipe:
    """Which figure to draw, from which CSVs, to which output stem.

    ``output`` may carry a .png or .svg suffix; the stem gets both formats.
    """

    figure_id: str
    inputs: tuple[str, ...]
    output: str

    def __post_init__(self):
        if self.figure_id not in _SCHEMAS:
            raise SchemaError(
                f"unknown figure id {self.figure_id!r}; expected one of {FIGURE_IDS}"
            )
        if not self.inputs:
            raise SchemaError("a figure needs at least one input CSV")
        object.__setattr__(self, "inputs", tuple(str(p) for p in self.inputs))


def _read_rows(path: str, schema: list[str]) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != schema:
            missing = [c for c in schema if c not in (header or [])]
            if missing:
                raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
            raise SchemaError(
                f"{path}: header {header} does not match the documented schema {schema}"
            )
        return [dict(zip(schema, row)) for row in reader]


def _series_label(path: str) -> str:
    return Path(path).stem


def _plot_sweep(ax, inputs):
    for path in inputs:
        rows = _read_rows(path, SWEEP_COLUMNS)
        x = [float(r["axis_value"]) for r in rows]
        y = [float(r["e_fn"]) for r in rows]
        ax.plot(x, y, linewidth=1.5, label=_series_label(path))


def _plot_convergence(ax, inputs):
    for path in inputs:
        rows = _read_rows(path, SIMULATE_COLUMNS)
        label = _series_label(path)
        n = [float(r["n"]) for r in rows]
        theory = [float(r["theory_exponent"]) for r in rows]
        (line,) = ax.plot(n, theory, linewidth=1.5, label=f"{label} (theory)")
        points = []
        for r in rows:
            emp = float(r["empirical_exponent"])
            ci_low, ci_high = float(r["ci_low"]), float(r["ci_high"])
            if not math.isfinite(emp) or ci_low <= 0.0:
                continue  # zero-failure batch: no exponent estimate to draw
            nn = float(r["n"])
            points.append((nn, emp, emp + math.log(ci_high) / nn, -math.log(ci_low) / nn - emp))
        if points:
            xs, ys, lo, hi = zip(*points)
            ax.errorbar(
                xs,
                ys,
                yerr=(lo, hi),
                fmt="o",
                markersize=4,
                capsize=3,
                linestyle="none",
                color=line.get_color(),
                label=f"{label} (empirical)",
            )


def _plot_compare(ax, inputs):
    for path in inputs:
        rows = _read_rows(path, COMPARE_COLUMNS)
        label = _series_label(path)
        lam = [float(r["lambda"]) for r in rows]
        theory = [float(r["e_fn_theory"]) for r in rows]
        ax.plot(lam, theory, linewidth=1.5, label=f"{label} optimal (theory)")
        for column, tag in (
            ("emp_exponent_optimal", "optimal (empirical)"),
            ("emp_exponent_sign", "sign (empirical)"),
        ):
            xs = []
            ys = []
            for r in rows:
                value = float(r[column])
                if math.isfinite(value):
                    xs.append(float(r["lambda"]))
                    ys.append(value)
            ax.plot(xs, ys, "o" if "optimal" in column else "s", markersize=4, label=f"{label} {tag}")
        lam1, lam2 = float(rows[0]["lambda1"]), float(rows[0]["lambda2"])
        if math.isfinite(lam1):
            ax.axvline(lam1, linestyle="--", linewidth=0.8, color="gray")
        if math.isfinite(lam2):
            ax.axvline(lam2, linestyle=":", linewidth=0.8, color="gray")


_RENDERERS = {
    "fig2": _plot_sweep,
    "fig3": _plot_sweep,
    "fig4": _plot_sweep,
    "fig5": _plot_convergence,
    "fig6": _plot_convergence,
    "fig7": _plot_compare,
}


def render(recipe: FigureRecipe) -> list[str]:
    """Draw the figure and write both a PNG and an SVG next to the stem.

    Returns the written paths.  Same CSV content renders to byte-identical
    files.
    """
    stem = recipe.output
    if stem.endswith((".png", ".svg")):
        stem = stem[:-4]
    with matplotlib.rc_context({"svg.hashsalt": _HASH_SALT}):
        fig, ax = plt.subplots(figsize=(7.0, 4.5), dpi=_SAVE_DPI)
        try:
            _RENDERERS[recipe.figure_id](ax, recipe.inputs)
            ax.set_xlabel(_X_LABELS[recipe.figure_id])
            ax.set_ylabel(_Y_LABEL)
            ax.grid(True, linewidth=0.3, alpha=0.6)
            ax.legend(fontsize=7)
            fig.tight_layout()
            png = stem + ".png"
            svg = stem + ".svg"
            fig.savefig(png, metadata={"Software": _HASH_SALT})
            fig.savefig(svg, metadata={"Date": None, "Creator": _HASH_SALT})
        finally:
            plt.close(fig)
    return [stem + ".png", stem + ".svg"]
