"""Figure rendering for conemark experiment CSVs."""

from .figures import FIGURE_IDS, FigureRecipe, SchemaError, render

__version__ = "0.1.0"

__all__ = ["FIGURE_IDS", "FigureRecipe", "SchemaError", "render", "__version__"]
