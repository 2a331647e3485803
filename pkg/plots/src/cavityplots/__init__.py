"""Figure recipes for the cavity-dynamics simulation CSV outputs."""

__version__ = "0.1.0"

from .recipes import (  # noqa: F401
    FIGURES,
    FigureRecipe,
    SchemaError,
    read_table,
    render,
)
