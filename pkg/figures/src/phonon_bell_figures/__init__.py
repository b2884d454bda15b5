from .render import (
    FIGURE_IDS,
    FigureSpec,
    SchemaError,
    build_figure,
    load_csv,
    render,
)

__version__ = "0.1.0"
