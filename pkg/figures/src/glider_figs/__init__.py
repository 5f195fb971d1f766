from .render import FIGURE_KINDS, RenderError, SchemaError, render

__all__ = ["FIGURE_KINDS", "RenderError", "SchemaError", "render"]
