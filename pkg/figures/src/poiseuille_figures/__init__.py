"""Figure rendering for the channel-flow stability CSV outputs."""

__version__ = "0.1.0"

from .render import SCHEMAS, SchemaError, render

__all__ = ["SCHEMAS", "SchemaError", "render", "__version__"]
