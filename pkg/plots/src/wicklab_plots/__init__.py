"""Figure rendering for wicklab experiment outputs."""

from .render import KINDS, SchemaError, render

__version__ = "0.1.0"
