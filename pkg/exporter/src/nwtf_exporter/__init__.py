"""Checkpoint exporter and fixture generator for the NWTF weight format."""

from .export import ExportSpec, export_checkpoint
from .fixture import LayerShape, make_fixture, parse_shapes
from .format import ExportError, write_manifest, write_tensors

__version__ = "0.1.0"

__all__ = [
    "ExportError",
    "ExportSpec",
    "LayerShape",
    "export_checkpoint",
    "make_fixture",
    "parse_shapes",
    "write_manifest",
    "write_tensors",
    "__version__",
]
