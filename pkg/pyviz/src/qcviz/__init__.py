"""Batch figure renderer for qclab result bundles."""

__version__ = "0.1.0"

STYLE_VERSION = "1"
SUPPORTED_SCHEMA = "1"
