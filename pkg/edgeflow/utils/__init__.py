"""Shared utilities."""

from edgeflow.utils.io import atomic_write_csv, atomic_write_text
from edgeflow.utils.logging import configure_logging

__all__ = ["atomic_write_csv", "atomic_write_text", "configure_logging"]
