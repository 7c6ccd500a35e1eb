"""Model file storage."""

from edgeflow.storage.model_file import dump_model, load_model, parse_model, save_model

__all__ = ["dump_model", "load_model", "parse_model", "save_model"]
