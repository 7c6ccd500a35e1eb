"""File helpers: every file edgeflow writes is written atomically."""

import os
import tempfile
from pathlib import Path
from typing import Union

import pandas as pd

PathLike = Union[str, Path]

CSV_FLOAT_FORMAT = "%.12g"


def _replace_atomically(path: Path, write) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            write(handle)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


def atomic_write_text(path: PathLike, text: str) -> Path:
    """Write ``text`` to ``path`` through a temporary file in the same directory."""
    return _replace_atomically(Path(path), lambda handle: handle.write(text))


def atomic_write_csv(frame: pd.DataFrame, path: PathLike) -> Path:
    """Write a data frame as CSV with full float precision."""
    return _replace_atomically(
        Path(path),
        lambda handle: frame.to_csv(handle, index=False, float_format=CSV_FLOAT_FORMAT),
    )
