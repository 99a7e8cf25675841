"""
Description: Writers for datasets, draws and run summaries. Every file is
written to a temporary sibling first and then renamed into place.
"""

from __future__ import annotations

import contextlib
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Union

import numpy as np
import pandas as pd

from ..libs import Dataset, PosteriorDraws

PathLike = Union[str, os.PathLike]
FLOAT_FORMAT = "%.17g"


@contextlib.contextmanager
def atomic_open(path: PathLike, mode: str = "w"):
    """Open a temporary file next to ``path`` and move it there on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handle, tmp = tempfile.mkstemp(
        dir=path.parent, prefix=f".{path.name}.", suffix=".tmp"
    )
    try:
        with os.fdopen(handle, mode, newline="" if "b" not in mode else None) as f:
            yield f
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def to_jsonable(value: Any) -> Any:
    """
    Convert numpy scalars and arrays to plain Python, mapping non-finite floats
    to ``None``.
    """
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def write_json(path: PathLike, data: dict) -> Path:
    """Sorted, indented JSON; identical inputs give identical bytes."""
    with atomic_open(path) as f:
        json.dump(to_jsonable(data), f, indent=2, sort_keys=True, allow_nan=False)
        f.write("\n")
    return Path(path)


def meta_path(path: PathLike) -> Path:
    """``data.csv`` keeps its metadata in ``data.meta.json``."""
    path = Path(path)
    return path.with_name(f"{path.stem}.meta.json")


def write_table(path: PathLike, table: pd.DataFrame) -> Path:
    with atomic_open(path) as f:
        table.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return Path(path)


def save_csv(path: PathLike, ds: Dataset) -> list[Path]:
    """
    Write a dataset as CSV with ``y`` and, when present, ``u`` columns, and its
    metadata next to it.

    Returns
    -------
    list of Path
        The CSV and metadata paths.
    """
    columns = {"y": ds.y}
    if ds.u is not None:
        columns["u"] = ds.u
    csv_path = write_table(path, pd.DataFrame(columns))
    return [csv_path, write_json(meta_path(path), ds.meta)]


def write_draws_ndjson(path: PathLike, draws: PosteriorDraws) -> Path:
    """One JSON object per retained draw, chain-major."""
    return write_ndjson(path, draws.to_records())


def write_ndjson(path: PathLike, records: Iterable[dict]) -> Path:
    with atomic_open(path) as f:
        for record in records:
            f.write(json.dumps(to_jsonable(record), sort_keys=True))
            f.write("\n")
    return Path(path)
