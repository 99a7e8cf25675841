"""
Description: Readers for datasets, configuration files and saved draws.
"""

import json
import os
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
import pandas as pd

from ..libs import (
    PARAMETER_NAMES,
    STAT_NAMES,
    Dataset,
    HmcConfig,
    ModelConfig,
    PosteriorDraws,
)
from ._writer import meta_path

PathLike = Union[str, os.PathLike]


def _existing(path: PathLike) -> Path:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    return path


def read_json(path: PathLike):
    with open(_existing(path)) as f:
        return json.load(f)


def _numeric_column(table: pd.DataFrame, name: str) -> np.ndarray:
    cells = table[name].str.strip()
    values = pd.to_numeric(cells, errors="coerce")
    bad = np.flatnonzero(values.isna().to_numpy())
    if len(bad):
        row = int(bad[0]) + 1
        raise ValueError(
            f"row {row}: column {name!r} has a blank or non-numeric value "
            f"{table[name].iloc[bad[0]]!r}"
        )
    return cells.to_numpy().astype(float)


def load_csv(path: PathLike) -> Dataset:
    """
    Read a dataset from CSV.

    The header must name a ``y`` column; a ``u`` column is optional. Rows are
    taken in file order and counted from 1 after the header in error messages.

    Parameters
    ----------
    path : str or PathLike
        CSV file; a ``<stem>.meta.json`` next to it is loaded into ``meta``.

    Returns
    -------
    Dataset
    """
    path = _existing(path)
    try:
        table = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise ValueError(f"{path} is empty") from None
    if "y" not in table.columns:
        raise ValueError(f"{path} has no 'y' column")
    if table.empty:
        raise ValueError(f"{path} has a header but no rows")

    y = _numeric_column(table, "y")
    u = _numeric_column(table, "u") if "u" in table.columns else None

    meta = {}
    if meta_path(path).is_file():
        meta = read_json(meta_path(path))
    meta["source"] = str(path)
    return Dataset(y=y, u=u, meta=meta)


def split_settings(values: dict) -> Tuple[ModelConfig, HmcConfig]:
    """
    Build the model and sampler settings from one flat mapping.

    Unknown keys are rejected; missing keys take their defaults.
    """
    if not isinstance(values, dict):
        raise ValueError("configuration should be a JSON object")
    model_keys = set(ModelConfig.__dataclass_fields__)
    hmc_keys = set(HmcConfig.__dataclass_fields__)
    unknown = set(values) - model_keys - hmc_keys
    if unknown:
        raise ValueError(f"unknown configuration keys: {sorted(unknown)}")
    model = ModelConfig.from_dict({k: v for k, v in values.items() if k in model_keys})
    hmc = HmcConfig.from_dict({k: v for k, v in values.items() if k in hmc_keys})
    return model, hmc


def read_config(path: Optional[PathLike]) -> Tuple[ModelConfig, HmcConfig]:
    """Settings from a flat JSON file, or all defaults without one."""
    if path is None:
        return ModelConfig(), HmcConfig()
    return split_settings(read_json(path))


def read_draws(
    path: PathLike, model_config: Optional[ModelConfig] = None
) -> PosteriorDraws:
    """
    Load draws written by ``write_draws_ndjson``.

    Without ``model_config`` the orders are inferred from the record lengths
    and the hyperprior settings take their defaults.
    """
    path = _existing(path)
    with open(path) as f:
        records = [json.loads(line) for line in f if line.strip()]
    if not records:
        raise ValueError(f"{path} holds no draws")

    frame = pd.DataFrame.from_records(records).sort_values(["chain", "draw"])
    n_chains = frame["chain"].nunique()
    n_kept = frame["draw"].nunique()
    if n_chains * n_kept != len(frame):
        raise ValueError(f"{path}: chains have different lengths")

    if model_config is None:
        first = records[0]
        model_config = ModelConfig(
            n_a=len(first["a"]), n_b=len(first["b"]), n_e=len(first["w"])
        )

    def reshape(name):
        values = np.array(frame[name].tolist(), dtype=float)
        return values.reshape((n_chains, n_kept) + values.shape[1:])

    constrained = {name: reshape(name) for name in PARAMETER_NAMES}
    stats = {name: reshape(name) for name in STAT_NAMES}
    stats["divergent"] = stats["divergent"].astype(bool)
    for name in ("n_leapfrog", "tree_depth"):
        stats[name] = stats[name].astype(int)
    return PosteriorDraws(
        z_draws=None,
        stats=stats,
        model_config=model_config,
        constrained=constrained,
        metadata={"source": str(path)},
    )
