from ._reader import load_csv, read_config, read_draws, read_json, split_settings
from ._writer import (
    meta_path,
    save_csv,
    write_draws_ndjson,
    write_json,
    write_ndjson,
    write_table,
)

__all__ = (
    "load_csv",
    "read_config",
    "read_draws",
    "read_json",
    "split_settings",
    "meta_path",
    "save_csv",
    "write_draws_ndjson",
    "write_json",
    "write_ndjson",
    "write_table",
)
