import json

import numpy as np
import pandas as pd
import pytest

from barx_sysid.io import meta_path, write_json, write_ndjson, write_table
from barx_sysid.io._writer import atomic_open, to_jsonable


def test_meta_path():
    assert meta_path("out/data.csv").name == "data.meta.json"


def test_to_jsonable_converts_numpy_and_non_finite():
    converted = to_jsonable(
        {"a": np.arange(3), "b": np.float64(np.nan), 1: (np.bool_(True), np.int64(4))}
    )
    assert converted == {"a": [0, 1, 2], "b": None, "1": [True, 4]}


def test_write_json_is_deterministic(tmp_path):
    first = write_json(tmp_path / "a.json", {"z": 1.0, "a": [np.inf, 0.1]})
    second = write_json(tmp_path / "b.json", {"a": [np.inf, 0.1], "z": 1.0})
    assert first.read_bytes() == second.read_bytes()
    assert json.loads(first.read_text()) == {"a": [None, 0.1], "z": 1.0}
    assert first.read_text().endswith("}\n")


def test_atomic_open_leaves_nothing_on_failure(tmp_path):
    target = tmp_path / "out.txt"
    target.write_text("old")
    with pytest.raises(RuntimeError):
        with atomic_open(target) as f:
            f.write("partial")
            raise RuntimeError("boom")
    assert target.read_text() == "old"
    assert sorted(p.name for p in tmp_path.iterdir()) == ["out.txt"]


def test_write_table_keeps_full_precision(tmp_path):
    values = np.array([0.1, 1 / 3, -2.5e-17])
    path = write_table(tmp_path / "t.csv", pd.DataFrame({"x": values}))
    loaded = pd.read_csv(path, float_precision="round_trip")["x"].to_numpy()
    np.testing.assert_array_equal(loaded, values)
    assert "\r" not in path.read_text()


def test_write_ndjson_one_record_per_line(tmp_path):
    records = ({"k": k, "v": np.float32(k)} for k in range(3))
    path = write_ndjson(tmp_path / "r.ndjson", records)
    lines = path.read_text().splitlines()
    assert [json.loads(line)["k"] for line in lines] == [0, 1, 2]
