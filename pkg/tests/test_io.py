import json
import math

import numpy as np
import pytest

from debyescreen.io import atomic_directory, dumps, jsonable, read_csv, read_fields, write_csv, write_fields


def test_jsonable_converts_numpy_and_non_finite():
    obj = {"a": np.float64(1.5), "b": np.arange(3), "c": float("nan"), "d": (np.bool_(True), np.int64(4))}
    assert jsonable(obj) == {"a": 1.5, "b": [0, 1, 2], "c": None, "d": [True, 4]}


def test_dumps_is_sorted_and_strict():
    text = dumps({"b": 1, "a": math.inf})
    assert text == '{\n  "a": null,\n  "b": 1\n}\n'
    assert json.loads(text) == {"a": None, "b": 1}


def test_csv_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    data = [rng.random(50), rng.standard_normal(50) * 1e-300, np.full(50, 1 / 3)]
    path = tmp_path / "x.csv"
    write_csv(path, ("a", "b", "c"), data)
    back = read_csv(path)
    for name, col in zip("abc", data):
        np.testing.assert_array_equal(back[name], col)
    assert path.read_text().splitlines()[0] == "a,b,c"


def test_csv_rejects_ragged_columns(tmp_path):
    with pytest.raises(ValueError):
        write_csv(tmp_path / "x.csv", ("a", "b"), [np.zeros(3), np.zeros(4)])


def test_field_columns_in_order(tmp_path, solved):
    res = solved("maxwellian", 1.0)
    write_fields(tmp_path / "fields.csv", res)
    assert (tmp_path / "fields.csv").read_text().splitlines()[0] == "r,Q,R,rho"
    back = read_fields(tmp_path / "fields.csv")
    np.testing.assert_array_equal(back["Q"], res.Q.values)
    np.testing.assert_array_equal(back["rho"], res.rho.values)


def test_read_fields_requires_all_columns(tmp_path):
    write_csv(tmp_path / "f.csv", ("r", "Q"), [np.ones(2), np.ones(2)])
    with pytest.raises(ValueError, match="missing columns"):
        read_fields(tmp_path / "f.csv")


def test_atomic_directory_replaces_on_success(tmp_path):
    target = tmp_path / "out"
    target.mkdir()
    (target / "old.txt").write_text("old")
    with atomic_directory(target) as scratch:
        (scratch / "new.txt").write_text("new")
        assert not (target / "new.txt").exists()
    assert sorted(p.name for p in target.iterdir()) == ["new.txt"]
    assert [p.name for p in tmp_path.iterdir()] == ["out"]


def test_atomic_directory_keeps_old_on_failure(tmp_path):
    target = tmp_path / "out"
    target.mkdir()
    (target / "old.txt").write_text("old")
    with pytest.raises(RuntimeError):
        with atomic_directory(target) as scratch:
            (scratch / "new.txt").write_text("new")
            raise RuntimeError("boom")
    assert sorted(p.name for p in target.iterdir()) == ["old.txt"]
    assert [p.name for p in tmp_path.iterdir()] == ["out"]
