import json
import math

import numpy as np
import pytest

from besovfill import ParseError
from besovfill.io import dumps, jsonable, load_sequence, read_json, save_sequence


def test_jsonable_non_finite():
    assert jsonable({"a": np.float64(math.inf), "b": [np.int64(3), math.nan]}) == \
        {"a": "inf", "b": [3, "nan"]}


def test_dumps_sorted_and_round_trip():
    text = dumps({"b": 0.1 + 0.2, "a": 1})
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text)["b"] == 0.1 + 0.2


def test_sequence_round_trip(tmp_path):
    values = np.array([1.0, -2.5, 1e-300])
    path = save_sequence(tmp_path / "s.json", "vertex", values)
    np.testing.assert_array_equal(load_sequence(path, kind="vertex", size=3), values)


def test_complex_sequence(tmp_path):
    values = np.array([1 + 2j, -3j])
    path = save_sequence(tmp_path / "c.json", "edge", values)
    np.testing.assert_array_equal(load_sequence(path), values)


def test_keyed_sequence(tmp_path):
    path = tmp_path / "k.json"
    path.write_text(json.dumps({"kind": "sample", "values": {"0": 1.5, "2": -1}}))
    np.testing.assert_array_equal(load_sequence(path, size=3), [1.5, 0.0, -1.0])


def test_sequence_errors(tmp_path):
    path = save_sequence(tmp_path / "v.json", "vertex", np.ones(4))
    with pytest.raises(ParseError, match="edge"):
        load_sequence(path, kind="edge")
    with pytest.raises(ParseError, match="expected 5"):
        load_sequence(path, size=5)
    with pytest.raises(FileNotFoundError, match="missing file"):
        read_json(tmp_path / "nope.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ParseError):
        read_json(bad)
