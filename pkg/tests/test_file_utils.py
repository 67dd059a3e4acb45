"""Tests for the file helpers."""

import numpy as np
import pytest

from src.core.errors import DataError
from src.core.graph_core import Graph
from src.utils.file_utils import (
    ensure_dir,
    graph_from_dict,
    iter_ndjson,
    read_graph_csv,
    read_graph_json,
    read_json,
    read_matrix_csv,
    write_csv,
    write_graph_csv,
    write_graph_json,
    write_json,
    write_matrix_csv,
    write_ndjson,
)


def test_ensure_dir_creates_parents(tmp_path):
    path = ensure_dir(tmp_path / "a" / "b")
    assert path.is_dir()
    assert ensure_dir(path) == path


def test_json_is_sorted_and_stable(tmp_path):
    path = write_json(tmp_path / "x.json", {"b": 1, "a": [1, 2]})
    text = path.read_text(encoding="utf-8")
    assert text.index('"a"') < text.index('"b"')
    assert text.endswith("\n")
    assert read_json(path) == {"a": [1, 2], "b": 1}


def test_read_json_errors(tmp_path):
    with pytest.raises(DataError):
        read_json(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{", encoding="utf-8")
    with pytest.raises(DataError):
        read_json(bad)


def test_ndjson(tmp_path):
    path = write_ndjson(tmp_path / "r.ndjson", [{"k": 1}, {"k": 2, "a": None}])
    assert path.read_text(encoding="utf-8") == '{"k":1}\n{"a":null,"k":2}\n'
    assert list(iter_ndjson(path)) == [{"k": 1}, {"a": None, "k": 2}]


def test_ndjson_bad_line(tmp_path):
    path = tmp_path / "r.ndjson"
    path.write_text('{"k":1}\n\n{oops\n', encoding="utf-8")
    records = iter_ndjson(path)
    assert next(records) == {"k": 1}
    with pytest.raises(DataError, match=":3:"):
        next(records)


def test_csv_floats_keep_precision(tmp_path):
    path = write_csv(tmp_path / "t.csv", ["a", "b"], [(1, 0.1 + 0.2)])
    assert path.read_text(encoding="utf-8") == "a,b\n1,0.30000000000000004\n"


def test_matrix_csv(tmp_path):
    m = np.array([[1.0, 1 / 3], [-2.5, 1e-12]])
    path = write_matrix_csv(tmp_path / "m.csv", m)
    np.testing.assert_array_equal(read_matrix_csv(path), m)


def test_matrix_csv_single_column(tmp_path):
    path = write_matrix_csv(tmp_path / "v.csv", np.array([1.0, 2.0, 3.0]))
    assert read_matrix_csv(path).shape == (3, 1)


def test_matrix_csv_errors(tmp_path):
    with pytest.raises(DataError):
        read_matrix_csv(tmp_path / "absent.csv")
    empty = tmp_path / "empty.csv"
    empty.write_text("", encoding="utf-8")
    with pytest.raises(DataError):
        read_matrix_csv(empty)
    words = tmp_path / "words.csv"
    words.write_text("a,b\n", encoding="utf-8")
    with pytest.raises(DataError):
        read_matrix_csv(words)


def test_graph_files(tmp_path, diamond_graph):
    assert read_graph_json(write_graph_json(tmp_path / "g.json", diamond_graph)) == diamond_graph
    path = write_graph_csv(tmp_path / "g.csv", diamond_graph)
    assert path.read_text(encoding="utf-8").splitlines()[0] == "0,1,1,0"
    assert read_graph_csv(path) == diamond_graph


def test_graph_dict_errors(tmp_path):
    with pytest.raises(DataError):
        graph_from_dict({"p": 3})
    with pytest.raises(DataError):
        graph_from_dict({"p": 2, "edges": [[0, 5]]})
    asym = tmp_path / "asym.csv"
    asym.write_text("0,1\n0,0\n", encoding="utf-8")
    with pytest.raises(DataError):
        read_graph_csv(asym)


def test_empty_graph_json(tmp_path):
    assert read_graph_json(write_graph_json(tmp_path / "g.json", Graph(3))) == Graph(3)
