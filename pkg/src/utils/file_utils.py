"""
File handling utilities for JunctionWalk.

Every writer produces deterministic bytes for the same input: JSON is
written with sorted keys, floats in CSV files use repr precision.
"""

import csv
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Sequence, Union

import numpy as np

from src.core.errors import DataError
from src.core.graph_core import Graph

logger = logging.getLogger(__name__)

PathLike = Union[str, "os.PathLike[str]"]


def ensure_dir(path: PathLike) -> Path:
    """Create `path` (and parents) if needed and return it as a Path."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def read_matrix_csv(file_path: PathLike, skip_header: bool = False) -> np.ndarray:
    """
    Load a numeric CSV matrix.

    Args:
        file_path: path to a comma-separated file, one row per line
        skip_header: skip the first line

    Returns:
        a 2-D float array (a single column is returned as n x 1)

    Raises:
        DataError: if the file is missing, empty or not numeric
    """
    path = Path(file_path)
    if not path.is_file():
        raise DataError(f"file not found: {path}")
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1 if skip_header else 0, ndmin=2)
    except ValueError as exc:
        raise DataError(f"{path}: not a numeric CSV matrix ({exc})") from exc
    if data.size == 0:
        raise DataError(f"{path}: no data rows")
    logger.debug("Loaded %dx%d matrix from %s", data.shape[0], data.shape[1], path)
    return data


def write_matrix_csv(file_path: PathLike, matrix: np.ndarray, fmt: str = "%.17g") -> Path:
    path = Path(file_path)
    ensure_dir(path.parent)
    m = np.asarray(matrix)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.size == 0:
        path.write_text("", encoding="utf-8")
    else:
        np.savetxt(path, m, delimiter=",", fmt=fmt)
    return path


def write_json(file_path: PathLike, obj: Any) -> Path:
    path = Path(file_path)
    ensure_dir(path.parent)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, sort_keys=True, indent=2)
        f.write("\n")
    return path


def read_json(file_path: PathLike) -> Any:
    """
    Raises:
        DataError: if the file is missing or not valid JSON
    """
    path = Path(file_path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError as exc:
        raise DataError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from exc


def write_ndjson(file_path: PathLike, records: Iterable[Dict[str, Any]]) -> Path:
    """Write one compact JSON object per line."""
    path = Path(file_path)
    ensure_dir(path.parent)
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record, sort_keys=True, separators=(",", ":")))
            f.write("\n")
    return path


def iter_ndjson(file_path: PathLike) -> Iterator[Dict[str, Any]]:
    """
    Raises:
        DataError: on a missing file or a malformed line
    """
    path = Path(file_path)
    if not path.is_file():
        raise DataError(f"file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON record ({exc})") from exc


def write_csv(file_path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(file_path)
    ensure_dir(path.parent)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return path


def graph_to_dict(g: Graph) -> Dict[str, Any]:
    return {"p": g.p, "edges": [list(e) for e in g.edges()]}


def graph_from_dict(data: Dict[str, Any]) -> Graph:
    """
    Raises:
        DataError: if keys are missing or edges are invalid
    """
    try:
        edges: List = data["edges"]
        return Graph.from_edges(int(data["p"]), [(int(i), int(j)) for i, j in edges])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"invalid graph JSON: {exc}") from exc


def write_graph_json(file_path: PathLike, g: Graph) -> Path:
    return write_json(file_path, graph_to_dict(g))


def read_graph_json(file_path: PathLike) -> Graph:
    return graph_from_dict(read_json(file_path))


def write_graph_csv(file_path: PathLike, g: Graph) -> Path:
    """Write the p x p 0/1 adjacency matrix without a header."""
    return write_matrix_csv(file_path, g.to_matrix(), fmt="%d")


def read_graph_csv(file_path: PathLike) -> Graph:
    """
    Raises:
        DataError: if the matrix is not a symmetric 0/1 adjacency matrix
    """
    m = read_matrix_csv(file_path)
    try:
        return Graph.from_matrix(m)
    except ValueError as exc:
        raise DataError(f"{file_path}: {exc}") from exc
