"""Text format for embedding tables.

The first line is "<count> <dimension>"; each following line is an id
followed by that many decimals, space separated. The same format serves
pretrained word vectors, exported emoji embeddings, and externally published
alternatives, so tables can be swapped for comparison runs.
"""

from __future__ import annotations

import numpy as np

from .exceptions import CorpusError


def read_vector_table(path) -> tuple[list[str], np.ndarray]:
    """Read (ids, matrix) from the text format; rows align with ids."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().split()
            if len(header) != 2:
                raise CorpusError(f"{path}: header must be '<count> <dimension>'")
            try:
                count, dim = int(header[0]), int(header[1])
            except ValueError:
                raise CorpusError(f"{path}: header must be '<count> <dimension>'") from None
            ids: list[str] = []
            rows = np.empty((count, dim), dtype=np.float64)
            for i in range(count):
                parts = fh.readline().split()
                if len(parts) != dim + 1:
                    raise CorpusError(f"{path}: line {i + 2} has {len(parts)} fields, expected {dim + 1}")
                ids.append(parts[0])
                rows[i] = [float(x) for x in parts[1:]]
    except OSError as err:
        raise CorpusError(f"cannot read vector table {path}: {err}") from err
    return ids, rows


def write_vector_table(path, ids, matrix):
    """Write (ids, matrix) in the text format with round-trip float precision."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != len(ids):
        raise ValueError(f"matrix shape {matrix.shape} does not match {len(ids)} ids")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{matrix.shape[0]} {matrix.shape[1]}\n")
        for name, row in zip(ids, matrix):
            fh.write(name)
            for value in row:
                fh.write(f" {float(value)!r}")
            fh.write("\n")
