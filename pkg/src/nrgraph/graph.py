"""Undirected simple graphs, degree statistics and edge-list files."""

from __future__ import annotations

import logging
import os
import re
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

__all__ = ["Graph", "EdgeListError", "degree_histogram", "read_edge_list", "write_edge_list"]

_HEADER = re.compile(r"^#\s*n\s*=\s*(\d+)\s*$")


class EdgeListError(ValueError):
    """Raised for malformed edge-list input; carries the offending line number."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


def _canonical_edges(n, edges):
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    lo = np.minimum(edges[:, 0], edges[:, 1])
    hi = np.maximum(edges[:, 0], edges[:, 1])
    keep = lo != hi
    keys = np.unique(lo[keep] * np.int64(max(n, 1)) + hi[keep])
    return np.column_stack([keys // max(n, 1), keys % max(n, 1)])


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected simple graph on nodes ``0..n-1``.

    ``edges`` is an (m, 2) int64 array sorted lexicographically with
    ``i < j`` in every row. Use :meth:`from_edges` to build one from raw,
    possibly dirty pairs.
    """

    n: int
    edges: np.ndarray
    _offsets: np.ndarray = field(init=False, repr=False)
    _neighbors: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        edges = np.array(self.edges, dtype=np.int64).reshape(-1, 2)
        n = int(self.n)
        if n < 0:
            raise ValueError("n must be non-negative")
        if edges.size:
            if edges.min() < 0 or edges.max() >= n:
                raise ValueError("edge endpoint out of range")
            if np.any(edges[:, 0] >= edges[:, 1]):
                raise ValueError("edges must satisfy i < j (no self-loops)")
            keys = edges[:, 0] * n + edges[:, 1]
            if np.any(np.diff(keys) <= 0):
                raise ValueError("edges must be sorted and unique")
        edges.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", edges)
        # CSR adjacency, built once
        both = np.concatenate([edges, edges[:, ::-1]])
        order = np.lexsort((both[:, 1], both[:, 0]))
        both = both[order]
        counts = np.bincount(both[:, 0], minlength=n) if n else np.zeros(0, dtype=np.int64)
        offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        object.__setattr__(self, "_offsets", offsets)
        object.__setattr__(self, "_neighbors", both[:, 1].copy())

    @classmethod
    def from_edges(cls, n, edges):
        """Build a graph, dropping self-loops and duplicate/reversed pairs."""
        return cls(int(n), _canonical_edges(int(n), edges))

    @property
    def n_edges(self):
        return len(self.edges)

    def degrees(self):
        return np.diff(self._offsets)

    def neighbors(self, i):
        return self._neighbors[self._offsets[i]:self._offsets[i + 1]]

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges, other.edges)

    def __hash__(self):
        return hash((self.n, self.edges.tobytes()))

    def __repr__(self):
        return f"Graph(n={self.n}, n_edges={self.n_edges})"


def degree_histogram(g):
    """Map degree k -> number of nodes with that degree (k = 0 included)."""
    counts = np.bincount(g.degrees(), minlength=1) if g.n else np.zeros(0, dtype=np.int64)
    return {int(k): int(c) for k, c in enumerate(counts) if c > 0}


def read_edge_list(path):
    """Parse a whitespace-separated edge list.

    Lines starting with ``#`` are comments except an optional ``# n=<count>``
    header which fixes the node count. Columns after the first two (weights,
    timestamps) are ignored. Self-loops are dropped with a logged
    warning; both orientations and repeats collapse to one edge.
    """
    declared = None
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith("#"):
                m = _HEADER.match(stripped)
                if m and declared is None:
                    declared = int(m.group(1))
                continue
            parts = stripped.split()
            if len(parts) < 2:
                raise EdgeListError(f"expected two node indices, got {stripped!r}", lineno)
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                raise EdgeListError(f"non-integer node index in {stripped!r}", lineno) from None
            if i < 0 or j < 0:
                raise EdgeListError(f"negative node index in {stripped!r}", lineno)
            if declared is not None and max(i, j) >= declared:
                raise EdgeListError(f"node {max(i, j)} out of range for declared n={declared}", lineno)
            pairs.append((i, j))
    arr = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    n_loops = int(np.sum(arr[:, 0] == arr[:, 1]))
    if n_loops:
        logger.warning("dropped %d self-loop(s) from %s", n_loops, path)
    max_index = int(arr.max()) + 1 if arr.size else 0
    if declared is None:
        n = max_index
    elif declared < max_index:
        raise EdgeListError(f"header declares n={declared} but node {max_index - 1} appears")
    else:
        n = declared
    return Graph.from_edges(n, arr)


def write_edge_list(g, path):
    """Write ``g`` in canonical form: ``# n=<n>`` header, then sorted ``i j`` lines."""
    dirname = os.path.dirname(os.fspath(path))
    if dirname:
        os.makedirs(dirname, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# n={g.n}\n")
        if g.n_edges:
            fh.write("\n".join(f"{i} {j}" for i, j in g.edges.tolist()))
            fh.write("\n")
