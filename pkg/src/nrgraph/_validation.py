"""Input coercion shared by the estimators and the command line."""

from __future__ import annotations

import numbers

import numpy as np
from scipy import sparse

from .graph import Graph
from .models import PRIORS


def check_graph(X, n_nodes=None):
    """Coerce ``X`` to a :class:`Graph`.

    Accepts a Graph, a square adjacency matrix (dense or scipy sparse, only
    the upper triangle off the diagonal is read) or an ``(m, 2)`` integer
    edge array. For edge arrays ``n_nodes`` defaults to the largest index
    plus one.
    """
    if isinstance(X, Graph):
        if n_nodes is not None and n_nodes != X.n:
            raise ValueError(f"n_nodes={n_nodes} but graph has {X.n} nodes")
        return X
    if sparse.issparse(X):
        if X.shape[0] != X.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {X.shape}")
        upper = sparse.triu(sparse.coo_matrix(X), k=1)
        upper.eliminate_zeros()
        return Graph.from_edges(X.shape[0], np.column_stack([upper.row, upper.col]))
    arr = np.asarray(X)
    # a 2x2 integer array is read as two edges; pass sparse input for a 2-node adjacency
    if arr.ndim == 2 and arr.shape[1] == 2 and arr.dtype != bool:
        if arr.size and not np.issubdtype(arr.dtype, np.integer):
            if not np.all(np.equal(np.mod(arr, 1), 0)):
                raise ValueError("edge array must hold integer node indices")
            arr = arr.astype(np.int64)
        n = int(arr.max()) + 1 if n_nodes is None and arr.size else int(n_nodes or 0)
        return Graph.from_edges(n, arr)
    if arr.ndim == 2 and arr.shape[0] == arr.shape[1]:
        i, j = np.nonzero(np.triu(arr, k=1))
        return Graph.from_edges(arr.shape[0], np.column_stack([i, j]))
    raise ValueError(f"cannot interpret input of shape {arr.shape} as a graph")


def check_prior_kind(kind):
    if kind not in PRIORS:
        raise ValueError(f"prior must be one of {sorted(PRIORS)}, got {kind!r}")
    return kind


def check_positive_int(value, name, minimum=1):
    if not isinstance(value, numbers.Integral) or isinstance(value, bool) or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def chain_seeds(random_state, n_chains):
    """Independent child seeds, one per chain, from an int, SeedSequence or Generator."""
    if isinstance(random_state, np.random.Generator):
        root = np.random.SeedSequence(int(random_state.integers(2**63)))
    elif isinstance(random_state, np.random.SeedSequence):
        root = random_state
    else:
        root = np.random.SeedSequence(random_state)
    return root.spawn(n_chains)


def check_labels(labels, n):
    labels = np.asarray(labels)
    if labels.ndim != 1 or len(labels) != n:
        raise ValueError(f"expected {n} labels, got {labels.shape}")
    if labels.size and not np.issubdtype(labels.dtype, np.integer):
        raise ValueError("labels must be integers")
    return labels.astype(np.int64)
