"""Shift operators: matrices whose sparsity matches a graph plus its diagonal."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ._validation import as_matrix
from .exceptions import ParameterError
from .graphs import Graph

SHIFT_KINDS = ("adjacency", "laplacian", "consensus-corollary")

#: entries below this magnitude count as structural zeros of the shift
PATTERN_TOL = 1e-12


class ShiftOperator:
    """A graph-shift matrix together with its allowed sparsity pattern.

    An entry S[j, i] may be non-zero only when i == j or the generating graph
    has an edge carrying information from i to j. One multiplication by S is
    one synchronous round of neighbor-to-neighbor exchange.
    """

    def __init__(self, matrix, graph: Graph | None = None, mask=None):
        matrix = as_matrix(matrix, name="shift matrix")
        n = matrix.shape[0]
        if graph is not None and graph.n != n:
            raise ParameterError(f"graph has {graph.n} nodes, matrix is {n}x{n}")
        if mask is None:
            mask = self._pattern_from_graph(graph, n) if graph is not None else None
        if mask is not None:
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != (n, n):
                raise ParameterError("mask shape must match the matrix")
            bad = np.abs(matrix)[~mask]
            if bad.size and bad.max() > PATTERN_TOL:
                idx = np.argwhere((~mask) & (np.abs(matrix) > PATTERN_TOL))[0]
                raise ParameterError(
                    f"shift entry ({idx[0]}, {idx[1]}) = {matrix[idx[0], idx[1]]:.3e} "
                    "falls outside the graph sparsity pattern"
                )
        else:
            mask = (np.abs(matrix) > PATTERN_TOL) | np.eye(n, dtype=bool)
        self.matrix = matrix
        self.mask = mask
        self.graph = graph

    @staticmethod
    def _pattern_from_graph(graph: Graph, n):
        mask = np.eye(n, dtype=bool)
        for i, j, _ in graph.edges:
            mask[j, i] = True
            if not graph.directed:
                mask[i, j] = True
        return mask

    @property
    def n(self):
        return self.matrix.shape[0]

    @property
    def is_symmetric(self):
        M = self.matrix
        return not np.iscomplexobj(M) and np.allclose(M, M.T, atol=1e-12 * max(1.0, float(np.abs(M).max())))

    def in_neighbors(self, i):
        """Nodes whose round-(l-1) value node i reads, excluding i itself."""
        row = self.mask[i].copy()
        row[i] = False
        return np.flatnonzero(row)

    def spectral_norm(self):
        return float(np.linalg.norm(self.matrix, 2))

    def powers(self, count):
        """[I, S, S^2, ..., S^(count-1)] as one (count, n, n) array."""
        out = np.empty((count, self.n, self.n), dtype=self.matrix.dtype)
        out[0] = np.eye(self.n)
        for l in range(1, count):
            out[l] = out[l - 1] @ self.matrix
        return out

    def __repr__(self):
        return f"ShiftOperator(n={self.n}, nnz={int(np.count_nonzero(self.matrix))})"


def shift_from_graph(graph: Graph, kind: str = "adjacency") -> ShiftOperator:
    """Standard shift constructors.

    adjacency            S = A
    laplacian            S = D - A           (undirected only)
    consensus-corollary  S = (I + L) / n     (undirected only; the shift for
                                              which the averaging operator is a
                                              polynomial on any connected graph)
    """
    if kind not in SHIFT_KINDS:
        raise ParameterError(f"unknown shift kind {kind!r}")
    A = graph.adjacency()
    if kind == "adjacency":
        return ShiftOperator(A, graph)
    if graph.directed:
        raise ParameterError(f"{kind} shift requires an undirected graph")
    L = np.diag(A.sum(axis=1)) - A
    if kind == "laplacian":
        return ShiftOperator(L, graph)
    return ShiftOperator((np.eye(graph.n) + L) / graph.n, graph)


def laplacian(graph: Graph):
    """Dense combinatorial Laplacian of an undirected graph."""
    if graph.directed:
        raise ParameterError("laplacian requires an undirected graph")
    A = graph.adjacency()
    return np.diag(A.sum(axis=1)) - A


def best_constant_weight(graph: Graph) -> ShiftOperator:
    """W = I - 2/(lambda_max + lambda_2) L, the fastest single-parameter
    averaging matrix; W @ 1 = 1 and |eig(W - avg)| < 1 on connected graphs."""
    L = laplacian(graph)
    lam = np.linalg.eigvalsh(L)
    lam2, lam_max = lam[1], lam[-1]
    if lam2 <= 1e-12:
        raise ParameterError("best_constant_weight requires a connected graph")
    alpha = 2.0 / (lam_max + lam2)
    return ShiftOperator(np.eye(graph.n) - alpha * L, graph)


def write_shift(shift: ShiftOperator, path):
    """Edge-list style dump of a shift: `n <count> directed 1`, then `i j w`
    rows for every non-zero including the diagonal."""
    rows = np.argwhere(np.abs(shift.matrix) > PATTERN_TOL)
    lines = [f"n {shift.n} directed 1"]
    lines += [f"{j} {i} {float(shift.matrix[j, i])!r}" for j, i in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def read_shift(path) -> ShiftOperator:
    """Read a shift written by :func:`write_shift` (self-loops allowed)."""
    text = Path(path).read_text().strip().splitlines()
    header = text[0].split()
    if len(header) != 4 or header[0] != "n":
        raise ParameterError(f"{path}: bad header {text[0]!r}")
    n = int(header[1])
    S = np.zeros((n, n))
    for line in text[1:]:
        if not line.strip():
            continue
        j, i, w = line.split()
        S[int(j), int(i)] = float(w)
    return ShiftOperator(S)
