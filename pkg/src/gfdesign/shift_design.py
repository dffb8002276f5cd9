"""Designing the shift operator itself.

Two constructions:

* rank-one: given a target `a b^T` on a connected graph, re-weight a
  spanning subgraph so that `a` and `b` become right/left eigenvectors of
  the shift with a simple eigenvalue mu. The shift is mu*I + M_b M_a^T with
  signed, vector-weighted incidence matrices of the subgraph. On a spanning
  tree the simplicity of mu is guaranteed; on the full graph (useful for
  faster propagation, exact for symmetric targets) the eigen-certificates
  are verified at runtime instead.

* eigenbasis-constrained fit: given a full eigenbasis V and a sparsity
  pattern, pick eigenvalues minimizing the energy that leaks outside the
  pattern. Constant eigenvalue vectors (multiples of the identity) always
  leak nothing and are useless as communication operators, so the search
  runs over unit-norm eigenvalue vectors orthogonal to the all-ones vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import as_matrix, as_vector, realize
from .exceptions import CertificateError, ConnectivityError, ParameterError
from .graphs import Graph, spanning_tree
from .shifts import ShiftOperator
from .spectral import SpectralData, decompose

SUBGRAPH_MODES = ("bfs-tree", "full-graph")


@dataclass(frozen=True)
class RankOneTarget:
    """Unit-normalized factors of a rank-one operator a b^T; every entry of
    both vectors must be non-zero."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = as_vector(np.asarray(self.a), name="a")
        b = as_vector(np.asarray(self.b), len(a), name="b")
        if np.any(a == 0) or np.any(b == 0):
            raise ParameterError("rank-one factors must have no zero entries")
        object.__setattr__(self, "a", a / np.linalg.norm(a))
        object.__setattr__(self, "b", b / np.linalg.norm(b))

    @property
    def n(self):
        return self.a.shape[0]

    @property
    def matrix(self):
        return np.outer(self.a, self.b)

    @classmethod
    def from_vectors(cls, a, b=None):
        return cls(np.asarray(a), np.asarray(a if b is None else b))


def weighted_incidence(n, edge_pairs, vec):
    """Signed incidence matrix with weights from `vec`: for the l-th edge
    (i, j) with i < j, column l holds vec[j] at row i and -vec[i] at row j.
    Its transpose annihilates exactly span{vec} on a spanning tree."""
    vec = as_vector(np.asarray(vec), n, name="weight vector")
    M = np.zeros((n, len(edge_pairs)))
    for l, (i, j) in enumerate(edge_pairs):
        i, j = (i, j) if i < j else (j, i)
        M[i, l] = vec[j]
        M[j, l] = -vec[i]
    return M


@dataclass(frozen=True)
class RankOneShiftDesign:
    shift: ShiftOperator
    spectral: SpectralData
    mu: float
    eig_index: int               # position of mu in the sorted spectrum
    right_residual: float        # ||S a - mu a||
    left_residual: float         # ||S^T b - mu b||


def build_rank_one_shift(graph: Graph, target: RankOneTarget, mu=1.0,
                         subgraph="bfs-tree") -> RankOneShiftDesign:
    """Re-weight a subgraph of `graph` so target.matrix becomes a polynomial
    of the returned shift.

    Certificates checked on every output: S a = mu a, S^T b = mu b, and mu
    is a simple eigenvalue (its equal-eigenvalue class has size one). On a
    disconnected graph the eigenvalue would repeat once per component, so
    disconnected inputs are rejected up front.
    """
    if subgraph not in SUBGRAPH_MODES:
        raise ParameterError(f"subgraph must be one of {SUBGRAPH_MODES}, got {subgraph!r}")
    if graph.directed:
        raise ParameterError("rank-one shift construction needs an undirected graph")
    if target.n != graph.n:
        raise ParameterError(f"target has {target.n} entries, graph has {graph.n} nodes")
    if not graph.is_connected():
        raise ConnectivityError("rank-one shift construction needs a connected graph")

    base = spanning_tree(graph) if subgraph == "bfs-tree" else graph
    pairs = [(i, j) for i, j, _ in base.edges]
    Ma = weighted_incidence(graph.n, pairs, target.a)
    Mb = weighted_incidence(graph.n, pairs, target.b)
    S = mu * np.eye(graph.n) + Mb @ Ma.T

    mask = np.eye(graph.n, dtype=bool)
    for i, j in pairs:
        mask[i, j] = mask[j, i] = True
    shift = ShiftOperator(S, mask=mask)

    right = float(np.linalg.norm(S @ target.a - mu * target.a))
    left = float(np.linalg.norm(S.T @ target.b - mu * target.b))
    if max(right, left) > 1e-10:
        raise CertificateError(
            f"eigenvector certificates failed (residuals {right:.2e}, {left:.2e})"
        )
    spec = decompose(shift)
    k = int(np.argmin(np.abs(spec.values - mu)))
    cls = next(c for c in spec.eigclasses if k in c)
    if abs(spec.values[k] - mu) > spec.tol or len(cls) != 1:
        raise CertificateError(
            f"designed eigenvalue {mu} is not simple (class size {len(cls)}); "
            "the subgraph weighting does not pin it for this target"
        )
    return RankOneShiftDesign(shift, spec, float(mu), k, right, left)


@dataclass(frozen=True)
class EigenbasisFit:
    """Best eigenvalues for a prescribed eigenbasis under a sparsity pattern.

    `shift` holds the fitted matrix with off-pattern entries zeroed;
    `raw_matrix` keeps them. `feasible` means the leak was below 1e-8 before
    zeroing."""

    shift: ShiftOperator
    eigenvalues: np.ndarray
    raw_matrix: np.ndarray
    max_off_pattern: float
    feasible: bool
    objective: float


def fit_shift_to_eigenbasis(V, pattern, ridge=1e-12) -> EigenbasisFit:
    """Least-squares eigenvalue selection for a prescribed eigenbasis.

    Minimizes the squared magnitude of S = sum_k lambda_k v_k w_k^T outside
    the allowed pattern (plus a tiny ridge for rank-deficient systems), over
    unit-norm lambda orthogonal to the all-ones vector. Rank-deficient
    systems with no zero-residual solution are reported as infeasible but
    still return the best fit.
    """
    V = as_matrix(V, name="eigenbasis")
    n = V.shape[0]
    pattern = np.asarray(pattern, dtype=bool)
    if pattern.shape != (n, n):
        raise ParameterError("pattern shape must match the eigenbasis")
    if not np.all(np.diag(pattern)):
        raise ParameterError("pattern must include the diagonal")
    try:
        Vinv = np.linalg.inv(V)
    except np.linalg.LinAlgError as exc:
        raise ParameterError("eigenbasis must be invertible") from exc

    off = ~pattern
    # A[q, k] = entry q (off-pattern, flattened) of W_k = v_k w_k^T
    A = np.stack([np.outer(V[:, k], Vinv[k, :])[off] for k in range(n)], axis=1)

    ones = np.ones((1, n)) / np.sqrt(n)
    _, _, Vt = np.linalg.svd(ones, full_matrices=True)
    Q = Vt[1:].T                      # orthonormal basis of the 1-perp subspace
    G = A @ Q
    reg = np.vstack([G, np.sqrt(ridge) * np.eye(n - 1, dtype=G.dtype)])
    _, sv, Wt = np.linalg.svd(reg, full_matrices=False)
    y = Wt[-1].conj()
    lam = Q @ y
    objective = float(sv[-1] ** 2)

    raw = (V * lam) @ Vinv
    max_off = float(np.max(np.abs(raw[off]), initial=0.0))
    feasible = max_off < 1e-8
    clipped = raw.copy()
    clipped[off] = 0.0
    shift = ShiftOperator(realize(clipped), mask=pattern)
    return EigenbasisFit(shift, realize(lam, tol=1e-12), realize(raw), max_off, feasible, objective)
