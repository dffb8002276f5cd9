"""Eigendecomposition of shift operators and frequency-domain transforms.

All spectral computation runs in complex arithmetic and is downcast to real
only when every imaginary part is negligible; asymmetric real shifts (e.g.
the directed cycle) genuinely have complex spectra. Eigenvalues are sorted
lexicographically by (-Re, -Im) so every derived object (Vandermonde matrix,
designed coefficients, reports) is reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import REAL_TOL, as_vector, realize
from .exceptions import NotDiagonalizableError, ParameterError
from .shifts import ShiftOperator

#: relative Frobenius threshold for the diagonalization certificate
RECONSTRUCTION_TOL = 1e-9


def _single_linkage_classes(values, tol):
    """Partition indices of `values` into groups closed under |vi - vj| <= tol."""
    n = len(values)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(n):
        for j in range(i + 1, n):
            if abs(values[i] - values[j]) <= tol:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return tuple(tuple(sorted(g)) for g in sorted(groups.values(), key=lambda g: g[0]))


@dataclass(frozen=True)
class SpectralData:
    """Eigendecomposition of a shift, with the pieces filter designs consume.

    vectors      V, columns are eigenvectors
    vectors_inv  V^{-1} (V^T when the symmetric/orthonormal branch applies)
    values       eigenvalues, sorted by (-Re, -Im)
    eigclasses   partition of indices into equal-eigenvalue groups (tolerance
                 from `tol`), single-linkage
    """

    shift: ShiftOperator
    values: np.ndarray
    vectors: np.ndarray
    vectors_inv: np.ndarray
    eigclasses: tuple
    tol: float
    orthonormal: bool

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def distinct_count(self):
        return len(self.eigclasses)

    def vandermonde(self, order):
        """N x order matrix with entry [k, l] = values[k] ** l."""
        if order < 1:
            raise ParameterError("order must be >= 1")
        return np.vander(self.values, order, increasing=True)

    def u_row(self, i):
        """u_i = V^T e_i: how strongly node i senses each frequency."""
        return self.vectors[i, :].copy()

    def to_frequency(self, x):
        return self.vectors_inv @ np.asarray(x)

    def from_frequency(self, xhat):
        return self.vectors @ np.asarray(xhat)

    def frequency_response(self, coef):
        """Per-eigenvalue filter gains of a coefficient vector."""
        coef = as_vector(np.asarray(coef), name="coefficients")
        return self.vandermonde(len(coef)) @ coef

    def filter_matrix(self, coef):
        """Dense operator V diag(Psi c) V^{-1} for polynomial coefficients."""
        chat = self.frequency_response(coef)
        return realize((self.vectors * chat) @ self.vectors_inv)


def decompose(shift, tol=None) -> SpectralData:
    """Full complex eigendecomposition with a reconstruction certificate.

    Symmetric real shifts use the orthonormal branch (V^{-1} = V^T). The
    certificate ||V diag(w) V^{-1} - S||_F <= 1e-9 ||S||_F rejects defective
    matrices rather than silently approximating them.

    tol is the eigenvalue-equality threshold used to build equal-eigenvalue
    classes; it defaults to 1e-8 * max|eigenvalue|.
    """
    if isinstance(shift, np.ndarray):
        shift = ShiftOperator(shift)
    S = shift.matrix
    if shift.is_symmetric:
        w, V = np.linalg.eigh(S)
        Vinv = V.T.copy()
        orthonormal = True
    else:
        w, V = np.linalg.eig(S.astype(complex))
        try:
            Vinv = np.linalg.inv(V)
        except np.linalg.LinAlgError as exc:
            raise NotDiagonalizableError("eigenvector matrix is singular") from exc
        orthonormal = False

    order = np.lexsort((-w.imag, -w.real)) if np.iscomplexobj(w) else np.argsort(-w)
    w, V, Vinv = w[order], V[:, order], Vinv[order, :]

    recon = (V * w) @ Vinv
    scale = max(float(np.linalg.norm(S)), 1e-300)
    defect = float(np.linalg.norm(recon - S)) / scale
    if defect > RECONSTRUCTION_TOL:
        raise NotDiagonalizableError(
            f"reconstruction certificate failed: relative error {defect:.3e}"
        )

    if np.iscomplexobj(w) and np.max(np.abs(w.imag), initial=0.0) < REAL_TOL:
        if np.max(np.abs(V.imag), initial=0.0) < REAL_TOL:
            w, V, Vinv = w.real, V.real.copy(), np.ascontiguousarray(Vinv.real)

    if tol is None:
        tol = 1e-8 * max(float(np.max(np.abs(w), initial=0.0)), 1.0)
    if tol <= 0:
        raise ParameterError("tol must be positive")
    classes = _single_linkage_classes(w, tol)
    return SpectralData(shift, w, V, Vinv, classes, float(tol), orthonormal)


def vandermonde(spec: SpectralData, order):
    return spec.vandermonde(order)


def frequency_response(spec: SpectralData, coef):
    return spec.frequency_response(coef)


def apply_in_frequency(spec: SpectralData, coef, x):
    """Filter a signal in the frequency domain: yhat = (Psi c) o xhat."""
    wrapped = isinstance(x, GraphSignal)
    values = x.values if wrapped else np.asarray(x)
    chat = spec.frequency_response(coef)
    y = spec.from_frequency(chat * spec.to_frequency(values))
    if not np.iscomplexobj(values) and not np.iscomplexobj(np.asarray(coef)):
        y = realize(y)
    return GraphSignal(y) if wrapped else y


@dataclass(frozen=True)
class GraphSignal:
    """A vector indexed by graph nodes."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", as_vector(np.asarray(self.values), name="signal"))

    @property
    def n(self):
        return self.values.shape[0]

    def hat(self, spec: SpectralData):
        """Frequency representation V^{-1} x."""
        return spec.to_frequency(self.values)
