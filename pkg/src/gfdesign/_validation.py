"""Input validation helpers shared by the public API."""

from __future__ import annotations

import numbers

import numpy as np

from .exceptions import ParameterError, RealizationError

#: imaginary parts below this (absolute) are considered numerical noise
REAL_TOL = 1e-9


def as_matrix(M, n=None, name="matrix"):
    """Coerce to a 2-D square ndarray (float or complex), optionally of size n."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ParameterError(f"{name} must be square, got shape {M.shape}")
    if n is not None and M.shape[0] != n:
        raise ParameterError(f"{name} must be {n}x{n}, got {M.shape[0]}x{M.shape[0]}")
    if not np.issubdtype(M.dtype, np.number):
        raise ParameterError(f"{name} must be numeric")
    if not np.all(np.isfinite(M)):
        raise ParameterError(f"{name} contains non-finite entries")
    return M.astype(complex) if np.iscomplexobj(M) else M.astype(float)


def as_vector(x, n=None, name="vector"):
    """Coerce to a 1-D ndarray, optionally of length n."""
    x = np.asarray(x)
    if x.ndim != 1:
        raise ParameterError(f"{name} must be one-dimensional, got shape {x.shape}")
    if n is not None and x.shape[0] != n:
        raise ParameterError(f"{name} must have length {n}, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise ParameterError(f"{name} contains non-finite entries")
    return x.astype(complex) if np.iscomplexobj(x) else x.astype(float)


def as_signals(X, n, name="signals"):
    """Coerce a single signal or a batch of row signals to shape (m, n).

    Returns (array, was_1d) so callers can mirror the input shape on output.
    """
    X = np.asarray(X)
    if X.ndim == 1:
        return as_vector(X, n, name=name)[None, :], True
    if X.ndim != 2 or X.shape[1] != n:
        raise ParameterError(f"{name} must be (m, {n}) or ({n},), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ParameterError(f"{name} contains non-finite entries")
    X = X.astype(complex) if np.iscomplexobj(X) else X.astype(float)
    return X, False


def as_index_tuple(idx, n, name="index set"):
    """Validate a collection of node indices against a graph of size n."""
    out = tuple(int(i) for i in idx)
    for i in out:
        if not 0 <= i < n:
            raise ParameterError(f"{name} contains {i}, outside [0, {n})")
    if len(set(out)) != len(out):
        raise ParameterError(f"{name} contains duplicates")
    return out


def check_positive_int(value, name, minimum=1):
    if not isinstance(value, numbers.Integral) or value < minimum:
        raise ParameterError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def realize(arr, tol=REAL_TOL, strict=False, name="operator"):
    """Drop imaginary parts below tol; with strict=True, raise if they exceed it."""
    arr = np.asarray(arr)
    if not np.iscomplexobj(arr):
        return arr
    worst = float(np.max(np.abs(arr.imag))) if arr.size else 0.0
    if worst < tol:
        return np.ascontiguousarray(arr.real)
    if strict:
        raise RealizationError(
            f"{name} has imaginary parts up to {worst:.3e} (tolerance {tol:.1e})"
        )
    return arr


def covariance_factor(rx, tol=1e-10):
    """Symmetric factor F with F @ F.T == rx, for symmetric PSD rx.

    Eigenvalues in [-tol*max, 0) are clipped to zero; anything more negative
    is rejected.
    """
    rx = as_matrix(rx, name="covariance")
    if np.iscomplexobj(rx):
        raise ParameterError("covariance must be real")
    if not np.allclose(rx, rx.T, atol=1e-12 * max(1.0, float(np.abs(rx).max()))):
        raise ParameterError("covariance must be symmetric")
    w, Q = np.linalg.eigh(rx)
    floor = -tol * max(1.0, float(w.max(initial=0.0)))
    if np.any(w < floor):
        raise ParameterError(f"covariance is not positive semidefinite (min eig {w.min():.3e})")
    w = np.clip(w, 0.0, None)
    return (Q * np.sqrt(w)) @ Q.T
