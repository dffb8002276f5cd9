"""Estimator-style front end: fit a target operator, transform signals.

The designers follow the scikit-learn conventions (constructor stores
hyperparameters verbatim, `fit` learns and returns self, learned attributes
carry a trailing underscore, `get_params`/`set_params` work with clone and
pipelines). `fit` takes the target operator to implement; `transform`
applies the designed filter to row signals.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ._validation import as_signals
from .design import (
    LinearTarget,
    design_anc,
    design_mse_node_invariant,
    design_mse_node_variant,
    design_perfect_node_invariant,
    design_perfect_node_variant,
    design_wce_node_invariant,
    design_wce_node_variant,
)
from .exceptions import ParameterError
from .shifts import ShiftOperator
from .spectral import decompose

CRITERIA = ("perfect", "mse", "wce", "frobenius")


class _DesignedFilterBase(BaseEstimator):
    def _spectral(self):
        shift = self.shift
        if shift is None:
            raise ParameterError("a shift operator is required before fitting")
        if not isinstance(shift, ShiftOperator):
            shift = ShiftOperator(np.asarray(shift))
        return decompose(shift, tol=self.eig_tol)

    def _target(self, B):
        target = LinearTarget.from_any(B)
        if self.rx is not None:
            if target.rx is not None or target.rx_factor is not None:
                raise ParameterError("covariance given both on the estimator and the target")
            target = LinearTarget(target.matrix, target.sources, target.sinks, rx=np.asarray(self.rx))
        return target

    def _check_fitted(self):
        if not hasattr(self, "filter_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet; call fit first")

    def transform(self, X):
        """Apply the designed operator to row signals (m, n) or a single (n,)."""
        self._check_fitted()
        X, one = as_signals(X, self.filter_.n)
        Y = (self.operator_ @ X.T).T
        return Y[0] if one else Y

    def predict(self, X):
        return self.transform(X)

    @property
    def operator_(self):
        self._check_fitted()
        return self.filter_.to_dense()


class NodeInvariantGraphFilter(_DesignedFilterBase):
    """Polynomial-of-the-shift filter with shared coefficients.

    Parameters
    ----------
    shift : ShiftOperator or (n, n) array
    order : int or None
        Number of coefficients L (uses powers S^0..S^{L-1}); None means n.
        Orders beyond n are capped at n.
    criterion : "perfect", "mse", "wce", or "frobenius"
        "frobenius" is "mse" with an identity input covariance.
    rx : (n, n) array or None
        Input covariance for the error metric.
    eig_tol : float or None
        Eigenvalue-equality tolerance for the spectral decomposition.
    wce_options : MinimaxOptions or None
    """

    def __init__(self, shift=None, order=None, criterion="mse", rx=None,
                 eig_tol=None, wce_options=None):
        self.shift = shift
        self.order = order
        self.criterion = criterion
        self.rx = rx
        self.eig_tol = eig_tol
        self.wce_options = wce_options

    def fit(self, B, y=None):
        if self.criterion not in CRITERIA:
            raise ParameterError(f"criterion must be one of {CRITERIA}, got {self.criterion!r}")
        spec = self._spectral()
        target = self._target(B)
        if self.criterion == "perfect":
            report = design_perfect_node_invariant(spec, target, self.order)
        elif self.criterion == "wce":
            report = design_wce_node_invariant(spec, target, self.order, self.wce_options)
        else:
            report = design_mse_node_invariant(spec, target, self.order)
        self.spectral_ = spec
        self.report_ = report
        self.coef_ = report.coefficients
        self.filter_ = report.build_filter(spec.shift)
        return self


class NodeVariantGraphFilter(_DesignedFilterBase):
    """Filter with one coefficient vector per node (coefficients applied on
    the node side, after the shifts); strictly more expressive than the
    node-invariant filter for the same order."""

    def __init__(self, shift=None, order=None, criterion="mse", rx=None,
                 eig_tol=None, wce_options=None):
        self.shift = shift
        self.order = order
        self.criterion = criterion
        self.rx = rx
        self.eig_tol = eig_tol
        self.wce_options = wce_options

    def fit(self, B, y=None):
        if self.criterion not in CRITERIA:
            raise ParameterError(f"criterion must be one of {CRITERIA}, got {self.criterion!r}")
        spec = self._spectral()
        target = self._target(B)
        if self.criterion == "perfect":
            report = design_perfect_node_variant(spec, target, self.order)
        elif self.criterion == "wce":
            report = design_wce_node_variant(spec, target, self.order, self.wce_options)
        else:
            report = design_mse_node_variant(spec, target, self.order)
        self.spectral_ = spec
        self.report_ = report
        self.coef_ = report.coefficients
        self.filter_ = report.build_filter(spec.shift)
        return self


class SourceSinkGraphFilter(_DesignedFilterBase):
    """Reduced routing design: deliver source signals to sink nodes.

    fit accepts the full routing target or None, which pairs sinks with
    sources in order (sink i recovers source i). reduction "sources" assumes
    non-source nodes inject zero; "rows" makes no such assumption and fits
    the full sink rows.
    """

    def __init__(self, shift=None, sources=None, sinks=None, order=None,
                 mode="node-variant", reduction="sources", rx=None, eig_tol=None):
        self.shift = shift
        self.sources = sources
        self.sinks = sinks
        self.order = order
        self.mode = mode
        self.reduction = reduction
        self.rx = rx
        self.eig_tol = eig_tol

    def fit(self, B=None, y=None):
        spec = self._spectral()
        if self.sources is None or self.sinks is None:
            raise ParameterError("sources and sinks are required")
        if B is None:
            target = LinearTarget.anc(spec.n, self.sources, self.sinks)
        else:
            target = LinearTarget.from_any(B, spec.n)
            target = LinearTarget(target.matrix, tuple(self.sources), tuple(self.sinks),
                                  rx=target.rx, rx_factor=target.rx_factor)
        if self.rx is not None:
            target.rx = np.asarray(self.rx)
        report = design_anc(spec, target, self.order, mode=self.mode, reduction=self.reduction)
        self.spectral_ = spec
        self.report_ = report
        self.coef_ = report.coefficients
        self.filter_ = report.build_filter(spec.shift)
        return self

    def sink_values(self, X):
        """Outputs read off at the sink nodes, shape (m, n_sinks) or (n_sinks,)."""
        Y = self.transform(X)
        return Y[..., list(self.sinks)]
