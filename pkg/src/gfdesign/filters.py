"""Filter objects: node-invariant, node-variant (both orders), product form.

Every filter supports a dense evaluation (materialize H, multiply) and a
recursive evaluation that mirrors the distributed computation: one shift
application per round, local combination of stored values. The two must
agree; the simulator in netsim.py re-derives the recursive path under
structural locality constraints.
"""

from __future__ import annotations

import json

import numpy as np

from ._validation import as_vector, realize
from .exceptions import ParameterError
from .shifts import ShiftOperator
from .spectral import SpectralData

#: node-variant coefficient placement relative to the shift powers:
#: "left"  H = sum_l diag(c^(l)) S^l   (scale after shifting)
#: "right" H = sum_l S^l diag(c^(l))   (scale before shifting)
NV_MODES = ("left", "right")


def _as_shift(shift):
    if isinstance(shift, ShiftOperator):
        return shift
    return ShiftOperator(np.asarray(shift))


class NodeInvariantFilter:
    """Polynomial of the shift with one shared coefficient per power."""

    def __init__(self, shift, coef):
        self.shift = _as_shift(shift)
        self.coef = as_vector(np.asarray(coef), name="coefficients")
        if self.coef.shape[0] < 1:
            raise ParameterError("a filter needs at least one coefficient")

    @property
    def order(self):
        """Number of coefficients L; the filter uses powers S^0 .. S^(L-1)."""
        return self.coef.shape[0]

    @property
    def n(self):
        return self.shift.n

    def to_dense(self):
        S = self.shift.matrix
        H = np.zeros((self.n, self.n), dtype=np.result_type(S, self.coef))
        P = np.eye(self.n, dtype=H.dtype)
        for c in self.coef:
            H += c * P
            P = P @ S
        return realize(H)

    def spectral_dense(self, spec: SpectralData):
        """Equivalent dense form V diag(Psi c) V^{-1}."""
        return spec.filter_matrix(self.coef)

    def eval_dense(self, x):
        return _matvec(self.to_dense(), x)

    def eval_recursive(self, x):
        x = as_vector(np.asarray(x), self.n, name="signal")
        z = x.astype(np.result_type(x, self.shift.matrix, self.coef))
        y = self.coef[0] * z
        for c in self.coef[1:]:
            z = self.shift.matrix @ z
            y = y + c * z
        return realize(y) if not np.iscomplexobj(x) else y

    def as_node_variant(self, mode="left"):
        C = np.tile(self.coef[:, None], (1, self.n))
        return NodeVariantFilter(self.shift, C, mode=mode)

    def to_json_dict(self, shift_ref=""):
        return {
            "kind": "node-invariant",
            "shift": shift_ref,
            "coefficients": _encode_coef(self.coef),
        }


class NodeVariantFilter:
    """Per-node coefficient vectors; column i of C holds node i's weights.

    mode "left" scales each shifted signal at the destination node; mode
    "right" scales the input first and then lets it propagate.
    """

    def __init__(self, shift, coef_matrix, mode="left"):
        self.shift = _as_shift(shift)
        C = np.asarray(coef_matrix)
        if C.ndim != 2 or C.shape[1] != self.shift.n or C.shape[0] < 1:
            raise ParameterError(
                f"coefficient matrix must be (L, {self.shift.n}) with L >= 1, got {C.shape}"
            )
        if mode not in NV_MODES:
            raise ParameterError(f"mode must be one of {NV_MODES}, got {mode!r}")
        self.coef_matrix = C.astype(complex) if np.iscomplexobj(C) else C.astype(float)
        self.mode = mode

    @property
    def order(self):
        return self.coef_matrix.shape[0]

    @property
    def n(self):
        return self.shift.n

    def node_coef(self, i):
        return self.coef_matrix[:, i].copy()

    @property
    def is_constant_rows(self):
        C = self.coef_matrix
        return bool(np.all(np.abs(C - C[:, :1]) < 1e-15))

    def to_dense(self):
        S = self.shift.matrix
        H = np.zeros((self.n, self.n), dtype=np.result_type(S, self.coef_matrix))
        P = np.eye(self.n, dtype=H.dtype)
        for l in range(self.order):
            cl = self.coef_matrix[l]
            H += (cl[:, None] * P) if self.mode == "left" else (P * cl[None, :])
            P = P @ S
        return realize(H)

    def row_form_dense(self, spec: SpectralData):
        """Row-wise spectral form (mode "left"): row i is u_i^T diag(Psi c_i) V^{-1}."""
        if self.mode != "left":
            raise ParameterError("row form applies to left-mode filters")
        Psi = spec.vandermonde(self.order)
        rows = []
        for i in range(self.n):
            chat_i = Psi @ self.coef_matrix[:, i]
            rows.append((spec.u_row(i) * chat_i) @ spec.vectors_inv)
        return realize(np.vstack(rows))

    def khatri_rao_dense(self, spec: SpectralData):
        """(I o Psi C)^T Utilde V^{-1}, the stacked joint form (mode "left")."""
        if self.mode != "left":
            raise ParameterError("Khatri-Rao form applies to left-mode filters")
        n = self.n
        PsiC = spec.vandermonde(self.order) @ self.coef_matrix  # N x N, col i = Psi c_i
        kr = np.zeros((n * n, n), dtype=PsiC.dtype)  # I o PsiC, col i = e_i kron (Psi c_i)
        for i in range(n):
            kr[i * n : (i + 1) * n, i] = PsiC[:, i]
        utilde = np.vstack([np.diag(spec.u_row(i)) for i in range(n)])  # (N^2) x N
        return realize(kr.T @ utilde @ spec.vectors_inv)

    def eval_dense(self, x):
        return _matvec(self.to_dense(), x)

    def eval_recursive(self, x):
        x = as_vector(np.asarray(x), self.n, name="signal")
        S = self.shift.matrix
        dtype = np.result_type(x, S, self.coef_matrix)
        if self.mode == "left":
            z = x.astype(dtype)
            y = self.coef_matrix[0] * z
            for l in range(1, self.order):
                z = S @ z
                y = y + self.coef_matrix[l] * z
        else:
            t = np.zeros(self.n, dtype=dtype)
            for l in range(1, self.order + 1):
                t = S @ t + self.coef_matrix[self.order - l] * x
            y = t
        return realize(y) if not np.iscomplexobj(x) else y

    def to_json_dict(self, shift_ref=""):
        return {
            "kind": "node-variant",
            "mode": self.mode,
            "shift": shift_ref,
            "coefficients": _encode_coef(self.coef_matrix),
        }


class ProductFormFilter:
    """Factored filter gain * prod_l (S - root_l I).

    Setting a root equal to an eigenvalue of the shift annihilates that
    frequency: eigenvectors of the matching eigenvalue map to zero.
    """

    def __init__(self, shift, gain, roots=()):
        self.shift = _as_shift(shift)
        self.gain = complex(gain) if np.iscomplexobj(np.asarray(gain)) else float(gain)
        roots = np.atleast_1d(np.asarray(roots)) if np.size(roots) else np.zeros(0)
        self.roots = roots.astype(complex) if np.iscomplexobj(roots) else roots.astype(float)

    @property
    def order(self):
        return len(self.roots) + 1

    @property
    def n(self):
        return self.shift.n

    def to_dense(self):
        S = self.shift.matrix
        H = np.eye(self.n, dtype=np.result_type(S, self.roots, self.gain))
        for a in self.roots:
            H = H @ (S - a * np.eye(self.n))
        return realize(self.gain * H)

    def expanded(self) -> NodeInvariantFilter:
        """Equivalent node-invariant filter with monomial coefficients."""
        poly = np.polynomial.polynomial.polyfromroots(self.roots) if len(self.roots) else np.ones(1)
        return NodeInvariantFilter(self.shift, self.gain * poly)

    def eval_dense(self, x):
        return _matvec(self.to_dense(), x)

    def eval_recursive(self, x):
        x = as_vector(np.asarray(x), self.n, name="signal")
        S = self.shift.matrix
        w = x.astype(np.result_type(x, S, self.roots, self.gain))
        for a in self.roots:
            w = S @ w - a * w
        y = self.gain * w
        return realize(y) if not np.iscomplexobj(x) else y

    def to_json_dict(self, shift_ref=""):
        return {
            "kind": "product-form",
            "shift": shift_ref,
            "gain": _encode_scalar(self.gain),
            "roots": _encode_coef(self.roots),
        }


def _matvec(H, x):
    x = np.asarray(x)
    y = H @ (x.astype(np.result_type(H, x)))
    return realize(y) if not np.iscomplexobj(x) and not np.iscomplexobj(H) else y


def _encode_scalar(v):
    v = complex(v)
    return v.real if v.imag == 0.0 else [v.real, v.imag]


def _encode_coef(arr):
    arr = np.asarray(arr)
    if np.iscomplexobj(arr) and np.max(np.abs(arr.imag), initial=0.0) > 0.0:
        return {"re": arr.real.tolist(), "im": arr.imag.tolist()}
    return np.real(arr).tolist()


def _decode_coef(obj):
    if isinstance(obj, dict):
        return np.asarray(obj["re"]) + 1j * np.asarray(obj["im"])
    return np.asarray(obj, dtype=float)


def filter_to_json(filt, shift_ref="") -> str:
    return json.dumps(filt.to_json_dict(shift_ref), indent=2)


def filter_from_json(text, shift) -> NodeInvariantFilter | NodeVariantFilter | ProductFormFilter:
    """Rebuild a filter from its JSON form; the shift is supplied by the caller
    (the JSON stores only a reference label)."""
    obj = json.loads(text) if isinstance(text, str) else text
    kind = obj.get("kind")
    if kind == "node-invariant":
        return NodeInvariantFilter(shift, _decode_coef(obj["coefficients"]))
    if kind == "node-variant":
        return NodeVariantFilter(shift, _decode_coef(obj["coefficients"]), mode=obj.get("mode", "left"))
    if kind == "product-form":
        gain = obj["gain"]
        gain = complex(gain[0], gain[1]) if isinstance(gain, list) else float(gain)
        return ProductFormFilter(shift, gain, _decode_coef(obj.get("roots", [])))
    raise ParameterError(f"unknown filter kind {kind!r}")
