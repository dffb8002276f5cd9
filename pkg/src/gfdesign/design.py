"""Feasibility checks and optimal coefficient solvers.

Perfect designs match the target in the frequency domain (pseudoinverse of
the eigenvalue Vandermonde system); trace-optimal designs solve a linear
least-squares problem over shift powers; worst-case designs minimize the top
eigenvalue of the error covariance with the subgradient solver in
minimax.py, warm-started at the trace-optimal solution so the pair of
optimality certificates (each design wins its own metric) holds by
construction.

All power/Vandermonde systems are assembled in an affinely centered basis
(spectrum mapped into the unit disc) and the coefficients are mapped back to
plain monomials-in-S exactly afterwards; raw monomial bases lose the
residual guarantees whenever the spectrum clusters away from zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ._validation import as_index_tuple, as_matrix, covariance_factor, realize
from .exceptions import InfeasibleTargetError, ParameterError
from .filters import NodeInvariantFilter, NodeVariantFilter, _encode_coef
from .minimax import MinimaxOptions, minimize_spectral_norm
from .spectral import SpectralData

#: default tolerance for the perfect-implementation checks
FEASIBILITY_TOL = 1e-8

#: singular-value cutoff for all design pseudoinverses; None = machine level.
#: A larger cutoff (1e-10 was tried) truncates directions that exactly
#: implementable targets need when the shift spectrum carries tight clusters.
PINV_RCOND = None


# ---------------------------------------------------------------------------
# targets


@dataclass
class LinearTarget:
    """A desired linear operator, optionally restricted to sinks/sources.

    rx is the input covariance (identity when None); rx_factor may supply an
    explicit factor F with F @ F.T == rx, which takes precedence (used by the
    correlated-source experiments whose covariance is specified through its
    factor).
    """

    matrix: np.ndarray
    sources: tuple | None = None
    sinks: tuple | None = None
    rx: np.ndarray | None = None
    rx_factor: np.ndarray | None = None

    def __post_init__(self):
        self.matrix = as_matrix(self.matrix, name="target")
        n = self.matrix.shape[0]
        if self.sources is not None:
            self.sources = as_index_tuple(self.sources, n, "sources")
        if self.sinks is not None:
            self.sinks = as_index_tuple(self.sinks, n, "sinks")

    @property
    def n(self):
        return self.matrix.shape[0]

    def factor(self, dim):
        """Covariance factor for a `dim`-dimensional input block."""
        if self.rx_factor is not None:
            F = as_matrix(self.rx_factor, dim, name="rx_factor")
            return F
        if self.rx is None:
            return None
        F = covariance_factor(self.rx)
        if F.shape[0] != dim:
            raise ParameterError(f"covariance is {F.shape[0]}x{F.shape[0]}, expected {dim}x{dim}")
        return F

    def require_positive_definite(self, dim):
        if self.rx_factor is not None:
            F = as_matrix(self.rx_factor, dim, name="rx_factor")
            if np.linalg.matrix_rank(F, tol=1e-12 * max(1.0, float(np.abs(F).max()))) < dim:
                raise ParameterError("worst-case design requires a positive-definite covariance")
            return F
        if self.rx is None:
            return None
        w = np.linalg.eigvalsh(as_matrix(self.rx, dim, name="rx"))
        if w.min() <= 1e-12 * max(1.0, w.max()):
            raise ParameterError("worst-case design requires a positive-definite covariance")
        return covariance_factor(self.rx)

    def reduced_rows(self):
        """B_R: sink rows only."""
        if not self.sinks:
            raise ParameterError("target has no sink set")
        return self.matrix[list(self.sinks), :]

    def reduced(self):
        """B_SR: sink rows, source columns."""
        if not self.sources:
            raise ParameterError("target has no source set")
        return self.reduced_rows()[:, list(self.sources)]

    @classmethod
    def consensus(cls, n, **kw):
        """The averaging operator: every node ends with the network mean."""
        return cls(np.full((n, n), 1.0 / n), **kw)

    @classmethod
    def anc(cls, n, sources, sinks, source_for=None, **kw):
        """Routing target: sink r must recover the input of source_for[r].

        With source_for omitted, sinks pair with sources in order (the
        reduced sink-by-source block is the identity). Rows outside the sink
        set are zero; they never enter reduced designs.
        """
        sources = as_index_tuple(sources, n, "sources")
        sinks = as_index_tuple(sinks, n, "sinks")
        if source_for is None:
            if len(sources) != len(sinks):
                raise ParameterError("default pairing needs equally many sources and sinks")
            source_for = dict(zip(sinks, sources))
        B = np.zeros((n, n))
        for r in sinks:
            s = int(source_for[r])
            if s not in sources:
                raise ParameterError(f"sink {r} maps to {s}, which is not a source")
            B[r, s] = 1.0
        return cls(B, sources=sources, sinks=sinks, **kw)

    @classmethod
    def from_any(cls, obj, n=None):
        if isinstance(obj, cls):
            if n is not None and obj.n != n:
                raise ParameterError(f"target is {obj.n}x{obj.n}, expected {n}x{n}")
            return obj
        return cls(as_matrix(obj, n, name="target"))


# ---------------------------------------------------------------------------
# reports


@dataclass
class FeasibilityReport:
    """Outcome of a perfect-implementation check (never raises)."""

    feasible: bool
    cond_a: bool
    cond_b: bool
    cond_c: bool
    offending: dict = field(default_factory=dict)
    tol: float = FEASIBILITY_TOL

    def failed_conditions(self):
        return [name for name, ok in (("a", self.cond_a), ("b", self.cond_b), ("c", self.cond_c)) if not ok]

    def to_json_dict(self):
        return {
            "feasible": self.feasible,
            "cond_a": self.cond_a,
            "cond_b": self.cond_b,
            "cond_c": self.cond_c,
            "offending": {k: list(v) for k, v in self.offending.items()},
            "tol": self.tol,
        }


@dataclass
class DesignReport:
    """Solved coefficients plus the diagnostics the experiments consume.

    residuals:
      frob_rel       ||H - B||_F / ||B||_F over the designed block
      spectral       ||H - B||_2
      trace_rd       ||(H - B) F||_F^2   (= Tr of the error covariance)
      lambda_max_rd  ||(H - B) F||_2^2   (= worst-case error variance)

    Residuals are evaluated through the centered polynomial basis; rebuilding
    H as sum(c_l S^l) in raw monomials adds roundoff proportional to the
    coefficient magnitude, which matters only for tightly clustered spectra.
    """

    coefficients: np.ndarray
    mode: str                      # "node-invariant" | "node-variant"
    criterion: str                 # "perfect" | "mse" | "wce" | "frobenius"
    order: int
    residuals: dict
    feasibility: FeasibilityReport | None = None
    solver: dict | None = None
    sinks: tuple | None = None
    sources: tuple | None = None

    def build_filter(self, shift, nv_mode="left"):
        if self.mode == "node-invariant":
            return NodeInvariantFilter(shift, self.coefficients)
        return NodeVariantFilter(shift, self.coefficients, mode=nv_mode)

    def to_json_dict(self):
        out = {
            "mode": self.mode,
            "criterion": self.criterion,
            "order": self.order,
            "coefficients": _encode_coef(self.coefficients),
            "residuals": {k: float(v) for k, v in self.residuals.items()},
        }
        if self.feasibility is not None:
            out["feasibility"] = self.feasibility.to_json_dict()
        if self.solver is not None:
            out["solver"] = self.solver
        if self.sinks is not None:
            out["sinks"] = list(self.sinks)
        if self.sources is not None:
            out["sources"] = list(self.sources)
        return out

    def to_json(self):
        return json.dumps(self.to_json_dict(), indent=2)


# ---------------------------------------------------------------------------
# shared machinery


def _effective_order(spec, order):
    if order is None:
        return spec.n
    if order < 1:
        raise ParameterError("order must be >= 1")
    # powers beyond n-1 are linearly dependent on lower ones
    return min(int(order), spec.n)


class _AffineBasis:
    """Internal polynomial basis in T = (S - center I)/radius.

    The spectrum is mapped into the unit disc before any Vandermonde or
    power-stack system is assembled; raw monomials in S are hopeless when
    the eigenvalues cluster (e.g. shifts with a spectrum packed near one
    value). Solutions are converted back to monomial-in-S coefficients
    exactly, by polynomial composition.
    """

    def __init__(self, spec, order):
        vals = spec.values
        center = (np.max(vals.real) + np.min(vals.real)) / 2.0
        if np.iscomplexobj(vals):
            center = center + 0.5j * (np.max(vals.imag) + np.min(vals.imag))
            if abs(center.imag) < 1e-15 * max(1.0, abs(center.real)):
                center = center.real
        radius = float(np.max(np.abs(vals - center), initial=0.0))
        if radius < 1e-300:
            radius = 1.0
        self.spec = spec
        self.order = order
        self.center = center
        self.radius = radius
        self.nodes = (vals - center) / radius
        self._powers = None

    @property
    def vandermonde(self):
        return np.vander(self.nodes, self.order, increasing=True)

    @property
    def powers(self):
        """[I, T, T^2, ...] with T = (S - center I)/radius."""
        if self._powers is None:
            T = (self.spec.shift.matrix - self.center * np.eye(self.spec.n)) / self.radius
            out = np.empty((self.order, self.spec.n, self.spec.n), dtype=np.asarray(T).dtype)
            out[0] = np.eye(self.spec.n)
            for l in range(1, self.order):
                out[l] = out[l - 1] @ T
            self._powers = out
        return self._powers

    def _conversion(self, lin):
        """Columns are the monomial coefficients of (lin[0] + lin[1] x)^l."""
        L = self.order
        A = np.zeros((L, L), dtype=np.result_type(np.asarray(lin), float))
        col = np.ones(1, dtype=A.dtype)
        A[0, 0] = 1.0
        for l in range(1, L):
            col = np.polynomial.polynomial.polymul(col, lin)
            A[: l + 1, l] = col
        return A

    def to_shift_coef(self, coef_t):
        """Monomial-in-S coefficients of a polynomial given in the T basis
        (axis 0 is the coefficient axis; per-node matrices pass through)."""
        lin = np.array([-self.center / self.radius, 1.0 / self.radius])
        return self._conversion(lin) @ np.asarray(coef_t)

    def from_shift_coef(self, coef_s):
        lin = np.array([self.center, self.radius])
        coef_s = np.asarray(coef_s)
        shape = (self.order,) + coef_s.shape[1:]
        padded = np.zeros(shape, dtype=coef_s.dtype)
        take = min(self.order, coef_s.shape[0])
        padded[:take] = coef_s[:take]
        return self._conversion(lin) @ padded

    def dense_invariant(self, coef_t):
        """Dense operator of a shared-coefficient polynomial, evaluated in the
        centered basis (raw monomials in S cancel catastrophically when the
        spectrum clusters away from zero)."""
        return realize(np.tensordot(np.asarray(coef_t), self.powers, axes=(0, 0)))

    def dense_variant(self, coef_t):
        """Dense operator of per-node coefficients (applied after the shifts),
        evaluated in the centered basis."""
        return realize(np.einsum("li,lij->ij", np.asarray(coef_t), self.powers))


def _lstsq(A, b):
    sol, *_ = np.linalg.lstsq(A, b, rcond=PINV_RCOND)
    return sol


def _residuals(H, B, F=None):
    E = H - B
    bnorm = max(float(np.linalg.norm(B)), 1e-300)
    M = E if F is None else E @ F
    return {
        "frob_rel": float(np.linalg.norm(E)) / bnorm,
        "spectral": float(np.linalg.norm(E, 2)),
        "trace_rd": float(np.linalg.norm(M)) ** 2,
        "lambda_max_rd": float(np.linalg.norm(M, 2)) ** 2,
    }


# ---------------------------------------------------------------------------
# node-invariant designs


def check_perfect_node_invariant(spec: SpectralData, target, order=None, tol=FEASIBILITY_TOL) -> FeasibilityReport:
    """Can the target be written as a polynomial of the shift?

    a) the shift's eigenbasis diagonalizes the target;
    b) the target's eigenvalues agree within each equal-eigenvalue class of
       the shift;
    c) the order covers the number of distinct shift eigenvalues, or the
       eigenvalue-to-gain map is itself a polynomial of lower degree.
    """
    report, _ = _check_node_invariant(spec, target, order, tol)
    return report


def _check_node_invariant(spec, target, order, tol):
    target = LinearTarget.from_any(target, spec.n)
    B = target.matrix
    order = _effective_order(spec, order)
    G = spec.vectors_inv @ B @ spec.vectors
    beta = np.diag(G).copy()
    off = G - np.diag(beta)
    bnorm = max(float(np.linalg.norm(B)), 1e-300)
    cond_a = float(np.linalg.norm(off)) < tol * bnorm

    beta_scale = max(1.0, float(np.max(np.abs(beta), initial=0.0)))
    offending_b = []
    for cls in spec.eigclasses:
        if len(cls) < 2:
            continue
        vals = beta[list(cls)]
        if np.max(np.abs(vals - vals[0])) > tol * beta_scale:
            offending_b.append(cls)
    cond_b = not offending_b

    cond_c = order >= spec.distinct_count or _response_interpolable(spec, beta, order, tol)
    offending = {}
    if not cond_a:
        worst = np.unravel_index(np.argmax(np.abs(off)), off.shape)
        offending["a"] = [tuple(int(v) for v in worst)]
    if offending_b:
        offending["b"] = offending_b
    if not cond_c:
        offending["c"] = [order, spec.distinct_count]
    return FeasibilityReport(cond_a and cond_b and cond_c, cond_a, cond_b, cond_c, offending, tol), beta


def _response_interpolable(spec, beta, order, tol):
    """A response whose lambda -> beta map is itself a low-degree polynomial
    needs fewer taps than the distinct-eigenvalue count: test consistency of
    the class-representative interpolation system at this order."""
    reps = [cls[0] for cls in spec.eigclasses]
    basis = _AffineBasis(spec, order)
    Psi = basis.vandermonde[reps, :]
    rhs = beta[reps]
    sol = _lstsq(Psi, rhs)
    return float(np.linalg.norm(Psi @ sol - rhs)) <= tol * (1.0 + float(np.linalg.norm(rhs)))


def design_perfect_node_invariant(spec: SpectralData, target, order=None, tol=FEASIBILITY_TOL) -> DesignReport:
    """Exact coefficients c = Psi^+ beta; raises when the check fails."""
    target = LinearTarget.from_any(target, spec.n)
    order = _effective_order(spec, order)
    feas, beta = _check_node_invariant(spec, target, order, tol)
    if not feas.feasible:
        raise InfeasibleTargetError(
            f"perfect node-invariant implementation infeasible; failed condition(s) "
            f"{', '.join(feas.failed_conditions())}",
            feasibility=feas,
            condition=feas.failed_conditions()[0],
        )
    basis = _AffineBasis(spec, order)
    coef_t = _lstsq(basis.vandermonde, beta)
    coef_t = _refine_invariant(basis, coef_t, target.matrix)
    coef = realize(basis.to_shift_coef(coef_t), tol=1e-12)
    H = basis.dense_invariant(coef_t)
    report = DesignReport(
        coefficients=coef,
        mode="node-invariant",
        criterion="perfect",
        order=order,
        residuals=_residuals(H, target.matrix, target.factor(spec.n)),
        feasibility=feas,
    )
    return report


def _refine_invariant(basis, coef_t, B, steps=2):
    """Newton-style refinement of a frequency-domain solution in operator
    space; the Vandermonde solve alone can lose digits through an
    ill-conditioned eigenbasis."""
    powers = basis.powers
    Theta = powers.reshape(basis.order, -1).T
    coef = coef_t
    res = B - np.tensordot(coef, powers, axes=(0, 0))
    best = float(np.linalg.norm(res))
    for _ in range(steps):
        if best <= 1e-14 * max(1.0, float(np.linalg.norm(B))):
            break
        cand = coef + _lstsq(Theta, res.ravel())
        res_c = B - np.tensordot(cand, powers, axes=(0, 0))
        nc = float(np.linalg.norm(res_c))
        if nc >= best:
            break
        coef, res, best = cand, res_c, nc
    return coef


def design_mse_node_invariant(spec: SpectralData, target, order=None) -> DesignReport:
    """Trace-optimal coefficients: least squares over vectorized shift powers."""
    target = LinearTarget.from_any(target, spec.n)
    order = _effective_order(spec, order)
    F = target.factor(spec.n)
    basis = _AffineBasis(spec, order)
    stacked = basis.powers if F is None else basis.powers @ F
    Theta = stacked.reshape(order, -1).T
    rhs = (target.matrix if F is None else target.matrix @ F).ravel()
    coef_t = _lstsq(Theta, rhs)
    coef = realize(basis.to_shift_coef(coef_t), tol=1e-12)
    H = basis.dense_invariant(coef_t)
    return DesignReport(
        coefficients=coef,
        mode="node-invariant",
        criterion="mse" if (target.rx is not None or target.rx_factor is not None) else "frobenius",
        order=order,
        residuals=_residuals(H, target.matrix, F),
    )


def _sigma_of(basis, coef, B, F):
    E = basis.dense_invariant(basis.from_shift_coef(coef)) - B
    return float(np.linalg.norm(E if F is None else E @ F, 2))


def _wce_basis_expand(M0, basis, theta0):
    """Real-parameter expansion for complex problems: [basis, i*basis]."""
    if not (np.iscomplexobj(M0) or np.iscomplexobj(basis)):
        return basis, np.asarray(theta0, dtype=float), False
    basis_c = np.concatenate([basis, 1j * basis], axis=0)
    theta = np.concatenate([np.real(theta0), np.imag(theta0)])
    return basis_c, theta, True


def _polish_toward(theta_best, theta_ref, M0, mats, rel_tie=1e-12, steps=50):
    """Pick the point the worst-case design reports from its level set.

    The top-eigenvalue minimizer is rarely unique; among (numerically) tied
    minimizers, prefer the one closest to the trace-optimal reference: walk
    as far toward it as the worst-case value allows. If the reference itself
    is tied, return it exactly, so tied designs coincide in every statistic.
    """

    def sigma(th):
        return float(np.linalg.norm(M0 + np.tensordot(th, mats, axes=(0, 0)), 2))

    s_best = sigma(theta_best)
    s_ref = sigma(theta_ref)
    if s_ref <= s_best * (1.0 + rel_tie):
        return np.asarray(theta_ref, dtype=float)
    lo, hi = 0.0, 1.0
    level = s_best * (1.0 + rel_tie)
    for _ in range(steps):
        mid = (lo + hi) / 2.0
        if sigma(theta_best + mid * (theta_ref - theta_best)) <= level:
            lo = mid
        else:
            hi = mid
    polished = theta_best + lo * (theta_ref - theta_best)
    return polished if sigma(polished) <= s_ref else np.asarray(theta_ref, dtype=float)


def design_wce_node_invariant(spec: SpectralData, target, order=None, options=None,
                              warm_start=None) -> DesignReport:
    """Worst-case-error coefficients: minimize the top eigenvalue of the
    error covariance, warm started at the trace-optimal solution.

    warm_start optionally supplies extra candidate coefficients (e.g. a
    lower-order solution, zero-padded); the better of it and the
    trace-optimal start seeds the solver, and the solver never returns a
    worse point than its seed.
    """
    target = LinearTarget.from_any(target, spec.n)
    order = _effective_order(spec, order)
    F = target.require_positive_definite(spec.n)
    mse = design_mse_node_invariant(spec, target, order)
    basis = _AffineBasis(spec, order)
    mats = basis.powers if F is None else basis.powers @ F
    M0 = -(target.matrix if F is None else target.matrix @ F)
    start = mse.coefficients
    if warm_start is not None:
        cand = np.zeros(order, dtype=np.result_type(np.asarray(warm_start), float))
        cand[: min(order, len(warm_start))] = np.asarray(warm_start)[:order]
        if _sigma_of(basis, cand, target.matrix, F) < _sigma_of(basis, start, target.matrix, F):
            start = cand
    theta0 = basis.from_shift_coef(start)
    theta_mse = basis.from_shift_coef(mse.coefficients)
    mats, theta0, expanded = _wce_basis_expand(M0, mats, theta0)
    if expanded:
        theta_mse = np.concatenate([np.real(theta_mse), np.imag(theta_mse)])
    result = minimize_spectral_norm(M0, mats, theta0, options or MinimaxOptions())
    theta = _polish_toward(result.theta, theta_mse, M0, mats)
    if expanded:
        theta = theta[:order] + 1j * theta[order:]
    coef = realize(basis.to_shift_coef(theta), tol=1e-12)
    H = basis.dense_invariant(theta)
    return DesignReport(
        coefficients=coef,
        mode="node-invariant",
        criterion="wce",
        order=order,
        residuals=_residuals(H, target.matrix, F),
        solver={
            "iterations": result.iterations,
            "converged": result.converged,
            "gap_met": result.gap_met,
            "rel_gap": result.gap,
            "lower_bound": result.lower_bound**2,
            "rel_gap_target": (options or MinimaxOptions()).rel_gap,
        },
    )


# ---------------------------------------------------------------------------
# node-variant designs (coefficients applied after the shifts)


def check_perfect_node_variant(spec: SpectralData, target, order=None, tol=FEASIBILITY_TOL):
    """Per-node version of the perfect-implementation check.

    With btilde_i the target row i seen through the eigenbasis and u_i how
    node i senses each frequency:
    a) btilde_i vanishes wherever u_i does;
    b) the gains btilde_i / u_i agree within each equal-eigenvalue class;
    c) the order covers the number of distinct eigenvalues.
    """
    target = LinearTarget.from_any(target, spec.n)
    order = _effective_order(spec, order)
    n = spec.n
    Btilde = spec.vectors.T @ target.matrix.T  # column i = V^T B^T e_i
    U = spec.vectors.T                          # column i = u_i
    scale_b = max(1.0, float(np.max(np.abs(Btilde), initial=0.0)))
    offending_a, offending_b = [], []
    for i in range(n):
        u = U[:, i]
        bt = Btilde[:, i]
        u_zero = np.abs(u) <= tol * max(1.0, float(np.max(np.abs(u))))
        bad = np.flatnonzero(u_zero & (np.abs(bt) > tol * scale_b))
        offending_a.extend((i, int(k)) for k in bad)
        for cls in spec.eigclasses:
            if len(cls) < 2:
                continue
            idx = [k for k in cls if not u_zero[k]]
            if len(idx) < 2:
                continue
            gains = bt[idx] / u[idx]
            g_scale = max(1.0, float(np.max(np.abs(gains))))
            if np.max(np.abs(gains - gains[0])) > tol * g_scale:
                offending_b.append((i, cls))
    cond_a = not offending_a
    cond_b = not offending_b
    cond_c = order >= spec.distinct_count or _rows_interpolable(spec, target.matrix, order, tol)
    offending = {}
    if offending_a:
        offending["a"] = offending_a
    if offending_b:
        offending["b"] = offending_b
    if not cond_c:
        offending["c"] = [order, spec.distinct_count]
    return FeasibilityReport(cond_a and cond_b and cond_c, cond_a, cond_b, cond_c, offending, tol)


def _rows_interpolable(spec, B, order, tol):
    """Per-node analogue of the low-degree-response shortcut: every row
    system diag(u_i) Psi c = btilde_i must be consistent at this order."""
    basis = _AffineBasis(spec, order)
    Psi = basis.vandermonde
    Btilde = spec.vectors.T @ B.T
    U = spec.vectors.T
    for i in range(spec.n):
        A = U[:, i, None] * Psi
        rhs = Btilde[:, i]
        sol = _lstsq(A, rhs)
        if float(np.linalg.norm(A @ sol - rhs)) > tol * (1.0 + float(np.linalg.norm(rhs))):
            return False
    return True


def design_perfect_node_variant(spec: SpectralData, target, order=None, tol=FEASIBILITY_TOL) -> DesignReport:
    """Per-node exact solves of diag(u_i) Psi c_i = btilde_i."""
    target = LinearTarget.from_any(target, spec.n)
    order = _effective_order(spec, order)
    feas = check_perfect_node_variant(spec, target, order, tol)
    if not feas.feasible:
        node = None
        for cond in ("a", "b"):
            if cond in feas.offending:
                node = feas.offending[cond][0][0]
                break
        raise InfeasibleTargetError(
            "perfect node-variant implementation infeasible"
            + (f" at node {node}" if node is not None else "")
            + f"; failed condition(s) {', '.join(feas.failed_conditions())}",
            feasibility=feas,
            node=node,
            condition=feas.failed_conditions()[0],
        )
    basis = _AffineBasis(spec, order)
    Psi = basis.vandermonde
    Btilde = spec.vectors.T @ target.matrix.T
    U = spec.vectors.T
    Phi = _phi_matrices(spec, basis)
    C = np.empty((order, spec.n), dtype=np.result_type(Psi, Btilde, Phi.dtype))
    for i in range(spec.n):
        c_i = _lstsq(U[:, i, None] * Psi, Btilde[:, i])
        b_i = target.matrix[i, :].astype(Phi.dtype)
        # refine the row fit in operator space (same solution set, better
        # conditioned than the raw eigenbasis system)
        for _ in range(2):
            res = b_i - Phi[i] @ c_i
            if np.linalg.norm(res) <= 1e-14 * max(1.0, np.linalg.norm(b_i)):
                break
            cand = c_i + _lstsq(Phi[i], res)
            if np.linalg.norm(b_i - Phi[i] @ cand) >= np.linalg.norm(res):
                break
            c_i = cand
        C[:, i] = c_i
    H = basis.dense_variant(C)
    C = realize(basis.to_shift_coef(C), tol=1e-12)
    return DesignReport(
        coefficients=C,
        mode="node-variant",
        criterion="perfect",
        order=order,
        residuals=_residuals(H, target.matrix, target.factor(spec.n)),
        feasibility=feas,
    )


def _phi_matrices(spec, basis):
    """Phi_i = (V^{-1})^T diag(u_i) Psi for every node, one (n, N, L) stack,
    in the centered basis."""
    Psi = basis.vandermonde
    W = spec.vectors_inv.T
    U = spec.vectors.T
    # Phi[i] = W @ diag(U[:, i]) @ Psi
    return np.einsum("kj,ji,jl->ikl", W, U, Psi, optimize=True)


def design_mse_node_variant(spec: SpectralData, target, order=None) -> DesignReport:
    """Trace-optimal per-node coefficients; nodes decouple, one least-squares
    solve per node."""
    target = LinearTarget.from_any(target, spec.n)
    order = _effective_order(spec, order)
    F = target.factor(spec.n)
    basis = _AffineBasis(spec, order)
    Phi = _phi_matrices(spec, basis)
    C = np.empty((order, spec.n), dtype=Phi.dtype)
    for i in range(spec.n):
        b_i = target.matrix[i, :].astype(Phi.dtype)
        A = Phi[i] if F is None else F @ Phi[i]
        rhs = b_i if F is None else F @ b_i
        C[:, i] = _lstsq(A, rhs)
    H = basis.dense_variant(C)
    C = realize(basis.to_shift_coef(C), tol=1e-12)
    return DesignReport(
        coefficients=C,
        mode="node-variant",
        criterion="mse" if (target.rx is not None or target.rx_factor is not None) else "frobenius",
        order=order,
        residuals=_residuals(H, target.matrix, F),
    )


def design_wce_node_variant(spec: SpectralData, target, order=None, options=None) -> DesignReport:
    """Worst-case-error node-variant coefficients (optimized jointly over all
    nodes), warm started at the per-node trace-optimal solution."""
    target = LinearTarget.from_any(target, spec.n)
    order = _effective_order(spec, order)
    F = target.require_positive_definite(spec.n)
    mse = design_mse_node_variant(spec, target, order)
    n = spec.n
    basis = _AffineBasis(spec, order)
    rows = basis.powers if F is None else basis.powers @ F  # rows[l][i] = e_i^T T^l F
    mats = np.zeros((order * n, n, n), dtype=rows.dtype)
    for l in range(order):
        for i in range(n):
            mats[l * n + i, i, :] = rows[l, i, :]
    M0 = -(target.matrix if F is None else target.matrix @ F)
    theta0 = basis.from_shift_coef(mse.coefficients).ravel()
    mats, theta0, expanded = _wce_basis_expand(M0, mats, theta0)
    result = minimize_spectral_norm(M0, mats, theta0, options or MinimaxOptions())
    theta = _polish_toward(result.theta, theta0, M0, mats)
    if expanded:
        half = order * n
        theta = theta[:half] + 1j * theta[half:]
    C_t = theta.reshape(order, n)
    H = basis.dense_variant(C_t)
    C = realize(basis.to_shift_coef(C_t), tol=1e-12)
    return DesignReport(
        coefficients=C,
        mode="node-variant",
        criterion="wce",
        order=order,
        residuals=_residuals(H, target.matrix, F),
        solver={
            "iterations": result.iterations,
            "converged": result.converged,
            "gap_met": result.gap_met,
            "rel_gap": result.gap,
            "lower_bound": result.lower_bound**2,
            "rel_gap_target": (options or MinimaxOptions()).rel_gap,
        },
    )


# ---------------------------------------------------------------------------
# reduced (source/sink) designs


def design_anc(spec: SpectralData, target: LinearTarget, order=None, mode="node-variant",
               reduction="sources") -> DesignReport:
    """Design against the reduced routing target.

    reduction "sources": only source nodes inject signal, fit the
    sink-rows-by-source-columns block. reduction "rows": every node may
    inject, fit the full sink rows. With all nodes as sources and sinks both
    reduce to the corresponding full-matrix designs.
    """
    if mode not in ("node-invariant", "node-variant"):
        raise ParameterError(f"mode must be node-invariant or node-variant, got {mode!r}")
    if reduction not in ("sources", "rows"):
        raise ParameterError(f"reduction must be sources or rows, got {reduction!r}")
    if not target.sinks:
        raise ParameterError("reduced designs need a non-empty sink set")
    if reduction == "sources" and not target.sources:
        raise ParameterError("source reduction needs a non-empty source set")
    order = _effective_order(spec, order)
    sinks = list(target.sinks)
    cols = list(target.sources) if reduction == "sources" else list(range(spec.n))
    Bred = target.matrix[np.ix_(sinks, cols)]
    F = target.factor(len(cols))
    basis = _AffineBasis(spec, order)

    criterion = "mse" if (target.rx is not None or target.rx_factor is not None) else "frobenius"
    if mode == "node-invariant":
        blocks = basis.powers[:, sinks, :][:, :, cols]
        if F is not None:
            blocks = blocks @ F
        Theta = blocks.reshape(order, -1).T
        rhs = (Bred if F is None else Bred @ F).ravel()
        coef_t = _lstsq(Theta, rhs)
        coef = realize(basis.to_shift_coef(coef_t), tol=1e-12)
        Hfull = basis.dense_invariant(coef_t)
        filt = NodeInvariantFilter(spec.shift, coef)
    else:
        Phi = _phi_matrices(spec, basis)
        C = np.zeros((order, spec.n), dtype=Phi.dtype)
        for row, r in enumerate(sinks):
            A = Phi[r][cols, :]
            rhs = Bred[row, :].astype(A.dtype)
            if F is not None:
                A, rhs = F @ A, F @ rhs
            C[:, r] = _lstsq(A, rhs)
        Hfull = basis.dense_variant(C)
        C = realize(basis.to_shift_coef(C), tol=1e-12)
        coef = C
        filt = NodeVariantFilter(spec.shift, C, mode="left")

    Hred = Hfull[np.ix_(sinks, cols)]
    return DesignReport(
        coefficients=coef,
        mode=mode,
        criterion=criterion,
        order=order,
        residuals=_residuals(Hred, Bred, F),
        sinks=tuple(sinks),
        sources=tuple(target.sources) if target.sources else None,
    )


# ---------------------------------------------------------------------------
# Monte-Carlo evaluation


@dataclass(frozen=True)
class SampleStats:
    mean: float
    max: float
    median: float
    p10: float
    p90: float
    count: int


def sample_error(operator, target, n_signals=1000, seed=0, rx_factor=None,
                 normalize=False) -> SampleStats:
    """Monte-Carlo error of an operator against a target over a Gaussian
    ensemble (optionally colored by rx_factor).

    operator may be a filter object or a dense matrix. With normalize=True
    each error is divided by the norm of the target's output for that draw.
    """
    H = operator.to_dense() if hasattr(operator, "to_dense") else as_matrix(operator)
    target = LinearTarget.from_any(target, H.shape[0])
    B = target.matrix
    n = B.shape[0]
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, int(n_signals)))
    if rx_factor is not None:
        X = as_matrix(rx_factor, n, name="rx_factor") @ X
    E = (H - B) @ X
    errs = np.linalg.norm(E, axis=0)
    if normalize:
        ref = np.linalg.norm(B @ X, axis=0)
        errs = errs / np.maximum(ref, 1e-300)
    return SampleStats(
        mean=float(errs.mean()),
        max=float(errs.max()),
        median=float(np.median(errs)),
        p10=float(np.percentile(errs, 10)),
        p90=float(np.percentile(errs, 90)),
        count=int(n_signals),
    )
