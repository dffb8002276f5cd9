"""Spectral-norm minimization of affine matrix functions.

Solves   min_theta  sigma_max( M0 + sum_p theta_p * M_p )

by subgradient descent on the (convex, nonsmooth) top singular value with
Polyak-style steps aimed at an adaptive level: the step targets
max(lower_bound, best - delta), and delta shrinks whenever the iterate stops
improving (restarting from the best point). This converges to solver
resolution even when the sampled lower bound is loose, while the bound still
certifies the gap whenever it is tight.

The lower bound comes from left test vectors u: for any unit u,
min_theta ||M(theta)^H u|| is a linear least-squares value that bounds
min_theta sigma_max from below. Test vectors mix seeded random draws with
the top singular vectors encountered along the way.

The returned value never exceeds the warm start's, so callers that warm
start at a trace-optimal solution keep the pair of certificates
(each criterion wins its own metric) by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConvergenceError, ParameterError


@dataclass
class MinimaxOptions:
    max_iter: int = 5000
    rel_gap: float = 1e-4
    n_probes: int = 24
    shrink_every: int = 20      # halve the level gap after this many non-improving steps
    seed: int = 0
    raise_on_max_iter: bool = False


@dataclass
class MinimaxResult:
    theta: np.ndarray
    value: float          # best sigma_max found
    lower_bound: float
    gap: float            # (value - lower_bound) / max(value, tiny)
    iterations: int
    converged: bool       # gap certified, or the adaptive level resolved below rel_gap
    gap_met: bool


def _top_triple(M):
    U, s, Vh = np.linalg.svd(M)
    return float(s[0]), U[:, 0], Vh[0].conj()


def _probe_lower_bound(M0, basis, u):
    """min over theta of || u^H M(theta) ||_2, a least-squares value."""
    rows = np.array([u.conj() @ Mp for Mp in basis])  # P x m
    target = -(u.conj() @ M0)
    A = np.concatenate([rows.real, rows.imag], axis=1).T  # (2m) x P
    b = np.concatenate([target.real, target.imag])
    theta, *_ = np.linalg.lstsq(A, b, rcond=None)
    return float(np.linalg.norm(A @ theta - b))


def minimize_spectral_norm(M0, basis, theta0, options: MinimaxOptions | None = None) -> MinimaxResult:
    """Minimize sigma_max(M0 + sum_p theta_p basis[p]) over real theta.

    basis is a (P, n, m) stack; theta0 the warm start. Raises
    ConvergenceError only when `raise_on_max_iter` is set and the iteration
    cap is hit while still unresolved.
    """
    opts = options or MinimaxOptions()
    M0 = np.asarray(M0)
    basis = np.asarray(basis)
    if basis.ndim != 3 or basis.shape[1:] != M0.shape:
        raise ParameterError("basis must be a (P, n, m) stack matching M0")
    theta = np.asarray(theta0, dtype=float).copy()
    if theta.shape != (basis.shape[0],):
        raise ParameterError("theta0 length must match the basis size")

    rng = np.random.default_rng(opts.seed)
    scale = max(float(np.linalg.norm(M0, 2)), 1e-30)
    tiny = 1e-14 * scale

    def assemble(th):
        return M0 + np.tensordot(th, basis, axes=(0, 0))

    value, u, v = _top_triple(assemble(theta))
    best_theta, best_value = theta.copy(), value

    n_rows = M0.shape[0]
    probes = [u]
    for _ in range(opts.n_probes):
        z = rng.normal(size=n_rows)
        if np.iscomplexobj(M0) or np.iscomplexobj(basis):
            z = z + 1j * rng.normal(size=n_rows)
        probes.append(z / np.linalg.norm(z))
    lower = max(_probe_lower_bound(M0, basis, p) for p in probes)

    def gap_of(val):
        return (val - lower) / max(val, tiny)

    def resolved(delta_now):
        return delta_now <= 0.5 * opts.rel_gap * max(best_value, tiny)

    gap_met = gap_of(best_value) <= opts.rel_gap or best_value <= tiny
    delta = max(best_value - lower, 10.0 * tiny)
    stall = 0
    it = 0
    while not gap_met and not resolved(delta) and it < opts.max_iter:
        it += 1
        g = np.einsum("i,pij,j->p", u.conj(), basis, v).real
        gnorm2 = float(g @ g)
        if gnorm2 <= 1e-30:
            break
        level = max(lower, best_value - delta)
        step = (value - level) / gnorm2
        if step <= 0.0:
            # already below the level: tighten it and keep going
            delta = max(delta / 2.0, 0.0)
            stall = 0
            continue
        theta = theta - step * g
        value, u, v = _top_triple(assemble(theta))
        if value < best_value - 1e-14 * max(1.0, best_value):
            best_value, best_theta = value, theta.copy()
            stall = 0
        else:
            stall += 1
            if stall >= opts.shrink_every:
                delta /= 2.0
                stall = 0
                theta = best_theta.copy()
                value, u, v = _top_triple(assemble(theta))
        if it % 50 == 0:
            lower = max(lower, _probe_lower_bound(M0, basis, u))
        gap_met = gap_of(best_value) <= opts.rel_gap or best_value <= tiny

    converged = gap_met or resolved(delta) or best_value <= tiny
    if not converged and it >= opts.max_iter and opts.raise_on_max_iter:
        raise ConvergenceError(
            f"no certificate after {opts.max_iter} iterations "
            f"(value {best_value:.6e}, bound {lower:.6e})",
            best=best_theta,
            value=best_value,
        )
    return MinimaxResult(
        theta=best_theta,
        value=best_value,
        lower_bound=lower,
        gap=gap_of(best_value),
        iterations=it,
        converged=converged,
        gap_met=gap_met,
    )
