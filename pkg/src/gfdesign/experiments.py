"""Seeded batch experiments producing CSV curves and a JSON manifest.

Every experiment is bit-for-bit reproducible under its master seed: each
trial draws from an independent stream spawned from the seed, and rows are
aggregated in trial order. Besides the mean, every error aggregation also
reports the median and the 10/90 percentiles.

CSV schema: experiment,trial_group,method,K,stat,value
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from ._version import __version__
from .design import (
    LinearTarget,
    design_anc,
    design_mse_node_invariant,
    design_mse_node_variant,
    design_wce_node_invariant,
)
from .exceptions import ParameterError
from .graphs import GeneratorConfig, generate, spanning_tree
from .minimax import MinimaxOptions
from .shift_design import RankOneTarget, build_rank_one_shift
from .shifts import ShiftOperator, best_constant_weight, shift_from_graph
from .spectral import decompose

EXPERIMENTS = ("consensus", "mse-vs-wce", "anc", "shift-design", "robustness")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs; fully determined by `seed`."""

    experiment: str
    graph: GeneratorConfig
    trials: int = 100
    k_min: int = 0
    k_max: int = 9
    n_signals: int = 1
    rho_values: tuple = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
    sigma_values: tuple = (0.0, 0.05, 0.1, 0.2)
    q_values: tuple = tuple(range(2, 11))
    n_sources: int = 5
    n_sinks: int = 5
    seed: int = 0

    def to_dict(self):
        d = asdict(self)
        d["graph"] = asdict(self.graph)
        return d

    def content_hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def default_config(experiment, seed=0) -> ExperimentConfig:
    """The operating points the curves are reported at."""
    if experiment == "consensus":
        graph = GeneratorConfig("small-world", 10, mean_degree=4, p_rewire=0.2,
                                require_connected=True)
        return ExperimentConfig(experiment, graph, trials=100, k_max=9, seed=seed)
    if experiment == "mse-vs-wce":
        graph = GeneratorConfig("scale-free", 40, m_init=4, m_attach=2,
                                require_connected=True)
        return ExperimentConfig(experiment, graph, trials=1, k_max=12,
                                n_signals=100_000, seed=seed)
    if experiment == "anc":
        graph = GeneratorConfig("erdos-renyi", 100, p_edge=0.1, weight_law="uniform",
                                weight_lo=0.5, weight_hi=1.5, require_connected=True)
        return ExperimentConfig(experiment, graph, trials=100, k_max=9,
                                n_signals=10, seed=seed)
    if experiment == "shift-design":
        graph = GeneratorConfig("erdos-renyi", 10, p_edge=0.3, require_connected=True)
        return ExperimentConfig(experiment, graph, trials=100, k_max=9, seed=seed)
    if experiment == "robustness":
        graph = GeneratorConfig("small-world", 10, mean_degree=4, p_rewire=0.2,
                                require_connected=True)
        return ExperimentConfig(experiment, graph, trials=100, k_max=9, seed=seed)
    raise ParameterError(f"unknown experiment {experiment!r}; choose from {EXPERIMENTS}")


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list = field(default_factory=list)              # CSV rows
    per_trial: dict = field(default_factory=dict)         # method -> (trials, K) arrays

    def curve(self, method, stat="mean"):
        ks, vals = [], []
        for exp, group, m, k, s, v in self.rows:
            if m == method and s == stat:
                ks.append(k)
                vals.append(v)
        order = np.argsort(ks)
        return np.asarray(ks)[order], np.asarray(vals)[order]


_STATS = ("mean", "median", "p10", "p90")


def _stat_rows(experiment, group, method, K, samples):
    samples = np.asarray(samples, dtype=float)
    agg = {
        "mean": float(samples.mean()),
        "median": float(np.median(samples)),
        "p10": float(np.percentile(samples, 10)),
        "p90": float(np.percentile(samples, 90)),
    }
    return [(experiment, group, method, int(K), s, agg[s]) for s in _STATS]


def _trial_seeds(config):
    return np.random.SeedSequence(config.seed).spawn(config.trials)


def _connected_graph(config, rng):
    cfg = replace(config.graph, seed=int(rng.integers(0, 2**63 - 1)))
    return generate(cfg)


# ---------------------------------------------------------------------------


def run_consensus(config: ExperimentConfig) -> ExperimentResult:
    """Averaging error vs number of exchanges for redesigned filters against
    the fixed-matrix power baseline W^K, on the baseline's own shift W."""
    result = ExperimentResult(config)
    ks = np.arange(config.k_min, config.k_max + 1)
    methods = ("node-invariant", "node-variant", "baseline")
    errs = {m: np.zeros((config.trials, len(ks))) for m in methods}
    op_res = {m: np.zeros((config.trials, len(ks))) for m in ("node-invariant", "node-variant", "baseline")}

    for t, ss in enumerate(_trial_seeds(config)):
        rng = np.random.default_rng(ss)
        g = _connected_graph(config, rng)
        W = best_constant_weight(g)
        spec = decompose(W)
        target = LinearTarget.consensus(g.n)
        B = target.matrix
        x = rng.standard_normal(g.n)
        bnorm = np.linalg.norm(B)
        for kk, K in enumerate(ks):
            ni = design_mse_node_invariant(spec, target, K + 1)
            nv = design_mse_node_variant(spec, target, K + 1)
            Hni = ni.build_filter(W).to_dense()
            Hnv = nv.build_filter(W).to_dense()
            Wk = np.linalg.matrix_power(W.matrix, K)
            errs["node-invariant"][t, kk] = np.linalg.norm(Hni @ x - B @ x)
            errs["node-variant"][t, kk] = np.linalg.norm(Hnv @ x - B @ x)
            errs["baseline"][t, kk] = np.linalg.norm(Wk @ x - B @ x)
            op_res["node-invariant"][t, kk] = np.linalg.norm(Hni - B) / bnorm
            op_res["node-variant"][t, kk] = np.linalg.norm(Hnv - B) / bnorm
            op_res["baseline"][t, kk] = np.linalg.norm(Wk - B) / bnorm

    for m in methods:
        for kk, K in enumerate(ks):
            result.rows.extend(_stat_rows("consensus", "signal-error", m, K, errs[m][:, kk]))
    result.per_trial = {"signal": errs, "operator": op_res, "ks": ks}
    return result


def run_mse_vs_wce(config: ExperimentConfig) -> ExperimentResult:
    """Mean and maximum signal error for the trace-optimal and worst-case
    designs over a large Gaussian ensemble on one scale-free graph."""
    result = ExperimentResult(config)
    ks = np.arange(config.k_min, config.k_max + 1)
    ss = _trial_seeds(config)[0]
    rng = np.random.default_rng(ss)
    g = _connected_graph(config, rng)
    W = best_constant_weight(g)
    spec = decompose(W)
    target = LinearTarget.consensus(g.n)
    B = target.matrix
    X = rng.standard_normal((g.n, config.n_signals))

    per = {("mse", "mean"): [], ("mse", "max"): [],
           ("wce", "mean"): [], ("wce", "max"): [],
           ("mse", "trace_rd"): [], ("wce", "trace_rd"): [],
           ("mse", "lambda_max_rd"): [], ("wce", "lambda_max_rd"): []}
    prev_coef = None
    for K in ks:
        mse = design_mse_node_invariant(spec, target, K + 1)
        # threading the previous solution keeps the worst-case curve monotone
        # in K (a zero-padded lower-order solution stays feasible)
        wce = design_wce_node_invariant(spec, target, K + 1,
                                        MinimaxOptions(seed=config.seed),
                                        warm_start=prev_coef)
        prev_coef = wce.coefficients

        for name, rep in (("mse", mse), ("wce", wce)):
            H = rep.build_filter(W).to_dense()
            e = np.linalg.norm((H - B) @ X, axis=0)
            per[(name, "mean")].append(float(e.mean()))
            per[(name, "max")].append(float(e.max()))
            per[(name, "trace_rd")].append(rep.residuals["trace_rd"])
            per[(name, "lambda_max_rd")].append(rep.residuals["lambda_max_rd"])

    for (name, stat), vals in per.items():
        for kk, K in enumerate(ks):
            result.rows.append(("mse-vs-wce", "ensemble", name, int(K), stat, vals[kk]))
    result.per_trial = {"per": per, "ks": ks}
    return result


def _rho_factor(rho, size, rng):
    """Correlated-source covariance factor: identity plus rho on the
    off-diagonal, corrupted by symmetric noise 0.1*rho*Z."""
    Z = rng.standard_normal((size, size))
    Z = (Z + Z.T) / 2.0
    return np.eye(size) + rho * (np.ones((size, size)) - np.eye(size)) + 0.1 * rho * Z


def run_anc(config: ExperimentConfig) -> ExperimentResult:
    """Source-to-sink recovery error for reduced designs.

    Uncorrelated part compares filter kinds x reductions; the correlated part
    sweeps the source correlation rho for the node-variant source-reduced
    design.
    """
    result = ExperimentResult(config)
    ks = np.arange(config.k_min, config.k_max + 1)
    combos = [("node-invariant", "sources"), ("node-invariant", "rows"),
              ("node-variant", "sources"), ("node-variant", "rows")]
    errs = {c: np.zeros((config.trials, len(ks))) for c in combos}
    rho_errs = {r: np.zeros((config.trials, len(ks))) for r in config.rho_values}

    for t, ss in enumerate(_trial_seeds(config)):
        rng = np.random.default_rng(ss)
        g = _connected_graph(config, rng)
        S = shift_from_graph(g, "adjacency")
        spec = decompose(S)
        picks = rng.choice(g.n, size=config.n_sources + config.n_sinks, replace=False)
        sources = tuple(int(v) for v in picks[: config.n_sources])
        sinks = tuple(int(v) for v in picks[config.n_sources:])
        target = LinearTarget.anc(g.n, sources, sinks)
        ns = config.n_signals
        Xs = rng.standard_normal((len(sources), ns))

        for kk, K in enumerate(ks):
            for mode, reduction in combos:
                rep = design_anc(spec, target, K + 1, mode=mode, reduction=reduction)
                Hred = rep.build_filter(S).to_dense()[np.ix_(list(sinks), list(sources))]
                E = (Hred - np.eye(len(sources))) @ Xs
                errs[(mode, reduction)][t, kk] = float(
                    np.mean(np.linalg.norm(E, axis=0) / np.linalg.norm(Xs, axis=0))
                )

        for rho in config.rho_values:
            F = _rho_factor(rho, len(sources), rng)
            tgt = LinearTarget.anc(g.n, sources, sinks, rx_factor=F)
            Xr = F @ rng.standard_normal((len(sources), ns))
            for kk, K in enumerate(ks):
                rep = design_anc(spec, tgt, K + 1, mode="node-variant", reduction="sources")
                Hred = rep.build_filter(S).to_dense()[np.ix_(list(sinks), list(sources))]
                E = (Hred - np.eye(len(sources))) @ Xr
                rho_errs[rho][t, kk] = float(
                    np.mean(np.linalg.norm(E, axis=0) / np.linalg.norm(Xr, axis=0))
                )

    for (mode, reduction), mat in errs.items():
        for kk, K in enumerate(ks):
            result.rows.extend(
                _stat_rows("anc", "uncorrelated", f"{mode}/{reduction}", K, mat[:, kk])
            )
    for rho, mat in rho_errs.items():
        for kk, K in enumerate(ks):
            result.rows.extend(
                _stat_rows("anc", "correlated", f"node-variant/sources/rho={rho:g}", K, mat[:, kk])
            )
    result.per_trial = {"uncorrelated": errs, "correlated": rho_errs, "ks": ks}
    return result


def run_shift_design(config: ExperimentConfig) -> ExperimentResult:
    """Rank-one targets as filters of three shifts on the same graph: random
    edge weights, the re-weighted spanning tree, and the re-weighted full
    graph."""
    result = ExperimentResult(config)
    ks = np.arange(config.k_min, config.k_max + 1)
    methods = ("random-weights", "tree-reweighted", "full-reweighted")
    errs = {m: np.zeros((config.trials, len(ks))) for m in methods}

    for t, ss in enumerate(_trial_seeds(config)):
        rng = np.random.default_rng(ss)
        g = _connected_graph(config, rng)
        a = _nonvanishing_normal(rng, g.n)
        b = _nonvanishing_normal(rng, g.n)
        target = RankOneTarget(a, b)
        B = target.matrix
        tgt = LinearTarget(B)

        A = g.adjacency()
        S1 = np.zeros_like(A)
        mask = A != 0
        weights = rng.standard_normal((g.n, g.n))
        S1[mask] = weights[mask]
        S1 = (S1 + S1.T) / 2.0
        S1[np.diag_indices(g.n)] = rng.standard_normal(g.n)
        shifts = {
            "random-weights": ShiftOperator(S1),
            "tree-reweighted": _tree_shift(g, target, rng),
            "full-reweighted": build_rank_one_shift(g, target, mu=1.0, subgraph="full-graph").shift,
        }
        for m, S in shifts.items():
            spec = decompose(S)
            for kk, K in enumerate(ks):
                rep = design_mse_node_invariant(spec, tgt, K + 1)
                errs[m][t, kk] = rep.residuals["frob_rel"]

    for m in methods:
        for kk, K in enumerate(ks):
            result.rows.extend(_stat_rows("shift-design", "rank-one", m, K, errs[m][:, kk]))
    result.per_trial = {"errors": errs, "ks": ks}
    return result


def _nonvanishing_normal(rng, n, floor=1e-6):
    v = rng.standard_normal(n)
    while np.min(np.abs(v)) < floor:
        v = rng.standard_normal(n)
    return v


def _tree_shift(graph, target, rng):
    """Rank-one re-weighting of a random spanning tree (random BFS root)."""
    root = int(rng.integers(graph.n))
    tree = spanning_tree(graph, root)
    return build_rank_one_shift(tree, target, mu=1.0, subgraph="full-graph").shift


def _perturbed_basis(V, sigma, rng, cond_cap=1e12):
    """Column-normalized V + sigma * Z o V, resampled while ill-conditioned."""
    n = V.shape[0]
    for _ in range(100):
        Z = rng.standard_normal((n, n))
        Vp = V + sigma * Z * V
        Vp = Vp / np.linalg.norm(Vp, axis=0, keepdims=True)
        if np.linalg.cond(Vp) < cond_cap:
            return Vp
    raise ParameterError("could not draw a well-conditioned perturbed basis")


def _partial_basis(V, q, rng, cond_cap=1e12):
    """Keep q random columns of V in place; replace the rest with random
    unit vectors, resampling while ill-conditioned."""
    n = V.shape[0]
    for _ in range(100):
        keep = rng.choice(n, size=q, replace=False)
        Vq = rng.standard_normal((n, n))
        Vq[:, keep] = V[:, keep]
        Vq = Vq / np.linalg.norm(Vq, axis=0, keepdims=True)
        if np.linalg.cond(Vq) < cond_cap:
            return Vq
    raise ParameterError("could not draw a well-conditioned partial basis")


def run_robustness(config: ExperimentConfig) -> ExperimentResult:
    """Error of both filter kinds when the target's eigenbasis is a noisy or
    partially shared copy of the shift's."""
    result = ExperimentResult(config)
    ks = np.arange(config.k_min, config.k_max + 1)
    sig_errs = {(kind, s): np.zeros((config.trials, len(ks)))
                for s in config.sigma_values for kind in ("node-invariant", "node-variant")}
    q_errs = {(kind, q): np.zeros((config.trials, len(ks)))
              for q in config.q_values for kind in ("node-invariant", "node-variant")}

    for t, ss in enumerate(_trial_seeds(config)):
        rng = np.random.default_rng(ss)
        g = _connected_graph(config, rng)
        S = shift_from_graph(g, "adjacency")
        spec = decompose(S)
        V = spec.vectors
        x = rng.standard_normal(g.n)
        beta = rng.standard_normal(g.n)

        cases = []
        for s in config.sigma_values:
            Vb = _perturbed_basis(V, s, rng)
            cases.append((("sigma", s), Vb))
        for q in config.q_values:
            Vb = _partial_basis(V, int(q), rng)
            cases.append((("q", q), Vb))

        for (label, value), Vb in cases:
            B = Vb @ np.diag(beta) @ np.linalg.inv(Vb)
            tgt = LinearTarget(B)
            ref = np.linalg.norm(B @ x)
            for kk, K in enumerate(ks):
                ni = design_mse_node_invariant(spec, tgt, K + 1)
                nv = design_mse_node_variant(spec, tgt, K + 1)
                e_ni = np.linalg.norm(ni.build_filter(S).to_dense() @ x - B @ x) / ref
                e_nv = np.linalg.norm(nv.build_filter(S).to_dense() @ x - B @ x) / ref
                store = sig_errs if label == "sigma" else q_errs
                store[("node-invariant", value)][t, kk] = e_ni
                store[("node-variant", value)][t, kk] = e_nv

    for (kind, s), mat in sig_errs.items():
        for kk, K in enumerate(ks):
            result.rows.extend(
                _stat_rows("robustness", "noisy-basis", f"{kind}/sigma={s:g}", K, mat[:, kk])
            )
    for (kind, q), mat in q_errs.items():
        for kk, K in enumerate(ks):
            result.rows.extend(
                _stat_rows("robustness", "shared-columns", f"{kind}/q={int(q)}", K, mat[:, kk])
            )
    result.per_trial = {"sigma": sig_errs, "q": q_errs, "ks": ks}
    return result


RUNNERS = {
    "consensus": run_consensus,
    "mse-vs-wce": run_mse_vs_wce,
    "anc": run_anc,
    "shift-design": run_shift_design,
    "robustness": run_robustness,
}


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    if config.experiment not in RUNNERS:
        raise ParameterError(f"unknown experiment {config.experiment!r}")
    return RUNNERS[config.experiment](config)


def write_csv(result: ExperimentResult, path):
    lines = ["experiment,trial_group,method,K,stat,value"]
    for exp, group, method, k, stat, value in result.rows:
        lines.append(f"{exp},{group},{method},{k},{stat},{value!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_manifest(result: ExperimentResult, path):
    manifest = {
        "config": result.config.to_dict(),
        "config_hash": result.config.content_hash(),
        "seed": result.config.seed,
        "version": __version__,
        "notes": {
            "baseline": "fixed averaging matrix uses the closed-form best "
                        "constant edge weight, not the semidefinite-program "
                        "optimum; baseline curves are qualitative",
        },
    }
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def config_from_mapping(mapping) -> ExperimentConfig:
    """Build a config from a nested dict (parsed YAML); unknown keys are
    rejected so typos fail loudly."""
    data = dict(mapping)
    experiment = data.pop("experiment", None)
    if experiment is None:
        raise ParameterError("config must name an experiment")
    base = default_config(experiment, seed=int(data.pop("seed", 0)))
    graph_over = data.pop("graph", {})
    gd = asdict(base.graph)
    for k, v in dict(graph_over).items():
        if k not in gd:
            raise ParameterError(f"unknown graph config key {k!r}")
        gd[k] = v
    cfg = asdict(base)
    cfg.pop("graph")
    for k, v in data.items():
        if k not in cfg:
            raise ParameterError(f"unknown config key {k!r}")
        cfg[k] = tuple(v) if isinstance(v, (list, tuple)) else v
    cfg["graph"] = GeneratorConfig(**gd)
    return ExperimentConfig(**cfg)
