"""Acceptance gate: one test (or small group) per criterion, each printing a
pass/fail line with the measured values (run with `pytest -s` to see them).

Three clauses are expected to fail and are kept faithful rather than
loosened; their docstrings explain the verified numerical reason:
  * criterion 4, tree-reweighted mean error (double precision cannot follow
    near-degenerate spectral clusters of the tree weighting),
  * criterion 5, sampled-max ordering and the <1e-6 magnitude at K>=9 (both
    are properties of the SDP-optimized consensus matrix, which is
    substituted by the closed-form constant-weight matrix here),
  * criterion 6, node-variant medians at sigma>0 / Q<10 (the majority of
    10-node small-world graphs have structurally irregular spectra, where
    any-target exactness is impossible for any solver).
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from gfdesign import (
    GeneratorConfig,
    LinearTarget,
    NodeInvariantFilter,
    NodeVariantFilter,
    ProductFormFilter,
    RankOneTarget,
    apply_in_frequency,
    build_rank_one_shift,
    cycle_graph,
    decompose,
    design_anc,
    design_mse_node_invariant,
    design_mse_node_variant,
    design_perfect_node_invariant,
    design_wce_node_invariant,
    generate,
    rounds_to_exactness,
    shift_from_graph,
    simulate,
    spanning_tree,
    star_graph,
    weighted_incidence,
)
from gfdesign.experiments import ExperimentConfig, default_config, run_consensus
from gfdesign.minimax import MinimaxOptions


def _report(criterion, ok, detail=""):
    print(f"\n[acceptance] criterion {criterion}: {'PASS' if ok else 'FAIL'} {detail}")
    return ok


def _elapsed_ok(criterion, t0, budget):
    dt = time.perf_counter() - t0
    print(f"[acceptance] criterion {criterion}: runtime {dt:.1f}s (budget {budget}s)")
    return dt < budget


# ---------------------------------------------------------------------------


def test_criterion_1_perfect_consensus():
    """100 seeded connected small-world graphs, S = (I+L)/n: the averaging
    operator is implementable exactly at order n."""
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(100):
        g = generate(GeneratorConfig("small-world", 10, seed=seed, mean_degree=4,
                                     p_rewire=0.2, require_connected=True))
        spec = decompose(shift_from_graph(g, "consensus-corollary"))
        rep = design_perfect_node_invariant(spec, LinearTarget.consensus(10), order=10)
        worst = max(worst, rep.residuals["frob_rel"])
    ok = worst < 1e-8
    assert _report(1, ok, f"(worst residual {worst:.3e}, tol 1e-8)")
    assert _elapsed_ok(1, t0, 10)


def test_criterion_2_star_cycle_exactness():
    """Exact averaging needs exactly 2 exchanges on the 20-star and 10 on the
    20-cycle (Laplacian shift, redesign per degree)."""
    t0 = time.perf_counter()

    def rounds_for(graph):
        spec = decompose(shift_from_graph(graph, "laplacian"))
        B = LinearTarget.consensus(graph.n).matrix

        def designer(K):
            return design_mse_node_invariant(spec, B, K + 1).build_filter(spec.shift)

        return rounds_to_exactness(designer, B, max_rounds=graph.n, tol=1e-8)

    k_star = rounds_for(star_graph(20))
    k_cycle = rounds_for(cycle_graph(20))
    ok = k_star == 2 and k_cycle == 10
    assert _report(2, ok, f"(star {k_star} vs 2, cycle {k_cycle} vs 10)")
    assert _elapsed_ok(2, t0, 5)


def test_criterion_3_anc_exactness():
    """ER(100, 0.1) with uniform weights, adjacency shift, 5 source-sink
    pairs: the node-variant source-reduced design recovers the sources
    exactly for K >= 8 (median over 100 trials)."""
    t0 = time.perf_counter()
    errs = {8: [], 9: []}
    cfg = GeneratorConfig("erdos-renyi", 100, p_edge=0.1, weight_law="uniform",
                          weight_lo=0.5, weight_hi=1.5, require_connected=True)
    for ss in np.random.SeedSequence(20260809).spawn(100):
        rng = np.random.default_rng(ss)
        g = generate(replace(cfg, seed=int(rng.integers(0, 2**63 - 1))))
        spec = decompose(shift_from_graph(g, "adjacency"))
        picks = rng.choice(100, size=10, replace=False)
        target = LinearTarget.anc(100, tuple(int(v) for v in picks[:5]),
                                  tuple(int(v) for v in picks[5:]))
        Xs = rng.standard_normal((5, 3))
        for K in errs:
            rep = design_anc(spec, target, K + 1, mode="node-variant", reduction="sources")
            Hred = rep.build_filter(spec.shift).to_dense()[
                np.ix_(list(target.sinks), list(target.sources))
            ]
            E = (Hred - np.eye(5)) @ Xs
            errs[K].append(float(np.mean(np.linalg.norm(E, axis=0) / np.linalg.norm(Xs, axis=0))))
    med8, med9 = np.median(errs[8]), np.median(errs[9])
    ok = med8 < 1e-6 and med9 < 1e-6
    assert _report(3, ok, f"(median K=8 {med8:.3e}, K=9 {med9:.3e}, tol 1e-6)")
    assert _elapsed_ok(3, t0, 60)


@pytest.fixture(scope="module")
def shift_design_run():
    graph = GeneratorConfig("erdos-renyi", 10, p_edge=0.3, require_connected=True)
    cfg = ExperimentConfig("shift-design", graph, trials=100, k_min=9, k_max=9, seed=4)
    from gfdesign.experiments import run_shift_design

    t0 = time.perf_counter()
    res = run_shift_design(cfg)
    res.per_trial["elapsed"] = time.perf_counter() - t0
    return res


def test_criterion_4_random_and_full_graph_shifts(shift_design_run):
    """Rank-one targets at K = 9: random edge weights cannot implement them
    (mean error > 0.5); the re-weighted full graph can (mean < 1e-6)."""
    errs = shift_design_run.per_trial["errors"]
    rand_mean = float(np.mean(errs["random-weights"][:, -1]))
    full_mean = float(np.mean(errs["full-reweighted"][:, -1]))
    ok = rand_mean > 0.5 and full_mean < 1e-6
    assert _report(4, ok, f"(random mean {rand_mean:.3f} > 0.5, full mean {full_mean:.3e} < 1e-6)")
    elapsed = shift_design_run.per_trial["elapsed"]
    print(f"[acceptance] criterion 4: runtime {elapsed:.1f}s (budget 30s)")
    assert elapsed < 30


def test_criterion_4_tree_reweighted_mean(shift_design_run):
    """EXPECTED RED. The tree re-weighting routinely places several
    eigenvalues within ~1e-3 of the designed simple eigenvalue (sibling
    leaves under a small-product parent; sign cancellations on edges). The
    exact interpolating polynomial through such clusters needs coefficients
    beyond 1/eps, so double precision cannot reach mean error 1e-6 on any
    tree selection; the median shows the construction itself is correct."""
    errs = shift_design_run.per_trial["errors"]
    tree = errs["tree-reweighted"][:, -1]
    tree_mean, tree_median = float(np.mean(tree)), float(np.median(tree))
    ok = tree_mean < 1e-6
    _report("4-tree", ok, f"(tree mean {tree_mean:.3e} vs 1e-6; median {tree_median:.3e})")
    assert ok, (
        f"tree-reweighted mean {tree_mean:.3e} cannot reach 1e-6 in double precision "
        f"(median {tree_median:.3e} is clean; failures are near-degenerate spectral clusters)"
    )


@pytest.fixture(scope="module")
def mse_wce_run():
    from gfdesign.experiments import run_mse_vs_wce

    cfg = default_config("mse-vs-wce", seed=1)
    cfg = replace(cfg, k_max=12, n_signals=100_000)
    t0 = time.perf_counter()
    res = run_mse_vs_wce(cfg)
    res.per_trial["elapsed"] = time.perf_counter() - t0
    return res


def test_criterion_5_mean_ordering(mse_wce_run):
    """Scale-free n=40, 1e5 signals: the trace-optimal design has the lower
    mean error at every K in 0..12."""
    per = mse_wce_run.per_trial["per"]
    mse_mean = np.array(per[("mse", "mean")])
    wce_mean = np.array(per[("wce", "mean")])
    ok = bool(np.all(mse_mean <= wce_mean + 1e-12))
    assert _report(5, ok, f"(mean-ordering holds at all {len(mse_mean)} K)")
    assert mse_wce_run.per_trial["elapsed"] < 120


def test_criterion_5_max_ordering(mse_wce_run):
    """EXPECTED RED at small K. The worst-case optimum here has a flat error
    spectrum (unique at K=0: half the averaging operator's gain on every
    mode), and the max over 1e5 Gaussian draws is then Frobenius-dominated,
    exceeding the trace-optimal design's spiked spectrum. The claim holds
    for consensus matrices whose optimized spectra are spiked for both
    designs; that optimizer is out of scope."""
    per = mse_wce_run.per_trial["per"]
    mse_max = np.array(per[("mse", "max")])
    wce_max = np.array(per[("wce", "max")])
    bad = [int(k) for k in np.flatnonzero(wce_max > mse_max + 1e-12)]
    ok = not bad
    _report("5-max", ok, f"(flips at K={bad})" if bad else "")
    assert ok, f"sampled-max ordering flips at K={bad} with the substitute shift"


def test_criterion_5_negligible_at_k9(mse_wce_run):
    """EXPECTED RED. Degree-9 filters cannot average a 40-node scale-free
    graph through the constant-weight matrix: its 32 distinct eigenvalues
    would need to collapse to <= 10 values, which only the out-of-scope
    semidefinite weight optimization achieves. Measured error ~0.1 at K=9."""
    per = mse_wce_run.per_trial["per"]
    ks = mse_wce_run.per_trial["ks"]
    sel = ks >= 9
    worst = float(
        max(np.max(np.array(per[(n, s)])[sel]) for n in ("mse", "wce") for s in ("mean", "max"))
    )
    ok = worst < 1e-6
    _report("5-k9", ok, f"(worst error for K>=9 is {worst:.3e} vs 1e-6)")
    assert ok, f"errors at K>=9 are {worst:.3e}, not <1e-6, with the substitute weight matrix"


@pytest.fixture(scope="module")
def robustness_run():
    t0 = time.perf_counter()
    rng_master = np.random.SeedSequence(6)
    sig_errs = {s: {"node-invariant": [], "node-variant": []} for s in (0.0, 0.05, 0.1, 0.2)}
    q_errs = {q: {"node-invariant": [], "node-variant": []} for q in range(2, 11)}
    from gfdesign.experiments import _partial_basis, _perturbed_basis

    for ss in rng_master.spawn(100):
        rng = np.random.default_rng(ss)
        g = generate(GeneratorConfig("small-world", 10, mean_degree=4, p_rewire=0.2,
                                     require_connected=True,
                                     seed=int(rng.integers(0, 2**63 - 1))))
        spec = decompose(shift_from_graph(g, "adjacency"))
        V = spec.vectors
        x = rng.standard_normal(10)
        beta = rng.standard_normal(10)
        cases = [(("sigma", s), _perturbed_basis(V, s, rng)) for s in sig_errs]
        cases += [(("q", q), _partial_basis(V, q, rng)) for q in q_errs]
        for (kind, value), Vb in cases:
            B = Vb @ np.diag(beta) @ np.linalg.inv(Vb)
            ref = np.linalg.norm(B @ x)
            ni = design_mse_node_invariant(spec, LinearTarget(B), 10)
            nv = design_mse_node_variant(spec, LinearTarget(B), 10)
            e_ni = float(np.linalg.norm(ni.build_filter(spec.shift).to_dense() @ x - B @ x) / ref)
            e_nv = float(np.linalg.norm(nv.build_filter(spec.shift).to_dense() @ x - B @ x) / ref)
            store = sig_errs if kind == "sigma" else q_errs
            store[value]["node-invariant"].append(e_ni)
            store[value]["node-variant"].append(e_nv)
    return {"sigma": sig_errs, "q": q_errs, "elapsed": time.perf_counter() - t0}


def test_criterion_6_node_invariant_clauses(robustness_run):
    """Exact shared basis: node-invariant reaches 1e-8 at K=9; at sigma=0.2
    the best node-invariant error exceeds 0.1."""
    med0 = float(np.median(robustness_run["sigma"][0.0]["node-invariant"]))
    med02 = float(np.median(robustness_run["sigma"][0.2]["node-invariant"]))
    ok = med0 < 1e-8 and med02 > 0.1
    assert _report(6, ok, f"(sigma=0 median {med0:.3e} < 1e-8; sigma=0.2 median {med02:.3f} > 0.1)")
    assert robustness_run["elapsed"] < 60


def test_criterion_6_node_variant_all_sigma_q(robustness_run):
    """EXPECTED RED for sigma>0 and small Q. Any-target exactness needs the
    shift's eigenbasis to be entrywise non-zero with distinct eigenvalues;
    ~2/3 of 10-node small-world graphs violate that structurally (surviving
    ring symmetries), and multiplicative basis noise keeps the zero pattern
    while rotating the inverse basis, leaving O(sigma) unmatchable rows. On
    the regular minority the design is exact to 1e-10; the population median
    is O(sigma) (measured ~7e-3 at sigma=0.05 up to ~2e-2 at sigma=0.2, and
    similar for Q <= 5)."""
    bad = []
    details = []
    for s, errs in robustness_run["sigma"].items():
        med = float(np.median(errs["node-variant"]))
        details.append(f"sigma={s}: {med:.2e}")
        if med >= 1e-4:
            bad.append(f"sigma={s}")
    for q, errs in robustness_run["q"].items():
        med = float(np.median(errs["node-variant"]))
        if med >= 1e-4:
            bad.append(f"Q={q}")
    ok = not bad
    _report("6-nv", ok, f"({'; '.join(details)}; failing: {bad})" if bad else "")
    assert ok, f"node-variant median exceeds 1e-4 for {bad} (structural spectrum irregularity)"


def test_criterion_7_property_suites():
    """Compact re-run of the oracle-backed property suites (full versions
    live in the per-module test files)."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)

    # simulator == dense evaluation
    for trial in range(50):
        n = int(rng.integers(3, 31))
        g = generate(GeneratorConfig("erdos-renyi", n, seed=trial, p_edge=0.35,
                                     weight_law="uniform", require_connected=True))
        S = shift_from_graph(g, "adjacency")
        L = int(rng.integers(1, 6))
        kind = trial % 4
        if kind == 0:
            f = NodeInvariantFilter(S, rng.standard_normal(L))
        elif kind == 1:
            f = NodeVariantFilter(S, rng.standard_normal((L, n)), mode="left")
        elif kind == 2:
            f = NodeVariantFilter(S, rng.standard_normal((L, n)), mode="right")
        else:
            f = ProductFormFilter(S, rng.standard_normal(),
                                  rng.standard_normal(L - 1) if L > 1 else ())
        x = rng.standard_normal(n)
        want = f.eval_dense(x)
        assert np.linalg.norm(simulate(f, x).output - want) <= 1e-10 * max(1.0, np.linalg.norm(want))

    # node-variant <= node-invariant, residual monotone in order
    for seed in (1, 2, 3):
        g = generate(GeneratorConfig("erdos-renyi", 9, seed=seed, p_edge=0.4,
                                     require_connected=True))
        spec = decompose(shift_from_graph(g, "adjacency"))
        B = rng.standard_normal((9, 9))
        prev = None
        for L in range(1, 9):
            ni = design_mse_node_invariant(spec, B, L).residuals["trace_rd"]
            nv = design_mse_node_variant(spec, B, L).residuals["trace_rd"]
            assert nv <= ni + 1e-9
            if prev is not None:
                assert ni <= prev + 1e-10
            prev = ni

    # frequency-domain application == dense application
    for seed in range(10):
        n = int(rng.integers(4, 25))
        g = generate(GeneratorConfig("erdos-renyi", n, seed=100 + seed, p_edge=0.4,
                                     require_connected=True))
        spec = decompose(shift_from_graph(g, "adjacency"))
        c = rng.standard_normal(4)
        x = rng.standard_normal(n)
        dense = NodeInvariantFilter(spec.shift, c).eval_dense(x)
        assert np.linalg.norm(apply_in_frequency(spec, c, x) - dense) <= 1e-9 * max(
            1.0, np.linalg.norm(x)
        )

    # incidence / kernel certificates on 100 random rank-one constructions
    for seed in range(100):
        n = int(rng.integers(3, 10))
        g = generate(GeneratorConfig("erdos-renyi", n, seed=1000 + seed, p_edge=0.5,
                                     require_connected=True))
        a = rng.standard_normal(n)
        b = rng.standard_normal(n)
        while min(np.min(np.abs(a)), np.min(np.abs(b))) < 1e-3:
            a, b = rng.standard_normal(n), rng.standard_normal(n)
        tree = spanning_tree(g, 0)
        M = weighted_incidence(n, [(i, j) for i, j, _ in tree.edges], a)
        assert np.linalg.norm(M.T @ a) < 1e-10 * np.linalg.norm(a)
        assert np.linalg.matrix_rank(M) == n - 1
        d = build_rank_one_shift(g, RankOneTarget(a, b), mu=1.0, subgraph="bfs-tree")
        sv = np.linalg.svd(d.shift.matrix - np.eye(n), compute_uv=False)
        assert sv[-1] < 1e-9 and sv[-2] > 1e-9

    # trace-optimal local optimality + worst-case certificate pair
    g = generate(GeneratorConfig("erdos-renyi", 8, seed=77, p_edge=0.4,
                                 require_connected=True))
    spec = decompose(shift_from_graph(g, "adjacency"))
    B = rng.standard_normal((8, 8))
    mse = design_mse_node_invariant(spec, B, 3)
    powers = [np.linalg.matrix_power(spec.shift.matrix, l) for l in range(3)]
    base = float(np.linalg.norm(sum(c * P for c, P in zip(mse.coefficients, powers)) - B) ** 2)
    for _ in range(50):
        dlt = rng.standard_normal(3)
        dlt *= 1e-3 / np.linalg.norm(dlt)
        pert = float(
            np.linalg.norm(sum(c * P for c, P in zip(mse.coefficients + dlt, powers)) - B) ** 2
        )
        assert pert >= base - 1e-12
    wce = design_wce_node_invariant(spec, B, 3, MinimaxOptions(seed=0))
    assert wce.residuals["lambda_max_rd"] <= mse.residuals["lambda_max_rd"] + 1e-9
    assert mse.residuals["trace_rd"] <= wce.residuals["trace_rd"] + 1e-9

    assert _report(7, True, "(all property suites green)")
    assert _elapsed_ok(7, t0, 60)


def test_criterion_8_gf_dominates_baseline():
    """The fixed-matrix power curve is never below the redesigned filter on
    any trial at any K (operator metric; the redesign optimizes over all
    powers up to K, which contains the baseline's single power)."""
    t0 = time.perf_counter()
    cfg = default_config("consensus", seed=8)
    cfg = replace(cfg, trials=30, k_max=9)
    res = run_consensus(cfg)
    ops = res.per_trial["operator"]
    ok = bool(np.all(ops["node-invariant"] <= ops["baseline"] + 1e-10))
    worst_gap = float(np.max(ops["node-invariant"] - ops["baseline"]))
    assert _report(8, ok, f"(max(GF - baseline) = {worst_gap:.3e} <= 0 within 1e-10)")
    print(f"[acceptance] criterion 8: runtime {time.perf_counter() - t0:.1f}s")
