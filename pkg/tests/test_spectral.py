import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gfdesign import (
    GeneratorConfig,
    GraphSignal,
    NotDiagonalizableError,
    ShiftOperator,
    apply_in_frequency,
    cycle_graph,
    decompose,
    frequency_response,
    generate,
    shift_from_graph,
    vandermonde,
)


def _random_shift(n, seed, kind="adjacency", p=0.35):
    g = generate(GeneratorConfig("erdos-renyi", n, seed=seed, p_edge=p,
                                 weight_law="uniform", require_connected=True))
    return shift_from_graph(g, kind)


def test_identity_spectrum():
    spec = decompose(ShiftOperator(np.eye(3)))
    assert np.allclose(spec.values, [1, 1, 1])
    assert spec.distinct_count == 1


def test_directed_cycle_roots_of_unity():
    # characteristic polynomial oracle: lambda^4 = 1
    S = shift_from_graph(cycle_graph(4, directed=True), "adjacency")
    spec = decompose(S)
    got = np.sort_complex(spec.values)
    want = np.sort_complex(np.exp(2j * np.pi * np.arange(4) / 4))
    assert np.allclose(got, want, atol=1e-10)
    assert spec.distinct_count == 4


def test_hand_eigensolve_2x2():
    # [[1.5,-.5],[-.5,1.5]]: eigenvalues 2 and 1, eigenvectors along [1,-1], [1,1]
    spec = decompose(ShiftOperator(np.array([[1.5, -0.5], [-0.5, 1.5]])))
    assert np.allclose(spec.values, [2.0, 1.0])
    v0, v1 = spec.vectors[:, 0], spec.vectors[:, 1]
    assert abs(abs(v0 @ [1, -1]) - np.sqrt(2)) < 1e-12
    assert abs(abs(v1 @ [1, 1]) - np.sqrt(2)) < 1e-12


def test_reconstruction_certificate_and_symmetric_branch():
    for seed in range(8):
        S = _random_shift(12, seed)
        spec = decompose(S)
        recon = (spec.vectors * spec.values) @ spec.vectors_inv
        assert np.linalg.norm(recon - S.matrix) < 1e-9 * np.linalg.norm(S.matrix)
        assert spec.orthonormal
        assert np.linalg.norm(spec.vectors @ spec.vectors.T - np.eye(12)) < 1e-8


def test_defective_matrix_rejected():
    # a Jordan block is not diagonalizable
    J = np.array([[1.0, 1.0], [0.0, 1.0]])
    with pytest.raises(NotDiagonalizableError):
        decompose(ShiftOperator(J))


def test_eigenvalue_ordering_deterministic():
    S = _random_shift(10, 3)
    spec = decompose(S)
    v = spec.values
    assert np.all(np.diff(v.real if not np.iscomplexobj(v) else v.real) <= 1e-12)


def test_vandermonde_values():
    spec = decompose(ShiftOperator(np.diag([1.0, 2.0])))
    # sorted descending: [2, 1]
    assert np.allclose(vandermonde(spec, 2), [[1, 2], [1, 1]])
    spec1 = decompose(ShiftOperator(np.eye(3)))
    Psi = vandermonde(spec1, 3)
    assert np.allclose(Psi, np.ones((3, 3)))


def test_vandermonde_complex_powers_oracle():
    S = shift_from_graph(cycle_graph(4, directed=True), "adjacency")
    spec = decompose(S)
    Psi = vandermonde(spec, 4)
    for k in range(4):
        for l in range(4):
            assert Psi[k, l] == spec.values[k] ** l
    assert np.allclose(np.abs(Psi), 1.0)


def test_frequency_response_examples():
    spec = decompose(ShiftOperator(np.diag([1.0, 2.0])))
    assert np.allclose(frequency_response(spec, [1.0]), [1.0, 1.0])
    assert np.allclose(frequency_response(spec, [0.0, 1.0]), spec.values)
    # 2x2 multiply oracle with sorted eigenvalues [2, 1]: c=[2,-1] -> [0, 1]
    assert np.allclose(frequency_response(spec, [2.0, -1.0]), [0.0, 1.0])


def test_apply_in_frequency_identity_and_eigvector():
    S = _random_shift(9, 4)
    spec = decompose(S)
    x = np.random.default_rng(0).standard_normal(9)
    assert np.allclose(apply_in_frequency(spec, [1.0], x), x, atol=1e-10)
    vk = spec.vectors[:, 2].real
    chat = frequency_response(spec, [0.3, -0.7, 0.2])
    y = apply_in_frequency(spec, [0.3, -0.7, 0.2], vk)
    assert np.allclose(y, chat[2] * vk, atol=1e-9)


def test_apply_in_frequency_matches_dense_polynomial():
    # dense polynomial oracle: sum c_l S^l x
    rng = np.random.default_rng(7)
    S = _random_shift(6, 11)
    spec = decompose(S)
    c = rng.standard_normal(4)
    x = rng.standard_normal(6)
    y = apply_in_frequency(spec, c, x)
    expect = sum(cl * (np.linalg.matrix_power(S.matrix, l) @ x) for l, cl in enumerate(c))
    assert np.linalg.norm(y - expect) < 1e-9 * np.linalg.norm(x)


def test_apply_in_frequency_dense_equivalence_many_graphs():
    rng = np.random.default_rng(5)
    for seed in range(10):
        n = int(rng.integers(4, 31))
        S = _random_shift(n, seed)
        spec = decompose(S)
        c = rng.standard_normal(int(rng.integers(1, min(n, 8) + 1)))
        x = rng.standard_normal(n)
        expect = sum(cl * (np.linalg.matrix_power(S.matrix, l) @ x) for l, cl in enumerate(c))
        assert np.linalg.norm(apply_in_frequency(spec, c, x) - expect) <= 1e-9 * max(
            np.linalg.norm(x), 1e-30
        )


def test_graph_signal_roundtrip():
    S = _random_shift(8, 2)
    spec = decompose(S)
    x = GraphSignal(np.random.default_rng(3).standard_normal(8))
    back = spec.from_frequency(x.hat(spec))
    assert np.linalg.norm(back - x.values) < 1e-9


@settings(max_examples=30, deadline=None)
@given(
    t1=st.floats(min_value=1e-10, max_value=0.5),
    t2=st.floats(min_value=1e-10, max_value=0.5),
    seed=st.integers(min_value=0, max_value=50),
)
def test_distinct_count_monotone_in_tolerance(t1, t2, seed):
    lo, hi = sorted((t1, t2))
    S = _random_shift(8, seed)
    d_lo = decompose(S, tol=lo).distinct_count
    d_hi = decompose(S, tol=hi).distinct_count
    assert d_lo >= d_hi


def test_shift_sparsity_validation():
    g = cycle_graph(5)
    A = g.adjacency()
    bad = A.copy()
    bad[0, 2] = 1.0  # not an edge
    with pytest.raises(Exception):
        ShiftOperator(bad, graph=g)
    ShiftOperator(A + np.diag(np.ones(5)), graph=g)  # diagonal always allowed
