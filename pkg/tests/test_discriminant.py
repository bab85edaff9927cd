import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from tldakit.discriminant import (ScatterPair, build_scatters, fit_lda, normalize_phase,
                                  numerical_rank, pca_reduce, ratio_trace_gep, trace_ratio,
                                  trace_ratio_newton)
from tldakit.errors import DimensionError, SingularScatterError

from oracles import max_angle, psd_pair, rng, scatters_loops


def test_scatters_hand_example():
    s = build_scatters(np.array([[0.0, 2.0]]), [1, 2])
    assert s.Sb[0, 0] == 2.0
    assert s.Sw[0, 0] == 0.0


def test_scatters_zero_within_for_duplicates():
    X = np.array([[1.0, 1.0, 5.0, 5.0], [2.0, 2.0, -1.0, -1.0]])
    assert np.all(build_scatters(X, [0, 0, 1, 1]).Sw == 0)


@pytest.mark.parametrize("complex_", [False, True])
def test_total_scatter_decomposition(complex_):
    g = rng(3)
    X = g.standard_normal((4, 20))
    if complex_:
        X = X + 1j * g.standard_normal((4, 20))
    labels = np.arange(20) % 3
    s = build_scatters(X, labels)
    Xc = X - X.mean(axis=1, keepdims=True)
    np.testing.assert_allclose(s.Sb + s.Sw, Xc @ Xc.conj().T, atol=1e-10)
    Sb, Sw = scatters_loops(X, labels)
    np.testing.assert_allclose(s.Sb, Sb, atol=1e-10)
    np.testing.assert_allclose(s.Sw, Sw, atol=1e-10)
    Sb_u, _ = scatters_loops(X, labels, weighted=False)
    np.testing.assert_allclose(build_scatters(X, labels, weight_between=False).Sb, Sb_u, atol=1e-10)


def test_scatters_errors():
    with pytest.raises(DimensionError):
        build_scatters(np.zeros((3, 4)), [1, 1, 1, 1])
    with pytest.raises(DimensionError):
        build_scatters(np.zeros((3, 0)), [])
    with pytest.raises(DimensionError):
        build_scatters(np.zeros((3, 4)), [1, 2])


def test_newton_closed_forms():
    st1 = trace_ratio_newton(ScatterPair(np.diag([4.0, 1.0]), np.eye(2)), 1)
    assert abs(st1.rho - 4.0) < 1e-12
    assert max_angle(st1.V, np.eye(2)[:, :1]) < 1e-12
    st2 = trace_ratio_newton(ScatterPair(np.diag([4.0, 2.0, 1.0]), np.eye(3)), 2)
    assert abs(st2.rho - 3.0) < 1e-10
    st3 = trace_ratio_newton(ScatterPair(np.eye(3), np.eye(3)), 2)
    assert st3.rho == 1.0 and st3.iterations == 1 and st3.converged


@given(st.integers(2, 12), st.data(), st.booleans(), st.integers(0, 2**16))
@settings(max_examples=40, deadline=None)
def test_newton_monotone_and_dominates_random_subspaces(d, data, complex_, seed):
    k = data.draw(st.integers(1, d))
    g = rng(seed)
    Sb, Sw = psd_pair(g, d, rank_b=data.draw(st.integers(1, d)), complex_=complex_)
    state = trace_ratio_newton(ScatterPair(Sb, Sw), k)
    assert state.converged
    assert np.all(np.diff(state.history) >= -1e-10)
    np.testing.assert_allclose(state.V.conj().T @ state.V, np.eye(k), atol=1e-8)
    for _ in range(20):
        Q, _ = np.linalg.qr(g.standard_normal((d, k)))
        assert trace_ratio(Sb, Sw, Q) <= state.rho + 1e-8


def test_newton_beats_ratio_trace_subspace():
    g = rng(11)
    for _ in range(20):
        d = int(g.integers(3, 15))
        k = int(g.integers(1, d))
        Sb, Sw = psd_pair(g, d)
        s = ScatterPair(Sb, Sw)
        rho = trace_ratio_newton(s, k).rho
        U = ratio_trace_gep(s, 0.0, k).vectors
        Q, _ = np.linalg.qr(U)
        assert rho >= trace_ratio(Sb, Sw, Q) - 1e-8


def test_newton_scale_invariance():
    g = rng(5)
    Sb, Sw = psd_pair(g, 8)
    s = ScatterPair(Sb, Sw)
    a = trace_ratio_newton(s, 3)
    b = trace_ratio_newton(s.scaled(17.5), 3)
    assert max_angle(a.V, b.V) < 1e-6
    assert abs(a.rho - b.rho) < 1e-8


def test_newton_singular_denominator():
    Sw = np.diag([0.0, 1.0])
    with pytest.raises(SingularScatterError, match="ridge"):
        trace_ratio_newton(ScatterPair(np.diag([1.0, 0.0]), Sw), 1)
    state = trace_ratio_newton(ScatterPair(np.diag([1.0, 0.0]), Sw).regularized(1e-6), 1)
    assert state.converged


def test_newton_max_iter_reports_not_converged():
    g = rng(2)
    Sb, Sw = psd_pair(g, 10)
    state = trace_ratio_newton(ScatterPair(Sb, Sw), 3, tol=0.0, max_iter=2)
    assert not state.converged and state.iterations == 2


def test_newton_bad_k():
    with pytest.raises(DimensionError):
        trace_ratio_newton(ScatterPair(np.eye(2), np.eye(2)), 3)


def test_gep_diagonal_closed_form():
    pair = ratio_trace_gep(ScatterPair(np.diag([4.0, 1.0]), np.diag([2.0, 1.0])), 0.0, 1)
    np.testing.assert_allclose(pair.values, [2.0])
    np.testing.assert_allclose(np.abs(pair.vectors[:, 0]), [1.0, 0.0], atol=1e-12)


def test_gep_identity_within_is_plain_eig():
    g = rng(4)
    Sb, _ = psd_pair(g, 5)
    pair = ratio_trace_gep(ScatterPair(Sb, np.eye(5)), 0.0, 5)
    w, U = np.linalg.eigh(Sb)
    np.testing.assert_allclose(pair.values, w[::-1], atol=1e-10)
    for j in range(5):
        assert abs(abs(np.vdot(pair.vectors[:, j], U[:, 4 - j])) - 1) < 1e-8


def test_gep_auto_k_is_c_minus_one():
    g = rng(8)
    centroids = g.standard_normal((6, 4)) * 10
    X = np.repeat(centroids, 5, axis=1) + 0.1 * g.standard_normal((6, 20))
    labels = np.repeat(np.arange(4), 5)
    pair = ratio_trace_gep(build_scatters(X, labels), 0.0, "auto")
    assert pair.vectors.shape == (6, 3)


def test_gep_unitary_invariance():
    g = rng(9)
    Sb, Sw = psd_pair(g, 6, complex_=True)
    Q, _ = np.linalg.qr(g.standard_normal((6, 6)) + 1j * g.standard_normal((6, 6)))
    a = ratio_trace_gep(ScatterPair(Sb, Sw), 0.1, 4).values
    b = ratio_trace_gep(ScatterPair(Q @ Sb @ Q.conj().T, Q @ Sw @ Q.conj().T), 0.1, 4).values
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_gep_errors():
    s = ScatterPair(np.eye(3), np.diag([1.0, 1.0, 0.0]))
    with pytest.raises(SingularScatterError, match="smallest eigenvalue"):
        ratio_trace_gep(s, 0.0, 1)
    assert ratio_trace_gep(s, 1e-3, 1).vectors.shape == (3, 1)
    with pytest.raises(DimensionError):
        ratio_trace_gep(ScatterPair(np.eye(2), np.eye(2)), 0.0, 3)
    with pytest.raises(DimensionError):
        ratio_trace_gep(ScatterPair(np.eye(2), np.eye(2)), -1.0, 1)


def test_gep_large_gamma_tends_to_sb_eigenvectors():
    g = rng(12)
    Sb, Sw = psd_pair(g, 6)
    U = ratio_trace_gep(ScatterPair(Sb, Sw), 1e8, 2).vectors
    _, E = np.linalg.eigh(Sb)
    assert max_angle(U, E[:, -2:]) < 1e-4


def test_numerical_rank():
    assert numerical_rank(np.zeros((3, 3))) == 0
    assert numerical_rank(np.diag([1.0, 1e-20, 2.0])) == 2


def test_normalize_phase():
    V = np.array([[0.1j, 1.0], [-2.0j, 0.5]])
    out = normalize_phase(V)
    assert out[1, 0] == pytest.approx(2.0)
    np.testing.assert_allclose(np.abs(out), np.abs(V))


def test_pca_cases():
    g = rng(6)
    direction = np.array([[1.0], [2.0], [-1.0]])
    P, Y = pca_reduce(direction @ g.standard_normal((1, 30)), 0.95)
    assert P.shape == (3, 1)
    iso = np.array([[1.0, -1.0, 0.0, 0.0], [0.0, 0.0, 1.0, -1.0]])
    assert pca_reduce(iso, 1.0)[0].shape == (2, 2)
    X = g.standard_normal((5, 40))
    P, Y = pca_reduce(X, 0.95)
    Xc = X - X.mean(axis=1, keepdims=True)
    assert np.sum(Y ** 2) / np.sum(Xc ** 2) >= 0.95
    with pytest.raises(DimensionError):
        pca_reduce(X, 0.0)
    with pytest.raises(DimensionError):
        pca_reduce(X, 1.5)


def test_fit_lda_objectives():
    g = rng(7)
    X = np.repeat(g.standard_normal((5, 3)) * 5, 10, axis=1) + g.standard_normal((5, 30))
    labels = np.repeat([1, 2, 3], 10)
    tr = fit_lda(X, labels, k=2)
    assert tr.V.shape == (5, 2) and tr.rho > 0
    rt = fit_lda(X, labels, objective="ratio_trace", gamma=0.1)
    assert rt.V.shape == (5, 2)
    with pytest.raises(DimensionError):
        fit_lda(X, labels)
    with pytest.raises(DimensionError):
        fit_lda(X, labels, k=1, objective="other")


def test_principal_angle_helper_sanity():
    A = np.eye(4)[:, :2]
    assert max_angle(A, A @ scipy.linalg.expm(np.array([[0, 1.0], [-1.0, 0]]))) < 1e-12
