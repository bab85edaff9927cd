"""Scatter matrices and the two matrix-level discriminant solvers.

Data matrices hold one sample per column (d x n), matching the lateral-slice
layout of the tensor code. Real and complex (Hermitian) inputs are both
supported; all outer products use the conjugate transpose.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DimensionError, SingularScatterError

DENOMINATOR_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class ScatterPair:
    """Between-class (``Sb``) and within-class (``Sw``) scatter matrices."""

    Sb: np.ndarray
    Sw: np.ndarray

    @property
    def d(self):
        return self.Sb.shape[0]

    def regularized(self, ridge):
        """Copy with ``ridge * I`` added to the within-class scatter."""
        if ridge == 0:
            return self
        return ScatterPair(self.Sb, self.Sw + ridge * np.eye(self.d))

    def scaled(self, factor):
        return ScatterPair(self.Sb * factor, self.Sw * factor)


@dataclass
class TraceRatioState:
    rho: float
    V: np.ndarray
    iterations: int
    converged: bool
    history: list = field(default_factory=list)


@dataclass
class EigenPair:
    values: np.ndarray
    vectors: np.ndarray


@dataclass
class LdaModel:
    """Projection matrix learned by :func:`fit_lda`."""

    V: np.ndarray
    objective: str
    rho: float = float("nan")
    iterations: int = 0


def hermitian_part(S):
    S = np.asarray(S)
    S = (S + S.conj().T) / 2
    if np.iscomplexobj(S) and not np.any(S.imag):
        S = S.real
    return S


def class_indices(labels):
    """Sorted class labels and the sample indices belonging to each."""
    labels = np.asarray(labels)
    classes = np.unique(labels)
    return classes, [np.flatnonzero(labels == c) for c in classes]


def build_scatters(X, labels, weight_between=True):
    """Between- and within-class scatter of the columns of ``X``.

    ``Sb = sum_j w_j (m_j - m)(m_j - m)^H`` with ``w_j = n_j`` when
    ``weight_between`` is set and 1 otherwise;
    ``Sw = sum_j sum_{i in C_j} (x_i - m_j)(x_i - m_j)^H``.
    """
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] == 0:
        raise DimensionError("expected a non-empty d x n data matrix")
    labels = np.asarray(labels)
    if labels.shape != (X.shape[1],):
        raise DimensionError(f"got {labels.size} labels for {X.shape[1]} samples")
    classes, members = class_indices(labels)
    if len(classes) < 2:
        raise DimensionError("at least two classes are required to build scatter matrices")
    m = X.mean(axis=1, keepdims=True)
    d = X.shape[0]
    dtype = np.result_type(X.dtype, np.float64)
    Sb = np.zeros((d, d), dtype=dtype)
    Sw = np.zeros((d, d), dtype=dtype)
    for idx in members:
        Xj = X[:, idx]
        mj = Xj.mean(axis=1, keepdims=True)
        diff = mj - m
        Sb += (len(idx) if weight_between else 1) * (diff @ diff.conj().T)
        dev = Xj - mj
        Sw += dev @ dev.conj().T
    return ScatterPair(hermitian_part(Sb), hermitian_part(Sw))


def normalize_phase(V):
    """Rotate each column so its largest-magnitude entry is real and positive."""
    V = np.array(V, copy=True)
    if V.size == 0:
        return V
    rows = np.argmax(np.abs(V), axis=0)
    pivots = V[rows, np.arange(V.shape[1])]
    scale = np.abs(pivots)
    scale[scale == 0] = 1.0
    phase = pivots / scale
    phase[phase == 0] = 1.0
    return V * phase.conj()[None, :]


def _top_eigvecs(S, k):
    w, U = np.linalg.eigh(hermitian_part(S))
    # stable sort keeps ascending original order among tied eigenvalues
    order = np.argsort(-w, kind="stable")[:k]
    return w[order], U[:, order]


def trace_ratio(Sb, Sw, V):
    """``Tr(V^H Sb V) / Tr(V^H Sw V)``."""
    num = np.real(np.trace(V.conj().T @ Sb @ V))
    den = np.real(np.trace(V.conj().T @ Sw @ V))
    if den < DENOMINATOR_FLOOR:
        raise SingularScatterError(
            f"Tr(V^H Sw V) = {den:.3g} is below {DENOMINATOR_FLOOR:g}; "
            "add a ridge term eps*I to the within-class scatter")
    return float(num / den)


def trace_ratio_newton(scatters, k, tol=1e-8, max_iter=100):
    """Maximize ``Tr(V^H Sb V) / Tr(V^H Sw V)`` over orthonormal d x k matrices.

    Newton iteration on the ratio: starting from the first k canonical basis
    vectors, V is replaced by the top-k eigenvectors of ``Sb - rho Sw`` and rho
    by the ratio at V, until ``|delta rho| < tol``. The iterates are
    non-decreasing. A dense Hermitian eigensolver plays the role of the
    Lanczos step.

    Returns
    -------
    TraceRatioState
        ``converged`` is False if ``max_iter`` was reached.
    """
    Sb, Sw = scatters.Sb, scatters.Sw
    d = Sb.shape[0]
    if not 1 <= k <= d:
        raise DimensionError(f"target dimension must lie in 1..{d}, got {k}")
    V = np.eye(d, k, dtype=np.result_type(Sb, Sw))
    rho = trace_ratio(Sb, Sw, V)
    history = [rho]
    converged = False
    iterations = 0
    while iterations < max_iter:
        iterations += 1
        _, V = _top_eigvecs(Sb - rho * Sw, k)
        new = trace_ratio(Sb, Sw, V)
        history.append(new)
        delta = abs(new - rho)
        rho = new
        if delta < tol:
            converged = True
            break
    return TraceRatioState(rho, normalize_phase(V), iterations, converged, history)


def numerical_rank(S):
    """Count singular values above ``d * eps * sigma_max``."""
    s = np.linalg.svd(np.asarray(S), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > max(S.shape) * np.finfo(float).eps * s[0]))


def ratio_trace_gep(scatters, gamma=0.0, k="auto"):
    """Top eigenpairs of ``(Sw + gamma I)^-1 Sb``.

    Solved as the Hermitian-definite pencil ``Sb u = lambda (Sw + gamma I) u``;
    returned vectors are scaled to unit norm and phase-normalized. With
    ``k="auto"`` the numerical rank of Sb is used.
    """
    if gamma < 0:
        raise DimensionError(f"gamma must be non-negative, got {gamma}")
    Sb, Sw = hermitian_part(scatters.Sb), hermitian_part(scatters.Sw)
    d = Sb.shape[0]
    if isinstance(k, str):
        if k != "auto":
            raise DimensionError(f"k must be an integer or 'auto', got {k!r}")
        k = numerical_rank(Sb)
    if not 0 <= k <= d:
        raise DimensionError(f"target dimension must lie in 0..{d}, got {k}")
    B = Sw + gamma * np.eye(d)
    if gamma == 0:
        ev = np.linalg.eigvalsh(B)
        if ev[0] <= d * np.finfo(float).eps * max(abs(ev[-1]), 1e-300):
            raise SingularScatterError(
                f"within-class scatter is singular (smallest eigenvalue {ev[0]:.3g}); use gamma > 0")
    w, U = scipy.linalg.eigh(Sb, B)
    order = np.argsort(-np.abs(w), kind="stable")[:k]
    U = U[:, order]
    U = U / np.linalg.norm(U, axis=0, keepdims=True)
    return EigenPair(w[order], normalize_phase(U))


def pca_reduce(X, var_fraction=0.95):
    """Principal subspace keeping at least ``var_fraction`` of the total variance.

    Returns the d x r orthonormal basis and the projected centered samples.
    """
    if not 0 < var_fraction <= 1:
        raise DimensionError(f"var_fraction must lie in (0, 1], got {var_fraction}")
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] < 2:
        raise DimensionError("pca_reduce needs a d x n matrix with at least two samples")
    Xc = X - X.mean(axis=1, keepdims=True)
    U, s, _ = np.linalg.svd(Xc, full_matrices=False)
    energy = s ** 2
    total = energy.sum()
    if total == 0:
        r = 1
    else:
        cum = np.cumsum(energy) / total
        r = int(np.searchsorted(cum, var_fraction - 1e-12) + 1)
        r = min(r, len(s))
    P = U[:, :r]
    return P, P.conj().T @ Xc


def fit_lda(X, labels, k=None, objective="trace_ratio", gamma=0.0, ridge=0.0,
            weight_between=True, tol=1e-8, max_iter=100):
    """Classical matrix LDA on the columns of ``X``.

    ``objective`` is ``"trace_ratio"`` (Newton iteration, ``k`` required) or
    ``"ratio_trace"`` (regularized eigenproblem, ``k`` defaults to rank(Sb)).
    """
    scatters = build_scatters(X, labels, weight_between=weight_between)
    if objective == "trace_ratio":
        if k is None:
            raise DimensionError("trace-ratio LDA needs a target dimension k")
        state = trace_ratio_newton(scatters.regularized(ridge), k, tol=tol, max_iter=max_iter)
        return LdaModel(state.V, objective, state.rho, state.iterations)
    if objective == "ratio_trace":
        pair = ratio_trace_gep(scatters, gamma, "auto" if k is None else k)
        return LdaModel(pair.vectors, objective)
    raise DimensionError(f"unknown objective {objective!r}")
