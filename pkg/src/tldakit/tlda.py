"""Transform-domain tensor LDA.

Every sample is a lateral slice ``X[:, i, :]`` (n1 x 1 x n3) of the data
tensor. Training maps the data to the transform domain, solves one small
discriminant problem per frontal slice, and maps the stacked solutions back
to obtain the projective tensor V (n1 x K x n3). Projection is
``V^T *_L X`` which in the transform domain is ``Vh[:, :, i]^H @ Xh[:, :, i]``.

For real data under the DFT, slices k and n3-k of every transformed quantity
are conjugate; only slices ``0..n3//2`` are solved and the rest are filled by
conjugation, which makes V exactly real.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import logging

import numpy as np

from . import transforms
from .discriminant import (build_scatters, class_indices, numerical_rank,
                           ratio_trace_gep, trace_ratio_newton)
from .errors import DimensionError, SingularScatterError
from .tensor import as_tensor3, stack_slices

logger = logging.getLogger(__name__)

TRACE_RATIO = "trace_ratio"
RATIO_TRACE = "ratio_trace"


@dataclass(eq=False)
class LabeledTensorDataset:
    """Samples as lateral slices of ``X`` (n1 x n x n3) with one label per sample."""

    X: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.X = as_tensor3(self.X, "X")
        self.labels = np.asarray(self.labels)
        if self.labels.shape != (self.X.shape[1],):
            raise DimensionError(f"got {self.labels.size} labels for {self.X.shape[1]} samples")
        self.classes, self.class_index = class_indices(self.labels)

    @property
    def n_samples(self):
        return self.X.shape[1]

    def subset(self, idx):
        idx = np.asarray(idx)
        return LabeledTensorDataset(self.X[:, idx, :], self.labels[idx])


@dataclass(eq=False)
class TldaModel:
    """Trained projective tensor plus what is needed to reuse it.

    ``class_centroids_projected`` is a K x c x n3 tensor whose lateral slices
    are the projected class centroids, in the order of ``classes``.
    ``vectorized`` marks a plain matrix LDA model stored with n3 = 1: inputs
    are flattened to (n1*n3) x m x 1 before projection.
    """

    V: np.ndarray
    transform: transforms.LinearTransform
    objective: str
    classes: np.ndarray
    class_centroids_projected: np.ndarray = None
    gamma: float = 0.0
    ridge: float = 0.0
    weight_between: bool = False
    vectorized: bool = False
    rho: list = field(default_factory=list)
    iterations: list = field(default_factory=list)

    @property
    def K(self):
        return self.V.shape[1]

    @property
    def output_dim(self):
        return self.V.shape[1] * self.V.shape[2]

    def transformed_V(self):
        return transforms.forward(self.V, self.transform)


def compute_centroids(ds):
    """Global centroid (n1 x 1 x n3) and the class centroids, in class order."""
    glob = ds.X.mean(axis=1, keepdims=True)
    per_class = [ds.X[:, idx, :].mean(axis=1, keepdims=True) for idx in ds.class_index]
    return glob, per_class


def _class_centroid_tensor(ds):
    return np.concatenate(compute_centroids(ds)[1], axis=1)


def _transformed_slices(ds, L):
    """Transform-domain data slices and the list of slices to solve."""
    Xh = transforms.forward(ds.X, L)
    real_data = not np.iscomplexobj(ds.X)
    mirror = real_data and L.conjugate_symmetric
    todo = L.independent_slices() if mirror else list(range(L.size))
    slices = {}
    for i in todo:
        S = Xh[:, :, i]
        if mirror and L.partner(i) == i:
            # self-conjugate slice: real up to rounding
            S = S.real
        elif L.real_to_real and real_data:
            S = S.real
        slices[i] = S
    return slices, mirror


def _run_slices(func, slices, order, threads):
    def call(i):
        try:
            return func(i, slices[i])
        except (SingularScatterError, DimensionError) as exc:
            raise type(exc)(f"slice {i}: {exc}") from exc

    if threads and threads > 1 and len(order) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(call, order))
    else:
        results = [call(i) for i in order]
    return dict(zip(order, results))


def _check_order(slice_order, todo):
    if slice_order is None:
        return list(todo)
    order = [int(i) for i in slice_order if int(i) in todo]
    if sorted(order) != sorted(todo):
        raise DimensionError(f"slice_order must be a permutation of {sorted(todo)}")
    return order


def _assemble(ds, L, solved, mirror, K):
    n1, _, n3 = ds.X.shape
    dtype = complex if (not L.real_to_real or np.iscomplexobj(ds.X)) else float
    Vh = np.zeros((n1, K, n3), dtype=dtype)
    for i, Vi in solved.items():
        Vh[:, :, i] = Vi
        if mirror:
            Vh[:, :, L.partner(i)] = np.conj(Vi)
    V = transforms.inverse(Vh, L)
    if not np.iscomplexobj(ds.X) and (L.real_to_real or L.conjugate_symmetric):
        V = transforms.to_real(V)
    return V


def _finish(model, ds):
    model.class_centroids_projected = project(model, _class_centroid_tensor(ds))
    return model


def train_trace_ratio(ds, K, L, weight_between=False, ridge=0.0, tol=1e-8, max_iter=100,
                      threads=1, slice_order=None):
    """Trace-ratio TLDA: a Newton trace-ratio solve on every transform-domain slice.

    Parameters
    ----------
    ds : LabeledTensorDataset
    K : int
        Number of projective tube directions, ``1 <= K <= n1``.
    L : LinearTransform
    weight_between : bool
        Weight the between-class terms by the class sizes.
    ridge : float
        ``ridge * I`` is added to every slice's within-class scatter.
    threads : int
        Slices are independent and may be solved concurrently.
    slice_order : sequence of int, optional
        Order in which slices are solved; has no effect on the result.
    """
    n1 = ds.X.shape[0]
    if not 1 <= K <= n1:
        raise DimensionError(f"K must lie in 1..{n1}, got {K}")
    if len(ds.classes) < 2:
        raise DimensionError("at least two classes are required")
    slices, mirror = _transformed_slices(ds, L)
    order = _check_order(slice_order, list(slices))

    def solve(i, Xi):
        scatters = build_scatters(Xi, ds.labels, weight_between).regularized(ridge)
        state = trace_ratio_newton(scatters, K, tol=tol, max_iter=max_iter)
        logger.info("slice %d: rho=%.10g iterations=%d converged=%s",
                    i, state.rho, state.iterations, state.converged)
        return state

    states = _run_slices(solve, slices, order, threads)
    idx = sorted(states)
    V = _assemble(ds, L, {i: states[i].V for i in idx}, mirror, K)
    # mirrored slices report the solve of their conjugate partner
    source = [i if i in states else L.partner(i) for i in range(L.size)]
    model = TldaModel(V, L, TRACE_RATIO, ds.classes, ridge=ridge, weight_between=weight_between,
                      rho=[states[i].rho for i in source],
                      iterations=[states[i].iterations for i in source])
    return _finish(model, ds)


def train_ratio_trace(ds, gamma, L, K=None, weight_between=False, threads=1, slice_order=None):
    """Ratio-trace TLDA: per-slice eigenvectors of ``(Sw + gamma I)^-1 Sb``.

    Each slice suggests ``K_i = rank(Sb_i)``; the smallest of these is used for
    every slice so that V is a proper n1 x K x n3 tensor. An explicit ``K``
    overrides the rank rule.
    """
    if gamma < 0:
        raise DimensionError(f"gamma must be non-negative, got {gamma}")
    if len(ds.classes) < 2:
        raise DimensionError("at least two classes are required")
    slices, mirror = _transformed_slices(ds, L)
    order = _check_order(slice_order, list(slices))
    scatters = _run_slices(lambda i, Xi: build_scatters(Xi, ds.labels, weight_between),
                           slices, order, threads)
    if K is None:
        ranks = {i: numerical_rank(s.Sb) for i, s in scatters.items()}
        K = min(ranks.values())
        logger.info("per-slice ranks of Sb: %s -> K=%d", [ranks[i] for i in sorted(ranks)], K)
    if not 1 <= K <= ds.X.shape[0]:
        raise DimensionError(f"K must lie in 1..{ds.X.shape[0]}, got {K}")

    pairs = _run_slices(lambda i, s: ratio_trace_gep(s, gamma, K), scatters, order, threads)
    idx = sorted(pairs)
    V = _assemble(ds, L, {i: pairs[i].vectors for i in idx}, mirror, K)
    model = TldaModel(V, L, RATIO_TRACE, ds.classes, gamma=gamma, weight_between=weight_between)
    return _finish(model, ds)


def vectorize(X):
    """Flatten every lateral slice (n1 x n3) into a column: (n1*n3) x m x 1."""
    return stack_slices(as_tensor3(X))[:, :, None]


def project(model, samples):
    """Project samples (n1 x m x n3) to K x m x n3 via ``V^T *_L samples``."""
    samples = as_tensor3(samples, "samples")
    if model.vectorized:
        samples = vectorize(samples)
    n1, _, n3 = model.V.shape
    if samples.shape[0] != n1 or samples.shape[2] != n3:
        raise DimensionError(f"samples of shape {samples.shape} do not match model dims {model.V.shape}")
    L = model.transform
    Vh = transforms.forward(model.V, L)
    Xh = transforms.forward(samples, L)
    Ph = np.einsum("ikt,imt->kmt", Vh.conj(), Xh)
    P = transforms.inverse(Ph, L)
    if not np.iscomplexobj(samples) and not np.iscomplexobj(model.V) and (
            L.real_to_real or L.conjugate_symmetric):
        P = transforms.to_real(P)
    return P


def objective_value(model, ds):
    """``psi_B(V) / psi_W(V)`` evaluated with tensor products in the original domain."""
    L = model.transform
    Vt = transforms.hermitian_transpose(model.V, L)
    glob, per_class = compute_centroids(ds)
    between = within = 0.0
    for idx, mj in zip(ds.class_index, per_class):
        w = len(idx) if model.weight_between else 1
        between += w * np.sum(np.abs(transforms.l_product(Vt, mj - glob, L)) ** 2)
        within += np.sum(np.abs(transforms.l_product(Vt, ds.X[:, idx, :] - mj, L)) ** 2)
    return float(between / within)


def transform_domain_objective(model, ds):
    """Pooled ratio ``sum_i Tr(Vh_i^H Sb_i Vh_i) / sum_i Tr(Vh_i^H Sw_i Vh_i)``."""
    L = model.transform
    Vh = transforms.forward(model.V, L)
    Xh = transforms.forward(ds.X, L)
    num = den = 0.0
    for i in range(L.size):
        s = build_scatters(Xh[:, :, i], ds.labels, model.weight_between)
        Vi = Vh[:, :, i]
        num += np.real(np.trace(Vi.conj().T @ s.Sb @ Vi))
        den += np.real(np.trace(Vi.conj().T @ s.Sw @ Vi))
    return float(num / den)
