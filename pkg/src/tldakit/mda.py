"""Alternating k-mode multilinear discriminant analysis (comparison baseline).

Samples are order-N tensors stacked along a leading sample axis, i.e. an array
of shape ``(n, d_1, ..., d_N)``. One orthonormal factor ``V_k`` (d_k x m_k) is
learned per sample mode by cycling over the modes and solving a trace-ratio
problem for ``V_k`` with the other factors held fixed.
"""

from dataclasses import dataclass, field

import numpy as np

from .discriminant import ScatterPair, hermitian_part, class_indices, trace_ratio_newton
from .errors import DimensionError, SingularScatterError
from .tensor import kmode_product, unfold


@dataclass
class ModeProjectors:
    factors: list
    target_dims: tuple
    outer_iterations: int = 0
    objective_trace: list = field(default_factory=list)
    converged: bool = False


def _check_samples(samples, labels):
    samples = np.asarray(samples)
    if samples.ndim < 2:
        raise DimensionError("samples must have shape (n, d_1, ..., d_N)")
    labels = np.asarray(labels)
    if labels.shape != (samples.shape[0],):
        raise DimensionError(f"got {labels.size} labels for {samples.shape[0]} samples")
    return samples, labels


def project_batch(factors, samples, skip=None):
    """Apply ``V_k^T`` along every sample mode except ``skip`` (1-based) to a batch."""
    samples = np.asarray(samples)
    if len(factors) != samples.ndim - 1:
        raise DimensionError(f"{len(factors)} factors for samples of order {samples.ndim - 1}")
    out = samples
    for k, V in enumerate(factors, start=1):
        if k == skip or V is None:
            continue
        out = kmode_product(out, np.asarray(V).conj().T, k + 1)
    return out


def project_n(factors, sample):
    """Reduce one order-N sample: ``sample x_1 V_1^T x_2 ... x_N V_N^T``."""
    return project_batch(factors, np.asarray(sample)[None])[0]


def _centroids(samples, labels):
    classes, members = class_indices(labels)
    if len(classes) < 2:
        raise DimensionError("at least two classes are required")
    glob = samples.mean(axis=0)
    return glob, members, [samples[idx].mean(axis=0) for idx in members]


def k_mode_scatters(samples, labels, factors, mode, weight_between=True):
    """Mode-k between/within scatters with every other mode projected by its factor.

    ``factors[mode-1]`` is ignored. The Kronecker product of the fixed factors
    is never formed: deviations are projected by successive k-mode products
    and then unfolded along ``mode``.
    """
    samples, labels = _check_samples(samples, labels)
    N = samples.ndim - 1
    if not 1 <= mode <= N:
        raise DimensionError(f"mode must lie in 1..{N}, got {mode}")
    for k, V in enumerate(factors, start=1):
        if k != mode and V is not None and np.shape(V)[0] != samples.shape[k]:
            raise DimensionError(f"factor {k} has {np.shape(V)[0]} rows, mode size is {samples.shape[k]}")
    glob, members, means = _centroids(samples, labels)
    between = project_batch(factors, np.stack(means) - glob, skip=mode)
    d = samples.shape[mode]
    Sb = np.zeros((d, d))
    Sw = np.zeros((d, d))
    for j, idx in enumerate(members):
        Y = unfold(between[j], mode)
        Sb = Sb + (len(idx) if weight_between else 1) * (Y @ Y.conj().T)
        dev = project_batch(factors, samples[idx] - means[j], skip=mode)
        for Z in dev:
            Y = unfold(Z, mode)
            Sw = Sw + Y @ Y.conj().T
    return ScatterPair(hermitian_part(Sb), hermitian_part(Sw))


def mda_objective(samples, labels, factors, weight_between=True):
    """``psi_B / psi_W`` of the fully projected data."""
    samples, labels = _check_samples(samples, labels)
    glob, members, means = _centroids(samples, labels)
    between = within = 0.0
    for j, idx in enumerate(members):
        w = len(idx) if weight_between else 1
        between += w * np.sum(np.abs(project_n(factors, means[j] - glob)) ** 2)
        within += np.sum(np.abs(project_batch(factors, samples[idx] - means[j])) ** 2)
    if within <= 0:
        raise SingularScatterError("projected within-class scatter is zero")
    return float(between / within)


def alternating_mda(samples, labels, target_dims, max_sweeps=30, tol=1e-6, weight_between=True,
                    ridge=0.0, newton_tol=1e-10, newton_max_iter=100):
    """Alternating (k-mode) optimization of the multilinear trace ratio.

    Factors start as the first ``m_k`` canonical columns. Each sweep updates
    modes 1..N in turn by a trace-ratio solve on :func:`k_mode_scatters`.
    Iteration stops when the relative change of the objective over a sweep
    falls below ``tol`` or after ``max_sweeps`` sweeps. ``objective_trace``
    holds the objective before the first sweep and after each sweep; with
    ``ridge=0`` it is non-decreasing.
    """
    samples, labels = _check_samples(samples, labels)
    dims = samples.shape[1:]
    target_dims = tuple(int(m) for m in target_dims)
    if len(target_dims) != len(dims):
        raise DimensionError(f"expected {len(dims)} target dims, got {len(target_dims)}")
    for m, n in zip(target_dims, dims):
        if not 1 <= m <= n:
            raise DimensionError(f"target dims {target_dims} must lie within {tuple(dims)}")
    factors = [np.eye(n, m) for n, m in zip(dims, target_dims)]
    result = ModeProjectors(factors, target_dims)
    obj = mda_objective(samples, labels, factors, weight_between)
    result.objective_trace.append(obj)
    for sweep in range(1, max_sweeps + 1):
        for k in range(1, len(dims) + 1):
            scatters = k_mode_scatters(samples, labels, factors, k, weight_between)
            try:
                state = trace_ratio_newton(scatters.regularized(ridge), target_dims[k - 1],
                                           tol=newton_tol, max_iter=newton_max_iter)
            except (SingularScatterError, DimensionError) as exc:
                raise type(exc)(f"sweep {sweep}, mode {k}: {exc}") from exc
            factors[k - 1] = state.V
        new = mda_objective(samples, labels, factors, weight_between)
        result.objective_trace.append(new)
        result.outer_iterations = sweep
        change = abs(new - obj) / max(abs(obj), np.finfo(float).tiny)
        obj = new
        if change < tol:
            result.converged = True
            break
    return result
