"""Method dispatch and the evaluation protocols used by the command line.

Methods:

``tlda-tr``  transform-domain TLDA, trace-ratio objective (needs ``k``)
``tlda-rt``  transform-domain TLDA, ratio-trace objective (``gamma``; K = rank rule)
``lda``      matrix trace-ratio LDA on vectorized samples (needs ``k``)
``mda-alt``  alternating k-mode MDA on the n1 x n3 sample matrices (``dims``)
"""

from dataclasses import dataclass, field
import time

import numpy as np

from . import discriminant, mda, tlda
from .data import make_folds, train_test_split
from .errors import DimensionError, TldaError
from .evaluation import nearest_neighbor
from .transforms import LinearTransform, build_dft, custom_transform, get_transform

METHODS = ("tlda-tr", "tlda-rt", "lda", "mda-alt")
GRID_PARAM = {"tlda-tr": "k", "tlda-rt": "gamma", "lda": "k", "mda-alt": "m"}


@dataclass
class MethodConfig:
    method: str = "tlda-tr"
    transform: object = None
    k: int = None
    gamma: float = None
    ridge: float = 0.0
    dims: tuple = None
    weight_between: bool = False
    pca_var: float = None
    threads: int = 1
    metric: str = "frobenius"

    def validate(self):
        if self.method not in METHODS:
            raise DimensionError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.gamma is not None and self.method != "tlda-rt":
            raise DimensionError("gamma only applies to the ratio-trace method tlda-rt")
        if self.method in ("tlda-tr", "lda") and self.k is None:
            raise DimensionError(f"method {self.method} needs a target dimension k")
        if self.method.startswith("tlda") and self.transform is None:
            raise DimensionError(f"method {self.method} needs a transform")
        if self.pca_var is not None and self.method != "lda":
            raise DimensionError("pca_var only applies to the lda method")
        return self

    def with_param(self, name, value):
        cfg = MethodConfig(**self.__dict__)
        if name == "m":
            cfg.dims = (int(value),)
        elif name == "k":
            cfg.k = int(value)
        else:
            setattr(cfg, name, value)
        return cfg


@dataclass
class MdaPredictor:
    """Projection wrapper so the alternating baseline looks like a TLDA model."""

    projectors: mda.ModeProjectors

    @property
    def output_dim(self):
        return int(np.prod(self.projectors.target_dims))

    def project(self, X):
        samples = np.transpose(X, (1, 0, 2))
        Y = mda.project_batch(self.projectors.factors, samples)
        return np.transpose(Y, (1, 0, 2))


def resolve_transform(spec, n3):
    """Turn ``"t"``, ``"c"`` or ``"custom:<path>"`` into a transform of size n3."""
    if isinstance(spec, LinearTransform):
        return spec
    spec = str(spec)
    if spec.startswith("custom:"):
        from .formats import load_matrix

        L = custom_transform(load_matrix(spec[len("custom:"):]))
        if L.size != n3:
            raise DimensionError(f"custom transform has size {L.size}, data has n3={n3}")
        return L
    return get_transform(spec, n3)


def _transform_for(cfg, n3):
    return resolve_transform(cfg.transform, n3)


def fit(cfg, ds):
    """Train the configured method on a :class:`~tldakit.tlda.LabeledTensorDataset`."""
    cfg.validate()
    if cfg.method == "tlda-tr":
        return tlda.train_trace_ratio(ds, cfg.k, _transform_for(cfg, ds.X.shape[2]),
                                      weight_between=cfg.weight_between, ridge=cfg.ridge,
                                      threads=cfg.threads)
    if cfg.method == "tlda-rt":
        gamma = 0.0 if cfg.gamma is None else cfg.gamma
        return tlda.train_ratio_trace(ds, gamma, _transform_for(cfg, ds.X.shape[2]), K=cfg.k,
                                      weight_between=cfg.weight_between, threads=cfg.threads)
    if cfg.method == "lda":
        return fit_lda_model(ds, cfg.k, ridge=cfg.ridge, weight_between=cfg.weight_between,
                             pca_var=cfg.pca_var)
    n1, _, n3 = ds.X.shape
    dims = cfg.dims or (n1, n3)
    if len(dims) == 1:
        dims = (dims[0], dims[0])
    dims = (min(dims[0], n1), min(dims[1], n3))
    # the baseline keeps the class-size weighting of its between-class term
    proj = mda.alternating_mda(np.transpose(ds.X, (1, 0, 2)), ds.labels, dims,
                               weight_between=True, ridge=cfg.ridge)
    return MdaPredictor(proj)


def fit_lda_model(ds, k, ridge=0.0, weight_between=False, pca_var=None):
    """Matrix LDA on vectorized samples, wrapped as a TLDA model with n3 = 1.

    With ``pca_var`` the samples are first reduced by PCA (Fisherfaces style)
    and the discriminant directions are mapped back to the input space.
    """
    Xv = tlda.vectorize(ds.X)[:, :, 0]
    basis = None
    if pca_var is not None:
        basis, _ = discriminant.pca_reduce(Xv, pca_var)
        Xv = basis.T @ Xv
    res = discriminant.fit_lda(Xv, ds.labels, k=k, ridge=ridge, weight_between=weight_between)
    V = res.V if basis is None else basis @ res.V
    model = tlda.TldaModel(np.real_if_close(V)[:, :, None], build_dft(1), tlda.TRACE_RATIO, ds.classes,
                           ridge=ridge, weight_between=weight_between, vectorized=True,
                           rho=[res.rho], iterations=[res.iterations])
    model.class_centroids_projected = tlda.project(
        model, np.concatenate(tlda.compute_centroids(ds)[1], axis=1))
    return model


def project_with(model, X):
    if isinstance(model, MdaPredictor):
        return model.project(X)
    return tlda.project(model, X)


@dataclass
class RunResult:
    accuracy: float
    train_seconds: float
    dim: int
    predictions: np.ndarray = field(repr=False, default=None)
    ranked: list = field(repr=False, default=None)


def run_split(cfg, ds, train_idx, test_idx):
    """Train on ``train_idx``, classify ``test_idx`` by 1-NN in the projected space."""
    train, test = ds.subset(train_idx), ds.subset(test_idx)
    t0 = time.perf_counter()
    model = fit(cfg, train)
    elapsed = time.perf_counter() - t0
    preds, ranked = nearest_neighbor(project_with(model, train.X), train.labels,
                                     project_with(model, test.X), cfg.metric)
    acc = float(np.mean(preds == test.labels))
    return RunResult(acc, elapsed, model.output_dim, preds, ranked)


def _sample_std(a):
    return float(np.std(a, ddof=1)) if len(a) > 1 else 0.0


@dataclass
class RepetitionSummary:
    method: str
    transform: str
    accuracies: list
    times: list
    dim: int

    def row(self):
        acc = 100.0 * np.asarray(self.accuracies)
        t = np.asarray(self.times)
        return {"method": self.method, "transform": self.transform,
                "acc_mean": float(acc.mean()), "acc_std": _sample_std(acc),
                "time_mean": float(t.mean()), "time_std": _sample_std(t), "dim": self.dim}


def transform_label(cfg):
    if not cfg.method.startswith("tlda"):
        return "none"
    L = cfg.transform
    return L.name if isinstance(L, LinearTransform) else str(L)


def repeated_holdout(cfg, ds, repetitions=30, test_fraction=0.3, seed=0):
    """Stratified hold-out repeated with seeds ``seed, seed+1, ...``."""
    accs, times, dim = [], [], 0
    for rep in range(repetitions):
        split = train_test_split(ds.labels, test_fraction, seed=seed + rep, stratified=True)
        res = run_split(cfg, ds, split.train, split.test)
        accs.append(res.accuracy)
        times.append(res.train_seconds)
        dim = res.dim
    return RepetitionSummary(cfg.method, transform_label(cfg), accs, times, dim)


@dataclass
class CvResult:
    param: str
    best: object
    rows: list
    means: dict


def cross_validate(cfg, ds, grid, folds=5, seed=0):
    """k-fold grid search over the method's hyperparameter.

    The parameter is ``gamma`` for ``tlda-rt``, ``k`` for ``tlda-tr``/``lda``
    and a common mode size ``m`` for ``mda-alt``. A grid point whose training
    fails (for instance gamma = 0 with a singular within-class scatter) scores
    NaN and is never selected. Ties go to the smaller value.
    """
    grid = list(grid)
    if not grid:
        raise DimensionError("hyperparameter grid is empty")
    param = GRID_PARAM[cfg.method]
    splits = make_folds(ds.n_samples, folds, ds.labels, stratified=True, seed=seed)
    rows, means = [], {}
    for value in grid:
        point = cfg.with_param(param, value)
        scores = []
        for f, split in enumerate(splits):
            try:
                acc, err = run_split(point, ds, split.train, split.test).accuracy, ""
            except TldaError as exc:
                acc, err = float("nan"), f"{type(exc).__name__}: {exc}"
            scores.append(acc)
            rows.append({"param": param, "value": value, "fold": f, "accuracy": acc, "error": err})
        means[value] = float(np.mean(scores))
    valid = [v for v in grid if not np.isnan(means[v])]
    if not valid:
        raise DimensionError(f"every grid point failed for {cfg.method}")
    best = max(sorted(valid), key=lambda v: means[v])
    return CvResult(param, best, rows, means)
