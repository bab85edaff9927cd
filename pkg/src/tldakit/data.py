"""Synthetic data, train/test splits and cross-validation folds.

Randomness always goes through ``numpy.random.Generator(PCG64(seed))`` so
results are reproducible across platforms for a given seed.

Four-way source data (image rows x image columns x modalities x samples) is
mapped to the n1 x n x n3 layout by flattening each image's pixels into the
first mode (n1 = rows * cols, row-major) and putting modalities on the third
mode; see :func:`flatten_modalities`.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(eq=False)
class DatasetBundle:
    """A data tensor (n1 x n x n3) with integer labels and free-form metadata."""

    data: np.ndarray
    labels: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.data.ndim != 3 or self.labels.shape != (self.data.shape[1],):
            raise DimensionError(
                f"labels of shape {self.labels.shape} do not match data of shape {self.data.shape}")


@dataclass(frozen=True)
class SplitSpec:
    train: np.ndarray
    test: np.ndarray
    seed: int = 0
    stratified: bool = False


def generate_synthetic(c, per_class, n1, n3, separation=5.0, noise=1.0, seed=0):
    """Gaussian classes around random centroids.

    Class centroids are drawn once as ``separation * N(0, 1)`` tensors of size
    n1 x n3; each sample adds ``noise * N(0, 1)``. Samples are ordered class by
    class and labelled 1..c.
    """
    if c < 2 or per_class < 1 or n1 < 1 or n3 < 1:
        raise DimensionError("need c >= 2 and per_class, n1, n3 >= 1")
    rng = make_rng(seed)
    centroids = separation * rng.standard_normal((c, n1, n3))
    eps = noise * rng.standard_normal((c, per_class, n1, n3))
    samples = (centroids[:, None] + eps).reshape(c * per_class, n1, n3)
    labels = np.repeat(np.arange(1, c + 1), per_class)
    meta = {"name": "synthetic", "classes": c,
            "provenance": (f"generate_synthetic(c={c}, per_class={per_class}, n1={n1}, n3={n3}, "
                           f"separation={separation!r}, noise={noise!r}, seed={seed})")}
    return DatasetBundle(np.ascontiguousarray(samples.transpose(1, 0, 2)), labels, meta)


def flatten_modalities(images):
    """Map an (h, w, s, n) array of n multi-modal images to an (h*w, n, s) tensor."""
    images = np.asarray(images)
    if images.ndim != 4:
        raise DimensionError(f"expected (h, w, s, n) images, got shape {images.shape}")
    h, w, s, n = images.shape
    return images.reshape(h * w, s, n).transpose(0, 2, 1)


def train_test_split(labels, test_fraction=0.3, seed=0, stratified=True):
    """Random split; stratification keeps ``round(test_fraction * n_c)`` of each class for testing."""
    labels = np.asarray(labels)
    if not 0 < test_fraction < 1:
        raise DimensionError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    rng = make_rng(seed)
    n = len(labels)
    if stratified:
        test = []
        for c in np.unique(labels):
            idx = rng.permutation(np.flatnonzero(labels == c))
            test.extend(idx[:int(round(test_fraction * len(idx)))])
        test = np.sort(np.asarray(test, dtype=np.int64))
    else:
        test = np.sort(rng.permutation(n)[:int(round(test_fraction * n))])
    train = np.setdiff1d(np.arange(n), test)
    return SplitSpec(train, test, seed, stratified)


def make_folds(n, k, labels=None, stratified=False, seed=0):
    """Partition ``range(n)`` into k test folds.

    With ``stratified`` each class is shuffled and dealt round-robin over the
    folds (continuing where the previous class stopped), so every fold holds
    each class's share to within one sample.
    """
    if not 2 <= k <= n:
        raise DimensionError(f"number of folds must lie in 2..{n}, got {k}")
    rng = make_rng(seed)
    if stratified:
        if labels is None:
            raise DimensionError("stratified folds need labels")
        labels = np.asarray(labels)
        if labels.shape != (n,):
            raise DimensionError(f"got {labels.size} labels for n={n}")
        buckets = [[] for _ in range(k)]
        offset = 0
        for c in np.unique(labels):
            idx = rng.permutation(np.flatnonzero(labels == c))
            if len(idx) < k:
                raise DimensionError(
                    f"class {c} has {len(idx)} samples, fewer than {k} folds; use at most {len(idx)} folds")
            for p, i in enumerate(idx):
                buckets[(offset + p) % k].append(i)
            offset += len(idx)
        tests = [np.sort(np.asarray(b, dtype=np.int64)) for b in buckets]
    else:
        tests = [np.sort(part) for part in np.array_split(rng.permutation(n), k)]
    everything = np.arange(n)
    return [SplitSpec(np.setdiff1d(everything, t), t, seed, stratified) for t in tests]
