"""Nearest-neighbour classification of projected tensors and evaluation metrics."""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DimensionError
from .tensor import as_tensor3

METRICS = ("frobenius", "mad")


def _samples_first(P):
    # K x m x n3 -> m x K x n3
    return np.transpose(as_tensor3(P), (1, 0, 2))


def distance_matrix(gallery, probes, metric="frobenius"):
    """Pairwise distances (probes x gallery) between projected samples.

    Both inputs are K x m x n3 tensors whose lateral slices are samples.

    ``frobenius`` is the Frobenius norm of the difference. ``mad`` is the
    modified angle distance: minus the mean, over the K projected tube fibers,
    of the cosine similarity between corresponding fibers,
    ``-(1/K) sum_k <a_k, b_k> / (|a_k| |b_k|)``. A zero fiber contributes a
    similarity of 0.
    """
    G = _samples_first(gallery)
    Q = _samples_first(probes)
    if G.shape[1:] != Q.shape[1:]:
        raise DimensionError(f"gallery {gallery.shape} and probes {probes.shape} have different sample shapes")
    if metric == "frobenius":
        return cdist(Q.reshape(len(Q), -1), G.reshape(len(G), -1))
    if metric == "mad":
        def unit(T):
            norms = np.linalg.norm(T, axis=2, keepdims=True)
            return np.divide(T, norms, out=np.zeros_like(T), where=norms > 0)
        return -np.einsum("pkt,gkt->pg", unit(Q), unit(G)) / Q.shape[1]
    raise DimensionError(f"unknown metric {metric!r}; expected one of {METRICS}")


def nearest_neighbor(gallery, gallery_labels, probes, metric="frobenius"):
    """1-NN labels and, per probe, the gallery classes ranked by their closest member.

    Ties are broken by gallery order.
    """
    gallery_labels = np.asarray(gallery_labels)
    if gallery_labels.shape != (gallery.shape[1],):
        raise DimensionError("gallery labels do not match the gallery size")
    D = distance_matrix(gallery, probes, metric)
    ranked = []
    for row in D:
        order = np.argsort(row, kind="stable")
        _, first = np.unique(gallery_labels[order], return_index=True)
        ranked.append(gallery_labels[order][np.sort(first)])
    predictions = np.array([r[0] for r in ranked]) if ranked else np.array([], dtype=gallery_labels.dtype)
    return predictions, ranked


def classify(model, gallery_projected, gallery_labels, test_samples, metric="frobenius"):
    """Project ``test_samples`` with ``model`` and classify them against a projected gallery."""
    from .tlda import project

    return nearest_neighbor(gallery_projected, gallery_labels, project(model, test_samples), metric)


def cmc_curve(ranked_lists, true_labels, max_rank=None):
    """Rank-k identification rates for k = 1..max_rank.

    ``max_rank`` defaults to the length of the longest ranked list. A probe
    whose class never appears is counted as a miss at every rank.
    """
    true_labels = np.asarray(true_labels)
    if len(ranked_lists) != len(true_labels):
        raise DimensionError(f"{len(ranked_lists)} ranked lists for {len(true_labels)} probes")
    if max_rank is None:
        max_rank = max((len(r) for r in ranked_lists), default=0)
    ranks = np.full(len(true_labels), np.inf)
    for p, (lst, truth) in enumerate(zip(ranked_lists, true_labels)):
        hit = np.flatnonzero(np.asarray(lst) == truth)
        if hit.size:
            ranks[p] = hit[0] + 1
    if len(true_labels) == 0:
        return np.zeros(max_rank)
    return np.array([np.mean(ranks <= k) for k in range(1, max_rank + 1)])


@dataclass
class EvalReport:
    accuracy: float
    per_class_accuracy: np.ndarray
    cmc: np.ndarray
    confusion: np.ndarray
    classes: np.ndarray
    timings: dict = field(default_factory=dict)


def evaluate(predictions, ranked_lists, true_labels, classes=None, timings=None):
    """Accuracy, per-class accuracy, CMC curve and confusion matrix.

    ``confusion[a, b]`` counts probes of class ``classes[a]`` predicted as
    ``classes[b]``.
    """
    predictions = np.asarray(predictions)
    true_labels = np.asarray(true_labels)
    if predictions.shape != true_labels.shape:
        raise DimensionError(f"{predictions.size} predictions for {true_labels.size} labels")
    if classes is None:
        classes = np.unique(np.concatenate([true_labels, predictions]))
    classes = np.asarray(classes)
    pos = {c: i for i, c in enumerate(classes.tolist())}
    confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(true_labels.tolist(), predictions.tolist()):
        confusion[pos[t], pos[p]] += 1
    counts = confusion.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        per_class = np.diag(confusion) / counts
    accuracy = float(np.mean(predictions == true_labels)) if true_labels.size else float("nan")
    return EvalReport(accuracy, per_class, cmc_curve(ranked_lists, true_labels), confusion,
                      classes, dict(timings or {}))
