"""Scatter matrices of a labelled batch and their derivatives.

Within scatter is the *unweighted* mean of the per-class covariances,
total scatter is the population covariance and between scatter is their
difference. The ``*_grad_contract`` functions return the derivative of the
quadratic form ``e.T @ S @ e`` with respect to every entry of the batch,
i.e. ``sum_ab e_a e_b dS_ab/dH_ij`` as an ``N x d`` matrix.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateClass, ShapeMismatch


@dataclass(frozen=True)
class LabeledBatch:
    features: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        x = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels)
        if x.ndim != 2:
            raise ShapeMismatch(f"features must be 2-D, got shape {x.shape}")
        if y.shape != (x.shape[0],):
            raise ShapeMismatch(f"{y.shape[0] if y.ndim else 0} labels for {x.shape[0]} samples")
        if not np.issubdtype(y.dtype, np.integer):
            if not np.all(np.mod(y, 1) == 0):
                raise ShapeMismatch("labels must be integers")
            y = y.astype(np.int64)
        if y.size and (y.min() < 0 or y.max() >= self.num_classes):
            raise DegenerateClass(f"labels outside 0..{self.num_classes - 1}")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def dim(self):
        return self.features.shape[1]

    def class_counts(self):
        return np.bincount(self.labels, minlength=self.num_classes)

    def check(self):
        """Raise DegenerateClass unless every class has at least two samples."""
        counts = self.class_counts()
        bad = np.flatnonzero(counts < 2)
        if bad.size:
            raise DegenerateClass(
                f"classes {bad.tolist()} have fewer than 2 samples (counts {counts.tolist()})"
            )
        return counts


@dataclass(frozen=True)
class ScatterSet:
    s_w: np.ndarray
    s_b: np.ndarray
    s_t: np.ndarray
    class_means: np.ndarray
    global_mean: np.ndarray
    class_counts: np.ndarray


def class_scatter(batch, c):
    """Covariance ``Xc.T @ Xc / (Nc - 1)`` of the mean-centred rows of class ``c``."""
    xc = batch.features[batch.labels == c]
    if xc.shape[0] < 2:
        raise DegenerateClass(f"class {c} has {xc.shape[0]} samples, need at least 2")
    centered = xc - xc.mean(axis=0)
    return centered.T @ centered / (xc.shape[0] - 1)


def compute_scatter(batch):
    counts = batch.check()
    x = batch.features
    d = batch.dim
    means = np.zeros((batch.num_classes, d))
    s_w = np.zeros((d, d))
    for c in range(batch.num_classes):
        xc = x[batch.labels == c]
        means[c] = xc.mean(axis=0)
        s_w += class_scatter(batch, c)
    s_w /= batch.num_classes
    mu = x.mean(axis=0)
    centered = x - mu
    s_t = centered.T @ centered / (batch.n - 1)
    return ScatterSet(
        s_w=s_w,
        s_b=s_t - s_w,
        s_t=s_t,
        class_means=means,
        global_mean=mu,
        class_counts=counts,
    )


def _check_direction(batch, e):
    e = np.asarray(e, dtype=np.float64)
    if e.shape != (batch.dim,):
        raise ShapeMismatch(f"direction has shape {e.shape}, expected ({batch.dim},)")
    return e


def total_scatter_grad_contract(batch, e):
    """``d(e.T S_t e)/dH``.

    Summing the four derivative cases over ``a, b`` collapses to
    ``2/(N-1) * (Hc @ e) e.T`` with ``Hc`` the globally centred batch.
    """
    e = _check_direction(batch, e)
    centered = batch.features - batch.features.mean(axis=0)
    return (2.0 / (batch.n - 1)) * np.outer(centered @ e, e)


def within_scatter_grad_contract(batch, e):
    """``d(e.T S_w e)/dH``; each row only sees its own class covariance."""
    e = _check_direction(batch, e)
    x = batch.features
    grad = np.zeros_like(x)
    for c in range(batch.num_classes):
        rows = batch.labels == c
        nc = int(rows.sum())
        if nc < 2:
            raise DegenerateClass(f"class {c} has {nc} samples, need at least 2")
        centered = x[rows] - x[rows].mean(axis=0)
        grad[rows] = (2.0 / (nc - 1)) * np.outer(centered @ e, e)
    return grad / batch.num_classes

