"""DeepLDA eigenvalue objective and the cross-entropy baseline.

The DeepLDA loss is a *separation* value that training maximizes: the mean
of the smallest discriminant eigenvalues of ``S_b e = v (S_w + lam I) e``,
where only eigenvalues within ``epsilon`` of the minimum take part.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DimensionTooSmall
from .linalg import generalized_eigen
from .scatter import (
    LabeledBatch,
    compute_scatter,
    total_scatter_grad_contract,
    within_scatter_grad_contract,
)


@dataclass(frozen=True)
class DeepLdaConfig:
    lam: float = 1e-3
    epsilon: float = 1.0

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")


@dataclass(frozen=True)
class LossResult:
    """Separation value, its gradient w.r.t. the latent batch and diagnostics.

    ``eigenvalues`` holds the C-1 discriminant eigenvalues in ascending
    order; ``eigenvectors`` the matching (S_w + lam I)-normalized columns.
    """

    loss: float
    grad_h: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    selected_k: int


def select_eigenvalues(values, epsilon):
    """Eigenvalues strictly below ``min(values) + epsilon``.

    ``values`` must be sorted ascending, so the selection is a prefix.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("no eigenvalues to select from")
    k = int(np.count_nonzero(values < values[0] + epsilon))
    return values[:k], k


def discriminant_eigen(batch, cfg):
    """Top C-1 eigenpairs of the regularized generalized LDA problem."""
    c = batch.num_classes
    if batch.dim < c - 1:
        raise DimensionTooSmall(
            f"latent dimension {batch.dim} is below C-1 = {c - 1}"
        )
    sc = compute_scatter(batch)
    reg = sc.s_w + cfg.lam * np.eye(batch.dim)
    return sc, generalized_eigen(sc.s_b, reg).top(c - 1)


def _eigen_objective(h, labels, num_classes, cfg, select):
    batch = LabeledBatch(h, labels, num_classes)
    _, sol = discriminant_eigen(batch, cfg)
    k = select(sol.values)
    grad = np.zeros_like(batch.features)
    for i in range(k):
        e = sol.vectors[:, i]
        g_t = total_scatter_grad_contract(batch, e)
        g_w = within_scatter_grad_contract(batch, e)
        # dS_b = dS_t - dS_w; the lam*I term is constant in H
        grad += g_t - g_w - sol.values[i] * g_w
    return LossResult(
        loss=float(np.mean(sol.values[:k])),
        grad_h=grad / k,
        eigenvalues=sol.values,
        eigenvectors=sol.vectors,
        selected_k=k,
    )


def deeplda_loss(h, labels, num_classes, cfg=DeepLdaConfig()):
    """Mean of the selected smallest discriminant eigenvalues and its gradient."""
    return _eigen_objective(
        h, labels, num_classes, cfg,
        lambda values: select_eigenvalues(values, cfg.epsilon)[1],
    )


def deeplda_mean_loss(h, labels, num_classes, cfg=DeepLdaConfig()):
    """Mean of *all* C-1 discriminant eigenvalues.

    Diagnostic only: optimizing it tends to inflate the largest eigenvalue
    while classes that still overlap stay unseparated.
    """
    return _eigen_objective(h, labels, num_classes, cfg, len)


def separation(h, labels, num_classes, cfg=DeepLdaConfig()):
    """Loss value only (no gradient); used by finite-difference checks."""
    _, sol = discriminant_eigen(LabeledBatch(h, labels, num_classes), cfg)
    selected, _ = select_eigenvalues(sol.values, cfg.epsilon)
    return float(np.mean(selected))


def softmax(scores):
    z = scores - scores.max(axis=1, keepdims=True)
    p = np.exp(z)
    return p / p.sum(axis=1, keepdims=True)


def cce_loss(scores, labels):
    """Mean categorical cross entropy of softmax(scores) and its gradient."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n = scores.shape[0]
    z = scores - scores.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    log_p = z[np.arange(n), labels] - log_norm
    grad = softmax(scores)
    grad[np.arange(n), labels] -= 1.0
    return float(-log_p.mean()), grad / n
