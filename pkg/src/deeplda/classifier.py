"""Classification on top of a trained DeepLDA network.

Once training is done the network is frozen, the latent representation of
the *whole* training set is computed, and an LDA projection is fitted on it.
Test samples are scored by their signed distances to the class decision
hyperplanes; the distances go through independent logistic functions that
are then renormalized to sum to one.
"""
from dataclasses import dataclass

import numpy as np

from .network import forward
from .objective import DeepLdaConfig, discriminant_eigen, softmax
from .scatter import LabeledBatch


@dataclass(frozen=True)
class LdaProjection:
    """Rows of ``a_matrix`` are the discriminant eigenvectors (top C-1)."""

    a_matrix: np.ndarray
    class_latent_means: np.ndarray
    hyperplanes: np.ndarray
    bias: np.ndarray
    eigenvalues: np.ndarray
    lam: float

    @classmethod
    def from_parts(cls, a_matrix, class_means, eigenvalues, lam):
        hyperplanes = class_means @ a_matrix.T @ a_matrix
        bias = 0.5 * np.einsum("cd,cd->c", class_means, hyperplanes)
        return cls(a_matrix, class_means, hyperplanes, bias, eigenvalues, lam)

    @property
    def num_classes(self):
        return self.class_latent_means.shape[0]

    def project(self, h):
        """Latents mapped into the (C-1)-dimensional discriminant space."""
        return np.asarray(h) @ self.a_matrix.T


def latent(model, x, chunk_size=1024):
    """Inference-mode network output, computed chunk by chunk."""
    model.eval()
    x = np.asarray(x, dtype=np.float64)
    chunk_size = max(1, int(chunk_size))
    parts = [forward(model, x[i:i + chunk_size])[0] for i in range(0, x.shape[0], chunk_size)]
    return np.concatenate(parts, axis=0)


def fit_projection_latent(h, labels, num_classes, cfg=DeepLdaConfig()):
    batch = LabeledBatch(h, labels, num_classes)
    sc, sol = discriminant_eigen(batch, cfg)
    return LdaProjection.from_parts(sol.vectors.T.copy(), sc.class_means, sol.values, cfg.lam)


def fit_projection(model, trainset, cfg=DeepLdaConfig(), chunk_size=1024):
    h = latent(model, trainset.features, chunk_size)
    return fit_projection_latent(h, trainset.labels, trainset.num_classes, cfg)


def distances(proj, h):
    """Signed hyperplane distances ``h T^T - bias`` for one latent or a matrix of them."""
    return np.asarray(h, dtype=np.float64) @ proj.hyperplanes.T - proj.bias


def probabilities(d):
    """Per-class logistic of ``d`` renormalized to sum to one.

    Done in log space: log(1 / (1 + exp(-d))) = -logaddexp(0, -d), which
    stays finite where the plain logistic would underflow to zero for
    every class at once.
    """
    return softmax(np.atleast_2d(-np.logaddexp(0.0, -np.asarray(d, dtype=np.float64))))


def predict(proj, h_t):
    """Class probabilities and label for one latent vector."""
    d = distances(proj, h_t)
    # the logistic is strictly increasing, so argmax over d is argmax over probs
    return probabilities(d)[0], int(np.argmax(d))


def predict_many(proj, h):
    d = distances(proj, np.atleast_2d(h))
    return probabilities(d), np.argmax(d, axis=1)


def confusion_matrix(true, pred, num_classes):
    conf = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(conf, (np.asarray(true), np.asarray(pred)), 1)
    return conf


def predict_labels(model, x, proj=None, chunk_size=1024):
    """Labels from the LDA projection, or argmax of the scores for a CCE model."""
    h = latent(model, x, chunk_size)
    if proj is None:
        return np.argmax(h, axis=1)
    return predict_many(proj, h)[1]


def evaluate(model, proj, dataset, chunk_size=1024):
    """Accuracy and confusion matrix (rows: true class, columns: predicted)."""
    pred = predict_labels(model, dataset.features, proj, chunk_size)
    conf = confusion_matrix(dataset.labels, pred, dataset.num_classes)
    return float(np.mean(pred == dataset.labels)), conf
