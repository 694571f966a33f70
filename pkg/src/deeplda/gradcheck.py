"""Finite-difference validation of the DeepLDA gradient.

Random latent batches are drawn from a seeded generator, the analytic
gradient is compared entry by entry with central differences of the loss,
and instances sitting on a non-smooth point (repeated selected eigenvalues
or an eigenvalue right at the selection threshold) are skipped.
"""
from dataclasses import dataclass, field

import numpy as np

from .linalg import generalized_eigen
from .objective import DeepLdaConfig, deeplda_loss

MULTIPLICITY_GAP = 1e-6


def central_difference(f, x, step):
    """Gradient of scalar ``f`` at array ``x`` by central differences."""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        up = f(x)
        flat[i] = orig - step
        down = f(x)
        flat[i] = orig
        gflat[i] = (up - down) / (2.0 * step)
    return grad


def separation_stack(hs, labels, num_classes, cfg):
    """DeepLDA loss value for every batch in a stack ``hs`` of shape (K, N, d).

    Scatter matrices are formed here directly with einsum, independent of
    the ``scatter`` module, and all K eigenproblems are solved together.
    """
    hs = np.asarray(hs, dtype=np.float64)
    d = hs.shape[-1]

    def cov(x):
        centered = x - x.mean(axis=1, keepdims=True)
        return np.einsum("kni,knj->kij", centered, centered) / (x.shape[1] - 1)

    s_w = sum(cov(hs[:, labels == c]) for c in range(num_classes)) / num_classes
    s_b = cov(hs) - s_w
    sol = generalized_eigen(s_b, s_w + cfg.lam * np.eye(d)).top(num_classes - 1)
    v = sol.values
    chosen = v < v[:, :1] + cfg.epsilon
    return np.sum(np.where(chosen, v, 0.0), axis=1) / chosen.sum(axis=1)


def stacked_central_difference(f_stack, x, step):
    """Central differences of a stack-vectorized scalar function.

    ``f_stack`` maps an array of shape (K, *x.shape) to K values; all 2*x.size
    perturbed copies of ``x`` are evaluated in a single call.
    """
    x = np.asarray(x, dtype=np.float64)
    m = x.size
    shifts = np.concatenate([np.eye(m), -np.eye(m)]) * step
    values = f_stack(x.reshape(1, -1) + shifts).reshape(-1)
    return ((values[:m] - values[m:]) / (2.0 * step)).reshape(x.shape)


def relative_error(analytic, numeric):
    """Max entry-wise deviation scaled by the gradient's largest entry."""
    scale = max(np.abs(analytic).max(), np.abs(numeric).max(), 1e-300)
    return float(np.abs(analytic - numeric).max() / scale)


def random_instance(rng, n_range=(10, 60), d_range=(3, 8), c_range=(2, 5)):
    """A latent batch with class-dependent offsets; every class gets >= 2 rows."""
    c = int(rng.integers(c_range[0], c_range[1] + 1))
    d = int(rng.integers(max(d_range[0], c - 1), d_range[1] + 1))
    n = int(rng.integers(max(n_range[0], 2 * c), n_range[1] + 1))
    labels = np.concatenate([np.repeat(np.arange(c), 2), rng.integers(0, c, n - 2 * c)])
    rng.shuffle(labels)
    offsets = rng.normal(scale=rng.uniform(0.3, 2.0), size=(c, d))
    h = rng.normal(size=(n, d)) + offsets[labels]
    return h, labels, c


def near_multiplicity(eigenvalues, k, epsilon, gap=MULTIPLICITY_GAP):
    v = np.asarray(eigenvalues)
    if np.any(np.diff(v[:k]) < gap):
        return True
    return bool(np.any(np.abs(v - (v[0] + epsilon)) < gap))


@dataclass
class GradcheckReport:
    checked: int = 0
    skipped: int = 0
    max_rel_err: float = 0.0
    errors: list = field(default_factory=list)

    def passed(self, tol):
        return self.checked > 0 and self.max_rel_err < tol


def run_gradcheck(seed=0, instances=20, step=1e-4, cfg=DeepLdaConfig(), max_draws=1000):
    """Check ``instances`` non-degenerate random batches; returns a report."""
    rng = np.random.default_rng(seed)
    report = GradcheckReport()
    draws = 0
    while report.checked < instances and draws < max_draws:
        draws += 1
        h, labels, c = random_instance(rng)
        res = deeplda_loss(h, labels, c, cfg)
        if near_multiplicity(res.eigenvalues, res.selected_k, cfg.epsilon):
            report.skipped += 1
            continue
        numeric = stacked_central_difference(
            lambda hs: separation_stack(hs.reshape((-1,) + h.shape), labels, c, cfg), h, step
        )
        err = relative_error(res.grad_h, numeric)
        report.errors.append((h.shape[0], h.shape[1], c, res.selected_k, err))
        report.max_rel_err = max(report.max_rel_err, err)
        report.checked += 1
    return report
