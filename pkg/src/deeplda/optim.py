"""Mini-batch SGD with Nesterov momentum and the epoch training loop."""
import logging
from dataclasses import dataclass, field

import numpy as np

from .classifier import evaluate, fit_projection
from .errors import ConfigError, InsufficientClassSamples, NonFiniteLoss
from .network import backward, forward
from .objective import DeepLdaConfig, cce_loss, deeplda_loss, deeplda_mean_loss

log = logging.getLogger(__name__)

OBJECTIVES = ("deeplda", "cce", "deeplda_mean_diagnostic")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 1000
    lr0: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 1e-4
    halve_every: int = 25
    objective: str = "deeplda"
    seed: int = 0
    deeplda: DeepLdaConfig = DeepLdaConfig()
    decay_all: bool = False      # also decay biases and batchnorm gamma/beta
    full_eigen_probe: bool = False

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"objective must be one of {OBJECTIVES}, got {self.objective!r}")
        if self.epochs < 0 or self.batch_size < 1 or self.halve_every < 1:
            raise ConfigError("epochs >= 0, batch_size >= 1 and halve_every >= 1 required")

    @property
    def uses_lda(self):
        return self.objective != "cce"

    def check_batch_size(self, num_classes):
        if not self.uses_lda:
            return
        if self.batch_size < 10 * num_classes:
            raise ConfigError(
                f"batch_size {self.batch_size} too small for {num_classes} classes (minimum {10 * num_classes})"
            )
        if self.batch_size < 50 * num_classes:
            log.warning("batch_size %d is below 50*C = %d; scatter estimates will be noisy",
                        self.batch_size, 50 * num_classes)


@dataclass
class EpochRecord:
    epoch: int
    lr: float
    loss: float
    train_acc: float
    val_acc: float = None
    eigenvalues: np.ndarray = None
    selected_k: int = None
    mean_selected: float = None
    full_eigenvalues: np.ndarray = None


@dataclass
class TrainMetrics:
    records: list = field(default_factory=list)
    best_epoch: int = None
    best_val_acc: float = None
    best_model: object = None
    projection: object = None
    best_projection: object = None

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]


def nesterov_step(param, velocity, grad, lr, momentum):
    """One Nesterov update in the look-ahead form; returns ``(param, velocity)``."""
    velocity = momentum * velocity - lr * grad
    return param + momentum * velocity - lr * grad, velocity


def lr_at(epoch, lr0, halve_every):
    return lr0 * 0.5 ** (epoch // halve_every)


def stratified_indices(labels, num_classes, batch_size, rng):
    """Index arrays of class-stratified batches for one epoch.

    Per batch, class ``c`` contributes ``floor((j+1) q) - floor(j q)`` rows
    with ``q = N_c * batch_size / N``, i.e. within one sample of its share.
    Leftover samples that do not fill a complete batch are dropped.
    """
    labels = np.asarray(labels)
    counts = np.bincount(labels, minlength=num_classes)
    if np.any(counts < 2):
        raise InsufficientClassSamples(f"every class needs >= 2 samples, counts are {counts.tolist()}")
    n = labels.size
    if batch_size < 2 * num_classes:
        raise InsufficientClassSamples(f"batch_size {batch_size} cannot hold 2 samples of {num_classes} classes")
    order = rng.permutation(n)
    per_class = [order[labels[order] == c] for c in range(num_classes)]
    if n <= batch_size:
        batch = np.concatenate(per_class)
        return [batch[rng.permutation(batch.size)]]
    n_batches = n // batch_size
    share = counts * batch_size / n
    if np.any(np.floor(share) < 2):
        rare = np.flatnonzero(np.floor(share) < 2).tolist()
        raise InsufficientClassSamples(
            f"classes {rare} are too rare for batch_size {batch_size}; increase the batch size"
        )
    bounds = np.floor(np.outer(np.arange(n_batches + 1), share)).astype(np.int64)
    batches = []
    for j in range(n_batches):
        batch = np.concatenate([per_class[c][bounds[j, c]:bounds[j + 1, c]] for c in range(num_classes)])
        batches.append(batch[rng.permutation(batch.size)])
    return batches


def stratified_batches(dataset, batch_size, rng):
    return [dataset.subset(idx).as_batch()
            for idx in stratified_indices(dataset.labels, dataset.num_classes, batch_size, rng)]


def shuffled_indices(n, batch_size, rng):
    """Plain shuffled mini-batches; a trailing batch of one sample is dropped."""
    order = rng.permutation(n)
    batches = [order[i:i + batch_size] for i in range(0, n, batch_size)]
    return [b for b in batches if b.size >= 2]


def _objective(cfg, h, labels, num_classes):
    if cfg.objective == "cce":
        loss, grad = cce_loss(h, labels)
        return loss, grad, None
    fn = deeplda_loss if cfg.objective == "deeplda" else deeplda_mean_loss
    res = fn(h, labels, num_classes, cfg.deeplda)
    # separation is maximized: descend on its negative
    return res.loss, -res.grad_h, res


def _decayed(spec_kind, name, decay_all):
    return (spec_kind == "dense" and name == "W") or decay_all


def train(model, dataset, valset=None, cfg=TrainConfig(), on_epoch=None):
    """Train ``model`` in place; returns ``(model, TrainMetrics)``.

    ``on_epoch`` is called with every finished EpochRecord, which lets
    callers stream metrics while a long run is in progress.
    """
    cfg.check_batch_size(dataset.num_classes)
    rng = np.random.default_rng(cfg.seed)
    velocity = {key: np.zeros_like(model.params[key[0]][key[1]]) for key in model.trainable()}
    metrics = TrainMetrics()

    for epoch in range(cfg.epochs):
        lr = lr_at(epoch, cfg.lr0, cfg.halve_every)
        model.train()
        if cfg.uses_lda:
            batches = stratified_indices(dataset.labels, dataset.num_classes, cfg.batch_size, rng)
        else:
            batches = shuffled_indices(len(dataset), cfg.batch_size, rng)

        losses = []
        res = None
        for b, idx in enumerate(batches):
            y = dataset.labels[idx]
            h, cache = forward(model, dataset.features[idx], rng)
            loss, grad_h, res = _objective(cfg, h, y, dataset.num_classes)
            if not (np.isfinite(loss) and np.all(np.isfinite(grad_h))):
                raise NonFiniteLoss(f"epoch {epoch + 1}, batch {b}: loss {loss!r} is not finite")
            grads, _ = backward(model, cache, grad_h)
            for i, name in model.trainable():
                g = grads[i][name]
                p = model.params[i][name]
                if cfg.weight_decay and _decayed(model.layers[i].kind, name, cfg.decay_all):
                    g = g + cfg.weight_decay * p
                model.params[i][name], velocity[i, name] = nesterov_step(
                    p, velocity[i, name], g, lr, cfg.momentum)
            losses.append(loss)

        model.eval()
        proj = fit_projection(model, dataset, cfg.deeplda) if cfg.uses_lda else None
        train_acc, _ = evaluate(model, proj, dataset)
        val_acc = evaluate(model, proj, valset)[0] if valset is not None else None
        rec = EpochRecord(epoch=epoch + 1, lr=lr, loss=float(np.mean(losses)) if losses else float("nan"),
                          train_acc=train_acc, val_acc=val_acc)
        if res is not None:
            rec.eigenvalues = res.eigenvalues.copy()
            rec.selected_k = res.selected_k
            rec.mean_selected = res.loss
        if proj is not None and cfg.full_eigen_probe:
            rec.full_eigenvalues = proj.eigenvalues.copy()
        metrics.records.append(rec)
        metrics.projection = proj
        if val_acc is not None and (metrics.best_val_acc is None or val_acc > metrics.best_val_acc):
            metrics.best_val_acc = val_acc
            metrics.best_epoch = rec.epoch
            metrics.best_model = model.copy()
            metrics.best_projection = proj
        log.info("epoch %d lr %.4g loss %.6g train_acc %.4f val_acc %s k %s",
                 rec.epoch, lr, rec.loss, train_acc, val_acc, rec.selected_k)
        if on_epoch is not None:
            on_epoch(rec)
    model.eval()
    return model, metrics
