"""Feed-forward network with hand written forward and backward passes.

Supported layers are dense, relu, batchnorm and (inverted) dropout. The
model is a plain container; ``forward`` and ``backward`` are functions so the
training loop keeps full control over the parameter updates.
"""
import copy
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeMismatch, StaleCache

KINDS = ("dense", "relu", "batchnorm", "dropout")
TRAINABLE = {"dense": ("W", "b"), "batchnorm": ("gamma", "beta")}


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    in_dim: int = 0
    out_dim: int = 0
    momentum: float = 0.9
    eps_bn: float = 1e-5
    rate: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown layer kind {self.kind!r}")
        if self.kind in ("dense", "batchnorm") and (self.in_dim < 1 or self.out_dim < 1):
            raise ConfigError(f"{self.kind} layer needs positive dimensions")
        if self.kind == "batchnorm" and self.in_dim != self.out_dim:
            raise ConfigError("batchnorm keeps its dimension")
        if self.kind == "batchnorm" and not (0.0 < self.momentum < 1.0 and self.eps_bn > 0):
            raise ConfigError("batchnorm needs momentum in (0, 1) and eps_bn > 0")
        if self.kind == "dropout" and not 0.0 <= self.rate < 1.0:
            raise ConfigError(f"dropout rate {self.rate} outside [0, 1)")

    @classmethod
    def dense(cls, in_dim, out_dim):
        return cls("dense", in_dim, out_dim)

    @classmethod
    def relu(cls):
        return cls("relu")

    @classmethod
    def batchnorm(cls, dim, momentum=0.9, eps_bn=1e-5):
        return cls("batchnorm", dim, dim, momentum=momentum, eps_bn=eps_bn)

    @classmethod
    def dropout(cls, rate):
        return cls("dropout", rate=rate)

    def to_text(self):
        if self.kind == "dense":
            return f"dense {self.in_dim} {self.out_dim}"
        if self.kind == "batchnorm":
            return f"batchnorm {self.in_dim} {self.momentum!r} {self.eps_bn!r}"
        if self.kind == "dropout":
            return f"dropout {self.rate!r}"
        return "relu"

    @classmethod
    def from_text(cls, text):
        """Parse ``dense 784 256``, ``batchnorm 256 [momentum eps]``, ``relu``, ``dropout 0.25``."""
        parts = text.split()
        if not parts:
            raise ConfigError("empty layer description")
        kind, args = parts[0].lower(), parts[1:]
        try:
            if kind == "dense" and len(args) == 2:
                return cls.dense(int(args[0]), int(args[1]))
            if kind == "batchnorm" and len(args) in (1, 2, 3):
                floats = [float(a) for a in args[1:]]
                return cls.batchnorm(int(args[0]), *floats)
            if kind == "relu" and not args:
                return cls.relu()
            if kind == "dropout" and len(args) == 1:
                return cls.dropout(float(args[0]))
        except ValueError as exc:
            raise ConfigError(f"bad layer {text!r}: {exc}") from None
        raise ConfigError(f"bad layer {text!r}")


def check_topology(layers, d_in=None):
    """Return the output width; raise ConfigError on incompatible widths."""
    width = d_in
    for i, spec in enumerate(layers):
        if spec.kind in ("dense", "batchnorm"):
            if width is not None and spec.in_dim != width:
                raise ConfigError(f"layer {i} ({spec.to_text()}) expects {spec.in_dim} inputs, gets {width}")
            width = spec.out_dim
    if width is None:
        raise ConfigError("network has no dense layer")
    return width


def default_layers(d_in, d_out, hidden=(256, 128), dropout=0.25):
    """dense-BN-ReLU-dropout, then dense-BN-ReLU blocks, then a dense output layer."""
    layers = []
    width = d_in
    for i, h in enumerate(hidden):
        layers += [LayerSpec.dense(width, h), LayerSpec.batchnorm(h), LayerSpec.relu()]
        if i == 0 and dropout > 0:
            layers.append(LayerSpec.dropout(dropout))
        width = h
    layers.append(LayerSpec.dense(width, d_out))
    return layers


class NetworkModel:
    """Layer specs plus one parameter dict per layer."""

    def __init__(self, layers, params, mode="train"):
        self.layers = list(layers)
        self.params = params
        self.mode = mode
        check_topology(self.layers)

    @property
    def in_dim(self):
        return next(s.in_dim for s in self.layers if s.kind in ("dense", "batchnorm"))

    @property
    def out_dim(self):
        return check_topology(self.layers)

    def train(self):
        self.mode = "train"
        return self

    def eval(self):
        self.mode = "inference"
        return self

    def copy(self):
        return NetworkModel(self.layers, copy.deepcopy(self.params), self.mode)

    def trainable(self):
        """``(layer_index, name)`` of every trainable parameter block, in order."""
        return [(i, name) for i, s in enumerate(self.layers) for name in TRAINABLE.get(s.kind, ())]


def init_model(layers, rng):
    params = []
    for spec in layers:
        if spec.kind == "dense":
            limit = np.sqrt(6.0 / (spec.in_dim + spec.out_dim))
            params.append({
                "W": rng.uniform(-limit, limit, size=(spec.in_dim, spec.out_dim)),
                "b": np.zeros(spec.out_dim),
            })
        elif spec.kind == "batchnorm":
            params.append({
                "gamma": np.ones(spec.in_dim),
                "beta": np.zeros(spec.in_dim),
                "running_mean": np.zeros(spec.in_dim),
                "running_var": np.ones(spec.in_dim),
            })
        else:
            params.append({})
    return NetworkModel(layers, params)


def forward(model, x, rng=None):
    """Run ``x`` through the network; returns ``(output, cache)``.

    Train mode normalizes with batch statistics (updating the running
    averages) and samples dropout masks from ``rng``; inference mode is a
    pure function of its inputs.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.in_dim:
        raise ShapeMismatch(f"input shape {x.shape}, network expects (N, {model.in_dim})")
    training = model.mode == "train"
    cache = []
    out = x
    for spec, p in zip(model.layers, model.params):
        inp = out
        if spec.kind == "dense":
            if training:
                out = inp @ p["W"] + p["b"]
            else:
                # einsum avoids BLAS, whose blocking makes a row's result depend
                # on the batch height; inference stays bitwise chunk-invariant
                out = np.einsum("ni,io->no", inp, p["W"]) + p["b"]
            cache.append(inp)
        elif spec.kind == "relu":
            out = np.maximum(inp, 0.0)
            cache.append(inp > 0)
        elif spec.kind == "batchnorm":
            if training:
                if inp.shape[0] < 2:
                    raise ShapeMismatch("batchnorm needs at least 2 samples in train mode")
                mu = inp.mean(axis=0)
                var = inp.var(axis=0)
                p["running_mean"] = spec.momentum * p["running_mean"] + (1 - spec.momentum) * mu
                p["running_var"] = spec.momentum * p["running_var"] + (1 - spec.momentum) * var
            else:
                mu, var = p["running_mean"], p["running_var"]
            inv_std = 1.0 / np.sqrt(var + spec.eps_bn)
            xhat = (inp - mu) * inv_std
            out = p["gamma"] * xhat + p["beta"]
            cache.append((xhat, inv_std))
        else:  # dropout
            if training and spec.rate > 0:
                if rng is None:
                    raise ValueError("train-mode dropout needs an rng")
                mask = (rng.random(inp.shape) >= spec.rate) / (1.0 - spec.rate)
                out = inp * mask
            else:
                mask = None
            cache.append(mask)
    return out, {"mode": model.mode, "layers": cache, "out_shape": out.shape}


def backward(model, cache, grad_out):
    """Reverse-mode gradients; returns ``(param_grads, grad_in)``.

    ``param_grads`` mirrors ``model.params`` but only holds trainable
    blocks. Weight decay is left to the optimizer.
    """
    grad = np.asarray(grad_out, dtype=np.float64)
    if cache.get("mode") != "train":
        raise StaleCache("backward needs the cache of a train-mode forward pass")
    if grad.shape != cache["out_shape"] or len(cache["layers"]) != len(model.layers):
        raise StaleCache(f"gradient shape {grad.shape} does not match cached output {cache['out_shape']}")
    grads = [{} for _ in model.layers]
    for i in range(len(model.layers) - 1, -1, -1):
        spec, p, c = model.layers[i], model.params[i], cache["layers"][i]
        if spec.kind == "dense":
            if c.shape[1] != p["W"].shape[0]:
                raise StaleCache(f"layer {i} input width changed since forward")
            grads[i] = {"W": c.T @ grad, "b": grad.sum(axis=0)}
            grad = grad @ p["W"].T
        elif spec.kind == "relu":
            grad = grad * c
        elif spec.kind == "batchnorm":
            xhat, inv_std = c
            n = xhat.shape[0]
            grads[i] = {"gamma": np.sum(grad * xhat, axis=0), "beta": grad.sum(axis=0)}
            g_hat = grad * p["gamma"]
            grad = (inv_std / n) * (
                n * g_hat - g_hat.sum(axis=0) - xhat * np.sum(g_hat * xhat, axis=0)
            )
        elif c is not None:
            grad = grad * c
    return grads, grad
