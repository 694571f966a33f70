"""Run configuration files.

A config is a flat list of ``key = value`` lines; ``#`` starts a comment.
``layer = ...`` may repeat and lists the architecture in order. Relative
paths are resolved against the config file's directory.

Example::

    format = blobs
    objective = deeplda
    epochs = 200
    batch_size = 150
    layer = dense 2 64
    layer = batchnorm 64
    layer = relu
"""
import os
from dataclasses import dataclass, field

from .errors import ConfigError
from .network import LayerSpec
from .objective import DeepLdaConfig
from .optim import TrainConfig

FORMATS = ("csv", "idx", "blobs")

# MNIST-50k picks the best epoch on the validation split; MNIST-60k folds the
# validation split into training and reports the last epoch.
PRESETS = {
    "mnist-50k": {"keep_best": "true", "merge_validation": "false", "halve_every": "10", "batch_size": "1000"},
    "mnist-60k": {"keep_best": "false", "merge_validation": "true", "halve_every": "10", "batch_size": "1000"},
}


@dataclass
class RunConfig:
    format: str = "csv"
    train: list = field(default_factory=list)
    validation: list = field(default_factory=list)
    test: list = field(default_factory=list)
    csv_header: bool = False
    num_classes: int = None
    standardize: bool = True
    train_subset: int = None
    layers: list = field(default_factory=list)
    latent_dim: int = 10
    hidden: tuple = (256, 128)
    dropout: float = 0.25
    keep_best: bool = False
    merge_validation: bool = False
    output_dir: str = "runs/out"
    blobs_train: int = 1500
    blobs_test: int = 500
    blobs_classes: int = 3
    blobs_seed: int = 0
    train_cfg: TrainConfig = TrainConfig()


_TRAIN_KEYS = {
    "epochs": int, "batch_size": int, "lr0": float, "momentum": float,
    "weight_decay": float, "halve_every": int, "objective": str, "seed": int,
    "decay_all": "bool", "full_eigen_probe": "bool",
}
_LDA_KEYS = {"lambda": "lam", "epsilon": "epsilon"}
_RUN_KEYS = {
    "format": str, "csv_header": "bool", "num_classes": int, "standardize": "bool",
    "train_subset": int, "latent_dim": int, "dropout": float, "keep_best": "bool",
    "merge_validation": "bool", "output_dir": "path", "blobs_train": int,
    "blobs_test": int, "blobs_classes": int, "blobs_seed": int,
}
_PATH_LISTS = ("train", "validation", "test")


def _bool(text):
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_config(text, base_dir="."):
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        entries.append((lineno, key.lower(), value))

    preset = [v for _, k, v in entries if k == "preset"]
    values = {}
    if preset:
        if preset[-1] not in PRESETS:
            raise ConfigError(f"unknown preset {preset[-1]!r}; known: {sorted(PRESETS)}")
        values.update({k: (0, v) for k, v in PRESETS[preset[-1]].items()})
    run_kwargs, train_kwargs, lda_kwargs = {}, {}, {}
    layers = []
    for lineno, key, value in entries:
        if key == "preset":
            continue
        if key == "layer":
            layers.append(LayerSpec.from_text(value))
            continue
        known = key in _TRAIN_KEYS or key in _LDA_KEYS or key in _RUN_KEYS or key in _PATH_LISTS or key == "hidden"
        if not known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = (lineno, value)

    for key, (lineno, value) in values.items():
        try:
            if key in _PATH_LISTS:
                run_kwargs[key] = [os.path.join(base_dir, p) for p in value.split()]
            elif key == "hidden":
                run_kwargs["hidden"] = tuple(int(v) for v in value.split())
            elif key in _TRAIN_KEYS:
                conv = _TRAIN_KEYS[key]
                train_kwargs[key] = _bool(value) if conv == "bool" else conv(value)
            elif key in _LDA_KEYS:
                lda_kwargs[_LDA_KEYS[key]] = float(value)
            else:
                conv = _RUN_KEYS[key]
                if conv == "bool":
                    run_kwargs[key] = _bool(value)
                elif conv == "path":
                    run_kwargs[key] = os.path.join(base_dir, value)
                else:
                    run_kwargs[key] = conv(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {key}: {exc}") from None

    try:
        train_cfg = TrainConfig(deeplda=DeepLdaConfig(**lda_kwargs), **train_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cfg = RunConfig(layers=layers, train_cfg=train_cfg, **run_kwargs)
    if cfg.format not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}, got {cfg.format!r}")
    if cfg.format != "blobs" and not cfg.train:
        raise ConfigError("no training data: set 'train = ...'")
    return cfg


def load_config(path):
    with open(path) as f:
        text = f.read()
    return parse_config(text, os.path.dirname(os.path.abspath(path)))

