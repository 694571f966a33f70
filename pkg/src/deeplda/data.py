"""Datasets: IDX (MNIST) and CSV loaders, standardization, synthetic blobs."""
import csv
import struct
from dataclasses import dataclass, replace

import numpy as np

from .errors import BadMagic, CountMismatch, ParseError, Truncated
from .scatter import LabeledBatch

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    mean: np.ndarray = None
    std: np.ndarray = None

    def __len__(self):
        return self.features.shape[0]

    @property
    def dim(self):
        return self.features.shape[1]

    def as_batch(self):
        return LabeledBatch(self.features, self.labels, self.num_classes)

    def subset(self, idx):
        return replace(self, features=self.features[idx], labels=self.labels[idx])

    def with_num_classes(self, num_classes):
        if self.labels.size and self.labels.max() >= num_classes:
            raise ParseError(f"label {self.labels.max()} outside 0..{num_classes - 1}")
        return replace(self, num_classes=num_classes)


def make_dataset(features, labels, num_classes=None):
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if num_classes is None:
        num_classes = int(y.max()) + 1 if y.size else 0
    return Dataset(x, y, int(num_classes))


@dataclass(frozen=True)
class Standardizer:
    """Per-feature mean/std learned from one split and reused for the others."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, features):
        std = features.std(axis=0)
        std[std == 0] = 1.0
        return cls(features.mean(axis=0), std)

    def apply(self, ds):
        return replace(ds, features=(ds.features - self.mean) / self.std, mean=self.mean, std=self.std)


def _read_exact(f, n, what):
    data = f.read(n)
    if len(data) != n:
        raise Truncated(f"{what}: expected {n} bytes, got {len(data)}")
    return data


def _read_header(f, magic, ndims, what):
    (found,) = struct.unpack(">I", _read_exact(f, 4, f"{what} magic"))
    if found != magic:
        raise BadMagic(f"{what}: magic 0x{found:08x}, expected 0x{magic:08x}")
    return struct.unpack(f">{ndims}I", _read_exact(f, 4 * ndims, f"{what} header"))


def read_idx_images(path):
    with open(path, "rb") as f:
        count, rows, cols = _read_header(f, IDX_IMAGES_MAGIC, 3, path)
        pixels = _read_exact(f, count * rows * cols, f"{path} pixels")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(count, rows * cols)


def read_idx_labels(path):
    with open(path, "rb") as f:
        (count,) = _read_header(f, IDX_LABELS_MAGIC, 1, path)
        raw = _read_exact(f, count, f"{path} labels")
    return np.frombuffer(raw, dtype=np.uint8)


def load_idx(images_path, labels_path, num_classes=None):
    """Images scaled to [0, 1], one flattened row per image."""
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise CountMismatch(f"{images.shape[0]} images but {labels.shape[0]} labels")
    return make_dataset(images / 255.0, labels.astype(np.int64), num_classes)


def write_idx(images_path, labels_path, images, labels):
    """Write uint8 images (count, rows, cols) and labels in IDX format."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    with open(images_path, "wb") as f:
        f.write(struct.pack(">4I", IDX_IMAGES_MAGIC, *images.shape))
        f.write(images.tobytes())
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">2I", IDX_LABELS_MAGIC, labels.shape[0]))
        f.write(labels.tobytes())


def load_csv(path, skip_header=False, num_classes=None):
    """Rows of ``label, x1, ..., xd``."""
    labels, rows = [], []
    width = None
    with open(path, newline="") as f:
        for lineno, row in enumerate(csv.reader(f), start=1):
            if skip_header and lineno == 1:
                continue
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < 2:
                raise ParseError("need a label and at least one feature", lineno)
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ParseError(f"{len(row)} fields, expected {width}", lineno)
            try:
                label = float(row[0])
                values = [float(cell) for cell in row[1:]]
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            if label != int(label) or label < 0:
                raise ParseError(f"label {row[0]!r} is not a non-negative integer", lineno)
            if not np.all(np.isfinite(values)):
                raise ParseError("non-finite feature value", lineno)
            labels.append(int(label))
            rows.append(values)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return make_dataset(rows, labels, num_classes)


def write_csv(path, ds):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        for label, row in zip(ds.labels, ds.features):
            writer.writerow([int(label)] + [repr(float(v)) for v in row])


def warped_blobs(n, num_classes=3, seed=0, radius=3.0, spread=0.8, twist=1.0):
    """Gaussian blobs on a circle, swirled by a radius-dependent rotation.

    The swirl bends each blob into a banana shape, so the classes are
    separable but not by the straight boundaries a linear model draws.
    """
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % num_classes
    rng.shuffle(labels)
    angles = 2 * np.pi * np.arange(num_classes) / num_classes
    centers = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    pts = centers[labels] + spread * rng.normal(size=(n, 2))
    r = np.hypot(pts[:, 0], pts[:, 1])
    phi = np.arctan2(pts[:, 1], pts[:, 0]) + twist * r
    warped = np.stack([r * np.cos(phi), r * np.sin(phi)], axis=1)
    return make_dataset(warped, labels, num_classes)


def blob_splits(n_train=1500, n_test=500, num_classes=3, seed=0):
    """The bundled synthetic train/test pair (independent draws)."""
    train = warped_blobs(n_train, num_classes, seed=seed)
    test = warped_blobs(n_test, num_classes, seed=seed + 1)
    return train, test
