"""Versioned checkpoint container.

Layout: the 6 byte magic ``DLDA1\\n`` followed by an uncompressed ``.npz``
archive. The archive holds a JSON header (layer specs, metadata, section
list) and float64 arrays named ``<section>/<key>``. Sections: ``model``
(always), ``projection`` (DeepLDA models) and ``standardize`` (when inputs
were standardized).
"""
import io
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .classifier import LdaProjection
from .data import Standardizer
from .errors import BadMagic, DataError
from .network import LayerSpec, NetworkModel

MAGIC = b"DLDA1\n"


@dataclass
class Checkpoint:
    model: NetworkModel
    projection: LdaProjection = None
    standardizer: Standardizer = None
    meta: dict = field(default_factory=dict)


def save_checkpoint(path, ckpt):
    arrays = {}
    for i, p in enumerate(ckpt.model.params):
        for name, value in p.items():
            arrays[f"model/{i}/{name}"] = np.asarray(value, dtype=np.float64)
    sections = ["model"]
    if ckpt.projection is not None:
        sections.append("projection")
        proj = ckpt.projection
        for name in ("a_matrix", "class_latent_means", "hyperplanes", "bias", "eigenvalues"):
            arrays[f"projection/{name}"] = getattr(proj, name)
    if ckpt.standardizer is not None:
        sections.append("standardize")
        arrays["standardize/mean"] = ckpt.standardizer.mean
        arrays["standardize/std"] = ckpt.standardizer.std
    header = {
        "format": "DLDA1",
        "layers": [spec.to_text() for spec in ckpt.model.layers],
        "sections": sections,
        "projection_lambda": None if ckpt.projection is None else ckpt.projection.lam,
        "meta": ckpt.meta,
    }
    arrays["header"] = np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8)
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as f:
        f.write(MAGIC)
        f.write(buf.getvalue())
    os.replace(tmp, path)


def load_checkpoint(path):
    with open(path, "rb") as f:
        magic = f.read(len(MAGIC))
        if magic != MAGIC:
            raise BadMagic(f"{path} is not a DLDA1 checkpoint")
        payload = f.read()
    try:
        npz = np.load(io.BytesIO(payload), allow_pickle=False)
        arrays = {k: npz[k] for k in npz.files}
        header = json.loads(arrays.pop("header").tobytes().decode())
    except (ValueError, KeyError, OSError) as exc:
        raise DataError(f"{path}: corrupt checkpoint ({exc})") from None

    layers = [LayerSpec.from_text(t) for t in header["layers"]]
    params = [{} for _ in layers]
    for key, value in arrays.items():
        section, *rest = key.split("/")
        if section == "model":
            params[int(rest[0])][rest[1]] = value
    model = NetworkModel(layers, params, mode="inference")

    projection = None
    if "projection" in header["sections"]:
        projection = LdaProjection(
            a_matrix=arrays["projection/a_matrix"],
            class_latent_means=arrays["projection/class_latent_means"],
            hyperplanes=arrays["projection/hyperplanes"],
            bias=arrays["projection/bias"],
            eigenvalues=arrays["projection/eigenvalues"],
            lam=header["projection_lambda"],
        )
    standardizer = None
    if "standardize" in header["sections"]:
        standardizer = Standardizer(arrays["standardize/mean"], arrays["standardize/std"])
    return Checkpoint(model, projection, standardizer, header.get("meta", {}))
