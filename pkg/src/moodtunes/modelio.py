"""Model file format.

Layout, all little-endian:

    bytes 0-3   magic "MRSM"
    byte  4     format version (1)
    bytes 5-8   uint32 length of the JSON metadata block
    ...         UTF-8 JSON: {"spec": {...}, "tensors": [{"name", "shape"}, ...]}
    ...         raw float32 tensor data, concatenated in manifest order

Weights are stored as float32 regardless of in-memory dtype, so a round
trip is forward-equivalent within 1e-6 rather than bit-identical.
"""

import json
import struct

import numpy as np

from .models import Model, ModelSpec

MAGIC = b"MRSM"
VERSION = 1


class ModelFormatError(ValueError):
    """File is not a model file (magic/version/metadata malformed)."""


class ModelTruncationError(ValueError):
    """File ends before the manifest says the tensor data does."""


class ModelShapeError(ValueError):
    """Manifest tensor shapes do not match the declared architecture."""


def _spec_to_json(spec):
    return {
        "name": spec.name,
        "n_conv": spec.n_conv,
        "n_pool": spec.n_pool,
        "head": spec.head,
        "n_classes": spec.n_classes,
        "loss": spec.loss,
        "input_size": spec.input_size,
    }


def _spec_from_json(doc):
    try:
        return ModelSpec(
            name=doc["name"],
            n_conv=doc["n_conv"],
            n_pool=doc["n_pool"],
            head=doc["head"],
            n_classes=doc["n_classes"],
            loss=doc["loss"],
            input_size=doc["input_size"],
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFormatError(f"metadata spec block is malformed: {e}") from None


def _model_tensors(model):
    """(name, array) pairs in a stable, manifest-defining order."""
    out = []
    for i, layer in enumerate(model.layers):
        for name, arr in sorted(layer.state_tensors().items()):
            out.append((f"{i}.{name}", arr))
    return out


def save_model(model, path):
    tensors = _model_tensors(model)
    manifest = [{"name": n, "shape": list(a.shape)} for n, a in tensors]
    meta = json.dumps({"spec": _spec_to_json(model.spec), "tensors": manifest}).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(bytes([VERSION]))
        f.write(struct.pack("<I", len(meta)))
        f.write(meta)
        for _, arr in tensors:
            f.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def _assign_tensor(model, name, values):
    try:
        idx_text, tensor_name = name.split(".", 1)
        layer = model.layers[int(idx_text)]
    except (ValueError, IndexError):
        raise ModelShapeError(f"manifest names unknown tensor {name!r}") from None
    if tensor_name in layer.params:
        target = layer.params[tensor_name]
        if target.shape != values.shape:
            raise ModelShapeError(
                f"tensor {name!r}: file shape {values.shape} != architecture shape {target.shape}"
            )
        layer.params[tensor_name] = values.astype(target.dtype)
    elif tensor_name in ("running_mean", "running_var"):
        target = getattr(layer, tensor_name, None)
        if target is None or target.shape != values.shape:
            raise ModelShapeError(f"tensor {name!r} does not fit this architecture")
        setattr(layer, tensor_name, values.astype(np.float64))
    else:
        raise ModelShapeError(f"manifest names unknown tensor {name!r}")


def load_model(path, dtype=np.float32):
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != MAGIC:
        raise ModelFormatError(f"bad magic {blob[:4]!r}, expected {MAGIC!r}")
    if len(blob) < 9:
        raise ModelFormatError("file too short for header")
    if blob[4] != VERSION:
        raise ModelFormatError(f"unsupported format version {blob[4]}")
    (meta_len,) = struct.unpack("<I", blob[5:9])
    meta_end = 9 + meta_len
    if len(blob) < meta_end:
        raise ModelTruncationError("metadata block truncated")
    try:
        doc = json.loads(blob[9:meta_end].decode("utf-8"))
        manifest = doc["tensors"]
        spec_doc = doc["spec"]
    except (ValueError, KeyError) as e:
        raise ModelFormatError(f"metadata is not the expected JSON: {e}") from None

    spec = _spec_from_json(spec_doc)
    model = Model(spec, rng_seed=0, dtype=dtype)

    offset = meta_end
    for entry in manifest:
        try:
            name, shape = entry["name"], tuple(entry["shape"])
        except (KeyError, TypeError):
            raise ModelFormatError(f"manifest entry malformed: {entry!r}") from None
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        nbytes = count * 4
        if offset + nbytes > len(blob):
            raise ModelTruncationError(
                f"tensor {name!r} needs {nbytes} bytes at offset {offset}, file has {len(blob)}"
            )
        values = np.frombuffer(blob, dtype="<f4", count=count, offset=offset).reshape(shape)
        _assign_tensor(model, name, values.copy())
        offset += nbytes

    expected = {n for n, _ in _model_tensors(model)}
    named = {e["name"] for e in manifest}
    if expected - named:
        raise ModelShapeError(f"file is missing tensors: {sorted(expected - named)[:3]}")
    return model
