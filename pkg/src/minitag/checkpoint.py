"""Named-tensor container: a JSON manifest plus a raw little-endian blob.

Used for model checkpoints, optimizer state, and teacher logit shards.
Round-trips are byte-exact: saving a loaded container reproduces the same
bytes. The manifest carries arbitrary metadata (configs, label lists) next
to the tensor index, and a sha256 of the blob that is verified on load.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

from .errors import DataError

FORMAT = "minitag-tensors-v1"

_DTYPES = {"<f8": np.dtype("<f8"), "<f4": np.dtype("<f4"), "<i8": np.dtype("<i8")}


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_container(directory: str, name: str, arrays: dict[str, np.ndarray],
                    meta: dict | None = None, dtype: str | None = None) -> str:
    """Write ``<name>.json`` + ``<name>.bin`` under ``directory``.

    ``dtype`` forces storage precision for float tensors ("<f8" default,
    "<f4" allowed for compact checkpoints); integer tensors always store
    as "<i8".
    """
    os.makedirs(directory, exist_ok=True)
    blob_path = os.path.join(directory, f"{name}.bin")
    manifest_path = os.path.join(directory, f"{name}.json")

    index = []
    offset = 0
    with open(blob_path, "wb") as blob:
        for tname, arr in arrays.items():
            arr = np.asarray(arr)
            if np.issubdtype(arr.dtype, np.integer):
                stored = arr.astype("<i8")
            else:
                stored = arr.astype(dtype or "<f8")
            raw = stored.tobytes(order="C")
            blob.write(raw)
            index.append({
                "name": tname,
                "dtype": stored.dtype.str,
                "shape": list(arr.shape),
                "offset": offset,
                "nbytes": len(raw),
            })
            offset += len(raw)

    manifest = {
        "format": FORMAT,
        "meta": meta or {},
        "tensors": index,
        "blob_sha256": sha256_file(blob_path),
    }
    with open(manifest_path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=1, sort_keys=True)
        f.write("\n")
    return manifest_path


def read_container(directory: str, name: str,
                   verify: bool = True) -> tuple[dict[str, np.ndarray], dict]:
    """Load arrays and metadata written by :func:`write_container`."""
    manifest_path = os.path.join(directory, f"{name}.json")
    blob_path = os.path.join(directory, f"{name}.bin")
    try:
        with open(manifest_path, encoding="utf-8") as f:
            manifest = json.load(f)
    except FileNotFoundError:
        raise DataError(f"no container manifest at {manifest_path}")
    if manifest.get("format") != FORMAT:
        raise DataError(f"unsupported container format in {manifest_path}")
    if verify and manifest["blob_sha256"] != sha256_file(blob_path):
        raise DataError(f"checksum mismatch for {blob_path}")

    with open(blob_path, "rb") as f:
        blob = f.read()
    arrays: dict[str, np.ndarray] = {}
    for entry in manifest["tensors"]:
        dt = _DTYPES.get(entry["dtype"])
        if dt is None:
            raise DataError(f"unsupported tensor dtype {entry['dtype']}")
        raw = blob[entry["offset"]:entry["offset"] + entry["nbytes"]]
        arr = np.frombuffer(raw, dtype=dt).reshape(entry["shape"]).copy()
        arrays[entry["name"]] = arr
    return arrays, manifest["meta"]


def container_exists(directory: str, name: str) -> bool:
    return os.path.exists(os.path.join(directory, f"{name}.json"))
