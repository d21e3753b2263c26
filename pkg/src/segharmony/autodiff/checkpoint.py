"""Checkpoint archive: one little-endian float64 array per parameter plus a JSON manifest."""
from __future__ import annotations

import hashlib
import io
import json
import zipfile

import numpy as np

MANIFEST = "manifest.json"


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def save_checkpoint(path, params: dict, manifest: dict):
    """Write ``params`` (name -> array) and ``manifest`` to a zip archive.

    Entries are stored uncompressed with a fixed timestamp so identical
    inputs give byte-identical files.
    """
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        for name in sorted(params):
            arr = np.ascontiguousarray(params[name], dtype="<f8")
            buf = io.BytesIO()
            np.save(buf, arr, allow_pickle=False)
            zf.writestr(zipfile.ZipInfo(f"params/{name}.npy", date_time=(1980, 1, 1, 0, 0, 0)),
                        buf.getvalue())
        body = dict(manifest)
        body["parameters"] = {n: list(np.shape(params[n])) for n in sorted(params)}
        zf.writestr(zipfile.ZipInfo(MANIFEST, date_time=(1980, 1, 1, 0, 0, 0)),
                    json.dumps(body, sort_keys=True, indent=1))


def load_checkpoint(path):
    params = {}
    with zipfile.ZipFile(path) as zf:
        manifest = json.loads(zf.read(MANIFEST))
        for info in zf.infolist():
            if info.filename.startswith("params/"):
                name = info.filename[len("params/"):-len(".npy")]
                params[name] = np.load(io.BytesIO(zf.read(info)), allow_pickle=False)
    return params, manifest
