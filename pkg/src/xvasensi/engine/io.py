"""Parameter config loading and the PathSet binary format.

Binary layout: 16-byte magic, little-endian uint64 header length, a JSON
header (grid, layout, array shapes and dtypes, parameter vector) and the
arrays Y, X, gamma, tau stored back to back in C order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
import yaml

from .params import ModelParams
from .simulate import PathSet, SimGrid

PATHS_MAGIC = b"XVASENSI-PATHS01"
_ARRAYS = ("Y", "X", "gamma", "tau")


def load_params(path) -> ModelParams:
    """Read a flat YAML mapping of ``name[i]: value`` keys."""
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a mapping of parameter keys")
    return ModelParams.from_mapping(data.get("params", data))


def dump_pathset(ps: PathSet, path) -> None:
    header = {
        "E": ps.E, "C": ps.C, "start": ps.start, "stop": ps.stop, "mode": ps.mode,
        "grid": {"n": ps.grid.n, "h": ps.grid.h, "substeps": ps.grid.substeps},
        "params": ps.params.to_vector().tolist(),
        "arrays": {k: {"shape": list(getattr(ps, k).shape), "dtype": getattr(ps, k).dtype.str}
                   for k in _ARRAYS},
    }
    blob = json.dumps(header).encode()
    with open(path, "wb") as fh:
        fh.write(PATHS_MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for k in _ARRAYS:
            arr = getattr(ps, k)
            fh.write(np.ascontiguousarray(arr, dtype=arr.dtype.newbyteorder("<")).tobytes())


def load_pathset(path) -> PathSet:
    raw = Path(path).read_bytes()
    if raw[:16] != PATHS_MAGIC:
        raise ValueError(f"{path}: not a PathSet file")
    (hlen,) = struct.unpack("<Q", raw[16:24])
    header = json.loads(raw[24 : 24 + hlen])
    pos = 24 + hlen
    arrays = {}
    for k in _ARRAYS:
        spec = header["arrays"][k]
        dt = np.dtype(spec["dtype"])
        count = int(np.prod(spec["shape"]))
        arrays[k] = np.frombuffer(raw, dtype=dt, count=count, offset=pos).reshape(spec["shape"]).copy()
        pos += count * dt.itemsize
    params = ModelParams.from_vector(header["params"], header["E"], header["C"])
    return PathSet(params=params, grid=SimGrid(**header["grid"]), start=header["start"],
                   mode=header["mode"], stop=header.get("stop"), **arrays)
