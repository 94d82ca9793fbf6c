"""JSON encoding of operators and states.

An operator is ``{"dims": [rows, cols], "entries": [[re, im], ...]}`` with
entries in row-major order.  Python's float repr is the shortest string that
round-trips, so encoding is lossless.
"""

from __future__ import annotations

import numpy as np

from . import matcore
from .errors import ConfigError


def encode_operator(m) -> dict:
    m = matcore.as_cmatrix(m)
    return {
        "dims": [int(m.shape[0]), int(m.shape[1])],
        "entries": [[float(z.real), float(z.imag)] for z in m.ravel()],
    }


def decode_operator(obj, path: str = "$") -> np.ndarray:
    if not isinstance(obj, dict):
        raise ConfigError("operator must be an object with 'dims' and 'entries'", path)
    dims = obj.get("dims")
    entries = obj.get("entries")
    if (
        not isinstance(dims, list)
        or len(dims) != 2
        or not all(isinstance(d, int) and not isinstance(d, bool) and d >= 1 for d in dims)
    ):
        raise ConfigError("'dims' must be [rows, cols] with positive integers", f"{path}.dims")
    if not isinstance(entries, list):
        raise ConfigError("'entries' must be a list of [re, im] pairs", f"{path}.entries")
    rows, cols = dims
    if len(entries) != rows * cols:
        raise ConfigError(f"expected {rows * cols} entries, got {len(entries)}", f"{path}.entries")
    out = np.empty(rows * cols, dtype=complex)
    for n, e in enumerate(entries):
        if (
            not isinstance(e, list)
            or len(e) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in e)
        ):
            raise ConfigError("entry must be a [re, im] pair of numbers", f"{path}.entries[{n}]")
        out[n] = complex(e[0], e[1])
    return out.reshape(rows, cols)


def encode_complex(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def to_jsonable(obj):
    """Recursively convert numpy arrays / complex numbers for ``json.dump``."""
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            if obj.ndim == 2:
                return encode_operator(obj)
            return [encode_complex(z) for z in obj.ravel()]
        return obj.tolist()
    if isinstance(obj, (complex, np.complexfloating)):
        return encode_complex(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    return obj
