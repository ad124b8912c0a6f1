"""
GRBM1 model files.

Layout: the ASCII line ``GRBM1``, the ASCII line ``I J K F``, then the
little-endian float64 arrays Wxf, Wyf, Whf, ybias, hbias in row-major order.
Writing and reading round-trip bit-exactly.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import ModelFormatError
from ..logging import logger
from .factored import FactoredGRBM

MAGIC = b"GRBM1"
_DTYPE = np.dtype("<f8")


def model_to_bytes(model: FactoredGRBM) -> bytes:
    header = f"{model.n_input} {model.n_output} {model.n_hidden} {model.n_factors}"
    chunks = [MAGIC + b"\n", header.encode("ascii") + b"\n"]
    for block in model.params().values():
        chunks.append(np.ascontiguousarray(block, dtype=_DTYPE).tobytes())
    return b"".join(chunks)


def model_from_bytes(data: bytes, path: str | None = None) -> FactoredGRBM:
    magic_end = data.find(b"\n")
    if magic_end < 0 or data[:magic_end] != MAGIC:
        raise ModelFormatError("magic", "expected GRBM1", path)

    header_end = data.find(b"\n", magic_end + 1)
    if header_end < 0:
        raise ModelFormatError("header", "missing 'I J K F' line", path)
    try:
        dims = data[magic_end + 1 : header_end].split()
        n_in, n_out, n_hidden, n_factors = (int(t) for t in dims)
    except ValueError:
        raise ModelFormatError("header", "expected four integers 'I J K F'", path) from None
    if min(n_in, n_out, n_hidden, n_factors) <= 0:
        raise ModelFormatError("header", "dimensions must be positive", path)

    shapes = {
        "Wxf": (n_in, n_factors),
        "Wyf": (n_out, n_factors),
        "Whf": (n_hidden, n_factors),
        "ybias": (n_out,),
        "hbias": (n_hidden,),
    }
    body = data[header_end + 1 :]
    expected = sum(int(np.prod(shape)) for shape in shapes.values()) * _DTYPE.itemsize
    if len(body) != expected:
        raise ModelFormatError("body", f"expected {expected} bytes, found {len(body)}", path)

    blocks = {}
    offset = 0
    for name, shape in shapes.items():
        count = int(np.prod(shape))
        blocks[name] = np.frombuffer(body, dtype=_DTYPE, count=count, offset=offset).reshape(shape)
        offset += count * _DTYPE.itemsize

    try:
        return FactoredGRBM(**blocks)
    except ValueError as e:
        raise ModelFormatError("body", str(e), path) from e


def save_model(model: FactoredGRBM, path: str | Path) -> None:
    """Write ``model`` as a GRBM1 file."""
    with open(path, "wb") as f:
        f.write(model_to_bytes(model))
    logger.debug(f"Saved GRBM1 model {model.n_input}x{model.n_hidden}x{model.n_factors} to {path}")


def load_model(path: str | Path) -> FactoredGRBM:
    """Read a GRBM1 file.

    Raises:
        ModelFormatError: If the magic, header or body size is wrong.
    """
    with open(path, "rb") as f:
        data = f.read()
    return model_from_bytes(data, str(path))
