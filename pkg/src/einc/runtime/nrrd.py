"""Reader and writer for a small, uncompressed subset of NRRD.

Supported: magic ``NRRD0001``..``NRRD0005``, ``type`` float or double,
``encoding: raw``, little endian, ``dimension`` up to 3 spatial axes plus
an optional leading component axis, ``sizes``, ``spacings``,
``space origin``, ``space directions`` and detached ``data file``.
"""

from __future__ import annotations

import os
import re

import numpy as np

from ..errors import MalformedHeader, SizeMismatch, UnsupportedFeature
from .image import Image

_TYPES = {
    "float": "<f4", "float32": "<f4",
    "double": "<f8", "float64": "<f8",
}
_IGNORED = {"content", "space", "kinds", "centers", "centerings", "labels", "units", "space units",
            "measurement frame", "space dimension", "thicknesses", "axis mins", "axis maxs",
            "old min", "old max", "sample units", "byte skip", "line skip", "min", "max"}


def _vector(text: str) -> list:
    return [float(x) for x in re.findall(r"[-+0-9.eE]+|nan", text)]


def _parse_directions(text: str) -> list:
    out = []
    for tok in re.findall(r"\([^)]*\)|none", text):
        out.append(None if tok == "none" else _vector(tok))
    return out


def parse_header(text: str) -> dict:
    lines = text.split("\n")
    if not re.fullmatch(r"NRRD000[1-5]", lines[0].strip()):
        raise MalformedHeader(f"bad magic line {lines[0].strip()!r}")
    fields = {}
    for ln in lines[1:]:
        ln = ln.rstrip("\r")
        if not ln or ln.startswith("#"):
            continue
        if ":=" in ln:  # key/value pairs carry no geometry
            continue
        if ":" not in ln:
            raise MalformedHeader(f"header line without a field: {ln!r}")
        key, val = ln.split(":", 1)
        fields[key.strip().lower()] = val.strip()
    return fields


def load_nrrd(path) -> Image:
    with open(path, "rb") as fh:
        raw = fh.read()
    sep = raw.find(b"\n\n")
    if sep < 0:
        head, body = raw.decode("latin-1"), b""
    else:
        head, body = raw[:sep].decode("latin-1"), raw[sep + 2:]
    f = parse_header(head)

    for key in f:
        if key not in _IGNORED and key not in (
                "type", "dimension", "sizes", "encoding", "endian", "space origin", "space directions",
                "spacings", "data file", "datafile"):
            raise UnsupportedFeature(f"unsupported NRRD field {key!r}")
    for key in ("type", "dimension", "sizes", "encoding"):
        if key not in f:
            raise MalformedHeader(f"missing required field {key!r}")
    if f["encoding"] != "raw":
        raise UnsupportedFeature(f"encoding: {f['encoding']}")
    dtype = _TYPES.get(f["type"])
    if dtype is None:
        raise UnsupportedFeature(f"type: {f['type']}")
    if f.get("endian", "little") != "little" and np.dtype(dtype).itemsize > 1:
        raise UnsupportedFeature(f"endian: {f['endian']}")
    try:
        ndim = int(f["dimension"])
        sizes = [int(x) for x in f["sizes"].split()]
    except ValueError:
        raise MalformedHeader("non-integer dimension or sizes") from None
    if len(sizes) != ndim:
        raise MalformedHeader(f"dimension {ndim} but {len(sizes)} sizes")

    dirs = _parse_directions(f["space directions"]) if "space directions" in f else None
    if dirs is not None and len(dirs) != ndim:
        raise MalformedHeader("space directions count differs from dimension")
    # a leading axis without a direction holds tensor components
    ncomp_axes = 0
    if dirs is not None:
        ncomp_axes = 1 if dirs[0] is None else 0
    elif ndim == 4:
        ncomp_axes = 1
    sdim = ndim - ncomp_axes
    if not 1 <= sdim <= 3:
        raise UnsupportedFeature(f"{sdim} spatial axes")
    comp = sizes[:ncomp_axes]
    spatial = sizes[ncomp_axes:]

    data_file = f.get("data file", f.get("datafile"))
    if data_file is not None:
        dpath = os.path.join(os.path.dirname(os.path.abspath(path)), data_file)
        with open(dpath, "rb") as fh:
            body = fh.read()
    n = int(np.prod(sizes))
    itemsize = np.dtype(dtype).itemsize
    if len(body) != n * itemsize:
        raise SizeMismatch(f"expected {n * itemsize} data bytes, found {len(body)}")
    flat = np.frombuffer(body, dtype=dtype).astype(float)
    arr = flat.reshape(tuple(reversed(spatial)) + tuple(comp))
    arr = arr.transpose(tuple(reversed(range(sdim))) + tuple(range(sdim, arr.ndim)))

    if dirs is not None:
        D = np.array([d for d in dirs if d is not None], dtype=float).T
        if D.shape != (sdim, sdim):
            raise MalformedHeader("space directions must be square over the spatial axes")
    elif "spacings" in f:
        sp = [x for x in _vector(f["spacings"])][ncomp_axes:]
        D = np.diag(sp)
    else:
        D = np.eye(sdim)
    origin = _vector(f["space origin"]) if "space origin" in f else [0.0] * sdim
    if len(origin) != sdim:
        raise MalformedHeader("space origin length differs from spatial dimension")
    return Image.from_index_to_world(arr, sdim, D, origin)


def write_nrrd(path, data, dim: int | None = None, directions=None, origin=None) -> None:
    """Write raw little-endian doubles.  ``data`` is shaped ``(*sizes, *shape)``."""
    data = np.asarray(data, dtype=float)
    dim = data.ndim if dim is None else dim
    shape = data.shape[dim:]
    ncomp = int(np.prod(shape, dtype=int))
    spatial = list(data.shape[:dim])
    axes = tuple(reversed(range(dim))) + tuple(range(dim, data.ndim))
    flat = np.ascontiguousarray(data.transpose(axes)).reshape(-1).astype("<f8")
    sizes = ([ncomp] if shape else []) + spatial
    lines = ["NRRD0004", "type: double", f"dimension: {len(sizes)}",
             "sizes: " + " ".join(map(str, sizes)), "encoding: raw", "endian: little"]
    if directions is not None or origin is not None:
        D = np.eye(dim) if directions is None else np.asarray(directions, dtype=float).reshape(dim, dim)
        o = np.zeros(dim) if origin is None else np.asarray(origin, dtype=float)
        cols = ["(" + ",".join(repr(float(v)) for v in D[:, k]) + ")" for k in range(dim)]
        lines.append(f"space dimension: {dim}")
        lines.append("space directions: " + ("none " if shape else "") + " ".join(cols))
        lines.append("space origin: (" + ",".join(repr(float(v)) for v in o) + ")")
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n\n").encode("ascii"))
        fh.write(flat.tobytes())
