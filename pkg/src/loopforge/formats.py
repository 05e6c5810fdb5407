"""File formats: curve JSON, the VFG1 binary field format and deterministic
JSON reports."""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .fields import FieldGrid
from .geometry import Curve, build_curve

__all__ = [
    "FormatError",
    "curve_from_json",
    "read_curve",
    "write_curve",
    "vfg_bytes",
    "vfg_from_bytes",
    "read_vfg",
    "write_vfg",
    "canonical_json",
    "config_hash",
    "write_json",
]

MAGIC = b"VFG1"


class FormatError(ValueError):
    pass


def curve_from_json(obj: dict) -> Curve:
    try:
        dim = int(obj["dim"])
        nodes = np.asarray(obj["nodes"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"bad curve JSON: {e}") from None
    if nodes.ndim != 2 or nodes.shape[1] != dim:
        raise FormatError(f"nodes must be a list of {dim}-vectors")
    return build_curve(nodes, bool(obj.get("closed", True)), [int(i) for i in obj.get("corners", [])])


def read_curve(path) -> Curve:
    with open(path) as fh:
        return curve_from_json(json.load(fh))


def write_curve(curve: Curve, path) -> None:
    # json writes floats with repr, the shortest string that parses back to the same double
    Path(path).write_text(json.dumps(curve.to_json_dict()) + "\n")


def vfg_bytes(grid: FieldGrid) -> bytes:
    d = grid.dim
    head = MAGIC + struct.pack(f"<I{d}I", d, *grid.shape)
    head += struct.pack(f"<d{d}d", grid.spacing, *grid.origin)
    return head + np.ascontiguousarray(grid.data, dtype="<f8").tobytes()


def vfg_from_bytes(buf: bytes) -> FieldGrid:
    if buf[:4] != MAGIC:
        raise FormatError("not a VFG1 file")
    off = 4
    (d,) = struct.unpack_from("<I", buf, off)
    off += 4
    if d not in (2, 3):
        raise FormatError(f"unsupported dimension {d}")
    shape = struct.unpack_from(f"<{d}I", buf, off)
    off += 4 * d
    spacing, *origin = struct.unpack_from(f"<d{d}d", buf, off)
    off += 8 * (d + 1)
    n = len(buf) - off
    cells = int(np.prod(shape))
    if cells == 0 or n % (8 * cells):
        raise FormatError("payload size does not match the header")
    ncomp = n // (8 * cells)
    data = np.frombuffer(buf, dtype="<f8", offset=off).reshape(tuple(shape) + (ncomp,))
    return FieldGrid(data.astype(np.float64), spacing, np.array(origin))


def write_vfg(grid: FieldGrid, path) -> None:
    Path(path).write_bytes(vfg_bytes(grid))


def read_vfg(path) -> FieldGrid:
    return vfg_from_bytes(Path(path).read_bytes())


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj


def canonical_json(obj) -> str:
    """Sorted keys, fixed separators, non-finite floats as strings."""
    return json.dumps(_plain(obj), sort_keys=True, indent=1, separators=(",", ": "), allow_nan=False) + "\n"


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


def write_json(obj, path) -> None:
    Path(path).write_text(canonical_json(obj))
