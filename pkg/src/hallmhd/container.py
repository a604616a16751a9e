"""Flat binary snapshot format for physical-space samples.

Layout (little-endian)::

    b"HMHD" | version u32 | n_per_axis u32 | box_length f64 | n_components u32
    followed by n_components * N^3 f64 samples, component-major, then (x, y, z)
    row-major within each component.

A JSON sidecar next to ``<name>.bin`` (``<name>.json``) carries the grid metadata.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import IntegrityError, StorageError
from .field import GridSpec, ScalarField, VectorField, _Field, _to_spec, to_physical

MAGIC = b"HMHD"
VERSION = 1
_HEADER = struct.Struct("<4sIIdI")


def encode(samples: np.ndarray, grid: GridSpec) -> bytes:
    """Serialize real samples of shape (C, N, N, N) or (N, N, N)."""
    x = np.asarray(samples, dtype="<f8")
    if x.shape == grid.shape:
        x = x[None]
    if x.ndim != 4 or x.shape[1:] != grid.shape:
        raise IntegrityError(f"samples shape {x.shape} does not match grid {grid.shape}")
    header = _HEADER.pack(MAGIC, VERSION, grid.n_per_axis, grid.box_length, x.shape[0])
    return header + np.ascontiguousarray(x).tobytes()


def decode(blob: bytes, dealias_fraction: float = 2.0 / 3.0) -> tuple[np.ndarray, GridSpec]:
    if len(blob) < _HEADER.size:
        raise IntegrityError("truncated field container header")
    magic, version, n, length, ncomp = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise IntegrityError(f"bad magic {magic!r}")
    if version != VERSION:
        raise IntegrityError(f"unsupported container version {version}")
    grid = GridSpec(n, length, dealias_fraction)
    expected = _HEADER.size + 8 * ncomp * n**3
    if len(blob) != expected:
        raise IntegrityError(f"container size {len(blob)} != expected {expected}")
    data = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size).reshape((ncomp,) + grid.shape)
    return data.astype(float), grid


def sidecar(grid: GridSpec, n_components: int, **extra) -> dict:
    meta = {
        "format": "HMHD",
        "version": VERSION,
        "n_components": n_components,
        "byte_order": "little",
        "dtype": "f64",
        "order": "component, x, y, z (row-major)",
        **grid.to_dict(),
    }
    meta.update(extra)
    return meta


def save_field(path, field: _Field, **extra) -> Path:
    """Write ``field`` to ``path`` (.bin) plus a JSON sidecar; returns the .bin path."""
    samples = to_physical(field)
    return save_samples(path, samples.reshape((-1,) + field.grid.shape), field.grid, **extra)


def save_samples(path, samples: np.ndarray, grid: GridSpec, **extra) -> Path:
    path = Path(path).with_suffix(".bin")
    blob = encode(samples, grid)
    ncomp = 1 if np.ndim(samples) == 3 else np.shape(samples)[0]
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(blob)
        meta = sidecar(grid, ncomp, **extra)
        path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise StorageError(f"cannot write {path}: {exc}") from exc
    return path


def load_samples(path) -> tuple[np.ndarray, GridSpec]:
    path = Path(path).with_suffix(".bin")
    try:
        blob = path.read_bytes()
        side = path.with_suffix(".json")
        meta = json.loads(side.read_text()) if side.exists() else {}
    except OSError as exc:
        raise StorageError(f"cannot read {path}: {exc}") from exc
    return decode(blob, meta.get("dealias_fraction", 2.0 / 3.0))


def load_field(path) -> _Field:
    data, grid = load_samples(path)
    if data.shape[0] == 1:
        return ScalarField._wrap(grid, _to_spec(data[0], grid))
    if data.shape[0] == 3:
        return VectorField._wrap(grid, _to_spec(data, grid))
    raise IntegrityError(f"unsupported component count {data.shape[0]}")
