"""CONEW001 snapshot format.

Layout: 8-byte magic, then eight little-endian 64-bit header values
(n, frame code, points_per_axis as int64; half_extent, rho, nu, time tag as
float64; component count as int64), then the samples as little-endian float64,
row-major and component-major.
"""
import logging
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np

from src.fields.grid import Frame, GridSpec, ScalarField, VectorField

MAGIC = b"CONEW001"
HEADER_DTYPE = np.dtype([
    ("n", "<i8"), ("frame", "<i8"), ("points_per_axis", "<i8"),
    ("half_extent", "<f8"), ("rho", "<f8"), ("nu", "<f8"), ("time_tag", "<f8"),
    ("components", "<i8"),
])


def write_snapshot(path: Union[str, Path], field: Union[ScalarField, VectorField],
                   rho: float, nu: float) -> Path:
    """Write a field to disk in the CONEW001 format."""
    path = Path(path)
    components = field.components if isinstance(field, VectorField) else 1
    header = np.array([(field.spec.n, field.frame.code, field.spec.points_per_axis,
                        field.spec.half_extent, rho, nu, field.time_tag, components)],
                      dtype=HEADER_DTYPE)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as handle:
            handle.write(MAGIC)
            handle.write(header.tobytes())
            handle.write(np.ascontiguousarray(field.samples, dtype="<f8").tobytes())
        logging.debug(f"Snapshot written: {path}")
        return path
    except OSError as e:
        logging.error(f"Failed to write snapshot {path}: {e}")
        raise


def read_snapshot(path: Union[str, Path]) -> Tuple[VectorField, Dict]:
    """Read a CONEW001 snapshot; scalar snapshots come back with one component."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        logging.error(f"Failed to read snapshot {path}: {e}")
        raise
    if raw[:len(MAGIC)] != MAGIC:
        raise ValueError(f"{path} is not a CONEW001 snapshot")
    offset = len(MAGIC)
    if len(raw) < offset + HEADER_DTYPE.itemsize:
        raise ValueError(f"{path} is truncated inside the CONEW001 header")
    header = np.frombuffer(raw, dtype=HEADER_DTYPE, count=1, offset=offset)[0]
    offset += HEADER_DTYPE.itemsize
    spec = GridSpec(int(header["n"]), int(header["points_per_axis"]), float(header["half_extent"]))
    components = int(header["components"])
    if components < 1:
        raise ValueError(f"{path} declares {components} components")
    shape = (components,) + spec.shape
    expected = int(np.prod(shape)) * 8
    if len(raw) - offset != expected:
        raise ValueError(f"{path} holds {len(raw) - offset} payload bytes; the header "
                         f"declares {components} x {spec.shape} float64 samples ({expected} bytes)")
    samples = np.frombuffer(raw, dtype="<f8", offset=offset).reshape(shape)
    meta = {"rho": float(header["rho"]), "nu": float(header["nu"])}
    field = VectorField(spec, samples.astype(float), Frame.from_code(int(header["frame"])),
                        float(header["time_tag"]), dict(meta))
    return field, meta
