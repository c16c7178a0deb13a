"""Synthetic CT volumes with known geometry.

Shapes are rasterised at pixel centres: a pixel is foreground when its
centre lies inside the shape's cross-section at that slice height.
"""

from __future__ import annotations

import math
import os
from pathlib import Path

import numpy as np

from .dicom import SliceImage, write_dicom, write_pgm
from .errors import InvalidParams

SHAPES = ("cylinder", "box", "torus_stack")


def _grid(size: int):
    c = (size - 1) / 2.0
    rows, cols = np.mgrid[0:size, 0:size]
    return cols - c, rows - c


def make_phantom(
    shape: str = "cylinder",
    *,
    size: int = 512,
    n_slices: int = 8,
    radius: float = 50.0,
    side: float = 100.0,
    major_radius: float = 100.0,
    minor_radius: float = 40.0,
    slice_thickness_mm: float = 1.5,
    hu_foreground: int = 1000,
    hu_background: int = 0,
    bits_stored: int = 12,
) -> list[SliceImage]:
    """Slices of a cylinder (disk), box (square) or torus (annuli) phantom.

    Lengths in the slice plane are in pixels (1 mm pixel spacing). The torus
    axis is the stack axis and its slices are spread evenly across its
    height, so each slice is an annulus of a different width.
    """
    if shape not in SHAPES:
        raise InvalidParams(f"unknown phantom shape {shape!r}; expected one of {SHAPES}")
    if size < 8 or n_slices < 1:
        raise InvalidParams(f"need size >= 8 and n_slices >= 1, got {size} and {n_slices}")
    if not slice_thickness_mm > 0:
        raise InvalidParams("slice thickness must be positive")
    limit = (1 << bits_stored) - 1
    if not (0 <= hu_background <= limit and 0 <= hu_foreground <= limit):
        raise InvalidParams(f"HU values must lie in [0, {limit}] for {bits_stored}-bit output")
    x, y = _grid(size)
    half = size / 2.0

    masks = []
    if shape == "cylinder":
        if not 0 < radius < half:
            raise InvalidParams(f"cylinder radius must be in (0, {half}), got {radius}")
        disk = x * x + y * y <= radius * radius
        masks = [disk] * n_slices
    elif shape == "box":
        if not 0 < side < size:
            raise InvalidParams(f"box side must be in (0, {size}), got {side}")
        h = side / 2.0
        square = (np.abs(x) <= h) & (np.abs(y) <= h)
        masks = [square] * n_slices
    else:
        if not 0 < minor_radius < major_radius or major_radius + minor_radius >= half:
            raise InvalidParams("torus needs 0 < minor_radius < major_radius and it must fit the image")
        r = np.hypot(x, y)
        for k in range(n_slices):
            # evenly spaced heights strictly inside (-minor, +minor)
            z = minor_radius * (2.0 * (k + 1) / (n_slices + 1) - 1.0)
            w = math.sqrt(minor_radius * minor_radius - z * z)
            masks.append((r >= major_radius - w) & (r <= major_radius + w))

    return [
        SliceImage(
            pixels=np.where(m, hu_foreground, hu_background).astype(np.int32),
            bits_stored=bits_stored,
            slice_thickness_mm=slice_thickness_mm,
            slice_index=k,
        )
        for k, m in enumerate(masks)
    ]


def write_phantom(slices, out_dir: str | os.PathLike, formats=("pgm",)) -> list[Path]:
    """Write ``slice_NNN.pgm`` and/or ``slice_NNN.dcm`` files; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    width = max(3, len(str(len(slices) - 1)))
    written = []
    for k, s in enumerate(slices):
        stem = f"slice_{k:0{width}d}"
        for fmt in formats:
            if fmt == "pgm":
                path = out / f"{stem}.pgm"
                path.write_bytes(write_pgm(s))
            elif fmt == "dicom":
                path = out / f"{stem}.dcm"
                path.write_bytes(write_dicom(s))
            else:
                raise InvalidParams(f"unknown slice format {fmt!r}")
            written.append(path)
    return written


def cylinder_volume(radius: float, n_slices: int, spacing: float) -> float:
    """Volume of the cylinder spanned from the first to the last slice plane."""
    return math.pi * radius * radius * (n_slices - 1) * spacing
