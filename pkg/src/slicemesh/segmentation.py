"""Thresholding, binary morphology and outer-boundary tracing.

Masks are boolean arrays of shape ``(height, width)``. Traced contours use
pixel-centre coordinates ``x = column``, ``y = row``.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .contour import ContourPolyline
from .dicom import SliceImage
from .errors import EmptyInput, InvalidKernel

MORPH_OPS = ("erode", "dilate", "open", "close")
ROI_POLICIES = ("largest_area", "all")

# clockwise on screen (rows grow downward), starting west
_NEIGHBORS = ((0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1))
_NEIGHBOR_INDEX = {d: i for i, d in enumerate(_NEIGHBORS)}
_EIGHT = np.ones((3, 3), dtype=bool)


def threshold(image, t: float = 400.0) -> np.ndarray:
    """Foreground where the value is strictly above ``t``."""
    pixels = image.pixels if isinstance(image, SliceImage) else np.asarray(image)
    return np.asarray(pixels) > t


def _square(k: int) -> np.ndarray:
    if int(k) != k or k < 1 or k % 2 == 0:
        raise InvalidKernel(f"structuring element size must be an odd integer >= 1, got {k}")
    return np.ones((int(k), int(k)), dtype=bool)


def erode(mask, k: int = 3) -> np.ndarray:
    # out-of-image pixels are background, so foreground touching the border shrinks
    return ndimage.binary_erosion(np.asarray(mask, dtype=bool), structure=_square(k), border_value=0)


def dilate(mask, k: int = 3) -> np.ndarray:
    return ndimage.binary_dilation(np.asarray(mask, dtype=bool), structure=_square(k), border_value=0)


def morph(mask, op: str, k: int = 3) -> np.ndarray:
    """Binary morphology with a ``k x k`` square structuring element.

    ``open`` erodes then dilates; ``close`` dilates then erodes. Closing runs
    on a canvas padded by ``k // 2`` so it never removes foreground at the
    image border.
    """
    se = _square(k)
    m = np.asarray(mask, dtype=bool)
    if op == "erode":
        return erode(m, k)
    if op == "dilate":
        return dilate(m, k)
    if op == "open":
        return dilate(erode(m, k), k)
    if op == "close":
        h = se.shape[0] // 2
        padded = np.pad(m, h, constant_values=False)
        closed = erode(dilate(padded, k), k)
        return closed[h : h + m.shape[0], h : h + m.shape[1]] if h else closed
    raise ValueError(f"unknown morphological operation {op!r}; expected one of {MORPH_OPS}")


def apply_schedule(mask, schedule) -> np.ndarray:
    m = np.asarray(mask, dtype=bool)
    for op, k in schedule:
        m = morph(m, op, k)
    return m


def _moore_trace(mask: np.ndarray, start: tuple[int, int]) -> list[tuple[int, int]]:
    """Moore-neighbour trace with Jacob's stopping criterion.

    ``mask`` must be padded so that ``start`` has a background west neighbour
    and no step leaves the array. Jacob's test (re-entering the start pixel
    from the west) misses on some thin shapes, so the walk also stops when it
    repeats its first move.
    """
    s = start
    b0 = (s[0], s[1] - 1)
    p, back = s, 0
    out = [s]
    first_state = None
    limit = 8 * int(mask.sum()) + 8
    for _ in range(limit):
        for k in range(1, 9):
            d = (back + k) % 8
            dy, dx = _NEIGHBORS[d]
            q = (p[0] + dy, p[1] + dx)
            if mask[q]:
                py, px = _NEIGHBORS[(back + k - 1) % 8]
                p = q
                # backtrack = last background neighbour scanned, seen from q
                back = _NEIGHBOR_INDEX[(py - dy, px - dx)]
                break
        else:
            return out
        if p == s and (p[0] + _NEIGHBORS[back][0], p[1] + _NEIGHBORS[back][1]) == b0:
            return out
        if first_state is None:
            first_state = (p, back)
        elif (p, back) == first_state:
            if len(out) > 1 and out[-1] == s:
                out.pop()
            return out
        out.append(p)
    raise RuntimeError("boundary trace did not terminate")


def trace_contours(mask, min_points: int = 3) -> list[ContourPolyline]:
    """Outer boundary of every 8-connected foreground component.

    Each contour is CCW (by shoelace sign in ``(x, y)``), starts at its
    smallest ``(y, x)`` point, and the list is ordered by start point.
    Components whose boundary has fewer than ``min_points`` points are
    dropped. Holes are not traced.
    """
    if min_points < 3:
        raise ValueError("min_points must be at least 3")
    m = np.asarray(mask, dtype=bool)
    labels, _ = ndimage.label(m, structure=_EIGHT)
    contours = []
    for idx, box in enumerate(ndimage.find_objects(labels), start=1):
        if box is None:
            continue
        sub = np.pad(labels[box] == idx, 1, constant_values=False)
        rows, cols = np.nonzero(sub)
        # nonzero is row-major, so the first hit is the top-most, left-most pixel
        start = (int(rows[0]), int(cols[0]))
        path = _moore_trace(sub, start)
        if len(path) < min_points:
            continue
        oy, ox = box[0].start - 1, box[1].start - 1
        pts = np.array([(c + ox, r + oy) for r, c in path], dtype=np.float64)
        try:
            contours.append(ContourPolyline(pts).normalized())
        except ValueError:
            continue
    contours.sort(key=lambda c: (c.points[0, 1], c.points[0, 0]))
    return contours


def select_roi(contours, policy: str = "largest_area") -> list[ContourPolyline]:
    contours = list(contours)
    if policy == "all":
        return contours
    if policy == "largest_area":
        if not contours:
            raise EmptyInput("no contours to select a region of interest from")
        best = max(range(len(contours)), key=lambda k: (contours[k].area, -k))
        return [contours[best]]
    raise ValueError(f"unknown ROI policy {policy!r}; expected one of {ROI_POLICIES}")


def segment(image, t: float = 400.0, schedule=(("close", 3),), min_points: int = 3) -> list[ContourPolyline]:
    """Threshold, clean and trace one slice."""
    return trace_contours(apply_schedule(threshold(image, t), schedule), min_points)
