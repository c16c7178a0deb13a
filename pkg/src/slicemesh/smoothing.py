"""Contour smoothing by local regression, plus arc-length resampling.

The x and y coordinate sequences are smoothed independently as functions of
point index. ``loess2`` fits a degree-2 polynomial by weighted least squares
with tricube weights over a window of ``w`` neighbouring indices and
evaluates it at the centre; ``moving_average`` takes the plain window mean.

Because the design matrix depends only on index offsets, every interior
(cyclic) window shares one set of smoothing weights, so the cyclic smoother
is a circular convolution.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .contour import ContourPolyline
from .errors import DegenerateContour, InvalidSpan, SingularFitWarning, TooFewPoints

METHODS = ("loess2", "moving_average")
WRAP_MODES = ("auto", "cyclic", "open")


@dataclass(frozen=True)
class SmoothingParams:
    """``wrap`` decides whether windows run across the closing edge.

    ``auto`` treats the contour as cyclic unless the closing gap is more than
    twice its longest edge, which is how an open arc stored as a contour
    looks.
    """

    span: float = 0.1
    method: str = "loess2"
    wrap: str = "auto"

    def __post_init__(self):
        if not 0 < self.span < 1:
            raise InvalidSpan(f"span must lie in the open interval (0, 1), got {self.span}")
        if self.method not in METHODS:
            raise ValueError(f"unknown smoothing method {self.method!r}; expected one of {METHODS}")
        if self.wrap not in WRAP_MODES:
            raise ValueError(f"unknown wrap mode {self.wrap!r}; expected one of {WRAP_MODES}")


def window_size(span: float, n: int) -> int:
    """``round(span * n)`` (half up), made odd, clamped to ``[3, n]``."""
    if not 0 < span < 1:
        raise InvalidSpan(f"span must lie in the open interval (0, 1), got {span}")
    w = math.floor(span * n + 0.5)
    if w % 2 == 0:
        w += 1
    w = max(w, 3)
    if w > n:
        w = n if n % 2 else n - 1
    return w


def tricube(offsets) -> np.ndarray:
    d = np.abs(np.asarray(offsets, dtype=np.float64))
    dmax = d.max()
    if dmax == 0:
        return np.ones_like(d)
    return (1.0 - (d / dmax) ** 3) ** 3


def local_fit_weights(offsets, degree: int = 2) -> tuple[np.ndarray, int]:
    """Weights ``l`` with ``sum(l * y)`` = the tricube-weighted polynomial fit at offset 0.

    Returns ``(l, used_degree)``. The degree drops (2, 1, 0) until enough
    points carry positive weight for the fit to be determined.
    """
    t = np.asarray(offsets, dtype=np.float64)
    w = tricube(t)
    scale = max(np.abs(t).max(), 1.0)
    u = t / scale
    positive = int(np.count_nonzero(w > 0))
    for deg in range(min(degree, positive - 1), -1, -1):
        X = np.vander(u, deg + 1, increasing=True)
        XtW = X.T * w
        try:
            coef = np.linalg.solve(XtW @ X, XtW)
        except np.linalg.LinAlgError:
            continue
        return coef[0], deg
    # unreachable: the centre always has weight 1
    raise DegenerateContour("no points with positive weight in smoothing window")


def _moving_average_open(v: np.ndarray, w: int) -> np.ndarray:
    n = len(v)
    h = w // 2
    csum = np.concatenate([[0.0], np.cumsum(v)])
    out = np.empty(n)
    for i in range(n):
        r = min(h, i, n - 1 - i)
        out[i] = (csum[i + r + 1] - csum[i - r]) / (2 * r + 1)
    return out


def smooth_sequence(values, span: float = 0.1, method: str = "loess2", cyclic: bool = True) -> np.ndarray:
    """Smooth one coordinate sequence.

    With ``cyclic=False`` the loess window keeps ``w`` points and shifts
    inward at the ends; the moving average shrinks symmetrically instead.
    """
    out, _ = _smooth(np.asarray(values, dtype=np.float64), span, method, cyclic)
    return out


def _smooth(v: np.ndarray, span: float, method: str, cyclic: bool) -> tuple[np.ndarray, int]:
    n = len(v)
    if n < 5:
        raise TooFewPoints(f"smoothing needs at least 5 points, got {n}")
    if method not in METHODS:
        raise ValueError(f"unknown smoothing method {method!r}; expected one of {METHODS}")
    w = window_size(span, n)
    h = w // 2
    fallbacks = 0

    if method == "moving_average":
        if cyclic:
            idx = (np.arange(n)[:, None] + np.arange(-h, h + 1)[None, :]) % n
            return v[idx].mean(axis=1), 0
        return _moving_average_open(v, w), 0

    if cyclic:
        offsets = np.arange(-h, h + 1)
        weights, deg = local_fit_weights(offsets)
        if deg < 2:
            fallbacks = n
        idx = (np.arange(n)[:, None] + offsets[None, :]) % n
        return v[idx] @ weights, fallbacks

    out = np.empty(n)
    cache: dict[int, tuple[np.ndarray, int]] = {}
    for i in range(n):
        lo = min(max(i - h, 0), n - w)
        shift = i - lo
        if shift not in cache:
            cache[shift] = local_fit_weights(np.arange(w) - shift)
        weights, deg = cache[shift]
        fallbacks += deg < 2
        out[i] = v[lo : lo + w] @ weights
    return out, fallbacks


def is_cyclic(contour: ContourPolyline, wrap: str = "auto") -> bool:
    if wrap == "cyclic":
        return True
    if wrap == "open":
        return False
    p = contour.points
    edges = np.linalg.norm(np.diff(p, axis=0), axis=1)
    gap = float(np.linalg.norm(p[-1] - p[0]))
    return gap <= 2.0 * float(edges.max())


def smooth_contour(contour: ContourPolyline, params: SmoothingParams | None = None) -> ContourPolyline:
    """Smooth x and y independently; point count and start index are kept.

    Emits a :class:`SingularFitWarning` when windows are too small for a
    quadratic fit and a lower degree was used.
    """
    p = params or SmoothingParams()
    pts = contour.points
    if len(pts) < 5:
        raise TooFewPoints(f"smoothing needs at least 5 points, got {len(pts)}")
    cyclic = is_cyclic(contour, p.wrap)
    xs, fx = _smooth(pts[:, 0], p.span, p.method, cyclic)
    ys, fy = _smooth(pts[:, 1], p.span, p.method, cyclic)
    if fx or fy:
        warnings.warn(
            f"{fx + fy} local fits fell back below degree 2 (window {window_size(p.span, len(pts))})",
            SingularFitWarning,
            stacklevel=2,
        )
    out = np.column_stack([xs, ys])
    scale = float(np.ptp(pts, axis=0).max())
    steps = np.linalg.norm(out - np.roll(out, 1, axis=0), axis=1)
    if steps.min() <= 1e-12 * scale:
        raise DegenerateContour("smoothing collapsed neighbouring contour points together")
    try:
        return ContourPolyline(out)
    except ValueError as exc:
        raise DegenerateContour(f"smoothing collapsed the contour: {exc}") from None


def resample_closed(contour: ContourPolyline, n_target: int) -> ContourPolyline:
    """``n_target`` points evenly spaced by arc length, starting at ``points[0]``."""
    if n_target < 3:
        raise ValueError(f"n_target must be at least 3, got {n_target}")
    pts = contour.points
    ring = np.vstack([pts, pts[:1]])
    seg = np.linalg.norm(np.diff(ring, axis=0), axis=1)
    total = float(seg.sum())
    if total == 0:
        raise DegenerateContour("contour has zero perimeter")
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    s = np.arange(n_target) * (total / n_target)
    x = np.interp(s, cum, ring[:, 0])
    y = np.interp(s, cum, ring[:, 1])
    return ContourPolyline(np.column_stack([x, y]))
