import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slicemesh.contour import ContourPolyline
from slicemesh.errors import DegenerateContour, InvalidSpan, SingularFitWarning, TooFewPoints
from slicemesh.smoothing import (
    SmoothingParams,
    is_cyclic,
    resample_closed,
    smooth_contour,
    smooth_sequence,
    window_size,
)

SPANS = (0.1, 0.2, 0.3, 0.4)


def loess_oracle(v, span, cyclic=True):
    """Independent weighted least squares: one lstsq solve per point."""
    v = np.asarray(v, dtype=float)
    n = len(v)
    w = window_size(span, n)
    h = w // 2
    out = np.empty(n)
    for i in range(n):
        if cyclic:
            t = np.arange(-h, h + 1, dtype=float)
            y = v[(i + np.arange(-h, h + 1)) % n]
        else:
            lo = min(max(i - h, 0), n - w)
            t = np.arange(lo, lo + w, dtype=float) - i
            y = v[lo : lo + w]
        dmax = np.abs(t).max()
        wt = (1 - (np.abs(t) / dmax) ** 3) ** 3
        keep = wt > 0
        deg = min(2, keep.sum() - 1)
        sw = np.sqrt(wt)
        X = np.vander(t, deg + 1, increasing=True)
        coef, *_ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
        out[i] = coef[0]
    return out


def polygon(n, r=10.0, phase=0.0):
    t = phase + 2 * np.pi * np.arange(n) / n
    return np.column_stack([r * np.cos(t), r * np.sin(t)])


class TestWindow:
    @pytest.mark.parametrize(
        "span,n,w", [(0.1, 64, 7), (0.1, 100, 11), (0.2, 64, 13), (0.1, 10, 3), (0.5, 5, 3), (0.9, 6, 5), (0.1, 5, 3)]
    )
    def test_sizes(self, span, n, w):
        assert window_size(span, n) == w

    @pytest.mark.parametrize("span", [0.0, 1.0, -0.1, 1.5])
    def test_open_interval(self, span):
        with pytest.raises(InvalidSpan):
            window_size(span, 10)
        with pytest.raises(InvalidSpan):
            SmoothingParams(span)

    @given(st.floats(0.01, 0.99), st.integers(5, 500))
    def test_always_odd_and_bounded(self, span, n):
        w = window_size(span, n)
        assert w % 2 == 1 and 3 <= w <= n


class TestLoess:
    @pytest.mark.parametrize("span", SPANS)
    @pytest.mark.parametrize("cyclic", [True, False])
    def test_matches_independent_lstsq(self, span, cyclic):
        v = np.random.default_rng(int(span * 10)).normal(size=64)
        np.testing.assert_allclose(smooth_sequence(v, span, cyclic=cyclic), loess_oracle(v, span, cyclic), atol=1e-10)

    @pytest.mark.parametrize("span", SPANS)
    def test_quadratic_arc_reproduced(self, span):
        i = np.arange(64, dtype=float)
        c = ContourPolyline(np.column_stack([i, i**2]))
        out = smooth_contour(c, SmoothingParams(span))
        assert np.abs(out.points - c.points).max() <= 1e-9

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from(SPANS))
    def test_open_windows_reproduce_quadratics(self, seed, span):
        a, b, c = np.random.default_rng(seed).uniform(-5, 5, 3)
        i = np.arange(64, dtype=float)
        v = a + b * i + c * i * i
        assert np.abs(smooth_sequence(v, span, cyclic=False) - v).max() <= 1e-9 * max(1.0, np.abs(v).max())

    def test_cyclic_reproduces_periodic_linear_pieces_locally(self):
        # a closed polygon's coordinates are locally smooth, so a regular
        # polygon moves only by the tiny curvature shrink
        c = ContourPolyline(polygon(200))
        out = smooth_contour(c, SmoothingParams(0.1))
        r = np.linalg.norm(out.points, axis=1)
        assert np.abs(r - 10).max() < 1e-3

    def test_outlier_pulled_toward_circle(self):
        n = 64
        pts = polygon(n)
        edge = np.linalg.norm(pts[1] - pts[0])
        pts[20] *= (10 + 10 * edge) / 10
        for method in ("loess2", "moving_average"):
            out = smooth_contour(ContourPolyline(pts), SmoothingParams(0.1, method))
            before = np.linalg.norm(pts[20]) - 10
            after = abs(np.linalg.norm(out.points[20]) - 10)
            assert after < before
        # and loess2 agrees with the independent solve at that index
        out = smooth_contour(ContourPolyline(pts), SmoothingParams(0.1))
        assert out.points[20, 0] == pytest.approx(loess_oracle(pts[:, 0], 0.1)[20], abs=1e-10)
        assert out.points[20, 1] == pytest.approx(loess_oracle(pts[:, 1], 0.1)[20], abs=1e-10)

    def test_small_window_falls_back_with_warning(self):
        c = ContourPolyline(polygon(12))
        with pytest.warns(SingularFitWarning):
            out = smooth_contour(c, SmoothingParams(0.1))
        # w = 3 leaves only the centre with positive weight: identity
        np.testing.assert_allclose(out.points, c.points, atol=1e-12)

    def test_no_warning_when_window_is_large_enough(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error", SingularFitWarning)
            smooth_contour(ContourPolyline(polygon(64)), SmoothingParams(0.1))


class TestMovingAverage:
    def test_constant(self):
        v = np.full(20, 3.25)
        assert np.array_equal(smooth_sequence(v, 0.3, "moving_average"), v)
        assert np.array_equal(smooth_sequence(v, 0.3, "moving_average", cyclic=False), v)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from(SPANS))
    def test_within_window_bounds(self, seed, span):
        v = np.random.default_rng(seed).normal(size=40)
        out = smooth_sequence(v, span, "moving_average")
        h = window_size(span, 40) // 2
        for i in range(40):
            win = v[(i + np.arange(-h, h + 1)) % 40]
            assert win.min() - 1e-12 <= out[i] <= win.max() + 1e-12

    def test_brute_force(self):
        v = np.random.default_rng(1).normal(size=30)
        h = window_size(0.2, 30) // 2
        expected = [np.mean([v[(i + k) % 30] for k in range(-h, h + 1)]) for i in range(30)]
        np.testing.assert_allclose(smooth_sequence(v, 0.2, "moving_average"), expected, atol=1e-12)


class TestSmoothContour:
    def test_too_few_points(self):
        with pytest.raises(TooFewPoints):
            smooth_contour(ContourPolyline(polygon(4)))

    @settings(max_examples=30, deadline=None)
    @given(
        st.integers(0, 2**32 - 1),
        st.sampled_from(SPANS),
        st.sampled_from(["loess2", "moving_average"]),
        st.floats(-1e3, 1e3),
        st.floats(-1e3, 1e3),
    )
    def test_count_orientation_translation(self, seed, span, method, dx, dy):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(20, 120))
        pts = polygon(n) * rng.uniform(0.9, 1.1, size=(n, 1))
        c = ContourPolyline(pts)
        p = SmoothingParams(span, method)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SingularFitWarning)
            out = smooth_contour(c, p)
            moved = smooth_contour(c.translated(dx, dy), p)
            flipped = smooth_contour(c.reversed(), p)
        assert len(out) == n
        assert out.orientation == c.orientation
        assert flipped.orientation == "CW"
        np.testing.assert_allclose(moved.points, out.points + [dx, dy], atol=1e-8)

    def test_collapse_is_reported(self):
        # a full-width average maps every point to the centroid
        with pytest.raises(DegenerateContour):
            smooth_contour(ContourPolyline(polygon(5)), SmoothingParams(0.9, "moving_average"))

    def test_wrap_detection(self):
        i = np.arange(30, dtype=float)
        assert not is_cyclic(ContourPolyline(np.column_stack([i, i**2])))
        assert is_cyclic(ContourPolyline(polygon(30)))
        assert is_cyclic(ContourPolyline(np.column_stack([i, i**2])), "cyclic")
        assert not is_cyclic(ContourPolyline(polygon(30)), "open")


class TestResample:
    SQ = ContourPolyline(np.array([[0.0, 0], [1, 0], [1, 1], [0, 1]]))

    def test_square_corners(self):
        np.testing.assert_allclose(resample_closed(self.SQ, 4).points, self.SQ.points, atol=1e-15)

    def test_square_midpoints(self):
        expected = [[0, 0], [0.5, 0], [1, 0], [1, 0.5], [1, 1], [0.5, 1], [0, 1], [0, 0.5]]
        np.testing.assert_allclose(resample_closed(self.SQ, 8).points, expected, atol=1e-15)

    def test_circle(self):
        out = resample_closed(ContourPolyline(polygon(100, r=1.0)), 10)
        np.testing.assert_allclose(out.points, polygon(10, r=1.0), atol=1e-6)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(1.0, 5.0), st.integers(32, 200), st.floats(1.0, 4.0))
    def test_perimeter_kept_on_smooth_curves(self, aspect, n, factor):
        t = 2 * np.pi * np.arange(n) / n
        c = ContourPolyline(np.column_stack([aspect * np.cos(t), np.sin(t)]))
        out = resample_closed(c, int(n * factor))
        assert out.perimeter == pytest.approx(c.perimeter, rel=0.01)

    def test_perimeter_of_smoothed_trace(self):
        from slicemesh.segmentation import trace_contours

        yy, xx = np.mgrid[0:64, 0:64]
        (c,) = trace_contours((xx - 31.3) ** 2 + (yy - 32.8) ** 2 <= 15**2)
        s = smooth_contour(c)
        for n in (len(s), 2 * len(s)):
            assert resample_closed(s, n).perimeter == pytest.approx(s.perimeter, rel=0.01)
        # a raw pixel staircase loses its corners: several percent shorter
        assert resample_closed(c, len(c)).perimeter < 0.99 * c.perimeter

    def test_degenerate(self):
        with pytest.raises(ValueError):
            resample_closed(self.SQ, 2)
