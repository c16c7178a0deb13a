from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slicemesh.contour import (
    ContourPolyline,
    format_points,
    parse_points,
    point_in_polygon,
    points_in_polygon,
    read_points,
    shoelace_area,
    write_points,
)
from slicemesh.errors import MalformedPointFile

SQUARE = np.array([[0.0, 0], [2, 0], [2, 2], [0, 2]])


def winding_oracle(p, poly):
    """Exact crossing count in rationals; None when p lies on the boundary."""
    px, py = Fraction(p[0]), Fraction(p[1])
    pts = [(Fraction(x), Fraction(y)) for x, y in poly]
    inside = False
    for (x1, y1), (x2, y2) in zip(pts, pts[1:] + pts[:1]):
        cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
        if cross == 0 and min(x1, x2) <= px <= max(x1, x2) and min(y1, y2) <= py <= max(y1, y2):
            return None
        if (y1 > py) != (y2 > py):
            if px < x1 + (py - y1) * (x2 - x1) / (y2 - y1):
                inside = not inside
    return inside


def star(n, seed):
    rng = np.random.default_rng(seed)
    t = np.sort(rng.uniform(0, 2 * np.pi, n))
    r = rng.integers(2, 10, n)
    return np.column_stack([np.round(r * np.cos(t)), np.round(r * np.sin(t))])


class TestContourPolyline:
    def test_validation(self):
        with pytest.raises(ValueError):
            ContourPolyline(np.zeros((2, 2)))
        with pytest.raises(ValueError):
            ContourPolyline(np.array([[0.0, 0], [0, 0], [1, 1]]))
        with pytest.raises(ValueError):
            ContourPolyline(np.array([[0.0, 0], [1, 0], [1, 1], [0.0, 0]]))
        with pytest.raises(ValueError):
            ContourPolyline(np.array([[0.0, np.nan], [1, 0], [1, 1]]))

    def test_orientation_and_area(self):
        c = ContourPolyline(SQUARE)
        assert c.closed
        assert c.orientation == "CCW" and c.area == 4.0 and c.signed_area == 4.0
        r = c.reversed()
        assert r.orientation == "CW" and r.signed_area == -4.0
        assert tuple(r.points[0]) == (0.0, 0.0)
        assert r.ccw() == c
        assert c.perimeter == 8.0
        np.testing.assert_array_equal(c.centroid, [1, 1])

    def test_rotation_and_normalization(self):
        c = ContourPolyline(SQUARE).rotated(2)
        assert tuple(c.points[0]) == (2.0, 2.0)
        n = c.reversed().normalized()
        assert n == ContourPolyline(SQUARE)

    def test_immutable(self):
        c = ContourPolyline(SQUARE)
        with pytest.raises(ValueError):
            c.points[0, 0] = 5

    def test_equality_and_hash(self):
        a, b = ContourPolyline(SQUARE), ContourPolyline(SQUARE.copy())
        assert a == b and hash(a) == hash(b)
        assert a != a.translated(1, 0)

    @given(st.integers(0, 2**32 - 1))
    def test_shoelace_matches_exact(self, seed):
        poly = star(9, seed)
        pts = [(Fraction(x), Fraction(y)) for x, y in poly]
        exact = sum(x1 * y2 - x2 * y1 for (x1, y1), (x2, y2) in zip(pts, pts[1:] + pts[:1])) / 2
        assert shoelace_area(poly) == pytest.approx(float(exact), abs=1e-9)


class TestPointInPolygon:
    def test_square(self):
        assert point_in_polygon((1, 1), SQUARE)
        assert point_in_polygon((0, 1), SQUARE)
        assert not point_in_polygon((0, 1), SQUARE, include_boundary=False)
        assert not point_in_polygon((3, 1), SQUARE)

    @settings(max_examples=12, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_against_oracle(self, seed):
        poly = star(12, seed)
        yy, xx = np.mgrid[-11:12, -11:12]
        grid = np.column_stack([xx.ravel(), yy.ravel()]).astype(float)
        vec = points_in_polygon(grid, poly)
        vec_open = points_in_polygon(grid, poly, include_boundary=False)
        for k, p in enumerate(grid):
            want = winding_oracle(p, poly)
            assert point_in_polygon(p, poly) == (True if want is None else want)
            assert vec[k] == (True if want is None else want)
            assert vec_open[k] == (False if want is None else want)


class TestPointFiles:
    def test_roundtrip(self, tmp_path):
        a = ContourPolyline(SQUARE)
        b = ContourPolyline(np.array([[0.1, 0.2], [1e-17, 3.0], [-2.5, 1e300]]))
        write_points(tmp_path / "p.txt", [a, b])
        assert read_points(tmp_path / "p.txt") == [a, b]

    def test_comments_and_blank_runs(self):
        text = "# header\n0 0\n1 0\n\n\n\n# second\n0 1\n1 1\n1 2\n"
        with pytest.raises(MalformedPointFile):
            parse_points(text)
        text = "# header\n0 0\n1 0\n1 1\n\n\n\n# second\n0 1\n1 1\n1 2\n"
        assert [len(c) for c in parse_points(text)] == [3, 3]

    @pytest.mark.parametrize(
        "text,line",
        [("0 0\n1 0\n1\n", 3), ("0 0\n1 x\n1 1\n", 2), ("0 0\n1 0\n1 1 1\n", 3), ("0 0\n1 0\ninf 1\n", 3)],
    )
    def test_errors_carry_line_numbers(self, text, line):
        with pytest.raises(MalformedPointFile) as info:
            parse_points(text)
        assert info.value.line == line
        assert f"line {line}" in str(info.value)

    def test_too_short_contour_reports_its_first_line(self):
        with pytest.raises(MalformedPointFile) as info:
            parse_points("0 0\n1 0\n1 1\n\n5 5\n6 6\n")
        assert info.value.line == 5

    def test_empty(self):
        assert parse_points("") == []
        assert format_points([]) == ""
