from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial import ConvexHull, Delaunay

from slicemesh.delaunay import constrained_triangulation, triangulate
from slicemesh.errors import AllCollinear, DuplicatePoints
from slicemesh.predicates import incircle, incircle_exact, incircle_perturbed, orient2d, orient2d_exact


def exact_incircle(a, b, c, d):
    """Sign of the 4x4 lifted determinant, evaluated in rationals."""
    m = []
    for p in (a, b, c, d):
        x, y = Fraction(p[0]), Fraction(p[1])
        m.append([x, y, x * x + y * y, Fraction(1)])

    def det(mat):
        if len(mat) == 1:
            return mat[0][0]
        return sum((-1) ** j * mat[0][j] * det([row[:j] + row[j + 1 :] for row in mat[1:]]) for j in range(len(mat)))

    v = det(m)
    return (v > 0) - (v < 0)


def exact_orient(a, b, c):
    ax, ay, bx, by, cx, cy = (Fraction(v) for v in (*a, *b, *c))
    v = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    return (v > 0) - (v < 0)


def assert_delaunay(pts, tris):
    """Every triangle is CCW and its circumcircle contains no other point."""
    for t in tris:
        a, b, c = (pts[i] for i in t)
        assert exact_orient(a, b, c) > 0
        for k in range(len(pts)):
            if k not in t:
                assert exact_incircle(a, b, c, pts[k]) <= 0


def hull_boundary_count(pts):
    hull = ConvexHull(pts)
    count = 0
    for a, b in hull.simplices:
        for k in range(len(pts)):
            if exact_orient(pts[a], pts[b], pts[k]) == 0:
                count += 1
    # each hull vertex is counted by its two edges
    return count - len(hull.vertices)


def random_points(seed, n, integer=False):
    rng = np.random.default_rng(seed)
    if integer:
        while True:
            pts = rng.integers(0, 6, size=(n, 2)).astype(float)
            if len(np.unique(pts, axis=0)) == n and np.linalg.matrix_rank(pts - pts[0]) == 2:
                return pts
    return rng.uniform(-10, 10, size=(n, 2))


class TestPredicates:
    def test_orient_signs(self):
        assert orient2d((0, 0), (1, 0), (0, 1)) == 1
        assert orient2d((0, 0), (0, 1), (1, 0)) == -1
        assert orient2d((0, 0), (1, 1), (2, 2)) == 0

    def test_near_degenerate_orient(self):
        # nearly collinear triples fall inside the error bound and go exact
        a = (0.5, 0.5)
        b = (12.0, 12.0)
        for k in range(200):
            c = (24.0 + k * 2.0**-48, 24.0 + k * 2.0**-48 + 2.0**-50)
            assert orient2d(a, b, c) == orient2d_exact(a, b, c) == exact_orient(a, b, c)

    @settings(max_examples=300, deadline=None)
    @given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)), min_size=4, max_size=4))
    def test_incircle_agrees_with_exact(self, pts):
        a, b, c, d = pts
        assert incircle(a, b, c, d) == incircle_exact(a, b, c, d) == exact_incircle(a, b, c, d)

    def test_cocircular(self):
        assert incircle((1, 0), (0, 1), (-1, 0), (0, -1)) == 0
        assert incircle((1, 0), (0, 1), (-1, 0), (0, 0)) == 1
        assert incircle((1, 0), (0, 1), (-1, 0), (5, 5)) == -1

    def test_perturbation_never_ties(self):
        pts = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)]
        s1 = incircle_perturbed(pts, 0, 1, 2, 3)
        s2 = incircle_perturbed(pts, 1, 2, 3, 0)
        assert s1 != 0 and s2 != 0
        # the two diagonals of the square cannot both be illegal
        assert not (s1 > 0 and s2 > 0)


class TestTriangulate:
    def test_square(self):
        pts = np.array([[0.0, 0], [1, 0], [1, 1], [0, 1]])
        assert triangulate(pts).tolist() == [[0, 1, 2], [0, 2, 3]]

    def test_triangle(self):
        assert triangulate(np.array([[0.0, 0], [0, 1], [1, 0]])).tolist() == [[0, 2, 1]]

    def test_errors(self):
        with pytest.raises(AllCollinear):
            triangulate(np.array([[0.0, 0], [1, 1], [2, 2], [3, 3]]))
        with pytest.raises(DuplicatePoints):
            triangulate(np.array([[0.0, 0], [1, 0], [0, 1], [1, 0]]))
        with pytest.raises(ValueError):
            triangulate(np.array([[0.0, 0], [1, 0]]))

    @pytest.mark.parametrize("seed", range(30))
    def test_matches_scipy_in_general_position(self, seed):
        pts = random_points(seed, 3 + seed % 25)
        ours = {tuple(sorted(t)) for t in triangulate(pts).tolist()}
        theirs = {tuple(sorted(t)) for t in Delaunay(pts).simplices.tolist()}
        assert ours == theirs

    @pytest.mark.parametrize("seed", range(40))
    def test_degenerate_integer_sets(self, seed):
        pts = random_points(seed, 4 + seed % 9, integer=True)
        tris = triangulate(pts)
        assert_delaunay(pts, tris)
        # Euler: a triangulation of n points with h on the hull has 2n - h - 2 triangles
        assert len(tris) == 2 * len(pts) - hull_boundary_count(pts) - 2
        u = pts[tris[:, 1]] - pts[tris[:, 0]]
        v = pts[tris[:, 2]] - pts[tris[:, 0]]
        tri_area = 0.5 * np.abs(u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]).sum()
        assert tri_area == pytest.approx(ConvexHull(pts).volume)
        assert np.array_equal(tris, triangulate(pts.copy()))

    def test_grid(self):
        yy, xx = np.mgrid[0:5, 0:5]
        pts = np.column_stack([xx.ravel(), yy.ravel()]).astype(float)
        tris = triangulate(pts)
        assert len(tris) == 32
        assert_delaunay(pts, tris)

    def test_cocircular_ring(self):
        t = 2 * np.pi * np.arange(24) / 24
        ring = np.column_stack([np.round(1e6 * np.cos(t)), np.round(1e6 * np.sin(t))])
        tris = triangulate(ring)
        assert len(tris) == 22
        assert_delaunay(ring, tris)


class TestConstrained:
    def comb(self):
        return np.array(
            [[0, 0], [10, 0], [10, 6], [8, 6], [8, 1.5], [6, 1.5], [6, 6], [4, 6], [4, 1.5], [2, 1.5], [2, 6], [0, 6]],
            dtype=float,
        )

    def test_edges_present(self):
        pts = self.comb()
        n = len(pts)
        edges = [(k, (k + 1) % n) for k in range(n)]
        tris = constrained_triangulation(pts, edges)
        have = {frozenset(e) for t in tris.tolist() for e in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0]))}
        assert all(frozenset(e) in have for e in edges)
        assert all(exact_orient(*(pts[i] for i in t)) > 0 for t in tris)

    def test_equals_delaunay_when_edges_already_present(self):
        pts = random_points(3, 12)
        hull = ConvexHull(pts).vertices
        edges = [(hull[k], hull[(k + 1) % len(hull)]) for k in range(len(hull))]
        assert np.array_equal(constrained_triangulation(pts, edges), triangulate(pts))

    @pytest.mark.parametrize("seed", range(10))
    def test_star_polygons(self, seed):
        rng = np.random.default_rng(seed)
        n = 14
        t = np.sort(rng.uniform(0, 2 * np.pi, n))
        r = rng.uniform(2, 10, n)
        pts = np.column_stack([r * np.cos(t), r * np.sin(t)])
        edges = [(k, (k + 1) % n) for k in range(n)]
        tris = constrained_triangulation(pts, edges)
        have = {frozenset(e) for tri in tris.tolist() for e in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0]))}
        assert all(frozenset(e) in have for e in edges)
        assert len(tris) == 2 * n - hull_boundary_count(pts) - 2
