"""2-D Delaunay triangulation by sweep construction and Lawson flips.

Points are sorted, triangulated by a left-to-right sweep that fans each new
point to the visible part of the hull, and the result is made Delaunay by
flipping every edge that fails the in-circle test. Ties among cocircular
points are broken symbolically (see :func:`incircle_perturbed`), so the
output does not depend on the order of operations.

:func:`constrained_triangulation` additionally forces a set of edges (a
polygon boundary) into the triangulation by flipping away the edges that
cross them.
"""

from __future__ import annotations

import numpy as np

from .errors import AllCollinear, DuplicatePoints, SliceMeshError
from .predicates import incircle_perturbed, orient2d


class _Mesh:
    """Triangles stored as directed edge -> opposite vertex (all CCW)."""

    def __init__(self, pts):
        self.pts = pts
        self.opp: dict[tuple[int, int], int] = {}
        self.fixed: set[frozenset] = set()

    def add(self, a, b, c):
        self.opp[(a, b)] = c
        self.opp[(b, c)] = a
        self.opp[(c, a)] = b

    def remove(self, a, b, c):
        del self.opp[(a, b)]
        del self.opp[(b, c)]
        del self.opp[(c, a)]

    def flip(self, a, b):
        """Replace triangles (a, b, c), (b, a, d) by (a, d, c), (d, b, c)."""
        c = self.opp[(a, b)]
        d = self.opp[(b, a)]
        self.remove(a, b, c)
        self.remove(b, a, d)
        self.add(a, d, c)
        self.add(d, b, c)
        return c, d

    def needs_flip(self, a, b) -> bool:
        if (b, a) not in self.opp or (a, b) not in self.opp:
            return False
        if frozenset((a, b)) in self.fixed:
            return False
        c = self.opp[(a, b)]
        d = self.opp[(b, a)]
        return incircle_perturbed(self.pts, a, b, c, d) > 0

    def legalize(self, stack):
        while stack:
            a, b = stack.pop()
            if self.needs_flip(a, b):
                c, d = self.flip(a, b)
                stack.extend(((a, d), (d, b), (b, c), (c, a)))

    def edges(self):
        return [(a, b) for (a, b) in self.opp if a < b or (b, a) not in self.opp]

    def triangles(self) -> np.ndarray:
        tris = set()
        for (a, b), c in self.opp.items():
            t = (a, b, c)
            k = t.index(min(t))
            tris.add(t[k:] + t[:k])
        return np.array(sorted(tris), dtype=np.int64).reshape(-1, 3)


def _validate(points) -> list[tuple[float, float]]:
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"points must have shape (n, 2), got {arr.shape}")
    if len(arr) < 3:
        raise AllCollinear(f"need at least 3 points, got {len(arr)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("points must be finite")
    pts = [(float(x), float(y)) for x, y in arr]
    if len(set(pts)) != len(pts):
        raise DuplicatePoints("point set contains exact duplicates")
    return pts


def _sweep(pts) -> _Mesh:
    order = sorted(range(len(pts)), key=lambda k: pts[k])
    m = _Mesh(pts)
    p0, p1 = order[0], order[1]
    k = 2
    while k < len(order) and orient2d(pts[p0], pts[p1], pts[order[k]]) == 0:
        k += 1
    if k == len(order):
        raise AllCollinear("all points are collinear")
    chain = order[:k]
    apex = order[k]
    turn = orient2d(pts[chain[0]], pts[chain[1]], pts[apex])
    for u, v in zip(chain, chain[1:]):
        if turn > 0:
            m.add(u, v, apex)
        else:
            m.add(v, u, apex)
    hull = chain + [apex] if turn > 0 else [chain[0], apex] + chain[:0:-1]

    for p in order[k + 1 :]:
        n = len(hull)
        visible = [orient2d(pts[hull[t]], pts[hull[(t + 1) % n]], pts[p]) < 0 for t in range(n)]
        # rotate so the visible run starts at index 0
        first = next(t for t in range(n) if visible[t] and not visible[t - 1])
        hull = hull[first:] + hull[:first]
        visible = visible[first:] + visible[:first]
        run = visible.index(False) if False in visible else n
        for t in range(run):
            m.add(hull[(t + 1) % n], hull[t], p)
        hull = [hull[0], p] + hull[run:]
    return m


def triangulate(points) -> np.ndarray:
    """Delaunay triangulation of a 2-D point set.

    Returns an ``(m, 3)`` array of CCW point-index triples, each rotated to
    start at its smallest index, rows sorted. Cocircular ties pick the
    diagonal through the lowest-index point.

    Raises :class:`AllCollinear` or :class:`DuplicatePoints`.
    """
    pts = _validate(points)
    m = _sweep(pts)
    m.legalize(m.edges())
    return m.triangles()


def _crosses(pts, a, b, u, v) -> bool:
    """Proper crossing of segments ``ab`` and ``uv`` (no shared endpoint)."""
    if len({a, b, u, v}) < 4:
        return False
    o1 = orient2d(pts[u], pts[v], pts[a])
    o2 = orient2d(pts[u], pts[v], pts[b])
    if o1 * o2 >= 0:
        return False
    o3 = orient2d(pts[a], pts[b], pts[u])
    o4 = orient2d(pts[a], pts[b], pts[v])
    return o3 * o4 < 0


def _on_open_segment(pts, p, u, v) -> bool:
    if orient2d(pts[u], pts[v], pts[p]) != 0:
        return False
    (ux, uy), (vx, vy), (px, py) = pts[u], pts[v], pts[p]
    return min(ux, vx) <= px <= max(ux, vx) and min(uy, vy) <= py <= max(uy, vy)


def _insert_constraint(m: _Mesh, u: int, v: int) -> None:
    pts = m.pts
    if (u, v) in m.opp or (v, u) in m.opp:
        m.fixed.add(frozenset((u, v)))
        return
    for p in range(len(pts)):
        if p not in (u, v) and _on_open_segment(pts, p, u, v):
            raise SliceMeshError(f"point {p} lies on constraint edge ({u}, {v})")
    queue = [e for e in m.edges() if _crosses(pts, e[0], e[1], u, v)]
    if not queue:
        raise SliceMeshError(f"constraint edge ({u}, {v}) cannot be recovered")
    created = []
    budget = 50 * len(queue) * len(queue) + 100
    while queue:
        budget -= 1
        if budget < 0:
            raise SliceMeshError(f"constraint edge ({u}, {v}) crosses other constraints")
        a, b = queue.pop(0)
        if (a, b) not in m.opp or (b, a) not in m.opp:
            continue
        if frozenset((a, b)) in m.fixed:
            raise SliceMeshError(f"constraint edges ({u}, {v}) and ({a}, {b}) intersect")
        c = m.opp[(a, b)]
        d = m.opp[(b, a)]
        # quad a, d, b, c is strictly convex iff a and b lie on opposite sides of cd
        if orient2d(pts[c], pts[d], pts[a]) * orient2d(pts[c], pts[d], pts[b]) >= 0:
            queue.append((a, b))
            continue
        m.flip(a, b)
        if _crosses(pts, c, d, u, v):
            queue.append((c, d))
        else:
            created.append((c, d))
    m.fixed.add(frozenset((u, v)))
    m.legalize([e for e in created if frozenset(e) != frozenset((u, v))])


def constrained_triangulation(points, edges) -> np.ndarray:
    """Delaunay triangulation that contains every edge in ``edges``.

    Non-constrained edges are made locally Delaunay. Constraint edges must
    not cross each other or pass through other points.
    """
    pts = _validate(points)
    m = _sweep(pts)
    m.legalize(m.edges())
    for u, v in edges:
        _insert_constraint(m, int(u), int(v))
    m.legalize(m.edges())
    return m.triangles()
