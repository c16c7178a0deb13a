"""Look inside the two triangulation steps.

Walls: the plan for joining a 7-point ring to a 3-point ring, and which
bottom vertex each top vertex is fanned to.

Caps: an unconstrained Delaunay triangulation of a concave outline
covers its convex hull and cuts across the outline. Forcing the outline
edges in restores the boundary; dropping the triangles in
the outline's notches leaves the cap.
"""

import numpy as np

from slicemesh.contour import ContourPolyline
from slicemesh.delaunay import constrained_triangulation, triangulate
from slicemesh.stitch import cap_layer, plan_stitch, wall_faces

plan = plan_stitch(7, 3)
print(f"7 over 3: d={plan.d} q={plan.q} r={plan.r} case={plan.case}")
print(f"  top points assigned per bottom point: {plan.assignments}")
print(f"  facets: {wall_faces(plan).tolist()}")

# an irregular star-shaped slice outline; one of its edges is not Delaunay
outline_pts = np.array(
    [[3.8, 1.4], [5.0, 3.3], [1.5, 3.7], [-0.2, 3.0], [-1.1, 6.9],
     [-1.5, 4.8], [-5.7, -4.1], [-3.8, -5.8], [-1.2, -8.9], [2.0, -4.6]]
)
outline = ContourPolyline(outline_pts)


def edge_set(tris):
    return {frozenset(e) for t in tris.tolist() for e in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0]))}


def covered_area(tris):
    u = outline_pts[tris[:, 1]] - outline_pts[tris[:, 0]]
    v = outline_pts[tris[:, 2]] - outline_pts[tris[:, 0]]
    return 0.5 * np.abs(u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]).sum()


edges = [frozenset((k, (k + 1) % len(outline_pts))) for k in range(len(outline_pts))]
plain = triangulate(outline_pts)
constrained = constrained_triangulation(outline_pts, [tuple(e) for e in edges])
cap = cap_layer(outline, 0.0).faces
print(f"outline area {outline.area:.2f}")
for name, tris in (("delaunay", plain), ("constrained", constrained), ("cap (inside only)", cap)):
    missing = sum(e not in edge_set(tris) for e in edges)
    print(f"  {name:18s} {len(tris):2d} triangles, area {covered_area(tris):5.1f}, outline edges missing: {missing}")
