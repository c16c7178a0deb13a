"""Indexed triangle meshes and topology audits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEGENERATE_AREA = 1e-12


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Vertices ``(V, 3)`` in mm and CCW-wound facets ``(F, 3)``.

    Facet normals follow the right-hand rule over the winding and are
    computed on demand.
    """

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=np.float64).reshape(-1, 3)
        f = np.array(self.faces, dtype=np.int64).reshape(-1, 3)
        if len(f) and (f.min() < 0 or f.max() >= len(v)):
            raise ValueError("facet index out of range")
        v.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    @classmethod
    def empty(cls) -> TriangleMesh:
        return cls(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))

    def __len__(self) -> int:
        return len(self.faces)

    @property
    def facet_vertices(self) -> np.ndarray:
        """``(F, 3, 3)`` corner coordinates."""
        return self.vertices[self.faces]

    @property
    def normals(self) -> np.ndarray:
        """Unit facet normals; zero rows for degenerate facets."""
        return facet_normals(self.facet_vertices)

    @property
    def areas(self) -> np.ndarray:
        tri = self.facet_vertices
        return 0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)

    def translated(self, offset) -> TriangleMesh:
        return TriangleMesh(self.vertices + np.asarray(offset, dtype=np.float64), self.faces)

    def flipped(self) -> TriangleMesh:
        return TriangleMesh(self.vertices, self.faces[:, ::-1])


def facet_normals(tri: np.ndarray) -> np.ndarray:
    tri = np.asarray(tri, dtype=np.float64)
    if len(tri) == 0:
        return np.zeros((0, 3))
    n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    length = np.linalg.norm(n, axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(length > 0, n / np.where(length > 0, length, 1.0), 0.0)
    return unit


def merge(fragments, tol: float = 1e-9) -> TriangleMesh:
    """Concatenate meshes and weld vertices that agree within ``tol``."""
    fragments = [f for f in fragments if len(f.vertices)]
    if not fragments:
        return TriangleMesh.empty()
    verts, faces, base = [], [], 0
    for frag in fragments:
        verts.append(frag.vertices)
        faces.append(frag.faces + base)
        base += len(frag.vertices)
    v = np.vstack(verts)
    f = np.vstack(faces)
    key = np.round(v / tol).astype(np.int64)
    _, first, inverse = np.unique(key, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    # keep welded vertices in first-seen order
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    order = np.sort(first)
    return TriangleMesh(v[order], rank[inverse][f])


# -- audits -----------------------------------------------------------------


def _directed_edges(faces: np.ndarray) -> np.ndarray:
    return np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])


def edge_counts(mesh: TriangleMesh) -> dict[tuple[int, int], int]:
    """Number of facets using each undirected edge."""
    if len(mesh.faces) == 0:
        return {}
    e = np.sort(_directed_edges(mesh.faces), axis=1)
    uniq, counts = np.unique(e, axis=0, return_counts=True)
    return {(int(a), int(b)): int(c) for (a, b), c in zip(uniq, counts)}


def is_edge_manifold(mesh: TriangleMesh) -> bool:
    """Every edge is shared by exactly two facets."""
    counts = edge_counts(mesh)
    return bool(counts) and all(c == 2 for c in counts.values())


def is_consistently_oriented(mesh: TriangleMesh) -> bool:
    """No directed edge is used twice, so neighbours traverse shared edges oppositely."""
    if len(mesh.faces) == 0:
        return True
    d = _directed_edges(mesh.faces)
    return len(np.unique(d, axis=0)) == len(d)


def euler_characteristic(mesh: TriangleMesh) -> int:
    used = np.unique(mesh.faces) if len(mesh.faces) else np.zeros(0)
    return int(len(used) - len(edge_counts(mesh)) + len(mesh.faces))


def connected_components(mesh: TriangleMesh) -> int:
    """Facet components connected through shared vertices."""
    if len(mesh.faces) == 0:
        return 0
    parent = list(range(len(mesh.vertices)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b, c in mesh.faces.tolist():
        ra, rb, rc = find(a), find(b), find(c)
        parent[rb] = ra
        parent[find(rc)] = ra
    return len({find(int(v)) for v in np.unique(mesh.faces)})


def signed_volume(mesh: TriangleMesh) -> float:
    """Enclosed volume by the divergence theorem; positive for outward normals."""
    if len(mesh.faces) == 0:
        return 0.0
    tri = mesh.facet_vertices
    return float(np.einsum("ij,ij->i", tri[:, 0], np.cross(tri[:, 1], tri[:, 2])).sum() / 6.0)


def degenerate_facets(mesh: TriangleMesh, tol: float = DEGENERATE_AREA) -> np.ndarray:
    return np.nonzero(mesh.areas <= tol)[0]


def is_watertight(mesh: TriangleMesh) -> bool:
    return is_edge_manifold(mesh) and is_consistently_oriented(mesh)


def audit(mesh: TriangleMesh) -> dict:
    """Topology and geometry summary used in pipeline reports."""
    manifold = is_edge_manifold(mesh)
    oriented = is_consistently_oriented(mesh)
    chi = euler_characteristic(mesh)
    components = connected_components(mesh)
    volume = signed_volume(mesh)
    normals = mesh.normals
    unit = bool(np.all(np.abs(np.linalg.norm(normals, axis=1) - 1.0) <= 1e-9)) if len(normals) else True
    genus = None
    if manifold and oriented and components:
        genus = (2 * components - chi) // 2
    return {
        "vertices": int(len(np.unique(mesh.faces))) if len(mesh.faces) else 0,
        "facets": int(len(mesh.faces)),
        "edges": len(edge_counts(mesh)),
        "edge_manifold": manifold,
        "consistently_oriented": oriented,
        "watertight": manifold and oriented,
        "euler_characteristic": chi,
        "components": components,
        "genus": genus,
        "degenerate_facets": int(len(degenerate_facets(mesh))),
        "unit_normals": unit,
        "signed_volume": volume,
    }
