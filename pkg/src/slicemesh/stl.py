"""Binary and ASCII STL encoding.

Normals are always recomputed from the vertex winding, using the
float32-rounded coordinates that are actually written, so writing a mesh
read back from our own output reproduces the same bytes.
"""

from __future__ import annotations

import os
import re
import struct
from pathlib import Path

import numpy as np

from .errors import MalformedStl, TooManyFacets
from .mesh import TriangleMesh, facet_normals

HEADER_SIZE = 80
FACET_DTYPE = np.dtype(
    [("normal", "<f4", (3,)), ("vertices", "<f4", (3, 3)), ("attribute", "<u2")]
)
assert FACET_DTYPE.itemsize == 50


def _float32_facets(mesh: TriangleMesh) -> tuple[np.ndarray, np.ndarray]:
    # adding +0.0 turns -0.0 into +0.0
    tri = mesh.facet_vertices.astype(np.float32) + np.float32(0.0)
    normals = facet_normals(tri.astype(np.float64)).astype(np.float32) + np.float32(0.0)
    return tri, normals


def write_binary_stl(mesh: TriangleMesh, header_text: str | bytes = "") -> bytes:
    """80-byte header, uint32 facet count, then 50 bytes per facet, little-endian."""
    header = header_text.encode("ascii") if isinstance(header_text, str) else bytes(header_text)
    if len(header) > HEADER_SIZE:
        raise ValueError(f"STL header is {len(header)} bytes; at most {HEADER_SIZE} allowed")
    count = len(mesh.faces)
    if count > 0xFFFFFFFF:
        raise TooManyFacets(f"{count} facets exceed the binary STL limit")
    tri, normals = _float32_facets(mesh)
    rec = np.zeros(count, dtype=FACET_DTYPE)
    rec["normal"] = normals
    rec["vertices"] = tri
    return header.ljust(HEADER_SIZE, b"\x00") + struct.pack("<I", count) + rec.tobytes()


def _fmt(v: float) -> str:
    return f"{float(v):.8e}"


def write_ascii_stl(mesh: TriangleMesh, name: str = "mesh") -> str:
    """Canonical ASCII STL with 9 significant digits in scientific notation."""
    if any(ch in name for ch in "\r\n"):
        raise ValueError("solid name must be a single line")
    tri, normals = _float32_facets(mesh)
    lines = [f"solid {name}"]
    for n, (a, b, c) in zip(normals, tri):
        lines.append("  facet normal " + " ".join(_fmt(x) for x in n))
        lines.append("    outer loop")
        for v in (a, b, c):
            lines.append("      vertex " + " ".join(_fmt(x) for x in v))
        lines.append("    endloop")
        lines.append("  endfacet")
    lines.append(f"endsolid {name}")
    return "\n".join(lines) + "\n"


def _weld_exact(tri: np.ndarray) -> TriangleMesh:
    flat = np.asarray(tri, dtype=np.float64).reshape(-1, 3)
    if len(flat) == 0:
        return TriangleMesh.empty()
    _, first, inverse = np.unique(flat, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    return TriangleMesh(flat[np.sort(first)], rank[inverse].reshape(-1, 3))


_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?(?:inf|nan)"


def _parse_ascii(text: str) -> np.ndarray:
    lines = text.splitlines()
    tokens = [(k + 1, ln.split()) for k, ln in enumerate(lines) if ln.strip()]
    if not tokens or tokens[0][1][0] != "solid":
        raise MalformedStl("ASCII STL must start with 'solid'", 1)
    facets = []
    pos = 1
    num = re.compile(_NUM + r"$", re.IGNORECASE)

    def expect(words, n_numbers=0):
        nonlocal pos
        if pos >= len(tokens):
            raise MalformedStl(f"unexpected end of file, expected {' '.join(words)!r}", len(lines))
        lineno, toks = tokens[pos]
        if toks[: len(words)] != words or len(toks) != len(words) + n_numbers:
            raise MalformedStl(f"expected {' '.join(words)!r}, got {' '.join(toks)!r}", lineno)
        values = toks[len(words) :]
        if not all(num.match(v) for v in values):
            raise MalformedStl(f"bad number in {' '.join(toks)!r}", lineno)
        pos += 1
        return [float(v) for v in values]

    while True:
        if pos >= len(tokens):
            raise MalformedStl("missing 'endsolid'", len(lines))
        if tokens[pos][1][0] == "endsolid":
            pos += 1
            break
        expect(["facet", "normal"], 3)
        expect(["outer", "loop"])
        verts = [expect(["vertex"], 3) for _ in range(3)]
        expect(["endloop"])
        expect(["endfacet"])
        facets.append(verts)
    if pos != len(tokens):
        raise MalformedStl("content after 'endsolid'", tokens[pos][0])
    return np.array(facets, dtype=np.float64).reshape(-1, 3, 3)


def read_stl(data: bytes) -> TriangleMesh:
    """Decode ASCII or binary STL, welding vertices that are bitwise equal.

    A buffer is ASCII only if it starts with ``solid`` and the whole grammar
    parses; otherwise it must satisfy the binary size law.
    """
    data = bytes(data)
    ascii_error = None
    if data.lstrip()[:5] == b"solid":
        try:
            return _weld_exact(_parse_ascii(data.decode("ascii")))
        except UnicodeDecodeError:
            ascii_error = MalformedStl("ASCII STL contains non-ASCII bytes")
        except MalformedStl as exc:
            ascii_error = exc
    if len(data) < HEADER_SIZE + 4:
        raise ascii_error or MalformedStl(f"binary STL needs at least 84 bytes, got {len(data)}")
    (count,) = struct.unpack_from("<I", data, HEADER_SIZE)
    expected = HEADER_SIZE + 4 + 50 * count
    if len(data) != expected:
        if ascii_error is not None:
            raise ascii_error
        raise MalformedStl(f"binary STL declares {count} facets ({expected} bytes) but has {len(data)} bytes")
    rec = np.frombuffer(data, dtype=FACET_DTYPE, count=count, offset=HEADER_SIZE + 4)
    return _weld_exact(rec["vertices"])


def save_stl(path: str | os.PathLike, mesh: TriangleMesh, fmt: str = "binary", name: str = "slicemesh") -> None:
    if fmt == "binary":
        Path(path).write_bytes(write_binary_stl(mesh, f"{name} binary STL"))
    elif fmt == "ascii":
        Path(path).write_text(write_ascii_stl(mesh, name))
    else:
        raise ValueError(f"unknown STL format {fmt!r}")


def load_stl(path: str | os.PathLike) -> TriangleMesh:
    return read_stl(Path(path).read_bytes())
