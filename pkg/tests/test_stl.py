import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slicemesh.contour import ContourPolyline
from slicemesh.errors import MalformedStl
from slicemesh.mesh import TriangleMesh
from slicemesh.stitch import LayerStack, assemble
from slicemesh.stl import FACET_DTYPE, load_stl, read_stl, save_stl, write_ascii_stl, write_binary_stl


def prism():
    sq = ContourPolyline(np.array([[0.0, 0], [1, 0], [1, 1], [0, 1]]))
    return assemble(LayerStack((sq, sq), 1.0))


def random_mesh(seed, n_faces):
    rng = np.random.default_rng(seed)
    verts = rng.uniform(-1e3, 1e3, size=(n_faces + 2, 3))
    faces = np.array([[k, k + 1, k + 2] for k in range(n_faces)])
    return TriangleMesh(verts, faces)


def facet_set(mesh):
    """Facets as float32 triples, insensitive to vertex indexing."""
    tri = mesh.facet_vertices.astype(np.float32)
    return sorted(tuple(map(tuple, t.tolist())) for t in tri)


class TestBinary:
    @pytest.mark.parametrize("faces", [0, 1, 7, 500])
    def test_size_law(self, faces):
        mesh = random_mesh(faces, faces) if faces else TriangleMesh.empty()
        data = write_binary_stl(mesh)
        assert len(data) == 84 + 50 * faces
        assert struct.unpack_from("<I", data, 80)[0] == faces

    def test_layout(self):
        data = write_binary_stl(prism(), "hello")
        assert data[:5] == b"hello" and data[5:80] == b"\x00" * 75
        rec = np.frombuffer(data, FACET_DTYPE, offset=84)
        assert np.all(rec["attribute"] == 0)
        assert np.allclose(np.linalg.norm(rec["normal"], axis=1), 1, atol=1e-6)

    def test_header_limit(self):
        with pytest.raises(ValueError):
            write_binary_stl(prism(), "x" * 81)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 60))
    def test_write_read_write_identical(self, seed, n):
        first = write_binary_stl(random_mesh(seed, n), "same")
        assert write_binary_stl(read_stl(first), "same") == first

    def test_negative_zero_normalized(self):
        mesh = TriangleMesh([[-0.0, 0.0, 0.0], [1.0, -0.0, 0.0], [0.0, 1.0, -0.0]], [[0, 1, 2]])
        rec = np.frombuffer(write_binary_stl(mesh), FACET_DTYPE, offset=84)
        assert not np.any(np.signbit(rec["vertices"]))
        assert not np.any(np.signbit(rec["normal"]))

    def test_welds_shared_vertices(self):
        back = read_stl(write_binary_stl(prism()))
        assert len(back.vertices) == 8 and len(back.faces) == 12

    def test_binary_starting_with_solid(self):
        data = write_binary_stl(prism(), "solid but binary")
        assert facet_set(read_stl(data)) == facet_set(prism())

    @pytest.mark.parametrize("cut", [1, 49, 50])
    def test_size_mismatch(self, cut):
        data = write_binary_stl(prism())
        with pytest.raises(MalformedStl):
            read_stl(data[:-cut])
        with pytest.raises(MalformedStl):
            read_stl(b"\x00" * 20)


class TestAscii:
    def test_grammar(self):
        text = write_ascii_stl(prism(), "cube")
        lines = text.splitlines()
        assert lines[0] == "solid cube" and lines[-1] == "endsolid cube"
        assert len(lines) == 2 + 7 * 12
        assert lines[1].startswith("  facet normal ")

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 40))
    def test_ascii_binary_round_trip(self, seed, n):
        mesh = random_mesh(seed, n)
        from_ascii = read_stl(write_ascii_stl(mesh).encode())
        from_binary = read_stl(write_binary_stl(mesh))
        assert facet_set(from_ascii) == facet_set(from_binary) == facet_set(mesh)
        assert write_binary_stl(from_ascii) == write_binary_stl(from_binary)

    def test_empty(self):
        assert len(read_stl(write_ascii_stl(TriangleMesh.empty()).encode()).faces) == 0

    def test_name_must_be_one_line(self):
        with pytest.raises(ValueError):
            write_ascii_stl(prism(), "a\nb")

    @pytest.mark.parametrize(
        "mutate,line",
        [
            (lambda ls: ls[:3] + ["    vertex 1 2"] + ls[4:], 4),
            (lambda ls: ls[:5] + ["      vertex 1 2 x"] + ls[6:], 6),
            (lambda ls: ls[:1] + ["  facet norml 0 0 1"] + ls[2:], 2),
            (lambda ls: ls[:-1], None),
            (lambda ls: ls + ["junk"], 87),
        ],
    )
    def test_errors_carry_line_numbers(self, mutate, line):
        lines = write_ascii_stl(prism()).splitlines()
        bad = "\n".join(mutate(lines)) + "\n"
        with pytest.raises(MalformedStl) as info:
            read_stl(bad.encode())
        if line is not None:
            assert info.value.line == line
            assert f"line {line}" in str(info.value)


def test_save_and_load(tmp_path):
    for fmt in ("binary", "ascii"):
        path = tmp_path / f"m_{fmt}.stl"
        save_stl(path, prism(), fmt)
        assert facet_set(load_stl(path)) == facet_set(prism())
    with pytest.raises(ValueError):
        save_stl(tmp_path / "x.stl", prism(), "obj")
