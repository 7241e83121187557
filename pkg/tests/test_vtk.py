import numpy as np
import pytest

from tpmhd.fespace import P1, P1_BUBBLE, P2, interpolate, make_space
from tpmhd.mesh import build_structured_mesh
from tpmhd.vtk import vertex_sample, write_vtk


def parse_legacy_vtk(path):
    """Minimal independent reader for the files the writer emits."""
    with open(path, encoding="ascii") as handle:
        tokens = handle.read().split("\n")
    it = iter(tokens)
    assert next(it).startswith("# vtk DataFile")
    next(it)  # title
    assert next(it) == "ASCII"
    assert next(it) == "DATASET UNSTRUCTURED_GRID"
    n_pts = int(next(it).split()[1])
    points = np.array([[float(v) for v in next(it).split()]
                       for _ in range(n_pts)])
    n_cells = int(next(it).split()[1])
    cells = np.array([[int(v) for v in next(it).split()][1:]
                      for _ in range(n_cells)])
    assert next(it).split()[0] == "CELL_TYPES"
    types = [int(next(it)) for _ in range(n_cells)]
    assert next(it).split()[0] == "POINT_DATA"
    fields = {}
    for line in it:
        if not line:
            continue
        kind, name = line.split()[:2]
        if kind == "SCALARS":
            next(it)  # lookup table
            fields[name] = np.array([float(next(it)) for _ in range(n_pts)])
        else:
            assert kind == "VECTORS"
            fields[name] = np.array([[float(v) for v in next(it).split()]
                                     for _ in range(n_pts)])
    return points, cells, types, fields


def test_single_cell_mesh_zero_scalar(tmp_path):
    mesh = build_structured_mesh(1)
    space = make_space(mesh, P1, 1)
    path = tmp_path / "zero.vtk"
    write_vtk(mesh, {"phi": (space, np.zeros(space.n_dofs))}, path)
    points, cells, types, fields = parse_legacy_vtk(path)
    assert len(points) == 4
    assert len(cells) == 2
    assert types == [5, 5]
    assert np.all(fields["phi"] == 0.0)


def test_constant_vector_record(tmp_path):
    mesh = build_structured_mesh(2)
    space = make_space(mesh, P1, 2)
    coeffs = np.concatenate([np.ones(space.n_scalar),
                             np.zeros(space.n_scalar)])
    path = tmp_path / "const.vtk"
    write_vtk(mesh, {"B": (space, coeffs)}, path)
    _, _, _, fields = parse_legacy_vtk(path)
    assert np.allclose(fields["B"], [1.0, 0.0, 0.0])


def test_round_trip_values_and_geometry(tmp_path):
    mesh = build_structured_mesh(4)
    scalar = make_space(mesh, P1, 1)
    vector = make_space(mesh, P2, 2)
    phi = interpolate(scalar, lambda x, y, t: x + 2 * y)
    u = interpolate(vector, lambda x, y, t: (y, -x))
    path = tmp_path / "fields.vtk"
    write_vtk(mesh, {"phi": (scalar, phi), "u": (vector, u)}, path)
    points, cells, _, fields = parse_legacy_vtk(path)
    assert np.allclose(points[:, :2], mesh.vertices)
    assert np.all(cells == mesh.cells)
    assert np.allclose(fields["phi"],
                       mesh.vertices[:, 0] + 2 * mesh.vertices[:, 1])
    assert np.allclose(fields["u"][:, 0], mesh.vertices[:, 1])
    assert np.allclose(fields["u"][:, 1], -mesh.vertices[:, 0])


def test_vertex_sample_ignores_enrichment():
    mesh = build_structured_mesh(2)
    space = make_space(mesh, P1_BUBBLE, 1)
    coeffs = np.zeros(space.n_dofs)
    coeffs[mesh.n_vertices:] = 7.0  # bubbles vanish at vertices
    sampled = vertex_sample(space, coeffs)
    assert np.all(sampled == 0.0)


def test_vertex_sample_periodic_identification():
    mesh = build_structured_mesh(4, periodic_x=True)
    space = make_space(mesh, P1, 1)
    phi = interpolate(space, lambda x, y, t: np.sin(2 * np.pi * x) + y)
    sampled = vertex_sample(space, phi)
    assert sampled.shape == (mesh.n_vertices,)
    # identified right-edge vertices repeat their left partner's value
    for left, right in mesh.periodic_vertex_pairs:
        assert sampled[left] == sampled[right]


def test_field_name_with_space_rejected(tmp_path):
    mesh = build_structured_mesh(1)
    space = make_space(mesh, P1, 1)
    with pytest.raises(ValueError):
        write_vtk(mesh, {"bad name": (space, np.zeros(space.n_dofs))},
                  tmp_path / "bad.vtk")


def test_deterministic_bytes(tmp_path):
    mesh = build_structured_mesh(3)
    space = make_space(mesh, P1, 1)
    phi = interpolate(space, lambda x, y, t: np.cos(x * y))
    p1 = tmp_path / "a.vtk"
    p2 = tmp_path / "b.vtk"
    write_vtk(mesh, {"phi": (space, phi)}, p1)
    write_vtk(mesh, {"phi": (space, phi)}, p2)
    assert p1.read_bytes() == p2.read_bytes()
