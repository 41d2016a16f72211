"""Meshes: construction, counts, normalization, validation, fixture.

Frozen counts come from tools/oracles/o05_mesh_counts.py.
"""

import numpy as np
import pytest

from elastonet.errors import (InvalidParameterError, MeshFormatError,
                              OutOfDomainError)
from elastonet.femesh import (QuadMesh, denormalize_coord, load_conforming,
                              load_fixture_mesh, make_rectilinear,
                              normalize_coord, save_mesh)


def test_rectilinear_counts():
    # tools/oracles/o05_mesh_counts.py: 35 nodes/edge -> 1225 nodes,
    # 1156 elements; 2 nodes/edge -> 4/1; 50x25 with 3 -> 9/4.
    m = make_rectilinear(50.0, 50.0, 35)
    assert m.n_nodes == 1225 and m.n_elements == 1156
    assert make_rectilinear(50.0, 50.0, 2).n_elements == 1
    assert make_rectilinear(50.0, 25.0, 3).n_nodes == 9


def test_rectilinear_geometry():
    m = make_rectilinear(50.0, 50.0, 35)
    lo, hi = m.bbox
    assert np.allclose(lo, [0.0, 0.0]) and np.allclose(hi, [50.0, 50.0])
    assert np.allclose(m.center, [25.0, 25.0])
    assert np.allclose(m.element_areas(),
                       (50.0 / 34.0) ** 2)
    assert len(m.bottom_nodes) == 35 and len(m.top_nodes) == 35
    assert np.allclose(m.nodes[m.bottom_nodes, 1], 0.0)
    assert np.allclose(m.nodes[m.top_nodes, 1], 50.0)


def test_rectilinear_validation():
    with pytest.raises(InvalidParameterError):
        make_rectilinear(50.0, 50.0, 1)
    with pytest.raises(InvalidParameterError):
        make_rectilinear(-1.0, 50.0, 5)


def test_normalize_coord_values():
    # tools/oracles/o05_mesh_counts.py: (25,25)->(0,0), (50,50)->(1,1),
    # (37.5,12.5)->(0.5,-0.5)
    m = make_rectilinear(50.0, 50.0, 35)
    assert np.allclose(normalize_coord(m, np.array([25.0, 25.0])), [0, 0])
    assert np.allclose(normalize_coord(m, np.array([50.0, 50.0])), [1, 1])
    assert np.allclose(normalize_coord(m, np.array([37.5, 12.5])),
                       [0.5, -0.5])
    batch = normalize_coord(m, np.array([[0.0, 0.0], [50.0, 25.0]]))
    assert np.allclose(batch, [[-1, -1], [1, 0]])


def test_normalize_roundtrip_and_domain():
    m = make_rectilinear(50.0, 50.0, 35)
    p = np.array([[3.0, 47.0], [25.0, 0.0]])
    assert np.allclose(denormalize_coord(m, normalize_coord(m, p)), p)
    with pytest.raises(OutOfDomainError):
        normalize_coord(m, np.array([51.0, 25.0]))
    with pytest.raises(OutOfDomainError):
        normalize_coord(m, np.array([25.0, -0.1]))


def test_fixture_mesh_shape():
    # tools/oracles/o05_mesh_counts.py: background 171 + patch 64 + 20
    # -> 235 elements total
    m = load_fixture_mesh()
    assert m.n_elements == 235
    assert m.n_nodes == 264
    lo, hi = m.bbox
    assert np.allclose(lo, [0.0, 0.0]) and np.allclose(hi, [50.0, 50.0])
    m.validate()


def test_save_load_roundtrip(tmp_path):
    m = make_rectilinear(40.0, 30.0, 4)
    path = tmp_path / "m.txt"
    save_mesh(m, path)
    back = load_conforming(path)
    assert np.array_equal(back.nodes, m.nodes)
    assert np.array_equal(back.elements, m.elements)
    assert np.array_equal(back.bottom_nodes, m.bottom_nodes)
    assert np.array_equal(back.top_nodes, m.top_nodes)


def test_load_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("trimesh 1\nNODES 0\nELEMENTS 0\nend\n")
    with pytest.raises(MeshFormatError):
        load_conforming(path)


def test_load_rejects_truncation(tmp_path):
    m = make_rectilinear(10.0, 10.0, 3)
    path = tmp_path / "m.txt"
    save_mesh(m, path)
    text = path.read_text().splitlines()
    path.write_text("\n".join(text[:5]))
    with pytest.raises(MeshFormatError):
        load_conforming(path)


def test_validate_rejects_dangling_reference():
    nodes = np.array([[0.0, 0], [1, 0], [1, 1], [0, 1]])
    elements = np.array([[0, 1, 2, 9]])
    with pytest.raises(MeshFormatError):
        QuadMesh(nodes, elements, np.array([0, 1]),
                 np.array([2, 3])).validate()


def test_validate_rejects_inverted_element():
    nodes = np.array([[0.0, 0], [1, 0], [1, 1], [0, 1]])
    elements = np.array([[0, 3, 2, 1]])     # clockwise -> negative det
    with pytest.raises(MeshFormatError):
        QuadMesh(nodes, elements, np.array([0, 1]),
                 np.array([2, 3])).validate()


def test_validate_rejects_degenerate_element():
    nodes = np.array([[0.0, 0], [1, 0], [1, 1], [0, 1]])
    elements = np.array([[0, 1, 1, 3]])
    with pytest.raises(MeshFormatError):
        QuadMesh(nodes, elements, np.array([0, 1]),
                 np.array([2, 3])).validate()


def test_with_moduli_samples_centroids():
    from elastonet.phantom import make_gaussian_inclusion
    m = make_rectilinear(50.0, 50.0, 3)
    field = make_gaussian_inclusion()
    loaded = m.with_moduli(field)
    cent = m.element_centroids()
    assert np.allclose(loaded.element_modulus,
                       field.eval(cent[:, 0], cent[:, 1]))
