"""Curve parameterizations and panel meshes."""

import numpy as np
import pytest

from scatamp.errors import InvalidParameterError
from scatamp.geometry import build_mesh, export_mesh_csv, make_curve


def test_disk_is_unit_circle():
    c = make_curve("disk", radius=1.0)
    t = np.linspace(0, 2 * np.pi, 17)
    assert np.allclose(c.position(t), np.stack([np.cos(t), np.sin(t)], axis=1))


def test_kite_parameterization():
    c = make_curve("kite", scale=1.0)
    t = np.linspace(0, 2 * np.pi, 50)
    expected = np.stack([np.cos(t) + 0.65 * np.cos(2 * t) - 0.65, 1.5 * np.sin(t)], axis=1)
    assert np.allclose(c.position(t), expected)


def test_invalid_parameters():
    with pytest.raises(InvalidParameterError):
        make_curve("disk", radius=-1.0)
    with pytest.raises(InvalidParameterError):
        make_curve("kite", scale=0.0)
    with pytest.raises(InvalidParameterError):
        make_curve("cshape", r_in=1.0, r_out=0.5)
    with pytest.raises(InvalidParameterError):
        make_curve("pentagon")


@pytest.mark.parametrize("shape", ["disk", "kite", "cshape"])
def test_curves_closed_and_counterclockwise(shape):
    c = make_curve(shape)
    t = np.linspace(0, 2 * np.pi, 2001)
    p = c.position(t)
    assert np.linalg.norm(p[0] - p[-1]) < 1e-12
    x, y = p[:-1, 0], p[:-1, 1]
    area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    assert area > 0
    nrm = c.normal(t)
    assert np.allclose(np.linalg.norm(nrm, axis=1), 1.0)


def test_cshape_tangent_continuity():
    # C^1 by construction: caps meet the arcs tangentially, constant speed
    c = make_curve("cshape")
    t = np.linspace(0, 2 * np.pi, 20001)
    tg = c.tangent(t)
    jumps = np.linalg.norm(np.diff(tg, axis=0), axis=1)
    assert jumps.max() < 5e-3


def test_mesh_square_inscribed():
    mesh = build_mesh(make_curve("disk"), 4)
    assert np.allclose(mesh.panel_lengths, np.sqrt(2.0))
    angles = np.array([0, np.pi / 2, np.pi, 3 * np.pi / 2])
    assert np.allclose(mesh.nodes, np.stack([np.cos(angles), np.sin(angles)], axis=1), atol=1e-14)


def test_mesh_perimeter_convergence():
    c = make_curve("disk")
    mesh = build_mesh(c, 200)
    perim = mesh.panel_lengths.sum()
    exact = 2 * np.pi
    assert abs(perim - exact) / exact < 1e-3
    # inscribed polygon formula 2 N sin(pi/N)
    assert perim == pytest.approx(2 * 200 * np.sin(np.pi / 200), rel=1e-12)
    # doubling the panel count at least halves the perimeter error
    for shape in ("disk", "kite", "cshape"):
        cc = make_curve(shape)
        ref = build_mesh(cc, 4096).panel_lengths.sum()
        e1 = abs(build_mesh(cc, 128).panel_lengths.sum() - ref)
        e2 = abs(build_mesh(cc, 256).panel_lengths.sum() - ref)
        assert e2 <= 0.5 * e1


def test_mesh_nodes_on_curve():
    c = make_curve("kite")
    mesh = build_mesh(c, 8)
    t = np.arange(8) * 2 * np.pi / 8
    assert np.allclose(mesh.nodes, c.position(t))


def test_outward_normals_disk():
    mesh = build_mesh(make_curve("disk"), 64)
    mids = 0.5 * (mesh.nodes + np.roll(mesh.nodes, -1, axis=0))
    mids /= np.linalg.norm(mids, axis=1, keepdims=True)
    dots = np.sum(mesh.outward_normals * mids, axis=1)
    assert dots.min() > 0.99


def test_every_node_in_two_panels():
    mesh = build_mesh(make_curve("cshape"), 32)
    counts = np.zeros(32, dtype=int)
    for a, b in mesh.panels:
        counts[a] += 1
        counts[b] += 1
    assert np.all(counts == 2)


def test_mesh_csv_export(tmp_path):
    mesh = build_mesh(make_curve("disk"), 8)
    path = tmp_path / "mesh.csv"
    export_mesh_csv(mesh, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "node_index,x,y"
    assert len(lines) == 9
    first = lines[1].split(",")
    assert int(first[0]) == 0
    assert float(first[1]) == pytest.approx(1.0)


def test_mesh_rejects_tiny_panel_count():
    with pytest.raises(InvalidParameterError):
        build_mesh(make_curve("disk"), 2)
