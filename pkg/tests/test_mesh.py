import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optcert.mesh import Region, build_uniform, constraint_nodes, export_mesh_csv


def test_n2_counts():
    m = build_uniform(2)
    assert m.num_nodes == 9
    assert m.num_triangles == 8
    assert m.h == pytest.approx(math.sqrt(2) / 2, abs=1e-15)


def test_n32_mesh_size():
    assert build_uniform(32).h == pytest.approx(2.0**-5 * math.sqrt(2.0), abs=1e-16)


@pytest.mark.parametrize("n", [2, 3, 4, 7, 16])
def test_structural_invariants(n):
    m = build_uniform(n)
    p = m.nodes[m.triangles]
    signed = 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                    - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
    assert np.allclose(signed, 1.0 / (2 * n * n), rtol=1e-13)
    assert np.allclose(m.areas, signed)
    assert abs(m.areas.sum() - 1.0) <= 1e-14
    counts = np.bincount(m.triangles.ravel(), minlength=m.num_nodes)
    assert np.all(counts[m.interior] == 6)
    corners = [0, n, n * (n + 1), (n + 1) ** 2 - 1]
    assert set(counts[corners]) <= {1, 2}
    on_bdry = np.any((m.nodes == 0.0) | (m.nodes == 1.0), axis=1)
    assert np.array_equal(m.boundary_mask, on_bdry)
    assert len(m.interior) == (n - 1) ** 2


def test_constant_function_integrates_to_one(mesh8):
    # sum over triangles of area * (mean of nodal values of the constant 1)
    assert mesh8.areas @ np.ones(mesh8.num_triangles) == pytest.approx(1.0, abs=1e-14)


def test_hat_gradients_sum_to_zero(mesh4):
    assert np.allclose(mesh4.grads.sum(axis=1), 0.0, atol=1e-12)


@pytest.mark.parametrize("bad", [1, 0, -3, 2.5])
def test_rejects_small_n(bad):
    with pytest.raises(ValueError):
        build_uniform(bad)


def test_locate_reconstructs_points(mesh8, rng):
    pts = rng.uniform(0, 1, size=(500, 2))
    pts[:4] = [[0, 0], [1, 1], [1, 0], [0.5, 0.5]]
    tri, bary = mesh8.locate(pts)
    assert np.all(bary >= -1e-14)
    assert np.allclose(bary.sum(axis=1), 1.0)
    rebuilt = np.einsum("pi,pid->pd", bary, mesh8.nodes[mesh8.triangles[tri]])
    assert np.allclose(rebuilt, pts, atol=1e-14)


def test_region_none_is_empty(mesh4):
    assert len(constraint_nodes(mesh4, Region.none())) == 0


def test_region_all_interior_n4(mesh4):
    s = constraint_nodes(mesh4, Region.all_interior())
    assert len(s) == 9
    assert np.array_equal(s.indices, mesh4.interior)


def _brute_force_box_nodes(mesh, box, k=40):
    """Open triangle meets the closed box iff one of many strictly interior sample points does."""
    x0, x1, y0, y1 = box
    ij = [(a, b) for a in range(1, k) for b in range(1, k - a)]
    bary = np.array([[a / k, b / k, 1 - (a + b) / k] for a, b in ij])
    hit = []
    for t, tri in enumerate(mesh.triangles):
        pts = bary @ mesh.nodes[tri]
        inside = (pts[:, 0] >= x0) & (pts[:, 0] <= x1) & (pts[:, 1] >= y0) & (pts[:, 1] <= y1)
        if inside.any():
            hit.extend(tri)
    return np.unique(hit)


def test_box_region_matches_brute_force(mesh4):
    box = (0.25, 0.75, 0.25, 0.75)
    got = constraint_nodes(mesh4, Region.from_box(*box)).indices
    assert np.array_equal(got, _brute_force_box_nodes(mesh4, box))


def test_box_with_positive_distance_uses_interior_nodes(mesh8):
    got = constraint_nodes(mesh8, Region.from_box(0.3, 0.6, 0.2, 0.7)).indices
    assert np.all(~mesh8.boundary_mask[got])
    assert np.array_equal(got, np.unique(got))


def test_predicate_region(mesh8):
    disc = Region.from_predicate(lambda x: (x[:, 0] - 0.5) ** 2 + (x[:, 1] - 0.5) ** 2 <= 0.04)
    got = constraint_nodes(mesh8, disc).indices
    assert len(got) > 0 and np.all(~mesh8.boundary_mask[got])
    center = 4 * 9 + 4
    assert center in got


boxes = st.tuples(*[st.floats(0.0, 1.0)] * 4).map(
    lambda t: (min(t[0], t[1]), max(t[0], t[1]), min(t[2], t[3]), max(t[2], t[3]))
)


@settings(max_examples=60, deadline=None)
@given(boxes, st.floats(0.0, 0.2))
def test_constraint_nodes_monotone(box, grow):
    m = build_uniform(6)
    x0, x1, y0, y1 = box
    big = (max(0, x0 - grow), min(1, x1 + grow), max(0, y0 - grow), min(1, y1 + grow))
    small_set = set(constraint_nodes(m, Region.from_box(*box)).indices)
    big_set = set(constraint_nodes(m, Region.from_box(*big)).indices)
    assert small_set <= big_set


def test_export_csv(tmp_path, mesh4):
    npath, tpath = tmp_path / "nodes.csv", tmp_path / "tris.csv"
    export_mesh_csv(mesh4, npath, tpath)
    with open(npath) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x", "y", "flag"] and len(rows) == 26
    with open(tpath) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["i", "j", "k"] and len(rows) == 33
    assert [int(v) for v in rows[1]] == list(mesh4.triangles[0])
