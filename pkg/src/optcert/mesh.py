"""Uniform Friedrichs-Keller triangulations of the unit square.

Node ``k = j*(n+1) + i`` sits at ``(i/n, j/n)``. Every grid square is cut
by its lower-left to upper-right diagonal into the counter-clockwise
triangles ``(ll, lr, ur)`` and ``(ll, ur, ul)``.
"""
import csv
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True, eq=False)
class Mesh:
    n: int
    nodes: np.ndarray  # (N, 2)
    triangles: np.ndarray  # (T, 3) int64
    boundary_mask: np.ndarray  # (N,) bool
    h: float
    areas: np.ndarray = field(repr=False)  # (T,)
    grads: np.ndarray = field(repr=False)  # (T, 3, 2) gradients of the hat functions

    @property
    def num_nodes(self):
        return len(self.nodes)

    @property
    def num_triangles(self):
        return len(self.triangles)

    @property
    def interior(self):
        return np.flatnonzero(~self.boundary_mask)

    def locate(self, points):
        """Triangle index and barycentric coordinates for each point in the closed square."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        n = self.n
        sx, sy = pts[:, 0] * n, pts[:, 1] * n
        i = np.clip(np.floor(sx).astype(np.int64), 0, n - 1)
        j = np.clip(np.floor(sy).astype(np.int64), 0, n - 1)
        xi, eta = sx - i, sy - j
        lower = xi >= eta
        tri = 2 * (j * n + i) + np.where(lower, 0, 1)
        bary = np.where(
            lower[:, None],
            np.column_stack([1.0 - xi, xi - eta, eta]),
            np.column_stack([1.0 - eta, xi, eta - xi]),
        )
        return tri, bary


def build_uniform(n):
    """Uniform triangulation of (0,1)^2 with ``n`` subdivisions per side."""
    if int(n) != n or n < 2:
        raise ValueError(f"need an integer n >= 2, got {n!r}")
    n = int(n)
    g = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(g, g)  # row j is y = j/n
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    jj, ii = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    ll = (jj * (n + 1) + ii).ravel()
    lr, ul = ll + 1, ll + n + 1
    ur = ul + 1
    tris = np.empty((2 * n * n, 3), dtype=np.int64)
    tris[0::2] = np.column_stack([ll, lr, ur])
    tris[1::2] = np.column_stack([ll, ur, ul])

    on_edge = (X == 0.0) | (X == 1.0) | (Y == 0.0) | (Y == 1.0)
    areas, grads = _geometry(nodes, tris)
    return Mesh(
        n=n,
        nodes=nodes,
        triangles=tris,
        boundary_mask=on_edge.ravel(),
        h=float(np.sqrt(2.0) / n),
        areas=areas,
        grads=grads,
    )


def _geometry(nodes, tris):
    p = nodes[tris]  # (T, 3, 2)
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    # rows of inv(B)^T give grad(lambda_1), grad(lambda_2)
    g1 = np.column_stack([e2[:, 1], -e2[:, 0]]) / det[:, None]
    g2 = np.column_stack([-e1[:, 1], e1[:, 0]]) / det[:, None]
    grads = np.stack([-(g1 + g2), g1, g2], axis=1)
    return 0.5 * det, grads


# --- state-constraint regions -------------------------------------------------


@dataclass(frozen=True)
class Region:
    """Descriptor of the compact set K carrying the nodal state constraints.

    ``kind`` is one of ``none``, ``all-interior``, ``box`` or ``predicate``.
    """

    kind: str = "none"
    box: Optional[tuple] = None  # (x0, x1, y0, y1), closed
    predicate: Optional[Callable] = None

    @classmethod
    def none(cls):
        return cls("none")

    @classmethod
    def all_interior(cls):
        return cls("all-interior")

    @classmethod
    def from_box(cls, x0, x1, y0, y1):
        if x0 > x1 or y0 > y1:
            raise ValueError("empty box")
        return cls("box", box=(float(x0), float(x1), float(y0), float(y1)))

    @classmethod
    def from_predicate(cls, fn):
        return cls("predicate", predicate=fn)

    def contains(self, x):
        x = np.atleast_2d(x)
        if self.kind == "none":
            return np.zeros(len(x), dtype=bool)
        if self.kind == "all-interior":
            return np.all((x > 0.0) & (x < 1.0), axis=1)
        if self.kind == "box":
            x0, x1, y0, y1 = self.box
            return (x[:, 0] >= x0) & (x[:, 0] <= x1) & (x[:, 1] >= y0) & (x[:, 1] <= y1)
        return np.asarray(self.predicate(x), dtype=bool)


@dataclass(frozen=True)
class ConstraintNodeSet:
    indices: np.ndarray
    region: Region

    def __len__(self):
        return len(self.indices)


def _box_meets_open_triangles(mesh, box, tol=1e-14):
    """Separating-axis test: open triangle versus closed box, per triangle."""
    x0, x1, y0, y1 = box
    corners = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    p = mesh.nodes[mesh.triangles]  # (T, 3, 2)
    axes = [np.broadcast_to([1.0, 0.0], (len(p), 2)), np.broadcast_to([0.0, 1.0], (len(p), 2))]
    for k in range(3):
        e = p[:, (k + 1) % 3] - p[:, k]
        axes.append(np.column_stack([-e[:, 1], e[:, 0]]))
    hit = np.ones(len(p), dtype=bool)
    for ax in axes:
        tp = np.einsum("tkd,td->tk", p, ax)
        bp = ax @ corners.T  # (T, 4)
        scale = tol * (1.0 + np.abs(ax).sum(axis=1))
        separated = (tp.max(axis=1) <= bp.min(axis=1) + scale) | (bp.max(axis=1) <= tp.min(axis=1) + scale)
        hit &= ~separated
    return hit


def constraint_nodes(mesh, region):
    """Vertices of the (open) triangles meeting ``region``."""
    if region.kind == "none":
        idx = np.empty(0, dtype=np.int64)
    elif region.kind == "all-interior":
        idx = mesh.interior
    else:
        if region.kind == "box":
            hit = _box_meets_open_triangles(mesh, region.box)
        else:
            p = mesh.nodes[mesh.triangles]
            samples = [p[:, 0], p[:, 1], p[:, 2],
                       0.5 * (p[:, 0] + p[:, 1]), 0.5 * (p[:, 1] + p[:, 2]), 0.5 * (p[:, 2] + p[:, 0]),
                       p.mean(axis=1)]
            hit = np.zeros(mesh.num_triangles, dtype=bool)
            for s in samples:
                hit |= region.contains(s)
        idx = np.unique(mesh.triangles[hit])
    return ConstraintNodeSet(np.asarray(idx, dtype=np.int64), region)


def export_mesh_csv(mesh, nodes_path, triangles_path):
    """Write ``x,y,flag`` node rows and ``i,j,k`` triangle rows (0-based)."""
    with open(nodes_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "flag"])
        for (x, y), b in zip(mesh.nodes, mesh.boundary_mask):
            w.writerow([repr(float(x)), repr(float(y)), int(b)])
    with open(triangles_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "k"])
        w.writerows(mesh.triangles.tolist())
