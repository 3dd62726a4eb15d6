"""P1 finite elements on :class:`~optcert.mesh.Mesh`.

Full-size vectors and matrices are indexed by all mesh nodes; the state and
adjoint unknowns live on ``mesh.interior`` (homogeneous Dirichlet data).
"""
import csv
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernels
from .linalg import solve_spd
from .quadrature import conical, dunavant8, rule_for_degree

log = logging.getLogger(__name__)


class NewtonDivergence(RuntimeError):
    def __init__(self, msg, residual, iterations):
        super().__init__(f"{msg}: residual {residual:.3e} after {iterations} iterations")
        self.residual = residual
        self.iterations = iterations


@dataclass(eq=False)
class P1Function:
    mesh: object
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.mesh.num_nodes,):
            raise ValueError(
                f"expected {self.mesh.num_nodes} nodal values, got shape {self.values.shape}"
            )

    @classmethod
    def zeros(cls, mesh):
        return cls(mesh, np.zeros(mesh.num_nodes))

    @classmethod
    def interpolate(cls, mesh, fn):
        return cls(mesh, np.asarray(fn(mesh.nodes), dtype=float))

    @classmethod
    def from_interior(cls, mesh, vals):
        full = np.zeros(mesh.num_nodes)
        full[mesh.interior] = vals
        return cls(mesh, full)

    def in_xh0(self, tol=0.0):
        return bool(np.all(np.abs(self.values[self.mesh.boundary_mask]) <= tol))

    def vertex_values(self):
        return self.values[self.mesh.triangles]

    def evaluate(self, points):
        tri, bary = self.mesh.locate(points)
        return np.einsum("pi,pi->p", bary, self.values[self.mesh.triangles[tri]])

    def to_csv(self, path):
        """Write ``x,y,value`` rows in node order."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "value"])
            for (x, y), v in zip(self.mesh.nodes, self.values):
                w.writerow([repr(float(x)), repr(float(y)), repr(float(v))])


# --- scatter helpers -----------------------------------------------------------


def scatter_vector(mesh, local):
    return np.bincount(mesh.triangles.ravel(), weights=local.ravel(), minlength=mesh.num_nodes)


def scatter_matrix(mesh, local):
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    A = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(mesh.num_nodes,) * 2).tocsr()
    A.sum_duplicates()
    return A


def quad_points(mesh, rule):
    """Physical quadrature points, shape (T, nq, 2)."""
    return np.einsum("qi,tid->tqd", rule.points, mesh.nodes[mesh.triangles])


def quad_values(mesh, values, rule):
    """Nodal P1 data evaluated at quadrature points, shape (T, nq)."""
    return values[mesh.triangles] @ rule.points.T


def sample(mesh, fn, rule):
    """Analytic function sampled at quadrature points, shape (T, nq)."""
    pts = quad_points(mesh, rule)
    return np.asarray(fn(pts.reshape(-1, 2)), dtype=float).reshape(pts.shape[:2])


def integrate(mesh, coef, rule):
    """int over the domain of data given at quadrature points."""
    return float(np.sum(mesh.areas * (coef @ rule.weights)))


def weighted_vector(mesh, coef, rule):
    """Full vector ``int c psi_i`` for data ``c`` at quadrature points."""
    loc = kernels.weighted_vector(np.ascontiguousarray(coef), rule.points, rule.weights, mesh.areas)
    return scatter_vector(mesh, loc)


def weighted_matrix(mesh, coef, rule):
    """Full matrix ``int c psi_i psi_j``."""
    loc = kernels.weighted_matrix(np.ascontiguousarray(coef), rule.points, rule.weights, mesh.areas)
    return scatter_matrix(mesh, loc)


# --- linear forms ----------------------------------------------------------------


def assemble_stiffness(mesh):
    G = mesh.grads
    local = mesh.areas[:, None, None] * np.einsum("tid,tjd->tij", G, G)
    return scatter_matrix(mesh, local)


_MASS_REF = (np.ones((3, 3)) + np.eye(3)) / 12.0


def assemble_mass(mesh):
    return scatter_matrix(mesh, mesh.areas[:, None, None] * _MASS_REF)


def restrict(mesh, A):
    I = mesh.interior
    return A[I][:, I].tocsr()


# --- loads -----------------------------------------------------------------------


class ZeroLoad:
    def load_vector(self, mesh):
        return np.zeros(mesh.num_nodes)

    def l2_squared(self, mesh):
        return 0.0


@dataclass(eq=False)
class P1Load:
    """Control given by nodal values (all nodes, boundary included)."""

    values: np.ndarray

    def load_vector(self, mesh):
        return assemble_mass(mesh) @ self.values

    def l2_squared(self, mesh):
        return float(self.values @ (assemble_mass(mesh) @ self.values))


@dataclass(eq=False)
class AnalyticLoad:
    """Control given as a vectorized function of points (m, 2) -> (m,)."""

    fn: object
    rule: object = None

    def _rule(self):
        return self.rule or dunavant8()

    def load_vector(self, mesh):
        r = self._rule()
        return weighted_vector(mesh, sample(mesh, self.fn, r), r)

    def l2_squared(self, mesh):
        r = self._rule()
        return integrate(mesh, sample(mesh, self.fn, r) ** 2, r)


def as_load(u):
    if u is None:
        return ZeroLoad()
    if hasattr(u, "load_vector"):
        return u
    if isinstance(u, P1Function):
        return P1Load(u.values)
    if callable(u):
        return AnalyticLoad(u)
    return P1Load(np.asarray(u, dtype=float))


# --- semilinear forms ---------------------------------------------------------------


def nonlinear_vector(mesh, fn, y, rule=None):
    """Full vector ``int fn(y_h) psi_i``."""
    rule = rule or dunavant8()
    return weighted_vector(mesh, fn(quad_values(mesh, y, rule)), rule)


def nonlinear_matrix(mesh, fn, y, rule=None, weight=None):
    """Full matrix ``int fn(y_h) [w_h] psi_i psi_j`` (optional P1 weight ``w_h``)."""
    rule = rule or dunavant8()
    coef = fn(quad_values(mesh, y, rule))
    if weight is not None:
        coef = coef * quad_values(mesh, weight, rule)
    return weighted_matrix(mesh, coef, rule)


def _values(y):
    return y.values if isinstance(y, P1Function) else np.asarray(y, dtype=float)


def assemble_semilinear_residual(mesh, phi, y, u_load, rule=None, A=None):
    """Interior residual ``A y + N(y) - b(u)`` of the discrete state equation."""
    yv = _values(y)
    A = assemble_stiffness(mesh) if A is None else A
    r = A @ yv + nonlinear_vector(mesh, phi.phi, yv, rule) - as_load(u_load).load_vector(mesh)
    return r[mesh.interior]


def assemble_semilinear_jacobian(mesh, phi, y, rule=None, A=None):
    """Interior block of ``A + W(y)``, ``W_ij = int phi'(y_h) psi_i psi_j``."""
    yv = _values(y)
    A = assemble_stiffness(mesh) if A is None else A
    return restrict(mesh, A + nonlinear_matrix(mesh, phi.dphi, yv, rule))


STATE_TOL = 1e-12
STATE_MAX_ITER = 50
MAX_HALVINGS = 30


def solve_state(mesh, phi, u_load, tol=STATE_TOL, max_iter=STATE_MAX_ITER, y0=None):
    """Damped Newton for the discrete state equation, started from zero (or ``y0``)."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    A = assemble_stiffness(mesh)
    b = as_load(u_load).load_vector(mesh)
    I = mesh.interior
    y = np.zeros(mesh.num_nodes) if y0 is None else _values(y0).copy()
    y[mesh.boundary_mask] = 0.0

    def residual(v):
        return (A @ v + nonlinear_vector(mesh, phi.phi, v) - b)[I]

    r = residual(y)
    rn = np.abs(r).max(initial=0.0)
    for it in range(max_iter + 1):
        if rn <= tol:
            return P1Function(mesh, y)
        if it == max_iter:
            break
        J = restrict(mesh, A + nonlinear_matrix(mesh, phi.dphi, y))
        d = solve_spd(J, -r)
        step = 1.0
        for _ in range(MAX_HALVINGS + 1):
            trial = y.copy()
            trial[I] += step * d
            rt = residual(trial)
            rtn = np.abs(rt).max(initial=0.0)
            if rtn < rn or rtn <= tol:
                break
            step *= 0.5
        y, r, rn = trial, rt, rtn
    raise NewtonDivergence("state Newton did not converge", rn, max_iter)


def ritz_projection(mesh, w, grad=None):
    """Stiffness-orthogonal projection of ``w`` onto X_h0.

    ``w`` is either a :class:`P1Function` or a vectorized function of points,
    in which case ``grad`` (points (m, 2) -> (m, 2)) supplies its gradient.
    """
    A = assemble_stiffness(mesh)
    I = mesh.interior
    if isinstance(w, P1Function):
        rhs = A @ w.values
    else:
        if grad is None:
            raise ValueError("an analytic w needs its gradient")
        rule = dunavant8()
        pts = quad_points(mesh, rule)
        g = np.asarray(grad(pts.reshape(-1, 2)), dtype=float).reshape(pts.shape)
        # int grad w . grad lambda_i over each triangle
        local = mesh.areas[:, None] * np.einsum("q,tqd,tid->ti", rule.weights, g, mesh.grads)
        rhs = scatter_vector(mesh, local)
    return P1Function.from_interior(mesh, solve_spd(restrict(mesh, A), rhs[I]))


# --- norms --------------------------------------------------------------------------


def lq_norm(f, q):
    """(int |f_h|^q)^(1/q) for a P1 function.

    Even integer q: quadrature of degree >= q (exact). Odd integer q: exact,
    triangles are split along the zero line of f_h. Other q: a degree-12
    rule, which is not exact.
    """
    if not q >= 2:
        raise ValueError(f"q must be at least 2, got {q!r}")
    q = float(q)
    mesh = f.mesh
    # q often arrives as (3r-2)/(r-1) in floating point, e.g. 6.000000000000002
    if abs(q - round(q)) <= 1e-12 * q:
        q = float(round(q))
    if q.is_integer():
        qi = int(q)
        if qi % 2 == 0:
            rule = rule_for_degree(qi)
            total = integrate(mesh, quad_values(mesh, f.values, rule) ** qi, rule)
        else:
            fv = np.ascontiguousarray(f.vertex_values())
            total = float(np.sum(kernels.abs_power_integrals(fv, qi, mesh.areas)))
    else:
        rule = conical(12)
        total = integrate(mesh, np.abs(quad_values(mesh, f.values, rule)) ** q, rule)
    return total ** (1.0 / q)


def l2_distance_squared(f, fn, rule=None):
    """int (f_h - fn)^2 with ``fn`` analytic (or None for zero)."""
    rule = rule or dunavant8()
    mesh = f.mesh
    vals = quad_values(mesh, f.values, rule)
    if fn is not None:
        vals = vals - sample(mesh, fn, rule)
    return integrate(mesh, vals**2, rule)
