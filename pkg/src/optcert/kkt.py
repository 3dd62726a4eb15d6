"""First-order system of the variationally discretized control problem.

Unknowns are the interior nodal values of the state y and adjoint p, plus one
multiplier per state-constraint node. The control is never discretized: it is
recovered as ``u = clamp(-p_h/alpha, u_a, u_b)`` and integrated exactly (the
linear function ``-p_h/alpha`` is split along the clamp level lines).

The system is solved by semismooth Newton (primal-dual active sets for the
state constraints, generalized derivative of the projection for the control):

    F1 = A y + N(y) - b(u(p))
    F2 = (A + W(y)) p - (M y - l0) - E mu
    F3 = mu - max(0, mu + c (y - y_b)) - min(0, mu + c (y - y_a))

with ``l0_i = int y0 psi_i`` and ``E`` the injection of constraint nodes.

``l0`` is computed with the one-point centroid rule by default. The published
reference tables were produced that way: for non-constant y0 their adjoint
norms agree with it to ~1e-10, and differ by ~2e-3 from exact integration.
``y0_rule="degree8"`` integrates ``l0`` exactly up to O(h^8).
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse as sp

from . import fem, kernels
from .fem import NewtonDivergence, P1Function
from .linalg import LinearSolverError, solve_general
from .mesh import Region, constraint_nodes
from .nonlinearity import Nonlinearity
from .quadrature import centroid_rule, dunavant8

Y0_RULES = {"centroid": centroid_rule, "degree8": dunavant8}

log = logging.getLogger(__name__)

Bound = Union[float, Callable]


class InfeasibleSpecError(ValueError):
    pass


@dataclass(frozen=True)
class OcpSpec:
    """Problem data. Bounds may be +-inf; ``ya``/``yb`` may be functions of points (m, 2)."""

    alpha: float
    phi: Nonlinearity
    y0: Optional[Callable] = None
    ua: float = -math.inf
    ub: float = math.inf
    ya: Bound = -math.inf
    yb: Bound = math.inf
    region: Region = field(default_factory=Region.none)

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be positive and finite, got {self.alpha!r}")
        if not self.ua <= self.ub:
            raise InfeasibleSpecError(f"u_a = {self.ua} exceeds u_b = {self.ub}")

    def with_alpha(self, alpha):
        return replace(self, alpha=alpha)

    @property
    def has_state_constraints(self):
        return self.region.kind != "none" and not (
            _is_const(self.ya, -math.inf) and _is_const(self.yb, math.inf)
        )


def _is_const(b, val):
    return not callable(b) and float(b) == val


def eval_bound(b, pts):
    if callable(b):
        return np.asarray(b(pts), dtype=float).reshape(len(pts))
    return np.full(len(pts), float(b))


def _y0_fn(spec):
    y0 = spec.y0
    if y0 is None or callable(y0):
        return y0
    c = float(y0)
    return lambda x: np.full(len(x), c)


# --- control -------------------------------------------------------------------


class ProjectedControl:
    """``x -> clamp(-p_h(x)/alpha, ua, ub)``; a load descriptor for :mod:`optcert.fem`.

    With ``approx=True`` the clamp is sampled at the degree-8 quadrature
    points instead of being split exactly (cheaper, not exact on kinked triangles).
    """

    def __init__(self, mesh, p_values, alpha, ua=-math.inf, ub=math.inf, approx=False):
        self.mesh = mesh
        self.p = np.asarray(p_values, dtype=float)
        self.alpha = float(alpha)
        self.ua, self.ub = float(ua), float(ub)
        self.approx = approx
        self._cache = None

    @property
    def unbounded(self):
        return self.ua == -math.inf and self.ub == math.inf

    def nodal_values(self):
        return np.clip(-self.p / self.alpha, self.ua, self.ub)

    def evaluate(self, points):
        g = P1Function(self.mesh, -self.p / self.alpha).evaluate(points)
        return np.clip(g, self.ua, self.ub)

    def _integrals(self, mesh):
        if mesh is not self.mesh:
            raise ValueError("control was built on a different mesh")
        if self._cache is not None:
            return self._cache
        g = np.ascontiguousarray(-self.p[mesh.triangles] / self.alpha)
        if self.unbounded:
            M = fem.assemble_mass(mesh)
            gv = -self.p / self.alpha
            res = (M @ gv, M, float(gv @ (M @ gv)), 0.0)
        elif self.approx:
            rule = dunavant8()
            gq = g @ rule.points.T
            uq = np.clip(gq, self.ua, self.ub)
            free = ((gq > self.ua) & (gq < self.ub)).astype(float)
            res = (
                fem.weighted_vector(mesh, uq, rule),
                fem.weighted_matrix(mesh, free, rule),
                fem.integrate(mesh, uq**2, rule),
                fem.integrate(mesh, 1.0 - free, rule),
            )
        else:
            load, fmass, u2, clamped = kernels.clamp_integrals(g, self.ua, self.ub, mesh.areas)
            res = (
                fem.scatter_vector(mesh, load),
                fem.scatter_matrix(mesh, fmass),
                float(u2.sum()),
                float(clamped.sum()),
            )
        self._cache = res
        return res

    def load_vector(self, mesh):
        """Full vector ``int u psi_i``."""
        return self._integrals(mesh)[0]

    def free_mass(self, mesh):
        """Full matrix ``int_{ua < -p/alpha < ub} psi_i psi_j``."""
        return self._integrals(mesh)[1]

    def l2_squared(self, mesh):
        return self._integrals(mesh)[2]

    def clamped_measure(self, mesh):
        """Area of the region where the projection clamps (the domain has unit area)."""
        return self._integrals(mesh)[3]


def control_from_adjoint(p, spec, approx=False):
    return ProjectedControl(p.mesh, p.values, spec.alpha, spec.ua, spec.ub, approx=approx)


# --- discrete problem ----------------------------------------------------------------


class Discretization:
    """Mesh-dependent pieces of a spec that do not change during Newton."""

    def __init__(self, spec, mesh, approx_clamp=False, y0_rule="centroid"):
        self.spec = spec
        self.mesh = mesh
        self.approx_clamp = approx_clamp
        self.I = mesh.interior
        self.ni = len(self.I)
        self.A = fem.assemble_stiffness(mesh)
        self.M = fem.assemble_mass(mesh)
        self.A_I = fem.restrict(mesh, self.A)
        self.M_I = fem.restrict(mesh, self.M)
        y0 = _y0_fn(spec)
        if y0 is None:
            self.l0 = np.zeros(mesh.num_nodes)
            self.l0_exact = self.l0
            self.y0_sq = 0.0
        else:
            lrule = Y0_RULES[y0_rule]()
            self.l0 = fem.weighted_vector(mesh, fem.sample(mesh, y0, lrule), lrule)
            rule = dunavant8()
            y0q = fem.sample(mesh, y0, rule)
            self.y0_sq = fem.integrate(mesh, y0q**2, rule)
            self.l0_exact = fem.weighted_vector(mesh, y0q, rule)
        self._setup_constraints()

    def _setup_constraints(self):
        spec, mesh = self.spec, self.mesh
        pos = -np.ones(mesh.num_nodes, dtype=np.int64)
        pos[self.I] = np.arange(self.ni)
        if not spec.has_state_constraints:
            self.cnodes = np.zeros(0, dtype=np.int64)
        else:
            nodes = constraint_nodes(mesh, spec.region).indices
            ya = eval_bound(spec.ya, mesh.nodes[nodes])
            yb = eval_bound(spec.yb, mesh.nodes[nodes])
            bad = ~(ya < yb)
            if np.any(bad):
                j = nodes[np.argmax(bad)]
                raise InfeasibleSpecError(f"y_a >= y_b at constraint node {j} {mesh.nodes[j]}")
            bnd = mesh.boundary_mask[nodes]
            # boundary nodes carry y_h = 0: no unknown, but the bounds must admit it
            if np.any((ya[bnd] > 0.0) | (yb[bnd] < 0.0)):
                raise InfeasibleSpecError("state bounds exclude zero at a boundary constraint node")
            self.cnodes = nodes[~bnd]
        self.nc = len(self.cnodes)
        self.cpos = pos[self.cnodes]  # positions within the interior unknowns
        self.ya = eval_bound(self.spec.ya, mesh.nodes[self.cnodes])
        self.yb = eval_bound(self.spec.yb, mesh.nodes[self.cnodes])
        self.E = sp.csr_matrix(
            (np.ones(self.nc), (self.cpos, np.arange(self.nc))), shape=(self.ni, self.nc)
        )

    # vector layout: [y_I, p_I, mu]
    def split(self, x):
        n = self.ni
        return x[:n], x[n : 2 * n], x[2 * n :]

    def full(self, v):
        out = np.zeros(self.mesh.num_nodes)
        out[self.I] = v
        return out

    def control(self, p_full):
        s = self.spec
        return ProjectedControl(self.mesh, p_full, s.alpha, s.ua, s.ub, approx=self.approx_clamp)

    def residual(self, x, c=1.0):
        spec, mesh, I = self.spec, self.mesh, self.I
        yI, pI, mu = self.split(x)
        y, p = self.full(yI), self.full(pI)
        u = self.control(p)
        F1 = (self.A @ y + fem.nonlinear_vector(mesh, spec.phi.phi, y) - u.load_vector(mesh))[I]
        F2 = (
            self.A @ p
            + fem.nonlinear_matrix(mesh, spec.phi.dphi, y) @ p
            - (self.M @ y - self.l0)
        )[I] - self.E @ mu
        F3 = complementarity(mu, yI[self.cpos], self.ya, self.yb, c)
        return np.concatenate([F1, F2, F3]), u

    def jacobian(self, x, u, c=1.0):
        spec, mesh = self.spec, self.mesh
        yI, pI, mu = self.split(x)
        y, p = self.full(yI), self.full(pI)
        AW = fem.restrict(mesh, self.A + fem.nonlinear_matrix(mesh, spec.phi.dphi, y))
        H = fem.restrict(mesh, fem.nonlinear_matrix(mesh, spec.phi.ddphi, y, weight=p))
        Mf = fem.restrict(mesh, u.free_mass(mesh)) / spec.alpha
        act_a, act_b = active_sets(mu, yI[self.cpos], self.ya, self.yb, c)
        act = (act_a | act_b).astype(float)
        nc = self.nc
        D_y = sp.csr_matrix((-c * act, (np.arange(nc), self.cpos)), shape=(nc, self.ni))
        D_mu = sp.diags(1.0 - act, format="csr", shape=(nc, nc))
        return sp.bmat(
            [
                [AW, Mf, None],
                [H - self.M_I, AW, -self.E],
                [D_y, None, D_mu],
            ],
            format="csr",
        )

    def objective(self, y_full, u):
        """J_h = 1/2 ||y_h - y0||^2 + alpha/2 ||u||^2.

        Always evaluated with the degree-8 rule for y0, independent of the
        rule used for the adjoint load.
        """
        track = 0.5 * (y_full @ (self.M @ y_full) - 2.0 * y_full @ self.l0_exact + self.y0_sq)
        return float(max(track, 0.0) + 0.5 * self.spec.alpha * u.l2_squared(self.mesh))


def complementarity(mu, y, ya, yb, c=1.0):
    """Nodal PDAS function; vanishes iff ya <= y <= yb, mu >= 0 where y = yb,
    mu <= 0 where y = ya, and mu = 0 where neither bound is attained."""
    with np.errstate(invalid="ignore"):
        up = np.where(np.isinf(yb), 0.0, np.maximum(0.0, mu + c * (y - yb)))
        lo = np.where(np.isinf(ya), 0.0, np.minimum(0.0, mu + c * (y - ya)))
    return mu - up - lo


def active_sets(mu, y, ya, yb, c=1.0):
    with np.errstate(invalid="ignore"):
        act_b = np.isfinite(yb) & (mu + c * (y - yb) > 0.0)
        act_a = np.isfinite(ya) & (mu + c * (y - ya) < 0.0)
    return act_a, act_b


# --- solutions -----------------------------------------------------------------------


@dataclass(eq=False)
class KktSolution:
    spec: OcpSpec
    y: P1Function
    p: P1Function
    mu: np.ndarray  # one value per constraint node
    constraint_nodes: np.ndarray  # global node indices matching ``mu``
    iterations: int
    residual_inf: float
    active_lower: np.ndarray
    active_upper: np.ndarray
    control_active_measure: float  # area fraction where the projection clamps
    J: float
    control: ProjectedControl = field(repr=False)
    residual_parts: tuple = (0.0, 0.0, 0.0)  # inf-norms of F1, F2, F3

    @property
    def mesh(self):
        return self.y.mesh

    def mu_split(self):
        """(mu_a, mu_b) as nodal arrays over all mesh nodes (zero off the constraint set)."""
        mu_a = np.zeros(self.mesh.num_nodes)
        mu_b = np.zeros(self.mesh.num_nodes)
        mu_a[self.constraint_nodes] = np.maximum(-self.mu, 0.0)
        mu_b[self.constraint_nodes] = np.maximum(self.mu, 0.0)
        return mu_a, mu_b

    def as_initial(self):
        return self.y.values, self.p.values, self.mu


@dataclass
class SolveOptions:
    tol: float = 1e-10
    max_iter: int = 100
    c: float = 1.0
    approx_clamp: bool = False
    y0_rule: str = "centroid"  # rule for int y0 psi_i, a key of Y0_RULES
    max_halvings: int = 30
    armijo: float = 1e-4
    initial: Optional[tuple] = None  # (y, p, mu) nodal arrays, or a KktSolution


def _initial_vector(disc, init):
    x = np.zeros(2 * disc.ni + disc.nc)
    if init is None:
        return x
    if isinstance(init, KktSolution):
        init = init.as_initial()
    y, p, mu = init
    x[: disc.ni] = np.asarray(y, dtype=float)[disc.I]
    x[disc.ni : 2 * disc.ni] = np.asarray(p, dtype=float)[disc.I]
    mu = np.asarray(mu, dtype=float)
    if mu.shape == (disc.nc,):
        x[2 * disc.ni :] = mu
    return x


def kkt_residual(y, p, mu, spec, approx_clamp=False, c=1.0, y0_rule="centroid"):
    """Stacked residual [F1, F2, F3] for nodal ``y``, ``p`` (P1Functions) and ``mu``."""
    disc = Discretization(spec, y.mesh, approx_clamp, y0_rule)
    x = _initial_vector(disc, (y.values, p.values, mu))
    return disc.residual(x, c)[0]


def solve_kkt(spec, mesh, options=None, **kw):
    """Semismooth Newton with Armijo backtracking on ||F||_2."""
    opts = options or SolveOptions()
    if kw:
        opts = replace(opts, **kw)
    disc = Discretization(spec, mesh, opts.approx_clamp, opts.y0_rule)
    x = _initial_vector(disc, opts.initial)
    F, u = disc.residual(x, opts.c)
    fn = np.linalg.norm(F)
    it = 0
    while np.abs(F).max(initial=0.0) > opts.tol:
        if it >= opts.max_iter:
            err = NewtonDivergence("KKT Newton did not converge", np.abs(F).max(), it)
            raise err
        it += 1
        Jm = disc.jacobian(x, u, opts.c)
        try:
            d = solve_general(Jm, -F)
        except LinearSolverError as exc:
            raise NewtonDivergence(f"KKT Newton: {exc}", np.abs(F).max(), it) from exc
        t = 1.0
        accepted = False
        for _ in range(opts.max_halvings + 1):
            xt = x + t * d
            Ft, ut = disc.residual(xt, opts.c)
            ft = np.linalg.norm(Ft)
            if ft <= (1.0 - opts.armijo * t) * fn:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            # no decrease along d: take the full semismooth step anyway
            xt = x + d
            Ft, ut = disc.residual(xt, opts.c)
            ft = np.linalg.norm(Ft)
        log.debug("iter %d step %.3g |F|_inf %.3e", it, t if accepted else 1.0, np.abs(Ft).max())
        x, F, u, fn = xt, Ft, ut, ft
    return _package(disc, x, F, u, it, opts.c)


def _package(disc, x, F, u, it, c):
    yI, pI, mu = disc.split(x)
    y, p = disc.full(yI), disc.full(pI)
    act_a, act_b = active_sets(mu, yI[disc.cpos], disc.ya, disc.yb, c)
    n = disc.ni
    parts = tuple(float(np.abs(v).max(initial=0.0)) for v in (F[:n], F[n : 2 * n], F[2 * n :]))
    return KktSolution(
        spec=disc.spec,
        y=P1Function(disc.mesh, y),
        p=P1Function(disc.mesh, p),
        mu=mu.copy(),
        constraint_nodes=disc.cnodes,
        iterations=it,
        residual_inf=float(np.abs(F).max(initial=0.0)),
        active_lower=disc.cnodes[act_a],
        active_upper=disc.cnodes[act_b],
        control_active_measure=u.clamped_measure(disc.mesh),
        J=disc.objective(y, u),
        control=u,
        residual_parts=parts,
    )


@dataclass
class SolveFailure:
    alpha: float
    error: Exception

    @property
    def residual_inf(self):
        return getattr(self.error, "residual", math.nan)

    @property
    def iterations(self):
        return getattr(self.error, "iterations", 0)


def alpha_sweep(spec, alphas, mesh, options=None):
    """Solve for each alpha (descending), warm-starting from the previous solution.

    A warm start that fails is retried cold; a row that still fails becomes a
    :class:`SolveFailure` and the sweep continues.
    """
    alphas = [float(a) for a in alphas]
    if any(a2 > a1 for a1, a2 in zip(alphas, alphas[1:])):
        raise ValueError("alphas must be sorted in descending order")
    opts = options or SolveOptions()
    out = []
    prev = opts.initial
    for a in alphas:
        s = spec.with_alpha(a)
        try:
            sol = solve_kkt(s, mesh, replace(opts, initial=prev))
        except (NewtonDivergence, LinearSolverError) as exc:
            if prev is None:
                out.append(SolveFailure(a, exc))
                continue
            log.info("alpha=%g: warm start failed (%s), retrying cold", a, exc)
            try:
                sol = solve_kkt(s, mesh, replace(opts, initial=None))
            except (NewtonDivergence, LinearSolverError) as exc2:
                out.append(SolveFailure(a, exc2))
                continue
        out.append(sol)
        prev = sol
    return out


def reduced_objective(spec, mesh, u_load, y0_rule="centroid"):
    """J_h(u) for an arbitrary control: solves the state equation first.

    Returns ``(J, y)``.
    """
    disc = Discretization(spec, mesh, y0_rule=y0_rule)
    u = fem.as_load(u_load)
    y = fem.solve_state(mesh, spec.phi, u)
    return disc.objective(y.values, u), y
