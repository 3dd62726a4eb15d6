"""Benchmark scenarios on the unit square: sweeps over alpha, certificates, tables."""
import csv
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import fem, nonlinearity
from .certificate import certify, uniform_kappa
from .constants import eta_for
from .kkt import OcpSpec, SolveFailure, SolveOptions, alpha_sweep, solve_kkt
from .mesh import Region, build_uniform, export_mesh_csv
from .quadrature import dunavant8

log = logging.getLogger(__name__)

CASES = ("unconstrained", "control", "state", "neitzel")
CASE_ALIASES = {
    "control_constrained": "control",
    "state_constrained": "state",
}
EXAMPLES = ("cubic", "quintic")
DEFAULT_ALPHAS = tuple(10.0**k for k in range(3, -7, -1))
CSV_COLUMNS = ("alpha", "pnorm", "eta", "J", "verdict", "iterations", "residual")

CONTROL_BOUND = 5.0
STATE_BOUND = 1.0


def desired_state(tag):
    """Vectorized desired state for ``A1``, ``A2`` or ``neitzel_const``."""
    key = tag.strip().lower()
    if key == "a1":
        return lambda x: 2.0 * np.sin(2.0 * np.pi * x[:, 0]) * np.sin(2.0 * np.pi * x[:, 1])
    if key == "a2":
        return lambda x: 60.0 + 160.0 * (x[:, 0] * (x[:, 0] - 1.0) + x[:, 1] * (x[:, 1] - 1.0))
    if key in ("neitzel_const", "neitzel"):
        return lambda x: np.full(len(x), -1.0)
    raise ValueError(f"unknown desired state {tag!r}")


def neitzel_lower_bound(x):
    """Tent-shaped lower state bound: -2/3 at the corners, -1/6 at the center."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    x1, x2 = x[:, 0], x[:, 1]
    tent = np.minimum.reduce(
        [0.5 * (x1 + x2), 0.5 * (1.0 + x1 - x2), 0.5 * (1.0 - x1 + x2), 1.0 - 0.5 * (x1 + x2)]
    )
    return -2.0 / 3.0 + tent


@dataclass
class ScenarioSpec:
    example: str = "cubic"
    case: str = "unconstrained"
    desired: str = "a1"
    alphas: tuple = DEFAULT_ALPHAS
    n: int = 32
    out: Optional[str] = None
    fields_out: Optional[str] = None
    fields_alphas: Optional[tuple] = None  # default: the featured values for the scenario
    approx_clamp: bool = False
    y0_rule: str = "centroid"
    phi: Optional[str] = None  # overrides the example's nonlinearity
    tol: float = 1e-10
    max_iter: int = 100

    def __post_init__(self):
        self.example = self.example.lower()
        self.case = CASE_ALIASES.get(self.case.lower(), self.case.lower())
        self.desired = self.desired.lower()
        if self.example not in EXAMPLES:
            raise ValueError(f"unknown example {self.example!r}")
        if self.case not in CASES:
            raise ValueError(f"unknown case {self.case!r}")
        if self.case == "neitzel":
            if self.example != "cubic" or (self.phi not in (None, "cubic")):
                raise ValueError("the neitzel case uses the cubic nonlinearity")
            self.desired = "neitzel_const"
        desired_state(self.desired)  # validates the tag
        self.alphas = tuple(sorted((float(a) for a in self.alphas), reverse=True))
        if not self.alphas:
            raise ValueError("need at least one alpha")
        if self.n < 2:
            raise ValueError("n must be at least 2")

    @property
    def tag(self):
        return f"{self.example}_{self.case}_{self.desired}_n{self.n}"

    def solve_options(self):
        return SolveOptions(tol=self.tol, max_iter=self.max_iter,
                            approx_clamp=self.approx_clamp, y0_rule=self.y0_rule)

    def nonlinearity(self):
        return nonlinearity.from_name(self.phi or self.example)

    def ocp(self, alpha=1.0):
        kw = {}
        if self.case == "control":
            kw.update(ua=-CONTROL_BOUND, ub=CONTROL_BOUND)
        elif self.case == "state":
            kw.update(ya=-STATE_BOUND, yb=STATE_BOUND, region=Region.all_interior())
        elif self.case == "neitzel":
            kw.update(ya=neitzel_lower_bound, region=Region.all_interior())
        return OcpSpec(alpha=alpha, phi=self.nonlinearity(), y0=desired_state(self.desired), **kw)

    def featured_alphas(self):
        if self.fields_alphas is not None:
            return tuple(float(a) for a in self.fields_alphas)
        if self.case == "neitzel":
            return (1e-3,)
        if self.example == "quintic":
            return (1e-5, 1.0)
        return (1e-1,)


@dataclass
class Row:
    alpha: float
    pnorm: float
    eta: float
    J: float
    verdict: str
    iterations: int
    residual: float
    certificate: object = field(default=None, repr=False)
    solution: object = field(default=None, repr=False)
    error: Optional[str] = None

    @property
    def failed(self):
        return self.verdict == "failed"

    def csv_fields(self):
        return [
            fmt(self.alpha),
            fmt(self.pnorm),
            fmt(self.eta),
            fmt(self.J),
            self.verdict,
            str(self.iterations),
            fmt(self.residual),
        ]


def fmt(x):
    """12 significant digits, scientific notation."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.11e}"


def run_scenario(scen, mesh=None, options=None):
    """Solve the sweep, certify each row, write the CSV / field files if requested."""
    mesh = mesh or build_uniform(scen.n)
    opts = options or scen.solve_options()
    template = scen.ocp()
    results = alpha_sweep(template, scen.alphas, mesh, opts)
    rows = []
    for a, res in zip(scen.alphas, results):
        threshold = eta_for(a, template.phi)
        if isinstance(res, SolveFailure):
            log.warning("%s alpha=%g failed: %s", scen.tag, a, res.error)
            rows.append(
                Row(a, math.nan, threshold, math.nan, "failed", res.iterations,
                    res.residual_inf, error=str(res.error))
            )
            continue
        cert = certify(res, tol=opts.tol)
        rows.append(
            Row(a, cert.norm, cert.threshold, res.J, cert.verdict.value, res.iterations,
                res.residual_inf, certificate=cert, solution=res)
        )
    if scen.out:
        write_table(rows, scen.out)
    if scen.fields_out:
        export_fields(scen, rows, mesh)
    return rows


def write_table(rows, path):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow(r.csv_fields())


def export_fields(scen, rows, mesh):
    """Nodal y, p, u, mu_a, mu_b for the featured alphas present in the sweep."""
    os.makedirs(scen.fields_out, exist_ok=True)
    export_mesh_csv(
        mesh,
        os.path.join(scen.fields_out, f"mesh_n{mesh.n}_nodes.csv"),
        os.path.join(scen.fields_out, f"mesh_n{mesh.n}_triangles.csv"),
    )
    wanted = scen.featured_alphas()
    written = []
    for r in rows:
        if r.solution is None or not any(math.isclose(r.alpha, a, rel_tol=1e-12) for a in wanted):
            continue
        sol = r.solution
        mu_a, mu_b = sol.mu_split()
        fields = {
            "y": sol.y.values,
            "p": sol.p.values,
            "u": sol.control.nodal_values(),
            "mu_a": mu_a,
            "mu_b": mu_b,
        }
        for name, vals in fields.items():
            path = os.path.join(scen.fields_out, f"{scen.tag}_alpha{r.alpha:.0e}_{name}.csv")
            _write_field(mesh, vals, path)
            written.append(path)
    return written


def _write_field(mesh, values, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "value"])
        for (x, y), v in zip(mesh.nodes, values):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(v))])


# --- mesh-refinement study -------------------------------------------------------------


def control_l2_distance(coarse, fine, rule=None):
    """||u_coarse - u_fine||_{L^2} by quadrature on the finer mesh.

    Controls are evaluated pointwise (they are not P1 functions when clamped),
    so the value is exact only for unclamped controls on nested meshes.
    """
    rule = rule or dunavant8()
    mesh = fine.mesh
    pts = fem.quad_points(mesh, rule).reshape(-1, 2)
    d = (coarse.control.evaluate(pts) - fine.control.evaluate(pts)).reshape(mesh.num_triangles, -1)
    return math.sqrt(fem.integrate(mesh, d**2, rule))


@dataclass
class ConvergenceStudy:
    ns: tuple
    solutions: list
    certificates: list
    differences: list  # ||u_n - u_2n||, one per consecutive pair
    uniform_kappa: Optional[float]

    @property
    def strictly_decreasing(self):
        return all(b < a for a, b in zip(self.differences, self.differences[1:]))


def convergence_study(scen, alpha, ns=(8, 16, 32, 64), options=None):
    """Solve one alpha on a nested mesh family and collect the refinement data."""
    ns = tuple(sorted(ns))
    opts = options or scen.solve_options()
    spec = scen.ocp(alpha)
    sols = [solve_kkt(spec, build_uniform(n), opts) for n in ns]
    certs = [certify(s, tol=opts.tol) for s in sols]
    diffs = [control_l2_distance(a, b) for a, b in zip(sols, sols[1:])]
    return ConvergenceStudy(ns, sols, certs, diffs, uniform_kappa(certs))
