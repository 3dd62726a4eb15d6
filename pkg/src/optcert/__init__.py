"""Global-optimality certificates for semilinear elliptic optimal control.

P1 finite elements with variational control discretization, a semismooth
Newton KKT solver, and the Gagliardo-Nirenberg based threshold test.
"""
from ._accel import USE_NUMBA, backend_name
from .certificate import Certificate, Verdict, certify, uniform_kappa
from .constants import eta, eta_for, gn_constant, q_of_r
from .fem import P1Function, lq_norm, solve_state
from .kkt import KktSolution, OcpSpec, SolveOptions, alpha_sweep, solve_kkt
from .mesh import Mesh, Region, build_uniform
from .nonlinearity import Nonlinearity, cubic, quintic

__version__ = "0.1.0"
