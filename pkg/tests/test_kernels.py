"""Element kernels: numba loops vs numpy vectorization vs independent oracles."""
import math

import numpy as np
import pytest
from scipy import integrate

from optcert import kernels
from optcert.quadrature import dunavant8

pytestmark = pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")

# reference triangle (0,0), (1,0), (0,1): lambda = (1-x-y, x, y), area 1/2
REF_AREA = np.array([0.5])


def _nested_quad(f, kinks_x, kinks_y_at):
    """int_0^1 int_0^{1-x} f(x, y) dy dx with known kink locations."""

    def inner(x):
        ys = [y for y in kinks_y_at(x) if 0.0 < y < 1.0 - x]
        v, _ = integrate.quad(lambda y: f(x, y), 0.0, 1.0 - x, points=ys or None,
                              epsabs=1e-15, epsrel=1e-14, limit=200)
        return v

    xs = [x for x in kinks_x if 0.0 < x < 1.0]
    v, _ = integrate.quad(inner, 0.0, 1.0, points=xs or None, epsabs=1e-15, epsrel=1e-14, limit=200)
    return v


def _clamp_oracle(g, lo, hi):
    """load_i, free mass_ij, int u^2, clamped area on the reference triangle by adaptive quadrature."""
    g0, g1, g2 = g

    def gx(x, y):
        return g0 * (1 - x - y) + g1 * x + g2 * y

    def lam(x, y):
        return (1 - x - y, x, y)

    levels = [c for c in (lo, hi) if math.isfinite(c)]

    def kinks_y(x):
        # g(x, y) = c  ->  y = (c - g0 - (g1 - g0) x) / (g2 - g0)
        if g2 == g0:
            return []
        return [(c - g0 - (g1 - g0) * x) / (g2 - g0) for c in levels]

    kx = []
    for c in levels:
        # where the level line meets y = 0 and y = 1 - x
        if g1 != g0:
            kx.append((c - g0) / (g1 - g0))
        if g1 != g2:
            kx.append((c - g2) / (g1 - g2))
    load = [_nested_quad(lambda x, y, i=i: np.clip(gx(x, y), lo, hi) * lam(x, y)[i], kx, kinks_y) for i in range(3)]
    free = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            free[i, j] = _nested_quad(
                lambda x, y, i=i, j=j: float(lo < gx(x, y) < hi) * lam(x, y)[i] * lam(x, y)[j], kx, kinks_y
            )
    u2 = _nested_quad(lambda x, y: np.clip(gx(x, y), lo, hi) ** 2, kx, kinks_y)
    cl = _nested_quad(lambda x, y: float(not (lo < gx(x, y) < hi)), kx, kinks_y)
    return np.array(load), free, u2, cl


CLAMP_CASES = [
    ((0.0, 3.0, -2.0), -1.0, 1.0),
    ((2.0, 0.5, -0.7), -0.25, 1.5),
    ((5.0, 6.0, 7.0), -1.0, 1.0),  # fully clamped above
    ((0.1, 0.2, -0.3), -1.0, 1.0),  # fully free
    ((-3.0, 1.0, 0.2), -np.inf, 0.5),
    ((-3.0, 1.0, 0.2), -0.5, np.inf),
]


@pytest.mark.parametrize("impl", ["np", "nb"])
@pytest.mark.parametrize("g,lo,hi", CLAMP_CASES)
def test_clamp_vs_adaptive_quadrature(impl, g, lo, hi):
    fn = getattr(kernels, f"clamp_integrals_{impl}")
    load, free, u2, cl = fn(np.array([g], dtype=float), lo, hi, REF_AREA)
    o_load, o_free, o_u2, o_cl = _clamp_oracle(g, lo, hi)
    assert np.allclose(load[0], o_load, rtol=0, atol=1e-12)
    assert np.allclose(free[0], o_free, rtol=0, atol=1e-12)
    assert u2[0] == pytest.approx(o_u2, abs=1e-12)
    assert cl[0] == pytest.approx(o_cl, abs=1e-12)


def test_clamp_paths_agree(rng):
    T = 500
    g = rng.normal(scale=3.0, size=(T, 3))
    g[:50, 1] = g[:50, 0]  # degenerate: level lines through vertices/edges
    g[50:60] = 1.0  # exactly on the upper bound
    areas = rng.uniform(0.1, 1.0, size=T)
    for lo, hi in ((-1.0, 1.0), (-np.inf, 0.3), (-2.0, np.inf), (-np.inf, np.inf)):
        a = kernels.clamp_integrals_np(g, lo, hi, areas)
        b = kernels.clamp_integrals_nb(g, lo, hi, areas)
        for x, y in zip(a, b):
            assert np.allclose(x, y, rtol=0, atol=1e-13)


def test_clamp_unbounded_is_mass(rng):
    g = rng.normal(size=(20, 3))
    areas = rng.uniform(0.1, 1.0, 20)
    load, free, u2, cl = kernels.clamp_integrals(g, -np.inf, np.inf, areas)
    M = areas[:, None, None] * (np.ones((3, 3)) + np.eye(3)) / 12
    assert np.allclose(free, M, atol=1e-15)
    assert np.allclose(load, np.einsum("tij,tj->ti", M, g), atol=1e-14)
    assert np.allclose(u2, np.einsum("ti,tij,tj->t", g, M, g), atol=1e-14)
    assert not np.any(cl)


@pytest.mark.parametrize("impl", ["np", "nb"])
def test_weighted_kernels(impl, rng):
    rule = dunavant8()
    T = 40
    coef = rng.normal(size=(T, len(rule.weights)))
    areas = rng.uniform(0.1, 1.0, T)
    vec = getattr(kernels, f"weighted_vector_{impl}")(coef, rule.points, rule.weights, areas)
    mat = getattr(kernels, f"weighted_matrix_{impl}")(coef, rule.points, rule.weights, areas)
    ref_v = np.array([[areas[t] * sum(coef[t, q] * rule.weights[q] * rule.points[q, i]
                                      for q in range(len(rule.weights))) for i in range(3)] for t in range(T)])
    assert np.allclose(vec, ref_v, atol=1e-14)
    ref_m = np.einsum("t,tq,q,qi,qj->tij", areas, coef, rule.weights, rule.points, rule.points)
    assert np.allclose(mat, ref_m, atol=1e-14)
    assert np.allclose(mat, np.swapaxes(mat, 1, 2))


@pytest.mark.parametrize("impl", ["np", "nb"])
def test_abs_power_single_vertex(impl):
    fn = getattr(kernels, f"abs_power_integrals_{impl}")
    f = np.array([[1.0, 0.0, 0.0]])
    # int_T lambda^q = 2|T| q!/(q+2)!
    for q in (3, 4, 5):
        exact = 2 * 0.5 * math.factorial(q) / math.factorial(q + 2)
        assert fn(f, q, REF_AREA)[0] == pytest.approx(exact, rel=1e-14)
    assert fn(f, 4, REF_AREA)[0] == pytest.approx(1 / 30, rel=1e-14)


def test_abs_power_monte_carlo(rng):
    n = 1_000_000
    u = rng.uniform(size=(n, 2))
    flip = u.sum(axis=1) > 1
    u[flip] = 1 - u[flip]
    mc = 0.5 * np.mean(u[:, 0] ** 4)
    assert abs(mc - 1 / 30) <= 1e-3
    val = kernels.abs_power_integrals(np.array([[0.0, 1.0, 0.0]]), 4, REF_AREA)[0]
    assert abs(val - 1 / 30) <= 1e-14


@pytest.mark.parametrize("q", [3, 5, 7])
def test_abs_power_sign_change(q):
    # f = x - y on the reference triangle changes sign along y = x
    f = np.array([[0.0, 1.0, -1.0]])
    oracle = _nested_quad(lambda x, y: abs(x - y) ** q, [], lambda x: [x])
    for impl in ("np", "nb"):
        v = getattr(kernels, f"abs_power_integrals_{impl}")(f, q, REF_AREA)[0]
        assert v == pytest.approx(oracle, rel=1e-12)


def test_abs_power_paths_agree(rng):
    f = rng.normal(size=(300, 3))
    f[:20, 2] = 0.0
    areas = rng.uniform(0.1, 1.0, 300)
    for q in (3, 4, 5):
        a = kernels.abs_power_integrals_np(f, q, areas)
        b = kernels.abs_power_integrals_nb(f, q, areas)
        assert np.allclose(a, b, rtol=1e-13, atol=1e-16)


_BACKEND_SNIPPET = """
from optcert._accel import backend_name
from optcert.experiments import ScenarioSpec, run_scenario
r = run_scenario(ScenarioSpec(case="control", n=8, alphas=(1e-2,)))[0]
print(backend_name(), repr(r.pnorm), repr(r.J))
"""


def test_env_flag_selects_backend():
    import os
    import subprocess
    import sys

    from optcert._accel import HAS_NUMBA

    out = {}
    for flag in ("0", "1"):
        env = dict(os.environ, OPTCERT_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", _BACKEND_SNIPPET], env=env, capture_output=True, text=True,
                             check=True)
        name, pn, J = res.stdout.split()
        out[flag] = (name, float(pn), float(J))
    assert out["0"][0] == "numpy"
    assert out["1"][0] == ("numba" if HAS_NUMBA else "numpy")
    assert out["0"][1] == pytest.approx(out["1"][1], rel=1e-12)
    assert out["0"][2] == pytest.approx(out["1"][2], rel=1e-12)
