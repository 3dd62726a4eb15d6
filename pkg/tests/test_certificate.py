import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from optcert import fem
from optcert.certificate import (
    EQUALITY_BAND,
    Certificate,
    InvalidInputError,
    Verdict,
    certificate_from,
    certify,
    classify,
    uniform_kappa,
)
from optcert.constants import eta, gn_constant
from optcert.experiments import ScenarioSpec
from optcert.kkt import OcpSpec, alpha_sweep, solve_kkt
from optcert.mesh import build_uniform
from optcert.nonlinearity import cubic
from reference_tables import rows


def _ref(example, case, desired, alpha):
    return {a: r for a, *r in rows(example, case, desired)}[alpha]


def test_table1_row_is_unique_global(mesh32):
    scen = ScenarioSpec(n=32)
    cert = certify(solve_kkt(scen.ocp(0.1), mesh32))
    pn, eta_ref, _ = _ref("cubic", "unconstrained", "a1", 0.1)
    assert cert.verdict is Verdict.UNIQUE_GLOBAL and cert.certified
    assert cert.q == 4
    assert cert.norm == pytest.approx(pn, rel=1e-3)
    assert cert.threshold == pytest.approx(eta_ref, rel=1e-9)
    assert cert.kappa == pytest.approx(cert.norm / cert.threshold)
    assert cert.margin == pytest.approx(cert.threshold - cert.norm)


def test_quintic_small_alpha_is_inconclusive(mesh32):
    # a cold start at this alpha does not converge; the table is produced by a warm-started sweep
    scen = ScenarioSpec(example="quintic", desired="a2", n=32)
    sweep = alpha_sweep(scen.ocp(), [10.0**k for k in range(3, -7, -1)], mesh32)
    cert = certify(sweep[-1])
    pn, eta_ref, _ = _ref("quintic", "unconstrained", "a2", 1e-6)
    assert cert.q == pytest.approx(6.0)
    assert cert.verdict is Verdict.INCONCLUSIVE and not cert.certified
    assert cert.norm == pytest.approx(pn, rel=1e-3)
    assert cert.threshold == pytest.approx(eta_ref, rel=1e-9)
    assert cert.kappa > 1


def test_zero_problem(mesh4):
    cert = certify(solve_kkt(OcpSpec(alpha=1.0, phi=cubic()), mesh4))
    assert cert.norm == 0.0 and cert.kappa == 0.0
    assert cert.verdict is Verdict.UNIQUE_GLOBAL


def test_not_converged_rejected(mesh8):
    sol = solve_kkt(ScenarioSpec(n=8).ocp(0.1), mesh8)
    sol.residual_inf = 1e-3
    with pytest.raises(InvalidInputError):
        certify(sol)
    sol.residual_inf = math.nan
    with pytest.raises(InvalidInputError):
        certify(sol)


def test_certify_pure(mesh8):
    sol = solve_kkt(ScenarioSpec(n=8).ocp(0.1), mesh8)
    assert certify(sol) == certify(sol) == certify(sol, sol.spec)


def test_classify_band():
    assert classify(1.0, 1.0) is Verdict.GLOBAL
    assert classify(1.0, 1.0 + 0.5 * EQUALITY_BAND) is Verdict.GLOBAL
    assert classify(1.0, 1.0 + 10 * EQUALITY_BAND) is Verdict.UNIQUE_GLOBAL
    assert classify(1.0 + 10 * EQUALITY_BAND, 1.0) is Verdict.INCONCLUSIVE


def _scalar_oracle(norm, threshold):
    d = threshold - norm
    if -1e-12 <= d <= 1e-12:
        return "global"
    return "unique_global" if d > 0 else "inconclusive"


@given(
    st.floats(min_value=0, max_value=10, allow_nan=False),
    st.floats(min_value=1e-6, max_value=10, allow_nan=False),
)
def test_verdict_matches_scalar_oracle(norm, threshold):
    c = certificate_from(norm, threshold, 4.0)
    assert c.verdict.value == _scalar_oracle(norm, threshold)
    assert c.kappa >= 0


def test_certificate_inputs():
    with pytest.raises(InvalidInputError):
        certificate_from(-1.0, 1.0, 4)
    with pytest.raises(InvalidInputError):
        certificate_from(1.0, 0.0, 4)
    c = certificate_from(0.3, math.inf, 4)
    assert c.kappa == 0.0 and c.verdict is Verdict.UNIQUE_GLOBAL


def _cert(kappa):
    return Certificate(norm=kappa, threshold=1.0, q=4, margin=1 - kappa, kappa=kappa,
                       verdict=classify(kappa, 1.0))


def test_uniform_kappa_examples():
    assert uniform_kappa([_cert(0.2), _cert(0.5)]) == 0.5
    assert uniform_kappa([_cert(0.2), _cert(1.3)]) is None
    assert uniform_kappa([_cert(1.0)]) is None
    with pytest.raises(ValueError):
        uniform_kappa([])


def test_uniform_kappa_mesh_family():
    spec = ScenarioSpec().ocp(0.1)
    certs = [certify(solve_kkt(spec, build_uniform(n))) for n in (8, 16, 32)]
    k = uniform_kappa(certs)
    assert k is not None and k < 0.1
    assert k == max(c.kappa for c in certs)


def test_threshold_uses_default_constant(mesh8):
    sol = solve_kkt(ScenarioSpec(example="quintic", n=8).ocp(1.0), mesh8)
    c = certify(sol)
    phi = sol.spec.phi
    assert c.threshold == eta(1.0, phi.r, phi.M, gn_constant(6).c_q)
    assert c.norm == fem.lq_norm(sol.p, 6)
    assert c.norm == pytest.approx(fem.lq_norm(sol.p, 6.5 - 0.5), rel=0)
