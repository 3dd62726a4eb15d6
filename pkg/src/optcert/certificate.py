"""Global-optimality test for a computed KKT point.

A stationary point whose adjoint satisfies ``||p_h||_{L^q} <= eta(alpha, r)``
is a global minimizer of the discrete problem; with strict inequality it is
the unique one.
"""
import enum
import math
from dataclasses import dataclass

from .constants import eta, gn_constant, q_of_r
from .fem import lq_norm

EQUALITY_BAND = 1e-12


class Verdict(enum.Enum):
    UNIQUE_GLOBAL = "unique_global"
    GLOBAL = "global"
    INCONCLUSIVE = "inconclusive"


class InvalidInputError(ValueError):
    pass


@dataclass(frozen=True)
class Certificate:
    norm: float
    threshold: float
    q: float
    margin: float
    kappa: float
    verdict: Verdict

    @property
    def certified(self):
        return self.verdict is not Verdict.INCONCLUSIVE


def classify(norm, threshold, band=EQUALITY_BAND):
    """Strict / equality-band / violated trichotomy on ``threshold - norm``."""
    margin = threshold - norm
    if abs(margin) <= band:
        return Verdict.GLOBAL
    return Verdict.UNIQUE_GLOBAL if margin > 0 else Verdict.INCONCLUSIVE


def certificate_from(norm, threshold, q):
    if not (norm >= 0.0 and threshold > 0.0):
        raise InvalidInputError(f"need norm >= 0 and threshold > 0, got {norm!r}, {threshold!r}")
    kappa = 0.0 if math.isinf(threshold) else norm / threshold
    return Certificate(
        norm=norm,
        threshold=threshold,
        q=q,
        margin=threshold - norm,
        kappa=kappa,
        verdict=classify(norm, threshold),
    )


def certify(sol, spec=None, tol=1e-10):
    """Certificate for a converged :class:`~optcert.kkt.KktSolution`."""
    spec = spec or sol.spec
    if not (sol.residual_inf <= tol):
        raise InvalidInputError(f"solution not converged: residual {sol.residual_inf:.3e} > {tol:g}")
    phi = spec.phi
    q = q_of_r(phi.r)
    threshold = eta(spec.alpha, phi.r, phi.M, gn_constant(q).c_q)
    return certificate_from(lq_norm(sol.p, q), threshold, q)


def uniform_kappa(certs):
    """max kappa over the list if every kappa < 1, else None."""
    certs = list(certs)
    if not certs:
        raise ValueError("need at least one certificate")
    kappas = [c.kappa for c in certs]
    return max(kappas) if all(k < 1.0 for k in kappas) else None
