"""Gagliardo-Nirenberg bounds and the global-optimality threshold eta.

All quantities are evaluated in double precision. ``q`` is always the norm
exponent, ``theta = 1 - 2/q``.
"""
import math
from dataclasses import dataclass


class NotApplicableError(ValueError):
    """A bound was requested outside the range where it is valid."""


def _check_pos(name, x):
    if not (x > 0.0 and math.isfinite(x)):
        raise ValueError(f"{name} must be a positive finite number, got {x!r}")


def gamma_fn(x):
    _check_pos("x", x)
    return math.gamma(x) if x < 171.0 else math.exp(math.lgamma(x))


def beta_fn(a, b):
    _check_pos("a", a)
    _check_pos("b", b)
    if a + b < 171.0:
        return math.gamma(a) * math.gamma(b) / math.gamma(a + b)
    return math.exp(math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))


def k_babenko(p):
    """Babenko-Beckner constant ``(p/2pi)^(1/p) (p'/2pi)^(-1/p')`` for 1 < p <= 2."""
    if not (1.0 < p <= 2.0):
        raise ValueError(f"k_B needs 1 < p <= 2, got {p!r}")
    pp = p / (p - 1.0)
    two_pi = 2.0 * math.pi
    return (p / two_pi) ** (1.0 / p) * (pp / two_pi) ** (-1.0 / pp)


def c22theta(s):
    """The constant C_{2,s}, 1 <= s < 2; C_{2,1} = 2 sqrt(pi)."""
    if not (1.0 <= s < 2.0):
        raise ValueError(f"C_(2,s) needs 1 <= s < 2, got {s!r}")
    if s == 1.0:
        return 2.0 * math.sqrt(math.pi)
    return (
        2.0 ** (1.0 / s)
        * ((2.0 - s) / (s - 1.0)) ** ((s - 1.0) / s)
        * math.sqrt(2.0 * math.pi * beta_fn(2.0 / s, 3.0 - 2.0 / s))
    )


def gn_bound_1(q):
    if not q >= 4.0:
        raise NotApplicableError(f"first GN bound needs q >= 4, got {q!r}")
    th = 1.0 - 2.0 / q
    return (th * c22theta(2.0 * th)) ** (-th)


def gn_bound_2(q):
    if not q > 2.0:
        raise ValueError(f"second GN bound needs q > 2, got {q!r}")
    th = 1.0 - 2.0 / q
    pref = 1.0 / math.sqrt(th**th * (1.0 - th) ** (1.0 - th))
    return (
        pref
        * (2.0 * math.pi * beta_fn(1.0, 2.0 * (1.0 - th) / (2.0 * th))) ** (th / 2.0)
        * k_babenko(4.0 / (2.0 + 2.0 * th))
    )


GN3_TAIL_TOL = 1e-15
GN3_MAX_J = 64


def gn_bound_3(q, tail_tol=GN3_TAIL_TOL):
    """Infinite-product bound, truncated once a log-factor drops below ``tail_tol``.

    Factors with ``2^j <= 2(q - 2)`` are never taken as the stopping point: their
    exponent can vanish exactly (q = 6, j = 2) long before the tail is small.
    Returns ``(value, J)`` where J is the last factor index used.
    """
    if not q >= 2.0:
        raise ValueError(f"third GN bound needs q >= 2, got {q!r}")
    if not tail_tol > 0.0:
        raise ValueError("tail_tol must be positive")
    log_c = -(q - 2.0) / (2.0 * q) * math.log(math.pi)
    j = 1
    while j < GN3_MAX_J:
        j += 1
        pj = 2.0**j
        term = (pj + 2.0 - q) / (pj * q) * -math.log1p((q - 2.0) / pj)
        log_c += term
        if pj > 2.0 * (q - 2.0) and abs(term) < tail_tol:
            break
    return math.exp(log_c), j


@dataclass(frozen=True)
class GnBundle:
    q: float
    theta: float
    c1: float | None
    c2: float | None
    c3: float
    c_q: float
    attained_by: str
    truncation_terms: int


def gn_constant(q, include_bound_1=False):
    """Upper bound C_q on the 2-D Gagliardo-Nirenberg constant.

    By default ``c_q = min(c2, c3)``; ``c1`` is computed and reported but only
    enters the minimum with ``include_bound_1=True``. The reference constants
    C_4 and C_6 used by the published threshold tables are reproduced only
    with the default.
    """
    if not q >= 2.0:
        raise ValueError(f"GN constant needs q >= 2, got {q!r}")
    c1 = gn_bound_1(q) if q >= 4.0 else None
    c2 = gn_bound_2(q) if q > 2.0 else None
    c3, terms = gn_bound_3(q)
    candidates = {"c3": c3}
    if c2 is not None:
        candidates["c2"] = c2
    if include_bound_1 and c1 is not None:
        candidates["c1"] = c1
    which = min(candidates, key=candidates.get)
    return GnBundle(
        q=q,
        theta=1.0 - 2.0 / q,
        c1=c1,
        c2=c2,
        c3=c3,
        c_q=candidates[which],
        attained_by=which,
        truncation_terms=terms,
    )


def q_of_r(r):
    if not r > 1.0:
        raise ValueError(f"r must exceed 1, got {r!r}")
    if math.isinf(r):
        return 3.0
    return (3.0 * r - 2.0) / (r - 1.0)


def rho_of(r):
    q = q_of_r(r)
    return (r + q) / (r * q)


def d_r(r):
    q, rho = q_of_r(r), rho_of(r)
    return q ** (-1.0 / q) * r ** (-1.0 / r) * rho ** (-rho)


def e_r(r):
    half = rho_of(r) / 2.0
    return (1.0 - half) ** (1.0 - half) * half**half


def l_r(r, M):
    if not r > 1.0:
        raise ValueError(f"r must exceed 1, got {r!r}")
    if not M >= 0.0:
        raise ValueError(f"M must be nonnegative, got {M!r}")
    return M * ((r - 1.0) / (2.0 * r - 1.0)) ** ((r - 1.0) / r)


def eta(alpha, r, M, c_q):
    """Certificate threshold eta(alpha, r); ``math.inf`` when M == 0."""
    _check_pos("alpha", alpha)
    _check_pos("c_q", c_q)
    if not r > 1.0:
        raise ValueError(f"r must exceed 1, got {r!r}")
    if not M >= 0.0:
        raise ValueError(f"M must be nonnegative, got {M!r}")
    if M == 0.0:
        return math.inf
    q, rho = q_of_r(r), rho_of(r)
    return (
        alpha ** (rho / 2.0)
        * c_q ** ((2.0 - 2.0 * r) / r)
        / M
        * ((r - 1.0) / (2.0 * r - 1.0)) ** ((1.0 - r) / r)
        * q ** (1.0 / q)
        * r ** (1.0 / r)
        * rho ** (rho / 2.0)
        * (2.0 - rho) ** (rho / 2.0 - 1.0)
    )


def eta_for(alpha, nonlinearity):
    """eta for a :class:`~optcert.nonlinearity.Nonlinearity`, with its own C_q."""
    q = q_of_r(nonlinearity.r)
    return eta(alpha, nonlinearity.r, nonlinearity.M, gn_constant(q).c_q)
