"""Monotone nonlinearities phi with the structural pair (r, M).

The pair satisfies ``|phi''(s)| <= M * phi'(s)**(1/r)`` for all s; it fixes
the norm exponent and the certificate threshold downstream.
"""
from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class Nonlinearity:
    phi: Callable[[np.ndarray], np.ndarray]
    dphi: Callable[[np.ndarray], np.ndarray]
    ddphi: Callable[[np.ndarray], np.ndarray]
    r: float
    M: float
    label: str
    degree: int = 0  # polynomial degree of phi, 0 if not a polynomial

    def check_assumption(self, samples=None, atol=1e-9, rtol=1e-12):
        """Sampled check of monotonicity and of the (r, M) bound.

        Returns the list of violating sample points (empty when the check passes).
        ``rtol`` absorbs rounding at points where the bound is attained with equality.
        """
        if samples is None:
            samples = np.linspace(-50.0, 50.0, 20001)
        s = np.asarray(samples, dtype=float)
        d1 = self.dphi(s)
        bound = self.M * np.abs(d1) ** (1.0 / self.r)
        bad = (d1 < 0.0) | (np.abs(self.ddphi(s)) > bound * (1.0 + rtol) + atol)
        return s[bad].tolist()


def cubic():
    """phi(s) = s^3 with r = 2, M = 2*sqrt(3)."""
    return Nonlinearity(
        phi=lambda s: s**3,
        dphi=lambda s: 3.0 * s**2,
        ddphi=lambda s: 6.0 * s,
        r=2.0,
        M=2.0 * np.sqrt(3.0),
        label="cubic",
        degree=3,
    )


def quintic():
    """phi(s) = s^5 with r = 4/3, M = 20 / 5^(3/4)."""
    return Nonlinearity(
        phi=lambda s: s**5,
        dphi=lambda s: 5.0 * s**4,
        ddphi=lambda s: 20.0 * s**3,
        r=4.0 / 3.0,
        M=20.0 / 5.0**0.75,
        label="quintic",
        degree=5,
    )


def power(k):
    """phi(s) = |s|^(k-2) s for k > 3, with r = (k-2)/(k-3) and M = (k-2)(k-1)^(1/(k-2))."""
    k = float(k)
    if not k > 3.0:
        raise ValueError(f"power nonlinearity needs k > 3, got {k}")
    kk = k
    is_int = kk == int(kk)
    degree = int(kk) - 1 if is_int and int(kk) % 2 == 0 else 0
    return Nonlinearity(
        phi=lambda s: np.abs(s) ** (kk - 2.0) * s,
        dphi=lambda s: (kk - 1.0) * np.abs(s) ** (kk - 2.0),
        ddphi=lambda s: (kk - 1.0) * (kk - 2.0) * np.abs(s) ** (kk - 3.0) * np.sign(s),
        r=(kk - 2.0) / (kk - 3.0),
        M=(kk - 2.0) * (kk - 1.0) ** (1.0 / (kk - 2.0)),
        label=f"power:{kk:g}",
        degree=degree,
    )


def from_name(name):
    """Parse ``cubic``, ``quintic`` or ``power:<k>``."""
    key = name.strip().lower()
    if key == "cubic":
        return cubic()
    if key == "quintic":
        return quintic()
    if key.startswith("power:"):
        return power(float(key.split(":", 1)[1]))
    raise ValueError(f"unknown nonlinearity {name!r}")
