"""Commutator functions D^{+/-}_m of a free field of mass m.

At an invariant interval lambda2 = t^2 - |x|^2 the closed form is

    D^{+/-}_m = (1/4pi) eps(x0) delta(lambda2)
                -/+ (i m / 8 pi sqrt(lambda2)) theta(lambda2) [N1(m sqrt(lambda2)) -/+ i eps(x0) J1(m sqrt(lambda2))]
                +/- (i m / 4 pi^2 sqrt(-lambda2)) theta(-lambda2) K1(m sqrt(-lambda2))

The distributional pieces are never evaluated pointwise: `KernelValue` carries
the coefficient of eps(x0) delta(lambda2) (and, for the equal-time massless form,
of the contact term) symbolically, next to the two smooth parts.

The mass enters the smooth parts only through the overall factor m, and at
m = 0 they are returned as exact zeros, following the printed closed form.
(The m -> 0 *limit* of the smooth parts is the principal value i/(4 pi^2 lambda2),
not zero; callers that need the massless Wightman tail should take the limit
themselves.)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import bessel
from .errors import InvalidMassError, OnConeError, UndefinedAsymptoticError

UNDERFLOW_ARG = 700.0

_CONE = 1.0 / (4.0 * math.pi)


@dataclass(frozen=True)
class IntervalPoint:
    """Invariant interval plus the sign of the time component."""

    lambda2: float
    x0_sign: int = 1

    def __post_init__(self):
        if not math.isfinite(self.lambda2):
            raise ValueError("lambda2 must be finite")
        if self.x0_sign not in (-1, 0, 1):
            raise ValueError("x0_sign must be -1, 0 or +1")
        if self.x0_sign == 0 and self.lambda2 > 0:
            raise ValueError("a timelike interval needs a nonzero time component")

    @classmethod
    def from_separation(cls, dt: float, dx) -> "IntervalPoint":
        r2 = float(sum(float(c) ** 2 for c in dx))
        sign = (dt > 0) - (dt < 0)
        return cls(dt * dt - r2, sign)


@dataclass(frozen=True)
class KernelValue:
    cone_delta_coeff: float
    interior: complex
    exterior: complex
    sign: str
    contact_coeff: float = 0.0
    underflow: bool = False

    def __add__(self, other: "KernelValue") -> "KernelValue":
        return KernelValue(
            cone_delta_coeff=self.cone_delta_coeff + other.cone_delta_coeff,
            interior=self.interior + other.interior,
            exterior=self.exterior + other.exterior,
            sign="sum",
            contact_coeff=self.contact_coeff + other.contact_coeff,
            underflow=self.underflow or other.underflow,
        )

    @property
    def smooth(self) -> complex:
        return self.interior + self.exterior


def _check_mass(m: float) -> float:
    m = float(m)
    if not math.isfinite(m) or m < 0:
        raise InvalidMassError(f"mass must be finite and >= 0, got {m}")
    return m


def _sign_of(sign) -> int:
    if sign in (1, "+", "plus"):
        return 1
    if sign in (-1, "-", "minus"):
        return -1
    raise ValueError(f"sign must be + or -, got {sign!r}")


def dplus_parts(m: float, point: IntervalPoint, sign=1, method: str = "auto") -> KernelValue:
    """Three-part decomposition of D^+_m (``sign=+1``) or D^-_m (``sign=-1``).

    Raises `OnConeError` for ``lambda2 == 0``: there only the delta coefficient is
    meaningful, and it does not depend on the point.
    """
    m = _check_mass(m)
    s = _sign_of(sign)
    lam2 = point.lambda2
    label = "+" if s > 0 else "-"
    if lam2 == 0.0:
        raise OnConeError(
            "smooth kernel parts are singular on the light cone; use cone_delta_coeff"
        )
    interior = 0j
    exterior = 0j
    underflow = False
    if m > 0.0:
        if lam2 > 0.0:
            tau = math.sqrt(lam2)
            jv, yv = bessel.j1y1_scalar(m * tau, method)
            eps = point.x0_sign
            interior = -s * (1j * m / (8.0 * math.pi * tau)) * (yv - s * 1j * eps * jv)
        else:
            r = math.sqrt(-lam2)
            z = m * r
            if z > UNDERFLOW_ARG:
                underflow = True
            else:
                exterior = s * (1j * m / (4.0 * math.pi**2 * r)) * bessel.k1_scalar(z, method)
    return KernelValue(_CONE, complex(interior), complex(exterior), label, underflow=underflow)


def pauli_jordan_value(m: float, point: IntervalPoint, method: str = "auto") -> KernelValue:
    """D_m = D^+_m + D^-_m, summed part by part."""
    return dplus_parts(m, point, +1, method) + dplus_parts(m, point, -1, method)


def tail_asymptotic_ratio(m: float, r: float) -> float:
    """|exterior part at lambda2 = -r^2| over C r^{-3/2} e^{-m r}.

    C = (m / 4 pi^2) sqrt(pi / 2m) comes from K1(z) ~ sqrt(pi/2z) e^{-z}, so the
    ratio tends to 1 as m r grows (it is 1 + 3/(8 m r) + ...). Computed from the
    exponentially scaled K1, so it stays finite past the underflow guard.
    """
    m = _check_mass(m)
    if m == 0.0:
        raise UndefinedAsymptoticError("the spacelike tail has no exponential asymptotic at m = 0")
    if not r > 0:
        raise ValueError("r must be positive")
    z = m * r
    return bessel.k1e_scalar(z) * math.sqrt(2.0 * z / math.pi)


def asymptotic_template(m: float, r: float) -> float:
    c = m / (4.0 * math.pi**2) * math.sqrt(math.pi / (2.0 * m))
    return c * r**-1.5 * math.exp(-m * r)


def equal_time_kernel(m: float, r: float, method: str = "auto") -> KernelValue:
    """D^+_m at t = t', separation r.

    Massless: contact structure only, -(1/4pi) delta(r)/(2r), carried as
    ``contact_coeff = -1/(8 pi)``; the smooth parts are zero. Massive, r > 0: the
    K1 exterior value at lambda2 = -r^2. Massive, r = 0: contact coefficient only,
    since the smooth tail is not defined there.
    """
    m = _check_mass(m)
    r = float(r)
    if r < 0 or not math.isfinite(r):
        raise ValueError("r must be finite and >= 0")
    if m == 0.0 or r == 0.0:
        return KernelValue(0.0, 0j, 0j, "+", contact_coeff=-1.0 / (8.0 * math.pi))
    v = dplus_parts(m, IntervalPoint(-r * r, 0), +1, method)
    return KernelValue(0.0, 0j, v.exterior, "+", underflow=v.underflow)


def wightman_equal_time(m: float, r: float) -> float:
    """Real equal-time two-point function m K1(m r) / (4 pi^2 r).

    This is the equal-time exterior part of D^+ divided by i, i.e. the Fourier
    transform of 1/(2 p0) with the (2 pi)^-3 convention.
    """
    v = equal_time_kernel(m, r)
    return (v.exterior / 1j).real


def hankel_combination(m: float, tau: float, sign=1, eps: int = 1) -> complex:
    """N1(m tau) -/+ i eps J1(m tau), the bracket of the interior part."""
    s = _sign_of(sign)
    jv, yv = bessel.j1y1_scalar(m * tau)
    return complex(yv, -s * eps * jv)


__all__ = [
    "IntervalPoint",
    "KernelValue",
    "dplus_parts",
    "pauli_jordan_value",
    "tail_asymptotic_ratio",
    "asymptotic_template",
    "equal_time_kernel",
    "wightman_equal_time",
    "hankel_combination",
]
