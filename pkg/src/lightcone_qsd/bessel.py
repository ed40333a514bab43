"""First-order Bessel functions J1, Y1 (Neumann N1) and K1.

Own implementation with two evaluation regimes:

``series``
    Ascending power series (Abramowitz & Stegun 9.1.10/9.1.11, 9.6.10/9.6.11)
    summed in decimal arithmetic whose precision grows with the argument, so
    the alternating-sum cancellation for J/Y and the e^{-x} cancellation for
    K never reach double precision.
``asymptotic``
    Hankel large-argument expansions (DLMF 10.17.3, 10.40.2) truncated at the
    smallest term.

The public functions switch at ``CROSSOVER``; there the asymptotic truncation
error is about e^{-2x} ~ 1e-22, far below double rounding.

``scipy.special`` is only used by the ``reference_*`` helpers, which serve as
the independent second path for cross-validation.
"""

from __future__ import annotations

import math
from decimal import Decimal, localcontext

import numpy as np
import scipy.special as sc

CROSSOVER = 25.0

_EULER = Decimal("0.5772156649015328606065120900824024310421593359399235988057672348848677")
_PI = Decimal("3.1415926535897932384626433832795028841971693993751058209749445923078164")


def _series(x: float, modified: bool) -> tuple[float, float]:
    """Return (J1, Y1) or, if ``modified``, (I1, K1 * e^x) from the power series."""
    digits = 30 + int(0.9 * x)
    with localcontext() as ctx:
        ctx.prec = digits
        X = Decimal(x)
        half = X / 2
        q = half * half
        if not modified:
            q = -q
        term = half
        h_k = Decimal(0)  # harmonic number H_k
        h_k1 = Decimal(1)  # H_{k+1}
        s_first = Decimal(0)
        s_psi = Decimal(0)
        biggest = abs(term)
        cutoff = Decimal(10) ** (-digits + 2)
        k = 0
        while True:
            s_first += term
            s_psi += term * (h_k + h_k1)
            k += 1
            term = term * q / (k * (k + 1))
            h_k = h_k1
            h_k1 = h_k1 + Decimal(1) / (k + 1)
            mag = abs(term)
            if mag > biggest:
                biggest = mag
            if k > x and mag * (1 + h_k1) < cutoff * biggest:
                break
        log_half = half.ln()
        psi_part = -2 * _EULER * s_first + s_psi
        if modified:
            k1 = 1 / X + log_half * s_first - psi_part / 2
            return float(s_first), float(k1 * X.exp())
        y1 = -2 / (_PI * X) + 2 / _PI * log_half * s_first - psi_part / _PI
        return float(s_first), float(y1)


def _asymptotic_terms(x: float, alternate: bool):
    """Hankel coefficients a_k(1)/x^k, stopped at the smallest term."""
    mu = 4.0
    out = [1.0]
    a = 1.0
    k = 1
    while k < 200:
        nxt = a * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(nxt) >= abs(a) or abs(nxt) < 1e-18:
            if abs(nxt) < abs(a):
                out.append(nxt)
            break
        out.append(nxt)
        a = nxt
        k += 1
    return out


def _asymptotic_jy(x: float) -> tuple[float, float]:
    terms = _asymptotic_terms(x, alternate=True)
    p = 0.0
    q = 0.0
    for k, t in enumerate(terms):
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2 == 0:
            p += sign * t
        else:
            q += sign * t
    chi = x - 0.75 * math.pi
    pref = math.sqrt(2.0 / (math.pi * x))
    c, s = math.cos(chi), math.sin(chi)
    return pref * (p * c - q * s), pref * (p * s + q * c)


def _asymptotic_k1e(x: float) -> float:
    return math.sqrt(math.pi / (2.0 * x)) * math.fsum(_asymptotic_terms(x, alternate=False))


def _check_arg(x: float) -> float:
    x = float(x)
    if not math.isfinite(x) or x < 0:
        raise ValueError(f"Bessel argument must be finite and >= 0, got {x}")
    return x


def j1y1_scalar(x: float, method: str = "auto") -> tuple[float, float]:
    """J1(x) and Y1(x) for one non-negative argument.

    ``method`` is ``"auto"``, ``"series"`` or ``"asymptotic"``.
    """
    x = _check_arg(x)
    if x == 0.0:
        return 0.0, -math.inf
    if method == "auto":
        method = "series" if x <= CROSSOVER else "asymptotic"
    if method == "series":
        return _series(x, modified=False)
    if method == "asymptotic":
        return _asymptotic_jy(x)
    raise ValueError(f"unknown method {method!r}")


def k1e_scalar(x: float, method: str = "auto") -> float:
    """Exponentially scaled K1(x) * exp(x)."""
    x = _check_arg(x)
    if x == 0.0:
        return math.inf
    if method == "auto":
        method = "series" if x <= CROSSOVER else "asymptotic"
    if method == "series":
        return _series(x, modified=True)[1]
    if method == "asymptotic":
        return _asymptotic_k1e(x)
    raise ValueError(f"unknown method {method!r}")


def k1_scalar(x: float, method: str = "auto") -> float:
    x = _check_arg(x)
    if x > 745.0:
        return 0.0
    return k1e_scalar(x, method) * math.exp(-x)


def _vectorize(fn, x, n_out=1):
    arr = np.asarray(x, dtype=float)
    flat = arr.ravel()
    if n_out == 1:
        out = np.array([fn(v) for v in flat], dtype=float)
        return out.reshape(arr.shape) if arr.ndim else float(out[0])
    res = [fn(v) for v in flat]
    outs = tuple(np.array([r[i] for r in res], dtype=float) for i in range(n_out))
    if arr.ndim:
        return tuple(o.reshape(arr.shape) for o in outs)
    return tuple(float(o[0]) for o in outs)


def j1(x, method: str = "auto"):
    return _vectorize(lambda v: j1y1_scalar(v, method)[0], x)


def y1(x, method: str = "auto"):
    return _vectorize(lambda v: j1y1_scalar(v, method)[1], x)


def j1y1(x, method: str = "auto"):
    return _vectorize(lambda v: j1y1_scalar(v, method), x, n_out=2)


def k1(x, method: str = "auto"):
    return _vectorize(lambda v: k1_scalar(v, method), x)


def k1e(x, method: str = "auto"):
    return _vectorize(lambda v: k1e_scalar(v, method), x)


# Independent reference path (Cephes via scipy).

def reference_j1y1(x):
    x = np.asarray(x, dtype=float)
    return sc.j1(x), sc.y1(x)


def reference_k1(x):
    return sc.k1(np.asarray(x, dtype=float))


def reference_k1e(x):
    return sc.k1e(np.asarray(x, dtype=float))
