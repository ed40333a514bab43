"""Dirac spinors and photon polarization vectors on the mass shell.

Conventions, fixed once here:

* metric (+,-,-,-), standard Dirac representation
  gamma^0 = diag(1, 1, -1, -1), gamma^i = [[0, sigma_i], [-sigma_i, 0]];
* Dirac adjoint u~ = u^dagger gamma^0, slash(p) = gamma^0 p0 - gamma . p;
* u^(+)_zeta(p) = sqrt((E+m)/2m) (chi, sigma.p chi/(E+m)) with u~ u = +1 and
  u^(-)_zeta(p) = sqrt((E+m)/2m) (sigma.p chi/(E+m), chi) with u~ u = -1, so that
  2 sum_zeta u^(+/-) u~^(+/-) = slash(p)/m +/- 1.
  chi_{+1/2} = (1, 0), chi_{-1/2} = (0, 1) for both signs.
* photon frame: e1, e2 are x-hat, y-hat rotated along the great circle from
  z-hat to k-hat, w(k, +/-) = (e1 +/- i e2)/sqrt(2); (e1, e2, k-hat) is right
  handed. The only singular direction is k-hat = -z-hat.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidMassError, UndefinedDirectionError

SIGMA = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

GAMMA0 = np.diag([1, 1, -1, -1]).astype(complex)
GAMMA = np.zeros((3, 4, 4), dtype=complex)
for _i in range(3):
    GAMMA[_i, :2, 2:] = SIGMA[_i]
    GAMMA[_i, 2:, :2] = -SIGMA[_i]
# alpha_i = gamma^0 gamma^i
ALPHA = np.einsum("ab,ibc->iac", GAMMA0, GAMMA)

_CHI = {0.5: np.array([1, 0], dtype=complex), -0.5: np.array([0, 1], dtype=complex)}


def _check_mass(mass):
    if not mass > 0:
        raise InvalidMassError(f"Dirac spinors need m > 0, got {mass}")


def _zeta_key(zeta) -> float:
    z = float(zeta)
    if z not in (0.5, -0.5):
        raise ValueError(f"zeta must be +1/2 or -1/2, got {zeta}")
    return z


def energy(p, mass: float):
    p = np.asarray(p, dtype=float)
    return np.sqrt(np.sum(p * p, axis=-1) + mass * mass)


def slash(p, mass: float) -> np.ndarray:
    """gamma^mu p_mu on the positive-energy shell; shape (..., 4, 4)."""
    p = np.asarray(p, dtype=float)
    e = energy(p, mass)
    out = e[..., None, None] * GAMMA0
    for i in range(3):
        out = out - p[..., i, None, None] * GAMMA[i]
    return out


def sigma_dot(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return np.einsum("...i,iab->...ab", p.astype(complex), SIGMA)


def dirac_spinor(p, zeta, sign=+1, mass: float = 1.0) -> np.ndarray:
    """u^(sign)_zeta(p); ``p`` may be a single 3-vector or an (..., 3) array."""
    _check_mass(mass)
    z = _zeta_key(zeta)
    s = 1 if sign in (1, "+") else -1 if sign in (-1, "-") else None
    if s is None:
        raise ValueError("sign must be +1 or -1")
    p = np.asarray(p, dtype=float)
    e = energy(p, mass)
    chi = _CHI[z]
    small = np.einsum("...ab,b->...a", sigma_dot(p), chi) / (e + mass)[..., None]
    big = np.broadcast_to(chi, small.shape)
    norm = np.sqrt((e + mass) / (2.0 * mass))[..., None]
    if s > 0:
        u = np.concatenate([big, small], axis=-1)
    else:
        u = np.concatenate([small, big], axis=-1)
    return norm * u


def dirac_adjoint(u) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    return np.conj(u) @ GAMMA0


def spinor_basis(p, mass: float) -> np.ndarray:
    """Positive-energy spinors for zeta = +1/2, -1/2 stacked: shape (..., 4, 2)."""
    return np.stack([dirac_spinor(p, 0.5, +1, mass), dirac_spinor(p, -0.5, +1, mass)], axis=-1)


def completeness_residual(p, mass: float, sign=+1) -> float:
    """max |2 sum_zeta u u~ - (slash(p)/m +/- 1)| over entries (and points)."""
    s = 1 if sign in (1, "+") else -1
    acc = 0
    for z in (0.5, -0.5):
        u = dirac_spinor(p, z, s, mass)
        acc = acc + 2.0 * np.einsum("...a,...b->...ab", u, dirac_adjoint(u))
    target = slash(p, mass) / mass + s * np.eye(4)
    return float(np.max(np.abs(acc - target)))


def apply_norm_kernel(p, mass: float, g) -> np.ndarray:
    """K g with K = gamma^0 (slash(p) + m) / 2m = (E - alpha.p + m gamma^0)/2m.

    K is Hermitian with eigenvalues {0, 0, E/m, E/m}; it is the metric that makes
    the Dirac one-particle inner product positive: f^dagger K f = sum_zeta |u~_zeta f|^2.
    """
    p = np.asarray(p, dtype=float)
    g = np.asarray(g, dtype=complex)
    e = energy(p, mass)
    out = (e + 0j)[..., None] * g
    for i in range(3):
        out = out - p[..., i, None] * np.einsum("ab,...b->...a", ALPHA[i], g)
    out = out + mass * np.einsum("ab,...b->...a", GAMMA0, g)
    return out / (2.0 * mass)


def norm_kernel(p, mass: float) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return GAMMA0 @ (slash(p, mass) + mass * np.eye(4)) / (2.0 * mass)


def spin_components(p, mass: float, f) -> np.ndarray:
    """Half-density spin coefficients c_zeta = u~_zeta(p) f(p); shape (..., 2)."""
    basis = spinor_basis(p, mass)  # (...,4,2)
    adj = np.einsum("...az,ab->...zb", np.conj(basis), GAMMA0)
    return np.einsum("...zb,...b->...z", adj, np.asarray(f, dtype=complex))


# ---------------------------------------------------------------- photons


def polarization_frame(k) -> tuple[np.ndarray, np.ndarray]:
    """Real orthonormal (e1, e2) transverse to k; vectorized over leading axes.

    (e1, e2) is (x-hat, y-hat) carried along by the rotation that takes z-hat to
    k-hat about z-hat x k-hat. Smooth for every direction except k-hat = -z-hat,
    where the limit along phi = 0 is used: e1 = -x-hat, e2 = y-hat.
    """
    k = np.asarray(k, dtype=float)
    kk = np.sqrt(np.sum(k * k, axis=-1))
    if np.any(kk == 0):
        raise UndefinedDirectionError("polarization vectors are undefined at k = 0")
    a, b, c = (k[..., i] / kk for i in range(3))
    south = 1.0 + c <= 0.0
    d = np.where(south, 1.0, 1.0 + c)
    e1 = np.stack([1.0 - a * a / d, -a * b / d, -a], axis=-1)
    e2 = np.stack([-a * b / d, 1.0 - b * b / d, -b], axis=-1)
    if np.any(south):
        e1 = np.where(south[..., None], np.array([-1.0, 0.0, 0.0]), e1)
    # cleanup against rounding near the singular direction; e2 = k-hat x e1
    khat = np.stack([a, b, c], axis=-1)
    e1 = e1 - np.sum(e1 * khat, axis=-1, keepdims=True) * khat
    e1 = e1 / np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = np.cross(khat, e1)
    return e1, e2


def photon_polarization_basis(k) -> tuple[np.ndarray, np.ndarray]:
    """(w_plus, w_minus) for wave vector(s) ``k``."""
    e1, e2 = polarization_frame(k)
    r2 = np.sqrt(0.5)
    return r2 * (e1 + 1j * e2), r2 * (e1 - 1j * e2)


def helicity_vectors(k) -> np.ndarray:
    """w(k, s) stacked over s = (+1, -1): shape (..., 3, 2)."""
    wp, wm = photon_polarization_basis(k)
    return np.stack([wp, wm], axis=-1)
