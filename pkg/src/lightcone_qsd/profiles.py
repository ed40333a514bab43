"""Scalar momentum-space profile families.

A profile is a complex function of the 3-momentum evaluated on the mass shell
(so it may depend on p0 as well). Field amplitudes in `states` multiply a
profile by fixed spin or helicity weights.

Families
--------
``gaussian``    exp(-|p - center|^2 / 4 width^2)
``exp_energy``  exp(-a p0(p)), the near-exponentially localized stand-in
``power_law``   |p|^exponent (1 + |p|^2/scale^2)^-falloff
``tabulated``   values on a regular grid, trilinear interpolation, zero outside

The analytic families accept an optional ``axis`` n (multiplies by n.p, an
l = 1 partial wave) and a ``shift`` a (multiplies by exp(-i p.a), translating
the position amplitude by +a).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, ClassVar

import numpy as np
from scipy.interpolate import RegularGridInterpolator

DECAY_CLASSES = ("gaussian", "exponential", "power-law")


@dataclass(frozen=True)
class HarmonicForm:
    """f(p) = R(|p|, p0) (n.p-hat)^l exp(-i p.shift), l in {0, 1}."""

    l: int
    axis: np.ndarray | None
    shift: np.ndarray
    radial: Callable


def _vec(v, name="vector") -> tuple[float, float, float]:
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.shape != (3,) or not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be a finite 3-vector")
    return tuple(float(c) for c in arr)


class Profile:
    family: ClassVar[str] = ""
    decay: ClassVar[str] = "gaussian"

    def __call__(self, p: np.ndarray, p0: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def log_envelope(self, k: float, mass: float) -> float:
        """log of an upper bound for |f|^2 on the sphere |p| = k."""
        raise NotImplementedError

    def peak_radius(self, mass: float) -> float:
        return 0.0

    @property
    def harmonic(self) -> HarmonicForm | None:
        return None

    @property
    def box(self):
        """Cartesian support box ((lo, hi) per axis) for tabulated profiles, else None."""
        return None

    def position_scale(self, mass: float) -> float:
        """Rough width of the position amplitude, used to size domains."""
        return 1.0

    def params(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"family": self.family, "parameters": self.params()}


@dataclass(frozen=True, kw_only=True)
class _Modulated(Profile):
    shift: tuple = (0.0, 0.0, 0.0)
    axis: tuple | None = None

    def _post(self):
        object.__setattr__(self, "shift", _vec(self.shift, "shift"))
        if self.axis is not None:
            ax = _vec(self.axis, "axis")
            if not any(ax):
                raise ValueError("axis must be nonzero")
            object.__setattr__(self, "axis", ax)

    def _modulate(self, p, base):
        if self.axis is not None:
            base = base * (p @ np.asarray(self.axis))
        if any(self.shift):
            base = base * np.exp(-1j * (p @ np.asarray(self.shift)))
        return base

    def _axis_log(self, k):
        if self.axis is None:
            return 0.0
        n = math.sqrt(sum(c * c for c in self.axis))
        return 2.0 * math.log(max(n * k, 1e-300))

    def _harmonic(self, radial_base):
        n = None
        l = 0
        scale = 1.0
        if self.axis is not None:
            n = np.asarray(self.axis)
            scale = float(np.linalg.norm(n))
            n = n / scale
            l = 1

        def radial(k, p0, _b=radial_base, _l=l, _s=scale):
            out = _b(k, p0)
            if _l:
                out = out * (_s * k)
            return out

        return HarmonicForm(l, n, np.asarray(self.shift), radial)

    def _mod_params(self):
        return {"shift": list(self.shift), "axis": None if self.axis is None else list(self.axis)}


@dataclass(frozen=True, kw_only=True)
class Gaussian(_Modulated):
    width: float = 1.0
    center: tuple = (0.0, 0.0, 0.0)

    family: ClassVar[str] = "gaussian"
    decay: ClassVar[str] = "gaussian"

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("width must be positive")
        object.__setattr__(self, "center", _vec(self.center, "center"))
        self._post()

    def __call__(self, p, p0):
        d = p - np.asarray(self.center)
        base = np.exp(-np.sum(d * d, axis=-1) / (4.0 * self.width**2)) + 0j
        return self._modulate(p, base)

    def log_envelope(self, k, mass):
        c = math.sqrt(sum(v * v for v in self.center))
        d = max(k - c, 0.0)
        return -(d * d) / (2.0 * self.width**2) + self._axis_log(k)

    def peak_radius(self, mass):
        c = math.sqrt(sum(v * v for v in self.center))
        return c + (2.0 * self.width if self.axis is not None else 0.0)

    @property
    def harmonic(self):
        if any(self.center):
            return None
        w = self.width
        return self._harmonic(lambda k, p0: np.exp(-(k * k) / (4.0 * w * w)) + 0j)

    def position_scale(self, mass):
        return 1.0 / self.width

    def params(self):
        return {"width": self.width, "center": list(self.center), **self._mod_params()}


@dataclass(frozen=True, kw_only=True)
class ExpEnergy(_Modulated):
    a: float = 1.0

    family: ClassVar[str] = "exp_energy"
    decay: ClassVar[str] = "exponential"

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("a must be positive")
        self._post()

    def __call__(self, p, p0):
        return self._modulate(p, np.exp(-self.a * p0) + 0j)

    def log_envelope(self, k, mass):
        return -2.0 * self.a * math.sqrt(k * k + mass * mass) + self._axis_log(k)

    def peak_radius(self, mass):
        return 1.0 / self.a if self.axis is not None else 0.0

    @property
    def harmonic(self):
        a = self.a
        return self._harmonic(lambda k, p0: np.exp(-a * p0) + 0j)

    def position_scale(self, mass):
        return self.a

    def params(self):
        return {"a": self.a, **self._mod_params()}


@dataclass(frozen=True, kw_only=True)
class PowerLaw(_Modulated):
    exponent: float = 0.0
    scale: float = 1.0
    falloff: float = 3.0

    family: ClassVar[str] = "power_law"
    decay: ClassVar[str] = "power-law"

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if not 2 * (self.exponent - 2 * self.falloff) + 3 < 0:
            raise ValueError("profile is not square integrable at large |p|")
        self._post()

    def _radial(self, k, p0):
        with np.errstate(divide="ignore"):
            return (k**self.exponent) * (1.0 + (k / self.scale) ** 2) ** (-self.falloff) + 0j

    def __call__(self, p, p0):
        k = np.sqrt(np.sum(p * p, axis=-1))
        return self._modulate(p, self._radial(k, p0))

    def log_envelope(self, k, mass):
        k = max(k, 1e-300)
        return (
            2.0 * self.exponent * math.log(k)
            - 2.0 * self.falloff * math.log1p((k / self.scale) ** 2)
            + self._axis_log(k)
        )

    def peak_radius(self, mass):
        return self.scale

    @property
    def harmonic(self):
        return self._harmonic(self._radial)

    def position_scale(self, mass):
        return 1.0 / self.scale

    def params(self):
        return {
            "exponent": self.exponent,
            "scale": self.scale,
            "falloff": self.falloff,
            **self._mod_params(),
        }


@dataclass(frozen=True, eq=False)
class Tabulated(Profile):
    """Complex values on a regular (kx, ky, kz) grid; zero outside the box."""

    axes: tuple
    values: np.ndarray
    decay_class: str = "gaussian"
    _interp: object = field(default=None, repr=False, compare=False)

    family: ClassVar[str] = "tabulated"

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        if len(axes) != 3 or any(a.ndim != 1 or a.size < 2 for a in axes):
            raise ValueError("tabulated profile needs three 1-D axes with >= 2 nodes")
        if any(np.any(np.diff(a) <= 0) for a in axes):
            raise ValueError("tabulation axes must be strictly increasing")
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != tuple(a.size for a in axes):
            raise ValueError("values shape does not match axes")
        if self.decay_class not in DECAY_CLASSES:
            raise ValueError(f"decay_class must be one of {DECAY_CLASSES}")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", vals)
        interp = RegularGridInterpolator(axes, vals, method="linear", bounds_error=False, fill_value=0.0)
        object.__setattr__(self, "_interp", interp)

    @property
    def decay(self):  # type: ignore[override]
        return self.decay_class

    def __call__(self, p, p0):
        p = np.asarray(p, dtype=float)
        return np.asarray(self._interp(p.reshape(-1, 3)), dtype=complex).reshape(p.shape[:-1])

    def log_envelope(self, k, mass):
        return math.log(max(float(np.max(np.abs(self.values))) ** 2, 1e-300))

    @property
    def box(self):
        return tuple((float(a[0]), float(a[-1])) for a in self.axes)

    def params(self):
        return {
            "axes": [a.tolist() for a in self.axes],
            "values_re": self.values.real.tolist(),
            "values_im": self.values.imag.tolist(),
            "decay_class": self.decay_class,
        }


@dataclass(frozen=True, eq=False)
class Boosted(Profile):
    """Pushforward f(Lambda^-1 p) of a profile under a boost of rapidity ``rapidity``.

    The boost acts on (p0, p.n) with the matrix [[ch, sh], [sh, ch]]; the
    invariant measure d^3p/2p0 is preserved, so inner products are unchanged.
    """

    base: Profile
    rapidity: float
    axis: tuple = (1.0, 0.0, 0.0)
    mass: float = 1.0

    family: ClassVar[str] = "boosted"

    def __post_init__(self):
        ax = np.asarray(_vec(self.axis, "axis"))
        norm = float(np.linalg.norm(ax))
        if norm == 0:
            raise ValueError("axis must be nonzero")
        object.__setattr__(self, "axis", tuple(float(c) for c in ax / norm))
        if not math.isfinite(self.rapidity):
            raise ValueError("rapidity must be finite")

    @property
    def decay(self):  # type: ignore[override]
        return self.base.decay

    def __call__(self, p, p0):
        n = np.asarray(self.axis)
        ch, sh = math.cosh(self.rapidity), math.sinh(self.rapidity)
        par = p @ n
        par_b = ch * par - sh * p0
        p0_b = ch * p0 - sh * par
        pb = p + (par_b - par)[..., None] * n
        return self.base(pb, p0_b)

    def radius(self, mass, rtol=1e-20):
        r = momentum_radius(self.base, mass, rtol)
        a = abs(self.rapidity)
        return math.cosh(a) * r + math.sinh(a) * math.sqrt(r * r + mass * mass)

    def log_envelope(self, k, mass):
        return self.base.log_envelope(0.0, mass)

    def position_scale(self, mass):
        return self.base.position_scale(mass)

    def params(self):
        return {
            "base": self.base.to_dict(),
            "rapidity": self.rapidity,
            "axis": list(self.axis),
            "mass": self.mass,
        }


FAMILIES = {cls.family: cls for cls in (Gaussian, ExpEnergy, PowerLaw, Tabulated, Boosted)}


def profile_from_dict(doc: dict) -> Profile:
    fam = doc["family"]
    params = dict(doc.get("parameters", {}))
    if fam not in FAMILIES:
        raise ValueError(f"unknown profile family {fam!r}")
    if fam == "boosted":
        params["base"] = profile_from_dict(params["base"])
        return Boosted(**params)
    if fam == "tabulated":
        vals = np.asarray(params.pop("values_re"), dtype=float) + 1j * np.asarray(
            params.pop("values_im"), dtype=float
        )
        return Tabulated(axes=tuple(params.pop("axes")), values=vals, **params)
    return FAMILIES[fam](**params)


def momentum_radius(profile: Profile, mass: float, rtol: float = 1e-20) -> float:
    """Radius beyond which |f|^2 p^2 has dropped below ``rtol`` of its peak.

    Works from the family's analytic envelope: march outward from the peak in
    growing steps, then bisect.
    """
    if hasattr(profile, "radius"):
        return profile.radius(mass, rtol)
    if profile.box is not None:
        return float(max(np.linalg.norm([max(abs(lo), abs(hi)) for lo, hi in profile.box]), 1e-12))

    def g(k):
        return profile.log_envelope(k, mass) + 2.0 * math.log(max(k, 1e-300))

    k0 = max(profile.peak_radius(mass), 1e-3)
    ks = np.geomspace(1e-3, max(4 * k0, 1.0), 64)
    peak = max(g(float(k)) for k in ks)
    target = peak + math.log(rtol)
    lo = max(k0, float(ks[int(np.argmax([g(float(k)) for k in ks]))]))
    step = max(lo, 1.0)
    hi = lo + step
    while g(hi) > target:
        lo = hi
        step *= 2.0
        hi = lo + step
        if hi > 1e12:
            raise ValueError("profile does not decay fast enough to size a quadrature domain")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if g(mid) > target:
            lo = mid
        else:
            hi = mid
    return hi
