"""Position-space amplitudes of mass-shell states, tail masses and supports.

Two conventions:

``half_density``
    phi(x) = (2 pi)^{-3/2} int exp(i p.x - i t0 p0) c(p) / sqrt(2 p0) d^3p with
    c(p) = f(p) (scalar), u~_zeta(p) f(p) (Dirac, 2 components) or
    sum_s w(k, s) f(k, s) (photon, 3 components). Plancherel makes
    int |phi|^2 d^3x the Lorentz-invariant norm, so |phi|^2 is a density.
``paper_fourier``
    phi(x) = int exp(i p.x - i t0 p0) f(p) d^3p, with the Dirac spinor u f
    (4 components) or sum_s w f_s for photons, and no normalization factor.

Two engines evaluate them:

* radial: amplitudes made of l = 0 / l = 1 partial waves about a common centre
  reduce to one-dimensional Bessel transforms,
      B_t(r) = C i^l int R_t(k) j_l(k r) exp(-i t0 p0) w(p0) k^2 dk,
  evaluated by composite Gauss-Legendre with panels narrow enough to resolve
  the oscillation for the radii at hand, geometric grading at k -> 0 (where
  1/sqrt(2p0) is singular for m = 0);
* grid: a 3D FFT of the momentum samples on a cube (everything else).
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft

from . import quadrature, spinors
from .errors import (
    DegenerateStateError,
    FloorError,
    PreconditionError,
)
from .states import MomentumAmplitude, gram_matrix

CONVENTIONS = ("half_density", "paper_fourier")
K_ORDER = 16
R_ORDER = 16
GRID_CAP = 192
EDGE_TARGET = 1e-9
R_MAX_CAP = 2.0e4
MACHINE_FLOOR = 64 * np.finfo(float).eps


class LowConfidenceWarning(UserWarning):
    """Position amplitude evaluated outside its reliable radius."""


def _threads() -> int:
    import os

    v = os.environ.get("LIGHTCONE_QSD_THREADS")
    try:
        return max(1, int(v)) if v else -1
    except ValueError:
        return -1


def _shell_weight(p0, convention: str):
    if convention == "paper_fourier":
        return np.ones_like(p0)
    with np.errstate(divide="ignore"):
        w = 1.0 / np.sqrt(2.0 * p0)
    return np.where(np.isfinite(w), w, 0.0)


def _prefactor(convention: str) -> float:
    return (2.0 * math.pi) ** -1.5 if convention == "half_density" else 1.0


def ncomp(kind_name: str, convention: str) -> int:
    if kind_name == "scalar":
        return 1
    if kind_name == "photon":
        return 3
    return 2 if convention == "half_density" else 4


def momentum_components(f: MomentumAmplitude, p: np.ndarray, convention: str) -> np.ndarray:
    """c(p) of the chosen convention, shape (N, ncomp); zero at a massless p = 0."""
    p = np.asarray(p, dtype=float).reshape(-1, 3)
    name = f.kind.name
    k = np.sqrt(np.sum(p * p, axis=1))
    ok = k > 0 if f.mass == 0 else np.ones(len(p), dtype=bool)
    out = np.zeros((len(p), ncomp(name, convention)), dtype=complex)
    if not np.any(ok):
        return out
    q = p[ok]
    vals = f.components(q)
    if name == "scalar":
        out[ok] = vals
    elif name == "photon":
        out[ok] = np.einsum("nis,ns->ni", spinors.helicity_vectors(q), vals)
    elif convention == "half_density":
        out[ok] = spinors.spin_components(q, f.mass, vals)
    else:
        out[ok] = vals
    return out


# ---------------------------------------------------------------- radial engine


def _j0(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.sin(x) / x
    out[x == 0] = 1.0
    return out


_J1_SERIES = [1 / 3, -1 / 30, 1 / 840, -1 / 45360, 1 / 3991680, -1 / 518918400, 1 / 93405312000]


def _j1(x: np.ndarray) -> np.ndarray:
    """Spherical Bessel j1; Taylor series below 0.5 where the closed form cancels."""
    small = np.abs(x) < 0.5
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (np.sin(x) / x - np.cos(x)) / x
    if np.any(small):
        xs = x[small]
        x2 = xs * xs
        acc = np.zeros_like(xs)
        for c in reversed(_J1_SERIES):
            acc = acc * x2 + c
        out[small] = acc * xs
    return out


@dataclass
class _RadialTerm:
    l: int
    axis: np.ndarray | None
    radial: object


class RadialEngine:
    """Partial-wave evaluation for amplitudes of l <= 1 harmonic terms."""

    def __init__(self, f: MomentumAmplitude, t0: float, convention: str, r_scale: float | None = None):
        self.mass = f.mass
        self.t0 = float(t0)
        self.convention = convention
        nc = ncomp(f.kind.name, convention)
        terms, coefs, shift = [], [], None
        for t in f.terms:
            h = t.profile.harmonic
            if shift is None:
                shift = np.asarray(h.shift, dtype=float)
            terms.append(_RadialTerm(h.l, None if h.axis is None else np.asarray(h.axis), h.radial))
            if f.kind.name == "scalar":
                coefs.append([t.coef])
            else:
                coefs.append([t.coef * s for s in t.spin])
        self.terms = terms
        self.coef = np.asarray(coefs, dtype=complex).T.reshape(nc, len(terms))
        self.shift = shift
        self.p_max = f.momentum_radius(rtol=1e-26)
        scale = f.position_scale() if r_scale is None else r_scale
        self.r_dense = abs(self.t0) + 10.0 * scale + 10.0 / max(self.p_max, 1e-3)
        self.h_r = min(4.0 / self.p_max, self.r_dense / 8.0)
        self._rules = {}
        self._memo = {}

    # -- momentum rule for radii up to r_hi
    def _k_rule(self, r_hi: float):
        span = r_hi + abs(self.t0) + 1.0
        width = min(self.p_max / 8.0, 6.0 / span)
        n = int(math.ceil(self.p_max / width))
        key = n
        if key not in self._rules:
            h = self.p_max / n
            g = max(4, int(math.ceil(math.log2(max(h * span / 1e-4, 2.0)))))
            edges = np.concatenate([[0.0], h * 2.0 ** -np.arange(g, 0, -1), h * np.arange(1, n + 1)])
            k, wk = quadrature.composite_gl(edges, K_ORDER)
            p0 = np.sqrt(k * k + self.mass**2)
            base = wk * k * k * _shell_weight(p0, self.convention) * np.exp(-1j * self.t0 * p0)
            kern = np.stack([t.radial(k, p0) * base for t in self.terms])
            self._rules[key] = (k, kern)
        return self._rules[key]

    def radial_values(self, r) -> np.ndarray:
        """B_t(r) for every term, shape (n_terms, len(r))."""
        r = np.asarray(r, dtype=float).reshape(-1)
        key = (len(r), hash(r.tobytes()))
        hit = self._memo.get(key)
        if hit is not None and np.array_equal(hit[0], r):
            return hit[1]
        out = self._radial_values(r)
        if len(r) > 256:
            if len(self._memo) > 8:
                self._memo.pop(next(iter(self._memo)))
            self._memo[key] = (r.copy(), out)
        return out

    def _radial_values(self, r: np.ndarray) -> np.ndarray:
        out = np.zeros((len(self.terms), len(r)), dtype=complex)
        if len(r) == 0:
            return out
        # radii binned by octave so each bin gets a rule just fine enough for it
        hi_edges = [self.r_dense]
        while hi_edges[-1] < r.max():
            hi_edges.append(hi_edges[-1] * 2.0)
        lo = -1.0
        for hi in hi_edges:
            sel = np.flatnonzero((r > lo) & (r <= hi))
            lo = hi
            if sel.size == 0:
                continue
            k, kern = self._k_rule(hi)
            step = max(1, 4_000_000 // len(k))
            for s in range(0, sel.size, step):
                idx = sel[s : s + step]
                kr = np.outer(r[idx], k)
                j0 = j1 = None
                for ti, t in enumerate(self.terms):
                    if t.l == 0:
                        if j0 is None:
                            j0 = _j0(kr)
                        out[ti, idx] = j0 @ kern[ti]
                    else:
                        if j1 is None:
                            j1 = _j1(kr)
                        out[ti, idx] = 1j * (j1 @ kern[ti])
        return out * (4.0 * math.pi * _prefactor(self.convention))

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1, 3)
        y = x - self.shift
        r = np.linalg.norm(y, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            yhat = np.where(r[:, None] > 0, y / r[:, None], 0.0)
        B = self.radial_values(r)
        for ti, t in enumerate(self.terms):
            if t.l == 1:
                B[ti] *= yhat @ t.axis
        return (self.coef @ B).T

    def angular_matrix(self, other: "RadialEngine") -> np.ndarray:
        """int dOmega (n_s.y)^l_s (n_t.y)^l_t for all term pairs."""
        A = np.zeros((len(self.terms), len(other.terms)))
        for i, s in enumerate(self.terms):
            for j, t in enumerate(other.terms):
                if s.l == 0 and t.l == 0:
                    A[i, j] = 4.0 * math.pi
                elif s.l == 1 and t.l == 1:
                    A[i, j] = 4.0 * math.pi / 3.0 * float(s.axis @ t.axis)
        return A

    def moment_dipole(self, r, wr, B=None) -> np.ndarray:
        """int y |phi|^2 d^3y from a radial rule (r, wr)."""
        if B is None:
            B = self.radial_values(r)
        out = np.zeros(3)
        for i, s in enumerate(self.terms):
            for j, t in enumerate(self.terms):
                if s.l == 0 and t.l == 1:
                    mom = np.sum(wr * r**3 * np.conj(B[i]) * B[j])
                    c = np.sum(np.conj(self.coef[:, i]) * self.coef[:, j])
                    out += 2.0 * (4.0 * math.pi / 3.0) * float(np.real(c * mom)) * t.axis
        return out


def _r_edges(r_dense: float, h_r: float, r_max: float, split=()) -> np.ndarray:
    n = max(1, int(math.ceil(r_dense / h_r)))
    edges = list(np.linspace(0.0, r_dense, n + 1))
    r = r_dense
    while r < r_max:
        r = min(r * 1.25, r_max)
        edges.append(r)
    edges = np.asarray(edges)
    extra = np.asarray([s for s in split if 0 < s < edges[-1]], dtype=float)
    return np.unique(np.concatenate([edges, extra]))


def _radial_overlap_panels(engines, r_edges, paired: bool = False):
    """Per-panel overlaps sum_c int r^2 conj(phi_a) phi_b dOmega dr, shape (n_panel, n, n).

    ``r_edges`` is a sorted edge list, or with ``paired`` an (n_panel, 2) array.
    """
    x, w = quadrature.gauss_legendre(R_ORDER)
    if paired:
        a, b = r_edges[:, 0], r_edges[:, 1]
    else:
        a, b = r_edges[:-1], r_edges[1:]
    r = (0.5 * (b - a)[:, None] * x[None, :] + 0.5 * (b + a)[:, None]).ravel()
    wr = (0.5 * (b - a)[:, None] * w[None, :]).ravel()
    n_pan = len(a)
    B = [e.radial_values(r) for e in engines]
    n = len(engines)
    out = np.zeros((n_pan, n, n), dtype=complex)
    for i in range(n):
        for j in range(i, n):
            ang = engines[i].angular_matrix(engines[j])
            cc = np.conj(engines[i].coef).T @ engines[j].coef  # (terms_i, terms_j)
            M = cc * ang
            integrand = np.einsum("sr,st,tr->r", np.conj(B[i]), M, B[j]) * r * r * wr
            out[:, i, j] = integrand.reshape(n_pan, R_ORDER).sum(axis=1)
            if i != j:
                out[:, j, i] = np.conj(out[:, i, j])
    return out


def _piece_integrals(engines, edges, pan, cuts):
    """Refine the per-panel overlaps ``pan`` at ``cuts``.

    Returns (fine_edges, fine_pan): panels containing a cut are split and
    re-integrated, the others reuse ``pan``. Cumulative sums over the result are
    exactly monotone for nonnegative integrands.
    """
    cuts = np.unique(np.asarray(cuts, dtype=float))
    cuts = cuts[(cuts > edges[0]) & (cuts < edges[-1])]
    cuts = cuts[~np.isin(cuts, edges)]
    if cuts.size == 0:
        return edges, pan
    owner = np.searchsorted(edges, cuts) - 1
    new_edges, new_pan = [edges[0]], []
    x, w = quadrature.gauss_legendre(R_ORDER)
    sub_lists = {}
    for i in np.unique(owner):
        sub_lists[int(i)] = np.concatenate([[edges[i]], cuts[owner == i], [edges[i + 1]]])
    if sub_lists:
        sub_edges = np.concatenate([np.stack([se[:-1], se[1:]], axis=1) for se in sub_lists.values()])
        vals = _radial_overlap_panels(engines, sub_edges, paired=True)
    k = 0
    for i in range(len(edges) - 1):
        if i in sub_lists:
            se = sub_lists[i]
            for j in range(len(se) - 1):
                new_edges.append(se[j + 1])
                new_pan.append(vals[k])
                k += 1
        else:
            new_edges.append(edges[i + 1])
            new_pan.append(pan[i])
    return np.asarray(new_edges), np.asarray(new_pan)


# ---------------------------------------------------------------- grid engine


@dataclass
class GridField:
    center: np.ndarray
    dx: float
    n: int
    values: np.ndarray  # (ncomp, n, n, n), fft ordering of offsets
    momentum_sum: float  # discrete sum |c|^2 dp^3 = sum |phi|^2 dx^3

    @cached_property
    def offsets(self) -> np.ndarray:
        return self.dx * self.n * np.fft.fftfreq(self.n)

    @property
    def half_width(self) -> float:
        return 0.5 * self.n * self.dx

    def distance_from(self, point) -> np.ndarray:
        d = self.center - np.asarray(point, dtype=float)
        o = self.offsets
        return np.sqrt(
            (o[:, None, None] + d[0]) ** 2 + (o[None, :, None] + d[1]) ** 2 + (o[None, None, :] + d[2]) ** 2
        )

    def density(self) -> np.ndarray:
        return np.sum(np.abs(self.values) ** 2, axis=0)

    def edge_fraction(self) -> float:
        o = np.abs(self.offsets)
        outer = o > 0.8 * self.half_width
        mask = outer[:, None, None] | outer[None, :, None] | outer[None, None, :]
        dens = self.density()
        tot = float(np.sum(dens))
        return float(np.sum(dens[mask])) / tot if tot > 0 else 0.0


def _momentum_samples(f: MomentumAmplitude, t0: float, convention: str, kax: np.ndarray) -> np.ndarray:
    """c(p) w(p0) exp(-i t0 p0) on the cube kax^3, shape (ncomp, n, n, n)."""
    n = len(kax)
    nc = ncomp(f.kind.name, convention)
    g = np.zeros((nc, n, n, n), dtype=complex)
    KY, KZ = np.meshgrid(kax, kax, indexing="ij")
    for i, kx in enumerate(kax):
        p = np.stack([np.full(KY.size, kx), KY.ravel(), KZ.ravel()], axis=1)
        p0 = np.sqrt(np.sum(p * p, axis=1) + f.mass**2)
        c = momentum_components(f, p, convention)
        c *= (_shell_weight(p0, convention) * np.exp(-1j * t0 * p0))[:, None]
        g[:, i] = c.T.reshape(nc, n, n)
    return g


def _grid_field(samples: np.ndarray, convention: str, center, dx: float) -> GridField:
    center = np.asarray(center, dtype=float)
    n = samples.shape[1]
    kax = 2.0 * math.pi * np.fft.fftfreq(n, dx)
    dp = kax[1] - kax[0]
    phase = [np.exp(1j * kax * center[a]) for a in range(3)]
    g = samples * (phase[0][:, None, None] * phase[1][None, :, None] * phase[2][None, None, :])
    msum = float(np.sum(np.abs(g) ** 2)) * dp**3 if convention == "half_density" else math.nan
    vals = scipy.fft.ifftn(g, axes=(1, 2, 3), workers=_threads(), overwrite_x=True)
    vals *= n**3 * dp**3 * _prefactor(convention)
    return GridField(center, dx, n, vals, msum)


def _point_sum(samples: np.ndarray, convention: str, x, dx: float) -> np.ndarray:
    """Trapezoid sum over the momentum grid at arbitrary points (no FFT)."""
    n = samples.shape[1]
    kax = 2.0 * math.pi * np.fft.fftfreq(n, dx)
    dp = kax[1] - kax[0]
    x = np.asarray(x, dtype=float).reshape(-1, 3)
    out = np.empty((len(x), samples.shape[0]), dtype=complex)
    for i, xi in enumerate(x):
        ex, ey, ez = (np.exp(1j * kax * xi[a]) for a in range(3))
        t = samples @ ez
        t = t @ ey
        out[i] = t @ ex
    return out * dp**3 * _prefactor(convention)


def grid_shape(p_max: float, half_width: float, cap: int = GRID_CAP) -> tuple[float, int]:
    """(dx, n) with Nyquist momentum >= p_max and box half width >= ``half_width`` when possible."""
    dx = math.pi / p_max
    n = scipy.fft.next_fast_len(int(math.ceil(2.0 * half_width / dx)))
    n = max(n, 16)
    if n > cap:
        n = cap
        while scipy.fft.next_fast_len(n) != n:
            n -= 1
    return dx, n


# ---------------------------------------------------------------- amplitude


def _nominal_center(f: MomentumAmplitude) -> np.ndarray:
    shifts = [np.asarray(t.profile.params().get("shift", (0, 0, 0)), dtype=float) for t in f.terms]
    return np.mean(shifts, axis=0) if shifts else np.zeros(3)


def radial_capable(f: MomentumAmplitude, convention: str) -> bool:
    if f.kind.name == "photon" or (f.kind.name == "dirac" and convention != "half_density"):
        return False
    shift = None
    for t in f.terms:
        h = t.profile.harmonic
        if h is None:
            return False
        s = np.asarray(h.shift, dtype=float)
        if shift is None:
            shift = s
        elif not np.allclose(s, shift, rtol=0, atol=1e-12):
            return False
    return True


class PositionAmplitude:
    """Position-space amplitude of a mass-shell state at time ``t0``."""

    def __init__(
        self,
        source: MomentumAmplitude,
        t0: float = 0.0,
        convention: str = "half_density",
        engine: str = "auto",
        r_max: float | None = None,
    ):
        if convention not in CONVENTIONS:
            raise ValueError(f"convention must be one of {CONVENTIONS}")
        if engine not in ("auto", "radial", "grid"):
            raise ValueError("engine must be auto, radial or grid")
        self.source = source
        self.t0 = float(t0)
        self.convention = convention
        self.label = source.label
        self.ncomp = ncomp(source.kind.name, convention)
        capable = radial_capable(source, convention)
        if engine == "radial" and not capable:
            raise ValueError("amplitude is not a sum of l <= 1 partial waves about one centre")
        self.engine = "radial" if (engine == "radial" or (engine == "auto" and capable)) else "grid"
        self._grids: dict = {}
        self._r_max_req = r_max
        if self.engine == "radial":
            self._radial = RadialEngine(source, self.t0, convention)
            self._setup_radial()
        else:
            self._radial = None
            self._setup_grid()

    # ------------------------------------------------------------ setup

    @cached_property
    def momentum_norm(self) -> float:
        """Lorentz-invariant norm^2 of the source (equals the half-density position norm)."""
        return float(gram_matrix([self.source]).entries[0, 0].real)

    def _setup_radial(self):
        eng = self._radial
        m = self.mass
        if self._r_max_req is not None:
            r_max = float(self._r_max_req)
        elif m > 0:
            r_max = max(2.0 * eng.r_dense, 36.0 / m + abs(self.t0))
        else:
            r_max = 4.0 * eng.r_dense
        norm = self.momentum_norm
        if self._r_max_req is None:
            while r_max < R_MAX_CAP and self._beyond_estimate(r_max) > EDGE_TARGET * norm:
                r_max = min(4.0 * r_max, R_MAX_CAP)
        edges = _r_edges(eng.r_dense, eng.h_r, r_max)
        x, w = quadrature.gauss_legendre(R_ORDER)
        a, b = edges[:-1], edges[1:]
        r = (0.5 * (b - a)[:, None] * x + 0.5 * (b + a)[:, None]).ravel()
        wr = (0.5 * (b - a)[:, None] * w).ravel()
        B = eng.radial_values(r)
        total = float(np.sum(wr * self._density_integrand(r, B)))
        edge = self._beyond_estimate(r_max) / max(total, 1e-300)
        self.r_max = r_max
        self._edges = edges
        self._panels = _radial_overlap_panels([eng], edges)
        self.position_total = total
        self.edge_mass = edge
        self.reliable_radius = r_max
        dip = eng.moment_dipole(r, wr, B)
        self.centroid = eng.shift + dip / total if total > 0 else eng.shift.copy()

    def _density_integrand(self, r, B=None) -> np.ndarray:
        """r^2 times the angular integral of |phi|^2."""
        eng = self._radial
        if B is None:
            B = eng.radial_values(r)
        M = (np.conj(eng.coef).T @ eng.coef) * eng.angular_matrix(eng)
        return np.real(np.einsum("sr,st,tr->r", np.conj(B), M, B)) * np.asarray(r) ** 2

    def _beyond_estimate(self, r_max: float) -> float:
        r = np.array([r_max / 1.25, r_max])
        i0, i1 = self._density_integrand(r)
        if i1 <= 0:
            return 0.0
        if i0 <= 0:
            return math.inf
        q = math.log(i0 / i1) / math.log(1.25)
        if q <= 1.0 + 1e-6:
            return math.inf
        return i1 * r_max / (q - 1.0)

    def _default_grid_params(self):
        f = self.source
        p_max = f.momentum_radius(rtol=1e-14)
        m = self.mass
        ext = 6.0 * f.position_scale() + (8.0 / m if m > 0 else 6.0 * f.position_scale())
        ext += abs(self.t0)
        return p_max, ext

    def _setup_grid(self):
        p_max, ext = self._default_grid_params()
        c0 = _nominal_center(self.source)
        dx, n = grid_shape(p_max, ext)
        gf = self.grid_field(c0, dx, n)
        self._grid_default = (c0, dx, n)
        dens = gf.density()
        total = float(np.sum(dens)) * dx**3
        o = gf.offsets
        cx = np.sum(dens.sum(axis=(1, 2)) * o)
        cy = np.sum(dens.sum(axis=(0, 2)) * o)
        cz = np.sum(dens.sum(axis=(0, 1)) * o)
        self.centroid = c0 + np.array([cx, cy, cz]) * dx**3 / total if total > 0 else c0
        self.position_total = total
        self.edge_mass = gf.edge_fraction()
        self.reliable_radius = 0.8 * gf.half_width
        self.r_max = gf.half_width

    def _samples(self, dx: float, n: int) -> np.ndarray:
        key = ("samples", round(dx, 14), n)
        if key not in self._grids:
            kax = 2.0 * math.pi * np.fft.fftfreq(n, dx)
            self._grids[key] = _momentum_samples(self.source, self.t0, self.convention, kax)
        return self._grids[key]

    def grid_field(self, center, dx: float, n: int) -> GridField:
        key = (tuple(np.round(np.asarray(center, dtype=float), 14)), round(dx, 14), n)
        if key not in self._grids:
            self._grids[key] = _grid_field(self._samples(dx, n), self.convention, center, dx)
        return self._grids[key]

    # ------------------------------------------------------------ properties

    @property
    def mass(self) -> float:
        return self.source.mass

    @property
    def plancherel_residual(self) -> float | None:
        if self.convention != "half_density":
            return None
        n = self.momentum_norm
        return abs(self.position_total - n) / n

    @property
    def floor(self) -> float:
        """Noise floor below which tail masses (relative) are not trusted."""
        res = self.plancherel_residual or 0.0
        return 10.0 * max(res, self.edge_mass, MACHINE_FLOOR)

    @property
    def nominal_center(self) -> np.ndarray:
        if self._radial is not None:
            return self._radial.shift
        return self._grid_default[0]

    # ------------------------------------------------------------ evaluation

    def evaluate(self, x, warn: bool = True) -> tuple[np.ndarray, np.ndarray]:
        """Values (N, ncomp) and a low-confidence mask."""
        x = np.asarray(x, dtype=float).reshape(-1, 3)
        d = np.linalg.norm(x - self.nominal_center, axis=1)
        low = d > self.reliable_radius
        if self._radial is not None:
            vals = self._radial.evaluate(x)
        else:
            _, dx, n = self._grid_default
            vals = _point_sum(self._samples(dx, n), self.convention, x, dx)
        if warn and np.any(low):
            warnings.warn(
                f"{int(low.sum())} point(s) beyond the reliable radius {self.reliable_radius:.4g}",
                LowConfidenceWarning,
                stacklevel=2,
            )
        return vals, low

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(x)[0]

    def density(self, x) -> np.ndarray:
        return np.sum(np.abs(self(x)) ** 2, axis=1)

    # ------------------------------------------------------------ masses

    def _require_normalized(self):
        if self.convention != "half_density":
            raise PreconditionError("tail masses need the half_density convention")
        n = self.momentum_norm
        if not math.isfinite(n) or n <= 0:
            raise DegenerateStateError("zero-norm source")
        if abs(n - 1.0) > 1e-6:
            raise PreconditionError(f"source is not normalized (norm^2 = {n:.9g})")

    def _radial_about(self, center) -> bool:
        if self._radial is None:
            return False
        c = self.nominal_center if center is None else np.asarray(center, dtype=float)
        return bool(np.allclose(c, self._radial.shift, rtol=0, atol=1e-9))

    def tail_masses(self, radii, center=None) -> np.ndarray:
        """Fraction of the norm outside |x - center| > R for each R (computed directly)."""
        self._require_normalized()
        radii = np.asarray(radii, dtype=float).reshape(-1)
        if np.any(radii < 0):
            raise ValueError("radii must be >= 0")
        total = self.momentum_norm
        if center is None:
            center = self.centroid
        if self._radial_about(center):
            edges, pan = _piece_integrals([self._radial], self._edges, self._panels, radii)
            pan = pan[:, 0, 0].real
            # cumulative from the outside in, so the tail is a sum of nonnegative pieces
            out_cum = np.concatenate([np.cumsum(pan[::-1])[::-1], [0.0]])
            idx = np.searchsorted(edges, np.minimum(radii, edges[-1]))
            tails = out_cum[idx] / total
        else:
            bs = self._ball_spectrum(center)
            inside = bs.masses(radii)[:, 0, 0].real
            tails = (float(bs.total[0, 0].real) - inside) / total
        tails = np.where(radii == 0, 1.0, tails)
        return np.clip(tails, 0.0, 1.0)

    def tail_mass(self, R: float, center=None) -> float:
        return float(self.tail_masses([R], center)[0])

    def _ball_spectrum(self, center) -> "BallSpectrum":
        _, dx, n = self._grid_default if self._radial is None else self._radial_grid_params()
        c0 = np.asarray(center, dtype=float)
        key = ("ball", tuple(np.round(c0, 14)), round(dx, 14), n)
        if key not in self._grids:
            self._grids[key] = BallSpectrum([self], c0, dx, n)
        return self._grids[key]

    def _radial_grid_params(self):
        p_max, ext = self._default_grid_params()
        dx, n = grid_shape(p_max, ext)
        return self.nominal_center, dx, n

    def floor_radius(self, center=None) -> float:
        """Smallest radius where the tail reaches the floor (or the reliable radius)."""
        try:
            return epsilon_support_radius(self, center, self.floor)
        except FloorError:
            return self.reliable_radius


def _ball_transform(x: np.ndarray) -> np.ndarray:
    """(sin x - x cos x) / x^3, so the unit-radius ball has transform 4 pi times this at x = |q|."""
    out = np.empty_like(x)
    small = x < 1e-2
    xs = x[small] ** 2
    out[small] = 1 / 3 - xs / 30 + xs * xs / 840
    xl = x[~small]
    out[~small] = (np.sin(xl) - xl * np.cos(xl)) / xl**3
    return out


class BallSpectrum:
    """Exact ball masses of trigonometric-interpolant densities on a periodic grid.

    With momentum samples on an n^3 lattice, the products phi_i* phi_j are
    band-limited to a lattice twice as fine, where they are represented
    exactly. That fine lattice is never formed: it splits into 8 half-step
    shifted copies of the coarse one, and the fine spectrum is a phase-weighted
    sum of their FFTs. Coefficients are binned by integer lattice norm |k|^2, so
        M_ij(T) = V^-1 sum_s A_ij(s) 4 pi T^3 b(|q_s| T)
    costs one pass over the shells per radius. Radii past half the box switch
    to nonnegative ramp increments on the coarse grid, which keeps the diagonal
    masses nondecreasing.
    """

    def __init__(self, phis, center, dx: float, n: int):
        center = np.asarray(center, dtype=float)
        self.dx, self.n, self.center = dx, n, center
        self.k = len(phis)
        self.fields = [p.grid_field(center, dx, n) for p in phis]
        self.half = 0.5 * n * dx
        N = 2 * n
        dp = 2.0 * math.pi / (n * dx)
        pref = n**3 * dp**3 * _prefactor(phis[0].convention)
        kax = 2.0 * math.pi * np.fft.fftfreq(n, dx)
        phase = [np.exp(1j * kax * center[a]) for a in range(3)]
        shift = phase[0][:, None, None] * phase[1][None, :, None] * phase[2][None, None, :]
        samples = [p._samples(dx, n) * shift for p in phis]
        half = np.exp(0.5j * kax * dx)  # moves a coarse lattice by dx/2
        q0 = np.arange(n)
        kf = np.rint(np.fft.fftfreq(N) * N).astype(np.int64)
        smax = 3 * (N // 2) ** 2 + 1
        # shell index of every fine mode, block t in {0,1}^3 covering q0 + n t
        sq = [kf[q0] ** 2, kf[q0 + n] ** 2]
        bins = {}
        for t in np.ndindex(2, 2, 2):
            bins[t] = (sq[t[0]][:, None, None] + sq[t[1]][None, :, None] + sq[t[2]][None, None, :]).ravel()
        vol_f = (0.5 * dx) ** 3
        pairs = [(i, j) for i in range(self.k) for j in range(i, self.k)]
        A = np.zeros((len(pairs), 2 * smax))
        ncomp = samples[0].shape[0]
        for sub in np.ndindex(2, 2, 2):
            hs = [half if sub[a] else np.ones(n) for a in range(3)]
            hphase = hs[0][:, None, None] * hs[1][None, :, None] * hs[2][None, None, :]
            rho = {ij: np.zeros((n, n, n), dtype=complex) for ij in pairs}
            for c in range(ncomp):
                vals = [
                    scipy.fft.ifftn(smp[c] * hphase, workers=_threads(), overwrite_x=True) * pref
                    for smp in samples
                ]
                for i, j in pairs:
                    rho[(i, j)] += np.conj(vals[i]) * vals[j]
                del vals
            # fine mode q = q0 + n t picks up exp(-i pi q.sub / n) from the sublattice offset
            ph0 = [np.exp(-1j * math.pi * q0 * sub[a] / n) for a in range(3)]
            for m, ij in enumerate(pairs):
                F = scipy.fft.fftn(rho.pop(ij), workers=_threads(), overwrite_x=True) * vol_f
                F *= ph0[0][:, None, None] * ph0[1][None, :, None] * ph0[2][None, None, :]
                for t, idx in bins.items():
                    sign = (-1) ** (t[0] * sub[0] + t[1] * sub[1] + t[2] * sub[2])
                    w = F.ravel() if sign > 0 else -F.ravel()
                    A[m] += np.bincount(
                        np.concatenate([idx, idx + smax]), np.concatenate([w.real, w.imag]), 2 * smax
                    )
                del F
        Ac = A[:, :smax] + 1j * A[:, smax:]
        self.A = np.zeros((self.k, self.k, smax), dtype=complex)
        for m, (i, j) in enumerate(pairs):
            self.A[i, j] = Ac[m]
            self.A[j, i] = np.conj(Ac[m])
        occupied = np.flatnonzero(np.any(self.A != 0, axis=(0, 1)))
        self.A = self.A[:, :, occupied]
        self.q = np.sqrt(occupied.astype(float)) * dp
        self.vol = (n * dx) ** 3
        self.t_cut = self.half

    def _spectral(self, T: float) -> np.ndarray:
        if T <= 0:
            return np.zeros((self.k, self.k), dtype=complex)
        b = _ball_transform(self.q * T)
        return 4.0 * math.pi * T**3 * (self.A @ b) / self.vol

    def _ramp(self, T: float) -> np.ndarray:
        d = self.fields[0].distance_from(self.center)
        w = _ball_weight(d, T, self.dx) * self.dx**3
        vals = np.stack([f.values for f in self.fields])
        return np.einsum("icxyz,jcxyz->ij", np.conj(vals), vals * w[None, None])

    def masses(self, radii) -> np.ndarray:
        """M_ij(T) = int_{|x - center| <= T} phi_i* phi_j for every T, shape (len, k, k)."""
        radii = np.asarray(radii, dtype=float).reshape(-1)
        out = np.zeros((len(radii), self.k, self.k), dtype=complex)
        base = None
        for m, T in enumerate(radii):
            if T <= self.t_cut:
                out[m] = self._spectral(T)
            else:
                if base is None:
                    base = self._spectral(self.t_cut) - self._ramp(self.t_cut)
                out[m] = base + self._ramp(T)
        return out

    @property
    def total(self) -> np.ndarray:
        """Grid total (the T -> infinity limit of ``masses``)."""
        vals = np.stack([f.values for f in self.fields])
        full = np.einsum("icxyz,jcxyz->ij", np.conj(vals), vals) * self.dx**3
        return self._spectral(self.t_cut) - self._ramp(self.t_cut) + full


def _ball_weight(d: np.ndarray, T: float, dx: float) -> np.ndarray:
    if T <= 0:
        return np.zeros_like(d)
    return np.clip((T - d) / dx + 0.5, 0.0, 1.0)


def position_amplitude(
    f: MomentumAmplitude, t0: float = 0.0, convention: str = "half_density", engine: str = "auto"
) -> PositionAmplitude:
    return PositionAmplitude(f, t0, convention, engine)


def tail_mass(phi: PositionAmplitude, center=None, R: float = 0.0) -> float:
    return phi.tail_mass(R, center)


def epsilon_support_radius(phi: PositionAmplitude, center=None, eps: float = 1e-3, rtol: float = 1e-10) -> float:
    """Smallest R with tail_mass(R) <= eps (bisection; tails are monotone)."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    floor = phi.floor
    lo, hi = 0.0, phi.reliable_radius
    if center is None:
        center = phi.centroid
    if phi._radial_about(center):
        # bracket with the cached panel edges before bisecting inside one panel
        edges = phi._edges
        tails = phi.tail_masses(edges, center)
        below = np.flatnonzero(tails <= eps)
        t_hi = tails[-1]
        if below.size:
            j = int(below[0])
            hi = float(edges[j])
            lo = float(edges[j - 1]) if j > 0 else 0.0
    else:
        t_hi = phi.tail_mass(hi, center)
    if eps < floor or t_hi > eps:
        achievable = max(floor, t_hi)
        raise FloorError(
            f"eps = {eps:.3g} is below the achievable tail {achievable:.3g}", achievable=achievable
        )
    for _ in range(200):
        if hi - lo <= rtol * max(hi, 1e-12):
            break
        mid = 0.5 * (lo + hi)
        if phi.tail_mass(mid, center) <= eps:
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------- reports


@dataclass
class TailReport:
    radii: np.ndarray
    tails: np.ndarray
    center: np.ndarray
    floor: float
    slope: float | None = None
    label: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def floor_flag(self) -> np.ndarray:
        return self.tails <= self.floor

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["R", "tail_mass", "floor_flag"])
        for R, t, fl in zip(self.radii, self.tails, self.floor_flag):
            w.writerow([f"{R:.9g}", f"{t:.9g}", int(fl)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "center": [float(c) for c in self.center],
            "floor": self.floor,
            "slope": self.slope,
            "radii": [float(r) for r in self.radii],
            "tail_mass": [float(t) for t in self.tails],
            "floor_flag": [bool(b) for b in self.floor_flag],
            **self.meta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _log_slope(x, y) -> float | None:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = y > 0
    if ok.sum() < 2:
        return None
    return float(np.polyfit(x[ok], np.log(y[ok]), 1)[0])


def paley_wiener_probe(f: MomentumAmplitude, radii=None, center=None) -> TailReport:
    """Tail masses of the half-density amplitude at the given radii.

    Without ``radii`` 16 equally spaced radii strictly inside the floor radius
    are used (at the floor radius itself the tail equals the floor by definition).
    """
    phi = position_amplitude(f)
    c = phi.centroid if center is None else np.asarray(center, dtype=float)
    if radii is None:
        radii = np.linspace(0.0, phi.floor_radius(c), 18)[1:-1]
    radii = np.asarray(radii, dtype=float)
    tails = phi.tail_masses(radii, c)
    above = tails > phi.floor
    slope = _log_slope(radii[above], tails[above])
    meta = {
        "plancherel_residual": phi.plancherel_residual,
        "edge_mass": phi.edge_mass,
        "engine": phi.engine,
    }
    return TailReport(radii, tails, c, phi.floor, slope, f.label, meta)


# ---------------------------------------------------------------- Galilean contrast


@dataclass(frozen=True)
class GalileanCompactState:
    """Flat-measure position wavefunction psi(r) = (1 - r^2/a^2)^2 for r < a, else 0.

    In the non-relativistic model any square-integrable position function is
    an admissible state, so this one has exactly zero mass outside |x| = a.
    """

    radius: float = 1.0
    center: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1, 3)
        s = np.sum((x - np.asarray(self.center)) ** 2, axis=1) / self.radius**2
        return np.where(s < 1.0, (1.0 - s) ** 2, 0.0) / math.sqrt(self._norm2())

    def _mass(self, R: float) -> float:
        # int_0^R 4 pi r^2 (1 - r^2/a^2)^4 dr, exact polynomial antiderivative
        a = self.radius
        u = min(max(R, 0.0), a) / a
        poly = u**3 / 3 - 4 * u**5 / 5 + 6 * u**7 / 7 - 4 * u**9 / 9 + u**11 / 11
        return 4.0 * math.pi * a**3 * poly

    def _norm2(self) -> float:
        return self._mass(self.radius)

    def tail_mass(self, R: float) -> float:
        if R >= self.radius:
            return 0.0
        return 1.0 - self._mass(R) / self._norm2()

    def tail_masses(self, radii) -> np.ndarray:
        return np.array([self.tail_mass(float(R)) for R in radii])

    def momentum(self, p) -> np.ndarray:
        """Flat-measure Fourier transform (2 pi)^{-3/2} int e^{-i p.x} psi d^3x."""
        p = np.asarray(p, dtype=float).reshape(-1, 3)
        k = np.linalg.norm(p, axis=1)
        r, w = quadrature.composite_gl(np.linspace(0, self.radius, 9), 16)
        psi = (1.0 - (r / self.radius) ** 2) ** 2 / math.sqrt(self._norm2())
        j0 = _j0(np.outer(k, r))
        phase = np.exp(-1j * (p @ np.asarray(self.center)))
        return phase * (4.0 * math.pi * (j0 @ (w * r * r * psi))) * (2.0 * math.pi) ** -1.5


# ---------------------------------------------------------------- kernel-form check


def kernel_form_overlap(f: MomentumAmplitude, g: MomentumAmplitude, n_panels: int = 24) -> complex:
    """<f|g> through the equal-time two-point kernel instead of momentum space.

    For isotropic scalar amplitudes at t = 0, with G(r) the plain transform
    int e^{ip.x} f d^3p,
        <f|g> = (2 pi)^-3 int int G_f*(x) W(|x - y|) G_g(y) d^3x d^3y,
    W(r) = m K1(m r) / (4 pi^2 r). The angular integrals are done in closed form,
    int_{|r-r'|}^{r+r'} s W(s) ds = [K0(m|r-r'|) - K0(m(r+r')))] / 4 pi^2,
    leaving a 2D radial integral; the inner rule is graded towards r' = r where
    K0 has its logarithmic singularity.
    """
    from numpy.polynomial import chebyshev
    from scipy.special import k0

    for s in (f, g):
        if s.kind.name != "scalar" or not s.isotropic or s.mass <= 0:
            raise ValueError("kernel-form check needs isotropic massive scalar amplitudes")
    if f.mass != g.mass:
        raise ValueError("masses differ")
    m = f.mass
    ef = RadialEngine(f, 0.0, "paper_fourier")
    eg = RadialEngine(g, 0.0, "paper_fourier")
    r_hi = max(ef.r_dense, eg.r_dense) + 30.0 / m
    edges = np.linspace(0.0, r_hi, n_panels + 1)
    r, wr = quadrature.composite_gl(edges, R_ORDER)
    Gf = (ef.coef @ ef.radial_values(r))[0]

    def gg(x):
        return (eg.coef @ eg.radial_values(x))[0]

    deg = 400
    nodes = chebyshev.chebpts2(deg + 1)
    vals = gg(0.5 * r_hi * (nodes + 1.0))
    cre = chebyshev.chebfit(nodes, vals.real, deg)
    cim = chebyshev.chebfit(nodes, vals.imag, deg)
    h = r_hi / n_panels
    grade = h * 2.0 ** -np.arange(0, 14)
    total = 0j
    for ri, wi, gfi in zip(r, wr, Gf):
        cut = np.concatenate([edges, ri - grade, ri + grade, [ri]])
        cut = np.unique(cut[(cut >= 0.0) & (cut <= r_hi)])
        rp, wp = quadrature.composite_gl(cut, R_ORDER)
        u = 2.0 * rp / r_hi - 1.0
        Ggp = chebyshev.chebval(u, cre) + 1j * chebyshev.chebval(u, cim)
        ker = (k0(m * np.abs(ri - rp)) - k0(m * (ri + rp))) / (4.0 * math.pi**2)
        conv = 2.0 * math.pi / ri * np.sum(wp * rp * Ggp * ker)
        total += wi * 4.0 * math.pi * ri * ri * np.conj(gfi) * conv
    return complex(total / (2.0 * math.pi) ** 3)
