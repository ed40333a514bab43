"""One-particle momentum amplitudes of scalar, Dirac and photon fields.

Inner products live on the positive-energy mass shell with the invariant
measure d^3p / 2p0:

* scalar  <f|g> = int f* g d^3p / 2p0
* Dirac   <f|g> = int f^dagger gamma^0 (slash(p) + m)/2m g d^3p / 2p0
* photon  <f|g> = sum_s int f*(k, s) g(k, s) d^3k / 2|k|

and, for the non-relativistic comparison, the flat (Galilean) measure d^3p.

The Dirac metric gamma^0 (slash(p) + m) / 2m is positive semi-definite and
projects on the positive-energy spinors; with it an amplitude a(p) u_zeta(p)
has the same norm as the scalar profile a(p). Amplitudes are always built on
u^(+), so the negative-energy block never contributes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import quadrature, spinors
from .errors import (
    DegenerateStateError,
    InfraredDivergenceError,
    InvalidMassError,
    KindMismatchError,
    LinearDependenceError,
    NonOrthonormalError,
    QuadratureAccuracyError,
)
from .profiles import DECAY_CLASSES, Boosted, Profile, momentum_radius, profile_from_dict

KINDS = ("scalar", "dirac", "photon")
MEASURES = ("lorentz", "galilean")
ORTHONORMAL_TOL = 1e-8
DEFAULT_TOL = 1e-10
MAX_LEVEL = 5


@dataclass(frozen=True)
class FieldKind:
    name: str
    mass: float = 0.0

    def __post_init__(self):
        if self.name not in KINDS:
            raise ValueError(f"field kind must be one of {KINDS}, got {self.name!r}")
        m = float(self.mass)
        if not math.isfinite(m) or m < 0:
            raise InvalidMassError(f"mass must be finite and >= 0, got {self.mass}")
        if self.name == "photon" and m != 0:
            raise InvalidMassError("photons are massless")
        if self.name == "dirac" and not m > 0:
            raise InvalidMassError("Dirac fields need m > 0")
        object.__setattr__(self, "mass", m)

    @property
    def ncomp(self) -> int:
        return {"scalar": 1, "dirac": 4, "photon": 2}[self.name]

    @property
    def nspin(self) -> int:
        return {"scalar": 0, "dirac": 2, "photon": 2}[self.name]

    @classmethod
    def scalar(cls, mass: float = 1.0) -> "FieldKind":
        return cls("scalar", mass)

    @classmethod
    def dirac(cls, mass: float = 1.0) -> "FieldKind":
        return cls("dirac", mass)

    @classmethod
    def photon(cls) -> "FieldKind":
        return cls("photon", 0.0)


@dataclass(frozen=True)
class Term:
    coef: complex
    profile: Profile
    spin: tuple = ()


def _decay_rank(name: str) -> int:
    return DECAY_CLASSES.index(name)


@dataclass(frozen=True)
class MomentumAmplitude:
    """f(p) (per spin or helicity component) on the positive-energy shell.

    Stored as a finite sum of terms ``coef * profile(p) * spin-structure``:
    scalar terms carry no spin weights, Dirac terms weights (c_{+1/2}, c_{-1/2})
    on u^(+)_zeta(p), photon terms helicity weights (c_{+}, c_{-}).
    """

    kind: FieldKind
    terms: tuple
    label: str = ""
    decay_hint: str | None = None

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise ValueError("an amplitude needs at least one term")
        fixed = []
        for t in terms:
            spin = tuple(complex(c) for c in t.spin)
            if len(spin) != self.kind.nspin:
                raise ValueError(
                    f"{self.kind.name} terms need {self.kind.nspin} spin weights, got {len(spin)}"
                )
            fixed.append(Term(complex(t.coef), t.profile, spin))
        object.__setattr__(self, "terms", tuple(fixed))
        hint = self.decay_hint
        if hint is None:
            hint = max((t.profile.decay for t in fixed), key=_decay_rank)
        if hint not in DECAY_CLASSES:
            raise ValueError(f"decay_hint must be one of {DECAY_CLASSES}")
        object.__setattr__(self, "decay_hint", hint)

    # -- constructors

    @classmethod
    def scalar(cls, profile: Profile, mass: float = 1.0, label: str = "") -> "MomentumAmplitude":
        return cls(FieldKind.scalar(mass), (Term(1.0, profile),), label)

    @classmethod
    def dirac(cls, profile: Profile, mass: float = 1.0, spin=(1.0, 0.0), label: str = ""):
        return cls(FieldKind.dirac(mass), (Term(1.0, profile, tuple(spin)),), label)

    @classmethod
    def photon(cls, profile: Profile, helicity=(1.0, 0.0), label: str = ""):
        return cls(FieldKind.photon(), (Term(1.0, profile, tuple(helicity)),), label)

    # -- algebra

    @property
    def mass(self) -> float:
        return self.kind.mass

    def scaled(self, c: complex, label: str | None = None) -> "MomentumAmplitude":
        terms = tuple(Term(t.coef * c, t.profile, t.spin) for t in self.terms)
        return MomentumAmplitude(self.kind, terms, self.label if label is None else label, self.decay_hint)

    def __mul__(self, c):
        return self.scaled(complex(c))

    __rmul__ = __mul__

    def __add__(self, other: "MomentumAmplitude") -> "MomentumAmplitude":
        if other.kind != self.kind:
            raise KindMismatchError(f"cannot add {self.kind} and {other.kind}")
        hint = max(self.decay_hint, other.decay_hint, key=_decay_rank)
        return MomentumAmplitude(self.kind, self.terms + other.terms, self.label, hint)

    def __sub__(self, other):
        return self + other.scaled(-1.0)

    def relabel(self, label: str) -> "MomentumAmplitude":
        return MomentumAmplitude(self.kind, self.terms, label, self.decay_hint)

    # -- evaluation

    def energy(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return np.sqrt(np.sum(p * p, axis=-1) + self.mass**2)

    def components(self, p) -> np.ndarray:
        """Values at momenta ``p`` (N, 3): shape (N, ncomp)."""
        p = np.asarray(p, dtype=float).reshape(-1, 3)
        p0 = self.energy(p)
        name = self.kind.name
        out = np.zeros((len(p), self.kind.ncomp), dtype=complex)
        basis = spinors.spinor_basis(p, self.mass) if name == "dirac" else None
        for t in self.terms:
            if t.coef == 0:
                continue
            val = t.coef * t.profile(p, p0)
            if name == "scalar":
                out[:, 0] += val
            elif name == "photon":
                out += val[:, None] * np.asarray(t.spin)[None, :]
            else:
                out += val[:, None] * (basis @ np.asarray(t.spin))
        return out

    __call__ = components

    def momentum_radius(self, rtol: float = 1e-20) -> float:
        return max(momentum_radius(t.profile, self.mass, rtol) for t in self.terms)

    @property
    def tabulated(self) -> bool:
        return any(t.profile.box is not None for t in self.terms)

    @property
    def isotropic(self) -> bool:
        """True when every component modulus-product depends on |p| only."""
        for t in self.terms:
            h = t.profile.harmonic
            if h is None or h.l != 0 or np.any(h.shift):
                return False
        return True

    def harmonic_terms(self):
        """[(coef, HarmonicForm)] for scalar amplitudes built from harmonic profiles, else None."""
        if self.kind.name != "scalar":
            return None
        out = []
        for t in self.terms:
            h = t.profile.harmonic
            if h is None:
                return None
            out.append((t.coef, h))
        return out

    def position_scale(self) -> float:
        return max(t.profile.position_scale(self.mass) for t in self.terms)

    # -- serialization

    def to_dict(self) -> dict:
        def term_doc(t: Term) -> dict:
            doc = t.profile.to_dict()
            doc["polarization"] = [[c.real, c.imag] for c in t.spin] if t.spin else None
            return doc

        base = {"kind": self.kind.name, "mass": self.mass}
        if len(self.terms) == 1 and self.terms[0].coef == 1:
            base.update(term_doc(self.terms[0]))
        else:
            base["family"] = "superposition"
            base["parameters"] = {
                "terms": [
                    {"coef": [t.coef.real, t.coef.imag], **term_doc(t)} for t in self.terms
                ]
            }
            base["polarization"] = None
        base["decay_hint"] = self.decay_hint
        base["label"] = self.label
        return base

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    @classmethod
    def from_dict(cls, doc: dict) -> "MomentumAmplitude":
        allowed = {"kind", "mass", "family", "parameters", "polarization", "decay_hint", "label"}
        extra = set(doc) - allowed
        if extra:
            raise ValueError(f"unknown amplitude keys: {sorted(extra)}")
        kind = FieldKind(doc["kind"], doc.get("mass", 0.0))

        def spin_of(pol):
            if pol is None:
                return ()
            return tuple(complex(re, im) for re, im in pol)

        if doc["family"] == "superposition":
            terms = []
            for td in doc["parameters"]["terms"]:
                re, im = td["coef"]
                prof = profile_from_dict({"family": td["family"], "parameters": td["parameters"]})
                terms.append(Term(complex(re, im), prof, spin_of(td.get("polarization"))))
        else:
            prof = profile_from_dict({"family": doc["family"], "parameters": doc.get("parameters", {})})
            pol = doc.get("polarization")
            if pol is None and kind.nspin:
                pol = [[1.0, 0.0], [0.0, 0.0]]
            terms = [Term(1.0, prof, spin_of(pol))]
        return cls(kind, tuple(terms), doc.get("label", ""), doc.get("decay_hint"))

    @classmethod
    def from_json(cls, text: str) -> "MomentumAmplitude":
        return cls.from_dict(json.loads(text))


# ------------------------------------------------------------------ Gram engine


@dataclass
class GramMatrix:
    """Matrix of inner products entries[i, j] = <state_i | state_j>."""

    entries: np.ndarray
    labels: tuple = ()
    region: str = "full"
    measure: str = "lorentz"
    error: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def hermitian_residual(self) -> float:
        e = self.entries
        return float(np.max(np.abs(e - e.conj().T))) if e.size else 0.0

    def eigenvalues(self) -> np.ndarray:
        e = self.entries
        return np.linalg.eigvalsh(0.5 * (e + e.conj().T))

    def __getitem__(self, idx):
        return self.entries[idx]


def _check_same_kind(states):
    kinds = {s.kind for s in states}
    if len(kinds) != 1:
        raise KindMismatchError(f"states of different kinds: {sorted(str(k) for k in kinds)}")
    return next(iter(kinds))


def _check_infrared(states, measure: str):
    """Reject amplitudes whose |f|^2 times the radial measure is not integrable at 0."""
    kind = states[0].kind
    if kind.mass > 0:
        return
    # radial measure k^2 dk / 2k = k dk (Lorentz) or k^2 dk (flat)
    threshold = -2.0 if measure == "lorentz" else -3.0
    dirs = np.array(
        [[1, 0, 0], [0, 1, 0], [0, 0, 1], [-1, 0, 0], [0, -1, 0], [0, 0, -1], [1, 1, 1], [-1, 1, -1]],
        dtype=float,
    )
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    for s in states:
        vals = []
        for k in (1e-4, 1e-6):
            with np.errstate(all="ignore"):
                c = s.components(k * dirs)
            v = np.max(np.sum(np.abs(c) ** 2, axis=1))
            vals.append(v)
        if not all(np.isfinite(vals)):
            raise InfraredDivergenceError(f"amplitude {s.label!r} is not finite near k = 0")
        if vals[0] > 0 and vals[1] > 0:
            slope = math.log(vals[1] / vals[0]) / math.log(1e-2)
            if slope <= threshold + 1e-3:
                raise InfraredDivergenceError(
                    f"amplitude {s.label!r} behaves like |k|^{slope:.2f} in |f|^2; "
                    f"the {measure} measure needs an exponent > {threshold}"
                )


def _accumulate(states, chunks, measure: str) -> np.ndarray:
    kind = states[0].kind
    m = kind.mass
    n = len(states)
    g = np.zeros((n, n), dtype=complex)
    for pts, w in chunks:
        p0 = np.sqrt(np.sum(pts * pts, axis=1) + m * m)
        if measure == "lorentz":
            with np.errstate(divide="ignore"):
                w = w / (2.0 * p0)
            w = np.where(np.isfinite(w), w, 0.0)
        vals = np.stack([s.components(pts) for s in states])  # (S, N, c)
        if kind.name == "dirac" and measure == "lorentz":
            kets = spinors.apply_norm_kernel(pts[None, :, :], m, vals)
        else:
            kets = vals
        g += np.einsum("snc,tnc->st", np.conj(vals) * w[None, :, None], kets)
    return g


def _spherical_gram(states, measure, tol, p_max, isotropic, max_level):
    prev = None
    scale = None
    err = math.inf
    g = None
    for level in range(max_level + 1):
        g = _accumulate(states, quadrature.spherical_chunks(p_max, level, isotropic), measure)
        if scale is None:
            scale = max(float(np.max(np.abs(np.diag(g)))), 1e-300)
        if prev is not None:
            err = float(np.max(np.abs(g - prev)))
            if err <= tol * scale:
                return g, err, level
        prev = g
    raise QuadratureAccuracyError(
        f"Gram quadrature did not converge to {tol:g} relative (estimate {err / scale:.3g})",
        estimate=g,
        error=err,
    )


def _cartesian_gram(states, measure, tol, max_level):
    boxes = [t.profile.box for s in states for t in s.terms if t.profile.box is not None]
    lo = np.min([[b[i][0] for i in range(3)] for b in boxes], axis=0)
    hi = np.max([[b[i][1] for i in range(3)] for b in boxes], axis=0)
    spacing = min(
        float(np.min(np.diff(ax))) for s in states for t in s.terms if t.profile.box is not None
        for ax in t.profile.axes
    )
    cells = [max(1, int(round((h - l) / spacing))) for l, h in zip(lo, hi)]
    box = list(zip(lo, hi))
    prev = None
    scale = None
    err = math.inf
    g = None
    for level, sub in enumerate((1, 2, 4)[: max_level + 1]):
        g = _accumulate(states, quadrature.cartesian_chunks(box, cells, sub), measure)
        if scale is None:
            scale = max(float(np.max(np.abs(np.diag(g)))), 1e-300)
        if prev is not None:
            err = float(np.max(np.abs(g - prev)))
            if err <= tol * scale:
                return g, err, level
        prev = g
    raise QuadratureAccuracyError(
        f"tabulated Gram quadrature did not converge to {tol:g} relative", estimate=g, error=err
    )


def gram_matrix(states, measure: str = "lorentz", tol: float = DEFAULT_TOL, max_level: int = MAX_LEVEL) -> GramMatrix:
    """Full-space Gram matrix under the kind-appropriate invariant (or flat) measure."""
    states = list(states)
    if not states:
        raise ValueError("need at least one state")
    if measure not in MEASURES:
        raise ValueError(f"measure must be one of {MEASURES}")
    kind = _check_same_kind(states)
    if measure == "galilean" and kind.name != "scalar":
        raise KindMismatchError("the Galilean comparison measure is defined for scalar states only")
    _check_infrared(states, measure)
    tab = [s.tabulated for s in states]
    n = len(states)
    g = np.zeros((n, n), dtype=complex)
    err = 0.0
    analytic = [i for i in range(n) if not tab[i]]
    if analytic:
        sub = [states[i] for i in analytic]
        p_max = max(s.momentum_radius() for s in sub)
        iso = all(s.isotropic for s in sub)
        ga, ea, _ = _spherical_gram(sub, measure, tol, p_max, iso, max_level)
        g[np.ix_(analytic, analytic)] = ga
        err = max(err, ea)
    if any(tab):
        gc, ec, _ = _cartesian_gram(states, measure, tol, max_level)
        mask = np.array(tab)
        pair = mask[:, None] | mask[None, :]
        g[pair] = gc[pair]
        err = max(err, ec)
    g = 0.5 * (g + g.conj().T)
    return GramMatrix(g, tuple(s.label for s in states), "full", measure, err)


def inner_product(f: MomentumAmplitude, g: MomentumAmplitude, measure: str = "lorentz", tol: float = DEFAULT_TOL) -> complex:
    """<f|g>, antilinear in ``f``."""
    if f.kind != g.kind:
        raise KindMismatchError(f"cannot pair {f.kind} with {g.kind}")
    return complex(gram_matrix([f, g], measure, tol).entries[0, 1])


def _require(f, g, name):
    for s in (f, g):
        if s.kind.name != name:
            raise KindMismatchError(f"expected {name} amplitudes, got {s.kind.name}")


def lorentz_inner_product(f, g, tol: float = DEFAULT_TOL) -> complex:
    _require(f, g, "scalar")
    return inner_product(f, g, "lorentz", tol)


def galilean_inner_product(f, g, tol: float = DEFAULT_TOL) -> complex:
    _require(f, g, "scalar")
    return inner_product(f, g, "galilean", tol)


def dirac_inner_product(f, g, tol: float = DEFAULT_TOL) -> complex:
    _require(f, g, "dirac")
    return inner_product(f, g, "lorentz", tol)


def photon_inner_product(f, g, tol: float = DEFAULT_TOL) -> complex:
    _require(f, g, "photon")
    return inner_product(f, g, "lorentz", tol)


def norm_squared(f: MomentumAmplitude, measure: str = "lorentz", tol: float = DEFAULT_TOL) -> float:
    return float(gram_matrix([f], measure, tol).entries[0, 0].real)


def normalize(f: MomentumAmplitude, measure: str = "lorentz", tol: float = DEFAULT_TOL) -> MomentumAmplitude:
    n2 = norm_squared(f, measure, tol)
    if not math.isfinite(n2) or n2 <= 1e-300:
        raise DegenerateStateError(f"cannot normalize {f.label!r}: norm^2 = {n2}")
    return f.scaled(1.0 / math.sqrt(n2))


def make_orthogonal_pair(f, g, measure: str = "lorentz", tol: float = DEFAULT_TOL):
    """Gram-Schmidt under the chosen measure; returns an orthonormal pair."""
    if f.kind != g.kind:
        raise KindMismatchError("pair members must share a field kind")
    G = gram_matrix([f, g], measure, tol).entries
    nf, ng = G[0, 0].real, G[1, 1].real
    if nf <= 1e-300 or ng <= 1e-300:
        raise DegenerateStateError("zero-norm input to Gram-Schmidt")
    overlap = abs(G[0, 1]) / math.sqrt(nf * ng)
    if overlap > 1.0 - 1e-10:
        raise LinearDependenceError(f"inputs are linearly dependent (|cos| = {overlap:.12f})")
    e1 = f.scaled(1.0 / math.sqrt(nf))
    c = G[0, 1] / math.sqrt(nf)  # <e1|g>
    rest = ng - abs(c) ** 2
    g2 = g if abs(c) <= 1e-15 * math.sqrt(ng) else g - e1.scaled(c)
    e2 = g2.scaled(1.0 / math.sqrt(rest))
    for _ in range(2):
        H = gram_matrix([e1, e2], measure, tol).entries
        if abs(H[0, 1]) <= ORTHONORMAL_TOL and abs(H[1, 1] - 1) <= ORTHONORMAL_TOL:
            break
        c2 = H[0, 1]
        e2 = e2 - e1.scaled(c2)
        e2 = e2.scaled(1.0 / math.sqrt(H[1, 1].real - abs(c2) ** 2))
    return e1, e2.relabel(g.label)


def outcome_probabilities(states, input_index: int, tol: float = ORTHONORMAL_TOL, quad_tol: float = DEFAULT_TOL) -> np.ndarray:
    """Pr_j = |<phi_j|phi_i>|^2 for every projector j, then the remainder for P_perp."""
    states = list(states)
    G = gram_matrix(states, "lorentz", quad_tol).entries
    n = len(states)
    bad = [
        (i, j, complex(G[i, j]))
        for i in range(n)
        for j in range(i, n)
        if abs(G[i, j] - (1.0 if i == j else 0.0)) > tol
    ]
    if bad:
        raise NonOrthonormalError(
            "states are not orthonormal within %.1e: %s"
            % (tol, ", ".join(f"({i},{j}): {v:.3e}" for i, j, v in bad)),
            bad,
        )
    probs = np.abs(G[:, input_index]) ** 2
    return np.append(probs, 1.0 - probs.sum())


def outcome_matrix(states, quad_tol: float = DEFAULT_TOL) -> np.ndarray:
    """Row i: outcome probabilities for input state i (remainder column last)."""
    states = list(states)
    return np.stack([outcome_probabilities(states, i, quad_tol=quad_tol) for i in range(len(states))])


def boost_amplitude(f: MomentumAmplitude, rapidity: float, axis=(1.0, 0.0, 0.0)) -> MomentumAmplitude:
    """Unitary pushforward f -> f o Lambda^-1 of a scalar amplitude."""
    if f.kind.name != "scalar":
        raise KindMismatchError("boosts are implemented for scalar amplitudes only")
    terms = tuple(Term(t.coef, Boosted(t.profile, rapidity, axis, f.mass), t.spin) for t in f.terms)
    return MomentumAmplitude(f.kind, terms, f.label, f.decay_hint)
