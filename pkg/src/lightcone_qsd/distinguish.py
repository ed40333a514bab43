"""Finite-time distinguishability of orthogonal one-particle states.

A readout at time T by an observer at o only has access to the ball
|x - o| <= T of the preparation slice. The access-region measurement has
outcome probabilities C_ij = |G_ij(T)|^2, G(T) the Gram matrix of the
half-density amplitudes restricted to that ball, and identification error
eps(T) = 1 - (C_11 + C_22)/2. Any mass left over is an inconclusive outcome.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FitWindowError, ModelViolationError, NonOrthonormalError
from .lightcone import enclosing_ball_of_balls
from .position import (
    BallSpectrum,
    PositionAmplitude,
    _piece_integrals,
    _r_edges,
    _radial_overlap_panels,
    epsilon_support_radius,
    grid_shape,
    position_amplitude,
)
from .states import GramMatrix, MomentumAmplitude, gram_matrix

ORTHO_TOL = 1e-6
MODEL_TOL = 1e-6
DEFAULT_SUPPORT_EPS = 1e-3


@dataclass(frozen=True)
class AccessRegion:
    observer: tuple
    T: float

    def __post_init__(self):
        obs = tuple(float(c) for c in np.asarray(self.observer, dtype=float).reshape(3))
        object.__setattr__(self, "observer", obs)
        if not (self.T >= 0 and math.isfinite(self.T)):
            raise ValueError("T must be finite and >= 0")

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1, 3)
        return np.linalg.norm(x - np.asarray(self.observer), axis=1) <= self.T


def _as_position(states) -> list[PositionAmplitude]:
    out = []
    for s in states:
        if isinstance(s, MomentumAmplitude):
            s = position_amplitude(s)
        if s.convention != "half_density":
            raise ValueError("truncated overlaps use half_density amplitudes")
        out.append(s)
    return out


def _check_orthonormal(phis, tol: float = ORTHO_TOL) -> np.ndarray:
    G = gram_matrix([p.source for p in phis]).entries
    n = len(phis)
    bad = [(i, j, complex(G[i, j])) for i in range(n) for j in range(i, n) if abs(G[i, j] - (i == j)) > tol]
    if bad:
        raise NonOrthonormalError(
            "inputs are not orthonormal: " + ", ".join(f"({i},{j}) = {v:.3e}" for i, j, v in bad), bad
        )
    return G


def _radial_route(phis, observer) -> bool:
    if any(p.engine != "radial" for p in phis):
        return False
    t0 = {p.t0 for p in phis}
    if len(t0) != 1:
        return False
    return all(np.allclose(p.nominal_center, observer, rtol=0, atol=1e-9) for p in phis)


def gram_curve(states, observer, T_grid) -> tuple[np.ndarray, str]:
    """G(T) for every T in ``T_grid``: shape (len(T), n, n), and the engine used.

    Diagonal entries are integrals of nonnegative densities over nested balls
    (radial shells, or exact ball masses on the grid), so they are
    nondecreasing in T.
    """
    phis = _as_position(states)
    observer = np.asarray(observer, dtype=float).reshape(3)
    T = np.asarray(T_grid, dtype=float).reshape(-1)
    if np.any(T < 0) or not np.all(np.isfinite(T)):
        raise ValueError("T values must be finite and >= 0")
    n = len(phis)
    out = np.zeros((len(T), n, n), dtype=complex)
    if _radial_route(phis, observer):
        engines = [p._radial for p in phis]
        r_dense = max(e.r_dense for e in engines)
        h_r = min(e.h_r for e in engines)
        r_max = max(p.r_max for p in phis)
        edges = _r_edges(r_dense, h_r, r_max)
        pan = _radial_overlap_panels(engines, edges)
        edges, pan = _piece_integrals(engines, edges, pan, T)
        cum = np.concatenate([np.zeros((1, n, n), dtype=complex), np.cumsum(pan, axis=0)])
        idx = np.searchsorted(edges, np.minimum(T, edges[-1]))
        out = cum[idx]
        return out, "radial"
    p_max = max(p.source.momentum_radius(rtol=1e-14) for p in phis)
    ext = 0.0
    for p in phis:
        _, e = p._default_grid_params()
        ext = max(ext, e + float(np.linalg.norm(p.nominal_center - observer)))
    dx, npts = grid_shape(p_max, ext)
    out = BallSpectrum(phis, observer, dx, npts).masses(T)
    return out, "grid"


def truncated_gram(states, region: AccessRegion) -> GramMatrix:
    phis = _as_position(states)
    _check_orthonormal(phis)
    G, engine = gram_curve(phis, region.observer, [region.T])
    labels = tuple(p.label for p in phis)
    return GramMatrix(G[0], labels, f"ball(T={region.T:g})", "lorentz", meta={"engine": engine})


def confusion_matrix(G, tol: float = MODEL_TOL) -> tuple[np.ndarray, float]:
    """C_ij = |G_ij|^2 and eps = 1 - (C_11 + C_22)/2."""
    C, eps, _ = _confusion(G, tol)
    return C, eps


def _confusion(G, tol: float = MODEL_TOL):
    G = np.asarray(getattr(G, "entries", G), dtype=complex)
    if G.shape != (2, 2):
        raise ValueError("confusion matrices are defined for state pairs")
    if np.max(np.abs(G - G.conj().T)) > tol:
        raise ModelViolationError("Gram matrix is not Hermitian")
    ev = np.linalg.eigvalsh(0.5 * (G + G.conj().T))
    if ev[0] < -tol or ev[-1] > 1.0 + tol:
        raise ModelViolationError(f"Gram eigenvalues {ev} outside [0, 1]")
    C = np.abs(G) ** 2
    inconclusive = 1.0 - C.sum(axis=1)
    if np.any(inconclusive < -tol):
        raise ModelViolationError("outcome probabilities exceed 1")
    clipped = bool(np.any(C > 1.0) or np.any(inconclusive < 0))
    C = np.clip(C, 0.0, 1.0)
    eps = float(np.clip(1.0 - 0.5 * (C[0, 0] + C[1, 1]), 0.0, 1.0))
    return C, eps, clipped


# ---------------------------------------------------------------- reports


@dataclass
class DecayFit:
    slope: float
    intercept: float
    r_squared: float
    window: tuple

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "window": [float(self.window[0]), float(self.window[1])],
        }


@dataclass
class DistinguishReport:
    T: np.ndarray
    G: np.ndarray
    C: np.ndarray
    eps: np.ndarray
    inconclusive: np.ndarray
    floor: float
    observer: np.ndarray
    labels: tuple = ()
    engine: str = ""
    clipped: np.ndarray | None = None
    fit: DecayFit | None = None
    meta: dict = field(default_factory=dict)

    @property
    def floor_flag(self) -> np.ndarray:
        return self.eps <= self.floor

    def rows(self):
        for k in range(len(self.T)):
            G, C = self.G[k], self.C[k]
            yield {
                "T": float(self.T[k]),
                "ReG11": float(G[0, 0].real),
                "ReG22": float(G[1, 1].real),
                "ReG12": float(G[0, 1].real),
                "ImG12": float(G[0, 1].imag),
                "C11": float(C[0, 0]),
                "C12": float(C[0, 1]),
                "C21": float(C[1, 0]),
                "C22": float(C[1, 1]),
                "eps": float(self.eps[k]),
                "floor_flag": bool(self.floor_flag[k]),
            }

    COLUMNS = ("T", "ReG11", "ReG22", "ReG12", "ImG12", "C11", "C12", "C21", "C22", "eps", "floor_flag")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for row in self.rows():
            w.writerow([int(row[c]) if c == "floor_flag" else f"{row[c]:.9g}" for c in self.COLUMNS])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "observer": [float(c) for c in self.observer],
            "floor": self.floor,
            "engine": self.engine,
            "rows": list(self.rows()),
            "inconclusive": self.inconclusive.tolist(),
            "clipped": [] if self.clipped is None else [bool(c) for c in self.clipped],
            "fit": None if self.fit is None else self.fit.to_dict(),
            **self.meta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def default_observer(phis, eps: float = DEFAULT_SUPPORT_EPS) -> np.ndarray:
    """Centre of the smallest ball holding both states' eps-supports."""
    balls = []
    for p in phis:
        c = p.centroid
        balls.append((c, epsilon_support_radius(p, c, eps)))
    (c, r), *rest = balls
    for c2, r2 in rest:
        c, r = enclosing_ball_of_balls(c, r, c2, r2)
    return np.asarray(c, dtype=float)


def default_T_grid(phis, observer, n: int = 20) -> np.ndarray:
    """n points from 0 to where the pair's tails meet their noise floor."""
    t_max = 0.0
    for p in phis:
        off = float(np.linalg.norm(p.centroid - observer))
        t_max = max(t_max, p.floor_radius() + off)
    return np.linspace(0.0, t_max, n)


def error_curve(pair, observer=None, T_grid=None, fit: bool = True) -> DistinguishReport:
    phis = _as_position(pair)
    if len(phis) != 2:
        raise ValueError("error_curve needs a pair of states")
    _check_orthonormal(phis)
    if observer is None:
        observer = default_observer(phis)
    observer = np.asarray(observer, dtype=float)
    if T_grid is None:
        T_grid = default_T_grid(phis, observer)
    T = np.asarray(T_grid, dtype=float)
    if np.any(np.diff(T) < 0) or np.any(T < 0):
        raise ValueError("T_grid must be ascending and nonnegative")
    G, engine = gram_curve(phis, observer, T)
    Cs, eps, inc, clipped = [], [], [], []
    for g in G:
        C, e, cl = _confusion(g)
        Cs.append(C)
        eps.append(e)
        inc.append(1.0 - C.sum(axis=1))
        clipped.append(cl)
    floor = max(p.floor for p in phis)
    rep = DistinguishReport(
        T=T,
        G=G,
        C=np.array(Cs),
        eps=np.array(eps),
        inconclusive=np.array(inc),
        floor=floor,
        observer=observer,
        labels=tuple(p.label for p in phis),
        engine=engine,
        clipped=np.array(clipped),
    )
    if fit:
        try:
            rep.fit = decay_fit(rep)
        except FitWindowError:
            rep.fit = None
    return rep


def decay_fit(report=None, *, T=None, eps=None, floor: float = 0.0) -> DecayFit:
    """Least squares of log eps against T over the tail window.

    Window: samples with T > 0, floor < eps < 1, restricted to the lower half of
    their log eps range (the tail); if that leaves fewer than 4 samples, all
    candidates are used.
    """
    if report is not None:
        T, eps, floor = report.T, report.eps, report.floor
    T = np.asarray(T, dtype=float)
    eps = np.asarray(eps, dtype=float)
    cand = (T > 0) & (eps > floor) & (eps < 1.0)
    if cand.sum() < 4:
        raise FitWindowError(f"only {int(cand.sum())} above-floor samples; need 4")
    le = np.log(eps[cand])
    tc = T[cand]
    mid = 0.5 * (le.min() + le.max())
    tail = le <= mid
    if tail.sum() < 4:
        tail = np.ones_like(le, dtype=bool)
    x, y = tc[tail], le[tail]
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot > 0:
        r2 = 1.0 - ss_res / ss_tot
    else:
        r2 = 1.0 if ss_res <= 1e-24 * max(1.0, float(y @ y)) else 0.0
    return DecayFit(float(slope), float(intercept), float(r2), (float(x.min()), float(x.max())))
