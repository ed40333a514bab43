"""Light-cone coverage geometry.

An observer at spatial position o who reads out at time t sees, on the
preparation slice t = 0, exactly the ball |x - o| <= t (c = 1). Covering a
support therefore takes t_min = max_x |x - o|, minimized over o by the centre
of the minimum enclosing ball.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySupportError, SuperluminalError

DEFAULT_SEED = 20240229
CERT_TOL = 1e-9


@dataclass(frozen=True)
class FourVector:
    t: float
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @property
    def spatial(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def interval(self) -> float:
        return self.t * self.t - (self.x * self.x + self.y * self.y + self.z * self.z)

    def as_array(self) -> np.ndarray:
        return np.array([self.t, self.x, self.y, self.z])

    @classmethod
    def from_array(cls, a) -> "FourVector":
        t, x, y, z = (float(v) for v in a)
        return cls(t, x, y, z)


def interval(v: FourVector) -> float:
    return v.interval()


def rapidity_of(beta: float) -> float:
    beta = float(beta)
    if not abs(beta) < 1.0:
        raise SuperluminalError(f"|beta| must be < 1, got {beta}")
    return math.atanh(beta)


def boost_matrix(psi: float, axis=(1.0, 0.0, 0.0)) -> np.ndarray:
    """4x4 matrix acting on (t, x, y, z).

    Along the unit axis n: x_par' = ch x_par + sh t, t' = sh x_par + ch t;
    transverse components are untouched.
    """
    n = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(n)
    if norm == 0:
        raise ValueError("boost axis must be nonzero")
    n = n / norm
    ch, sh = math.cosh(psi), math.sinh(psi)
    L = np.eye(4)
    L[0, 0] = ch
    L[0, 1:] = sh * n
    L[1:, 0] = sh * n
    L[1:, 1:] += (ch - 1.0) * np.outer(n, n)
    return L


def lorentz_boost(event: FourVector, beta: float, axis=(1.0, 0.0, 0.0)) -> FourVector:
    return FourVector.from_array(boost_matrix(rapidity_of(beta), axis) @ event.as_array())


def boost_rapidity(event: FourVector, psi: float, axis=(1.0, 0.0, 0.0)) -> FourVector:
    return FourVector.from_array(boost_matrix(psi, axis) @ event.as_array())


# ---------------------------------------------------------------- enclosing balls


def _circumball(pts: np.ndarray) -> tuple[np.ndarray, float]:
    """Smallest ball with all of 1-4 points on its boundary (affine-hull circumcentre)."""
    a = pts[0]
    if len(pts) == 1:
        return a.copy(), 0.0
    d = pts[1:] - a
    # centre c = a + d^T lam, with |c - a| = |c - p_i|  =>  2 d d^T lam = |d|^2
    M = 2.0 * d @ d.T
    rhs = np.sum(d * d, axis=1)
    lam, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    c = a + lam @ d
    r = float(max(np.linalg.norm(pts - c, axis=1)))
    return c, r


def _contains(c, r, p) -> bool:
    return float(np.linalg.norm(p - c)) <= r * (1.0 + 1e-12) + 1e-12


def _welzl(pts: np.ndarray) -> tuple[np.ndarray, float]:
    # iterative move-to-front variant; recursion depth bounded by 4 boundary points
    def mtf(n, boundary):
        if boundary:
            c, r = _circumball(np.array(boundary))
        else:
            c, r = pts[0].copy(), -1.0
        if len(boundary) == 4:
            return c, r
        for i in range(n):
            p = pts[i]
            if r < 0 or not _contains(c, r, p):
                c, r = mtf(i, boundary + [p])
        return c, r

    return mtf(len(pts), [])


def min_enclosing_ball(points, seed: int | None = DEFAULT_SEED) -> tuple[np.ndarray, float]:
    """Smallest ball containing every point (Welzl, randomized with a fixed seed)."""
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        raise EmptySupportError("cannot enclose an empty point set")
    pts = pts.reshape(-1, pts.shape[-1])
    if pts.shape[1] < 3:
        pts = np.concatenate([pts, np.zeros((len(pts), 3 - pts.shape[1]))], axis=1)
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    pts = np.unique(pts, axis=0)
    if seed is not None:
        pts = pts[np.random.default_rng(seed).permutation(len(pts))]
    c, r = _welzl(pts)
    r = float(np.max(np.linalg.norm(pts - c, axis=1)))
    return c, r


def enclosing_ball_of_balls(c1, r1: float, c2, r2: float) -> tuple[np.ndarray, float]:
    c1, c2 = np.asarray(c1, dtype=float), np.asarray(c2, dtype=float)
    d = float(np.linalg.norm(c2 - c1))
    if d + r2 <= r1:
        return c1, r1
    if d + r1 <= r2:
        return c2, r2
    R = 0.5 * (d + r1 + r2)
    return c1 + (R - r1) / d * (c2 - c1), R


# ---------------------------------------------------------------- supports


@dataclass(frozen=True)
class SpatialSupport:
    """Region where a state is present up to a tail fraction ``eps``."""

    kind: str
    center: tuple = (0.0, 0.0, 0.0)
    radius: float = 0.0
    x_left: float = 0.0
    x_right: float = 0.0
    points: tuple = ()
    eps: float | None = None

    def __post_init__(self):
        if self.kind not in ("ball", "interval", "point_cloud"):
            raise ValueError(f"unknown support kind {self.kind!r}")
        if self.kind == "ball" and not self.radius >= 0:
            raise ValueError("radius must be >= 0")
        if self.kind == "interval" and not self.x_left <= self.x_right:
            raise ValueError("x_left must be <= x_right")
        if self.kind == "point_cloud" and len(self.points) == 0:
            raise EmptySupportError("point cloud support is empty")

    @classmethod
    def ball(cls, center, radius: float, eps: float | None = None):
        return cls("ball", center=tuple(float(c) for c in center), radius=float(radius), eps=eps)

    @classmethod
    def interval(cls, x_left: float, x_right: float, eps: float | None = None):
        return cls("interval", x_left=float(x_left), x_right=float(x_right), eps=eps)

    @classmethod
    def point_cloud(cls, points, eps: float | None = None):
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        if len(pts) == 0:
            raise EmptySupportError("point cloud support is empty")
        return cls("point_cloud", points=tuple(map(tuple, pts.tolist())), eps=eps)

    def farthest(self, observer) -> tuple[float, list]:
        """Largest distance from ``observer`` to the support and the points attaining it."""
        o = np.asarray(observer, dtype=float)
        if self.kind == "ball":
            c = np.asarray(self.center)
            d = float(np.linalg.norm(o - c))
            u = (c - o) / d if d > 0 else np.array([1.0, 0.0, 0.0])
            return d + self.radius, [c + self.radius * u]
        if self.kind == "interval":
            ends = np.array([[self.x_left, 0, 0], [self.x_right, 0, 0]], dtype=float)
            dist = np.linalg.norm(ends - o, axis=1)
        else:
            ends = np.asarray(self.points)
            dist = np.linalg.norm(ends - o, axis=1)
        dmax = float(np.max(dist))
        return dmax, [ends[i] for i in np.flatnonzero(dist >= dmax - CERT_TOL)]

    def enclosing_ball(self) -> tuple[np.ndarray, float]:
        if self.kind == "ball":
            return np.asarray(self.center, dtype=float), self.radius
        if self.kind == "interval":
            return np.array([0.5 * (self.x_left + self.x_right), 0.0, 0.0]), 0.5 * (self.x_right - self.x_left)
        return min_enclosing_ball(self.points)


@dataclass
class CoverageResult:
    t_min: float
    observer: np.ndarray
    certificate: list
    eps: float | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        doc = {
            "t_min": self.t_min,
            "observer": [float(v) for v in self.observer],
            "certificate": [[float(v) for v in p] for p in self.certificate],
            "eps": self.eps,
        }
        doc.update(self.extra)
        return doc

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


def coverage_time(support: SpatialSupport, observer=None) -> CoverageResult:
    """Minimum readout time for the past light cone to cover ``support``."""
    if observer is None:
        c, _ = support.enclosing_ball()
        observer = c
    observer = np.asarray(observer, dtype=float)
    t, cert = support.farthest(observer)
    return CoverageResult(t, observer, cert, support.eps)


def frame_elapsed_time_check(length: float, beta: float) -> tuple[float, float]:
    """Coverage time of a length-L rod in a frame moving at ``beta``, and back in the rod frame.

    The rod's end worldlines x = 0 and x = L are boosted; at equal boosted time
    their separation is L' = L / ch(psi). The boosted-frame coverage time is
    t' = L'/2, and the elapsed proper time in the rod frame is t' ch(psi) = L/2.
    """
    if not length > 0:
        raise ValueError("L must be positive")
    psi = rapidity_of(beta)
    L = boost_matrix(psi)
    # worldline x = x_i, parametrized by t: boosted events (t', x') = L (t, x_i)
    ends = []
    for x_i in (0.0, float(length)):
        e0 = L @ np.array([0.0, x_i, 0.0, 0.0])
        e1 = L @ np.array([1.0, x_i, 0.0, 0.0])
        # position on the boosted worldline at t' = 0
        s = -e0[0] / (e1[0] - e0[0])
        ends.append(float(e0[1] + s * (e1[1] - e0[1])))
    l_prime = abs(ends[1] - ends[0])
    t_prime = 0.5 * l_prime
    t_original = t_prime * math.cosh(psi)
    return t_prime, t_original


def frame_table(length: float, betas) -> list[dict]:
    rows = []
    for b in betas:
        tp, to = frame_elapsed_time_check(length, b)
        rows.append({"beta": float(b), "t_prime": tp, "t_original": to})
    return rows
