"""Deterministic tensor-product quadrature rules in momentum space.

Two rules feed the Gram computations:

* a spherical rule on the ball |p| <= p_max: composite Gauss-Legendre in |p|
  (with geometric grading towards p = 0, where massless measures and power-law
  profiles are not smooth), Gauss-Legendre in cos(theta), trapezoid in phi;
* a Cartesian cell rule on a box, Gauss-Legendre per cell and axis, for
  tabulated (piecewise trilinear) amplitudes.

Both are refined level by level; the change between consecutive levels is the
error estimate.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

RADIAL_ORDER = 16
GRADING = 4
MAX_CHUNK = 262_144


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_gl(edges, order: int = RADIAL_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on consecutive panels given by ``edges``."""
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre(order)
    a = edges[:-1, None]
    b = edges[1:, None]
    nodes = 0.5 * (b - a) * x[None, :] + 0.5 * (b + a)
    weights = 0.5 * (b - a) * w[None, :]
    return nodes.ravel(), weights.ravel()


def radial_edges(p_max: float, n_panels: int, grading: int = GRADING) -> np.ndarray:
    h = p_max / n_panels
    graded = [h * 2.0 ** (-g) for g in range(grading, 0, -1)]
    return np.concatenate([[0.0], graded, h * np.arange(1, n_panels + 1)])


def radial_rule(p_max: float, n_panels: int, order: int = RADIAL_ORDER, grading: int = GRADING):
    return composite_gl(radial_edges(p_max, n_panels, grading), order)


@lru_cache(maxsize=64)
def sphere_rule(n_theta: int, n_phi: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit directions and solid-angle weights (sum 4 pi)."""
    ct, wt = gauss_legendre(n_theta)
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
    st = np.sqrt(1.0 - ct * ct)
    dirs = np.stack(
        [
            np.outer(st, np.cos(phi)).ravel(),
            np.outer(st, np.sin(phi)).ravel(),
            np.repeat(ct, n_phi),
        ],
        axis=-1,
    )
    w = np.repeat(wt, n_phi) * (2.0 * math.pi / n_phi)
    dirs.setflags(write=False)
    w.setflags(write=False)
    return dirs, w


def level_shape(level: int) -> tuple[int, int, int]:
    """(radial panels, n_theta, n_phi) at refinement ``level``."""
    g = 1.5**level
    n_pan = int(math.ceil(6 * g))
    n_theta = int(math.ceil(12 * g))
    return n_pan, n_theta, 2 * n_theta


def spherical_chunks(p_max: float, level: int, isotropic: bool = False, max_chunk: int = MAX_CHUNK):
    """Yield (points (N,3), weights (N,)) blocks of the level-``level`` ball rule.

    With ``isotropic`` the angular rule collapses to one direction of weight 4 pi;
    exact whenever the integrand depends on |p| only.
    """
    n_pan, n_t, n_p = level_shape(level)
    k, wk = radial_rule(p_max, n_pan)
    wk = wk * k * k
    if isotropic:
        dirs = np.array([[0.0, 0.0, 1.0]])
        wd = np.array([4.0 * math.pi])
    else:
        dirs, wd = sphere_rule(n_t, n_p)
    per = max(1, max_chunk // len(wd))
    for s in range(0, len(k), per):
        kk = k[s : s + per]
        pts = (kk[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
        w = (wk[s : s + per, None] * wd[None, :]).ravel()
        yield pts, w


def cartesian_chunks(box, cells, subdiv: int = 1, order: int = 3, max_chunk: int = MAX_CHUNK):
    """Gauss rule on a box split into ``cells`` (per axis) cells, each split ``subdiv`` times."""
    x, w = gauss_legendre(order)
    axes = []
    for (lo, hi), n in zip(box, cells):
        edges = np.linspace(lo, hi, n * subdiv + 1)
        axes.append(composite_gl(edges, order))
    (nx, wx), (ny, wy), (nz, wz) = axes
    per = max(1, max_chunk // (len(ny) * len(nz)))
    yz = np.stack(np.meshgrid(ny, nz, indexing="ij"), axis=-1).reshape(-1, 2)
    wyz = np.outer(wy, wz).ravel()
    for s in range(0, len(nx), per):
        xs = nx[s : s + per]
        pts = np.concatenate(
            [np.repeat(xs, len(yz))[:, None], np.tile(yz, (len(xs), 1))], axis=1
        )
        wts = (wx[s : s + per, None] * wyz[None, :]).ravel()
        yield pts, wts
