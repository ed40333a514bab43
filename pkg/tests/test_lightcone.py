from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lightcone_qsd.errors import EmptySupportError, SuperluminalError
from lightcone_qsd.lightcone import (
    FourVector,
    SpatialSupport,
    boost_rapidity,
    coverage_time,
    enclosing_ball_of_balls,
    frame_elapsed_time_check,
    frame_table,
    lorentz_boost,
    min_enclosing_ball,
    rapidity_of,
)


def brute_force_ball(points):
    """Exhaustive search over balls through 1-4 points: the smallest that contains all."""
    pts = np.asarray(points, dtype=float)
    best = (None, math.inf)
    for k in range(1, 5):
        for combo in itertools.combinations(range(len(pts)), k):
            sub = pts[list(combo)]
            c, r = circumsphere(sub)
            if c is None or r >= best[1]:
                continue
            if np.all(np.linalg.norm(pts - c, axis=1) <= r + 1e-10):
                best = (c, r)
    return best


def circumsphere(sub):
    a = sub[0]
    if len(sub) == 1:
        return a, 0.0
    d = sub[1:] - a
    M = 2.0 * d @ d.T
    if abs(np.linalg.det(M)) < 1e-14 * max(1.0, np.abs(M).max()) ** len(M):
        return None, math.inf
    lam = np.linalg.solve(M, np.sum(d * d, axis=1))
    c = a + lam @ d
    return c, float(np.linalg.norm(sub[0] - c))


# ---------------------------------------------------------------- enclosing balls


def test_single_point():
    c, r = min_enclosing_ball([[1.0, 2.0, 3.0]])
    assert r == 0.0 and np.allclose(c, [1, 2, 3])


def test_two_points_midpoint():
    c, r = min_enclosing_ball([[0, 0, 0], [0, 3, 4]])
    assert r == pytest.approx(2.5) and np.allclose(c, [0, 1.5, 2])


def test_matches_brute_force_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        n = int(rng.integers(1, 11))
        pts = rng.normal(size=(n, 3)) * rng.uniform(0.1, 5.0)
        _, r = min_enclosing_ball(pts)
        _, r_ref = brute_force_ball(pts)
        assert abs(r - r_ref) <= 1e-9


def test_regular_tetrahedron():
    pts = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    c, r = min_enclosing_ball(pts)
    assert np.allclose(c, 0, atol=1e-12) and r == pytest.approx(math.sqrt(3))


def test_deterministic_and_duplicates():
    pts = np.random.default_rng(5).normal(size=(30, 3))
    a = min_enclosing_ball(pts)
    b = min_enclosing_ball(np.concatenate([pts, pts[:7]]))
    assert np.array_equal(a[0], b[0]) or np.allclose(a[0], b[0], atol=1e-12)
    assert a[1] == pytest.approx(b[1], abs=1e-12)


def test_empty_cloud():
    with pytest.raises(EmptySupportError):
        min_enclosing_ball(np.zeros((0, 3)))
    with pytest.raises(EmptySupportError):
        SpatialSupport.point_cloud([])


def test_enclosing_ball_of_balls():
    c, r = enclosing_ball_of_balls([0, 0, 0], 1.0, [4, 0, 0], 1.0)
    assert np.allclose(c, [2, 0, 0]) and r == pytest.approx(3.0)
    c, r = enclosing_ball_of_balls([0, 0, 0], 5.0, [1, 0, 0], 1.0)
    assert r == 5.0


# ---------------------------------------------------------------- coverage


@pytest.mark.parametrize("L", [0.5, 2.0, 7.25])
def test_interval_coverage_is_half_length(L):
    res = coverage_time(SpatialSupport.interval(-1.0, -1.0 + L))
    assert res.t_min == L / 2
    assert np.allclose(res.observer, [-1.0 + L / 2, 0, 0])


def test_point_and_ball_coverage():
    assert coverage_time(SpatialSupport.point_cloud([[1, 1, 1]])).t_min == 0.0
    res = coverage_time(SpatialSupport.ball((1, 2, 3), 2.5), observer=(1, 2, 3))
    assert res.t_min == pytest.approx(2.5)


def test_coverage_certificate_and_free_observer_optimality():
    rng = np.random.default_rng(9)
    pts = rng.normal(size=(25, 3))
    sup = SpatialSupport.point_cloud(pts)
    res = coverage_time(sup)
    d = np.linalg.norm(pts - res.observer, axis=1)
    assert np.all(d <= res.t_min + 1e-9)
    assert any(abs(np.linalg.norm(np.asarray(c) - res.observer) - res.t_min) <= 1e-9 for c in res.certificate)
    for o in rng.normal(scale=2.0, size=(100, 3)):
        assert res.t_min <= coverage_time(sup, o).t_min + 1e-12


def test_coverage_json():
    import json

    res = coverage_time(SpatialSupport.interval(0, 2, eps=1e-3))
    doc = json.loads(res.to_json())
    assert doc["t_min"] == 1.0 and doc["eps"] == 1e-3 and len(doc["certificate"]) == 2


# ---------------------------------------------------------------- boosts


def test_zero_boost_identity():
    e = FourVector(1.0, 2.0, 3.0, 4.0)
    assert lorentz_boost(e, 0.0) == e


def test_superluminal():
    for b in (1.0, -1.0, 1.5):
        with pytest.raises(SuperluminalError):
            lorentz_boost(FourVector(0, 1), b)
        with pytest.raises(SuperluminalError):
            frame_elapsed_time_check(1.0, b)


@pytest.mark.parametrize("beta", [0.3, 0.9, 0.99])
def test_length_contraction(beta):
    # rod at rest, ends at x = 0 and x = L; equal-time extent in the moving frame
    L = 2.0
    tp, _ = frame_elapsed_time_check(L, beta)
    assert 2 * tp == pytest.approx(L * math.sqrt(1 - beta * beta), rel=1e-12)


def test_rapidity_addition():
    e = FourVector(0.3, -1.0, 0.5, 2.0)
    for axis in [(1, 0, 0), (0.2, -0.3, 0.9)]:
        a = lorentz_boost(lorentz_boost(e, 0.4, axis), 0.7, axis)
        b = boost_rapidity(e, rapidity_of(0.4) + rapidity_of(0.7), axis)
        assert np.allclose(a.as_array(), b.as_array(), atol=1e-12)


@given(
    st.tuples(*(st.floats(min_value=-100, max_value=100) for _ in range(4))),
    st.floats(min_value=-0.999, max_value=0.999),
    st.sampled_from([(1, 0, 0), (0, 1, 0), (1, 2, 3)]),
)
def test_interval_preserved(ev, beta, axis):
    e = FourVector(*ev)
    b = lorentz_boost(e, beta, axis)
    I = e.interval()
    assert abs(b.interval() - I) <= 1e-12 * max(1.0, abs(I), *(c * c for c in ev)) * 10


def test_frame_elapsed_time():
    assert frame_elapsed_time_check(2.0, 0.0) == (1.0, 1.0)
    tp, to = frame_elapsed_time_check(2.0, 0.9)
    assert tp == pytest.approx(math.sqrt(1 - 0.81), rel=1e-12)
    assert abs(to - 1.0) <= 1e-10
    assert abs(frame_elapsed_time_check(2.0, 0.999)[1] - 1.0) <= 1e-10


def test_frame_table_constant_over_beta_grid():
    rows = frame_table(3.0, np.linspace(0, 0.999, 40))
    t = [r["t_original"] for r in rows]
    assert max(t) - min(t) <= 1e-10
    assert t[0] == pytest.approx(1.5)
