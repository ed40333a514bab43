from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lightcone_qsd import bessel

mpmath.mp.dps = 40


def mp_j1y1(x):
    return float(mpmath.besselj(1, x)), float(mpmath.bessely(1, x))


def mp_k1(x):
    return float(mpmath.besselk(1, x))


@pytest.mark.parametrize("x", [1e-3, 0.1, 1.0, 2.0, 7.5, 24.9, 25.1, 40.0, 50.0])
def test_j1y1_matches_mpmath(x):
    j, y = bessel.j1y1_scalar(x)
    jr, yr = mp_j1y1(x)
    # absolute scale near zeros of J1/Y1 is the envelope sqrt(2/(pi x))
    env = max(abs(jr), abs(yr), math.sqrt(2.0 / (math.pi * x)) if x > 1 else 0.0)
    assert abs(j - jr) <= 1e-13 * env + 1e-300
    assert abs(y - yr) <= 1e-13 * env


@pytest.mark.parametrize("x", [1e-3, 0.5, 2.0, 10.0, 30.0, 50.0, 600.0])
def test_k1_matches_mpmath(x):
    assert bessel.k1_scalar(x) == pytest.approx(mp_k1(x), rel=1e-13)


def test_k1_at_two_known_value():
    # K1(2) from tables
    assert bessel.k1_scalar(2.0) == pytest.approx(0.13986588181652243, rel=1e-14)


@pytest.mark.parametrize("x", np.geomspace(1e-3, 50.0, 40))
def test_dual_path_agreement(x):
    """Own implementation against the scipy-based reference path."""
    j, y = bessel.j1y1_scalar(x)
    jr, yr = bessel.reference_j1y1(x)
    env = max(abs(jr), abs(yr))
    assert abs(j - jr) <= 1e-10 * env
    assert abs(y - yr) <= 1e-10 * env
    assert bessel.k1_scalar(x) == pytest.approx(float(bessel.reference_k1(x)), rel=1e-10)


@pytest.mark.parametrize("x", [26.0, 30.0, 45.0])
def test_series_and_asymptotic_regimes_agree(x):
    """Both internal regimes evaluated on the same argument past the crossover."""
    js, ys = bessel.j1y1_scalar(x, method="series")
    ja, ya = bessel.j1y1_scalar(x, method="asymptotic")
    env = math.sqrt(2.0 / (math.pi * x))
    assert abs(js - ja) <= 1e-12 * env
    assert abs(ys - ya) <= 1e-12 * env
    assert bessel.k1e_scalar(x, method="series") == pytest.approx(bessel.k1e_scalar(x, method="asymptotic"), rel=1e-12)


def test_vectorized_matches_scalar():
    x = np.array([0.3, 3.0, 30.0])
    assert np.allclose(bessel.k1(x), [bessel.k1_scalar(v) for v in x], rtol=0, atol=0)
    j, y = bessel.j1y1(x)
    assert np.array_equal(j, bessel.j1(x))
    assert np.array_equal(y, bessel.y1(x))


@given(st.floats(min_value=1e-3, max_value=50.0))
def test_wronskian(x):
    # J1 Y1' - J1' Y1 = 2/(pi x), with J1' = J0 - J1/x and the same for Y
    j1, y1 = bessel.j1y1_scalar(x)
    from scipy.special import j0, y0

    w = j1 * (y0(x) - y1 / x) - (j0(x) - j1 / x) * y1
    assert w == pytest.approx(2.0 / (math.pi * x), rel=1e-9)


def test_origin_and_invalid_arguments():
    assert bessel.k1_scalar(0.0) == math.inf
    assert bessel.j1y1_scalar(0.0) == (0.0, -math.inf)
    with pytest.raises(ValueError):
        bessel.j1y1_scalar(-1.0)
    with pytest.raises(ValueError):
        bessel.k1_scalar(float("nan"))
