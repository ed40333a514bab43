from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lightcone_qsd.distinguish import (
    AccessRegion,
    confusion_matrix,
    decay_fit,
    error_curve,
    gram_curve,
    truncated_gram,
)
from lightcone_qsd.errors import FitWindowError, ModelViolationError, NonOrthonormalError
from lightcone_qsd.position import PositionAmplitude, epsilon_support_radius
from lightcone_qsd.profiles import ExpEnergy, Gaussian
from lightcone_qsd.states import MomentumAmplitude, make_orthogonal_pair, normalize

S = MomentumAmplitude.scalar


@pytest.fixture(scope="module")
def radial_pair():
    return make_orthogonal_pair(S(ExpEnergy(a=1.0), 1.0, label="a"), S(ExpEnergy(a=0.4), 1.0, label="b"))


@pytest.fixture(scope="module")
def grid_pair():
    f = S(Gaussian(width=0.8, center=(0.4, 0.0, 0.0)), 1.0, label="f")
    g = S(Gaussian(width=0.8, center=(0.0, 0.4, 0.0), axis=(0, 0, 1)), 1.0, label="g")
    return make_orthogonal_pair(f, g)


# ---------------------------------------------------------------- confusion matrix


def test_confusion_identity():
    C, eps = confusion_matrix(np.eye(2))
    assert np.array_equal(C, np.eye(2)) and eps == 0.0


def test_confusion_zero():
    C, eps = confusion_matrix(np.zeros((2, 2)))
    assert np.array_equal(C, np.zeros((2, 2))) and eps == 1.0


def test_confusion_worked_example():
    C, eps = confusion_matrix(np.array([[0.9, 0.1], [0.1, 0.85]]))
    assert C[0, 0] == pytest.approx(0.81, abs=1e-15)
    assert C[1, 1] == pytest.approx(0.7225, abs=1e-15)
    assert C[0, 1] == pytest.approx(0.01, abs=1e-15) and C[1, 0] == pytest.approx(0.01, abs=1e-15)
    assert eps == pytest.approx(0.23375, abs=1e-15)


@pytest.mark.parametrize(
    "G",
    [
        [[1.2, 0.0], [0.0, 0.5]],
        [[0.5, 0.2], [0.0, 0.5]],
        [[0.1, 0.5], [0.5, 0.1]],
    ],
    ids=["above_identity", "non_hermitian", "indefinite"],
)
def test_confusion_model_violation(G):
    with pytest.raises(ModelViolationError):
        confusion_matrix(np.array(G))


@given(
    st.floats(min_value=0.0, max_value=1.0),
    st.floats(min_value=0.0, max_value=1.0),
    st.floats(min_value=0.0, max_value=1.0),
    st.floats(min_value=-np.pi, max_value=np.pi),
)
def test_confusion_properties(a, b, r, phase):
    # a valid truncated Gram: 0 <= G <= I
    off = r * np.sqrt(min(a * b, (1 - a) * (1 - b))) * np.exp(1j * phase)
    G = np.array([[a, off], [np.conj(off), b]])
    C, eps = confusion_matrix(G)
    assert 0.0 <= eps <= 1.0
    assert eps == pytest.approx(1 - (a * a + b * b) / 2, abs=1e-12)
    assert np.all(1.0 - C.sum(axis=1) >= -1e-12)


# ---------------------------------------------------------------- truncated Gram


def test_access_region():
    reg = AccessRegion((0, 0, 0), 1.0)
    assert reg.contains([[0.5, 0.5, 0.5], [1.0, 1.0, 0.0]]).tolist() == [True, False]
    with pytest.raises(ValueError):
        AccessRegion((0, 0, 0), -1.0)


def test_truncated_gram_zero_radius(radial_pair):
    G = truncated_gram(radial_pair, AccessRegion((0, 0, 0), 0.0)).entries
    assert np.array_equal(G, np.zeros((2, 2)))


@pytest.mark.parametrize("which", ["radial_pair", "grid_pair"])
def test_truncated_gram_full_space_limit(which, request):
    pair = request.getfixturevalue(which)
    phis = [PositionAmplitude(s) for s in pair]
    obs = np.zeros(3)
    T = max(epsilon_support_radius(p, obs, 1e-6) for p in phis)
    G = truncated_gram(phis, AccessRegion(tuple(obs), T)).entries
    assert np.max(np.abs(G - np.eye(2))) <= 2e-4
    assert np.allclose(G, G.conj().T, atol=1e-12)
    ev = np.linalg.eigvalsh(G)
    assert ev[0] >= -1e-10 and ev[-1] <= 1 + 1e-10


def test_truncated_gram_rejects_nonorthonormal():
    f = normalize(S(Gaussian(width=1.0), 1.0))
    g = normalize(S(ExpEnergy(a=1.0), 1.0))
    with pytest.raises(NonOrthonormalError):
        truncated_gram([f, g], AccessRegion((0, 0, 0), 1.0))


def test_grid_and_radial_routes_agree():
    pair = make_orthogonal_pair(S(Gaussian(width=1.0), 1.0), S(Gaussian(width=0.6), 1.0))
    T = np.linspace(0.0, 8.0, 9)
    rad, e1 = gram_curve([PositionAmplitude(s, engine="radial") for s in pair], np.zeros(3), T)
    grid, e2 = gram_curve([PositionAmplitude(s, engine="grid") for s in pair], np.zeros(3), T)
    assert (e1, e2) == ("radial", "grid")
    assert np.max(np.abs(rad - grid)) <= 1e-8


@settings(max_examples=10)
@given(st.lists(st.floats(min_value=0.0, max_value=15.0), min_size=2, max_size=10))
def test_diagonal_monotone_nested_regions(radial_pair, Ts):
    T = np.sort(np.asarray(Ts))
    G, _ = gram_curve(radial_pair, np.zeros(3), T)
    d = np.real(np.stack([G[:, 0, 0], G[:, 1, 1]]))
    assert np.all(np.diff(d, axis=1) >= -1e-15)


# ---------------------------------------------------------------- error curve


def test_error_curve_radial(radial_pair):
    rep = error_curve(radial_pair, T_grid=np.linspace(0.0, 12.0, 20))
    assert rep.engine == "radial"
    assert rep.eps[0] == 1.0
    assert np.all(np.diff(rep.eps) <= 0)
    assert np.all(rep.eps > rep.floor)
    assert not rep.floor_flag.any()
    assert rep.fit is not None and rep.fit.slope < 0 and rep.fit.r_squared >= 0.98
    assert np.all((rep.eps >= 0) & (rep.eps <= 1))


def test_error_curve_grid(grid_pair):
    rep = error_curve(grid_pair, observer=np.zeros(3), T_grid=np.linspace(0.0, 8.0, 12))
    assert rep.engine == "grid"
    assert rep.eps[0] == 1.0
    assert np.all(np.diff(rep.eps) <= 0)
    assert np.all(rep.eps > rep.floor)


def test_error_curve_massless_gaussian_pair():
    f = normalize(S(Gaussian(width=1.0), 0.0, label="s"))
    g = normalize(S(Gaussian(width=1.0, axis=(0, 0, 1)), 0.0, label="p"))
    rep = error_curve([f, g], observer=np.zeros(3), T_grid=np.linspace(0.0, 12.0, 13))
    assert rep.eps[0] == 1.0
    assert rep.eps[-1] <= 1e-3
    assert np.all(rep.eps > rep.floor)
    assert np.all(np.diff(rep.eps) <= 0)


def test_error_curve_default_observer_and_grid(radial_pair):
    rep = error_curve(radial_pair)
    assert np.allclose(rep.observer, 0.0, atol=1e-9)
    assert len(rep.T) == 20 and rep.T[0] == 0.0
    assert np.all(rep.eps > rep.floor)


def test_error_curve_rejects_unsorted(radial_pair):
    with pytest.raises(ValueError):
        error_curve(radial_pair, T_grid=[1.0, 0.5])


def test_report_serialization(radial_pair):
    rep = error_curve(radial_pair, T_grid=np.linspace(0.0, 10.0, 6))
    lines = rep.to_csv().splitlines()
    assert lines[0] == "T,ReG11,ReG22,ReG12,ImG12,C11,C12,C21,C22,eps,floor_flag"
    assert len(lines) == 7
    doc = rep.to_dict()
    assert len(doc["rows"]) == 6 and doc["rows"][0]["eps"] == 1.0


# ---------------------------------------------------------------- decay fit


def test_decay_fit_exact_exponential():
    T = np.linspace(0.5, 6.0, 12)
    fit = decay_fit(T=T, eps=np.exp(-2.0 * T))
    assert fit.slope == pytest.approx(-2.0, abs=1e-6)
    assert fit.r_squared >= 0.999999


def test_decay_fit_constant():
    T = np.linspace(0.5, 6.0, 12)
    fit = decay_fit(T=T, eps=np.full_like(T, 0.3))
    assert fit.slope == pytest.approx(0.0, abs=1e-12)


def test_decay_fit_window_error():
    T = np.linspace(0.0, 3.0, 4)
    with pytest.raises(FitWindowError):
        decay_fit(T=T, eps=np.exp(-T))
    with pytest.raises(FitWindowError):
        decay_fit(T=np.linspace(1, 5, 8), eps=np.full(8, 1e-14), floor=1e-12)
