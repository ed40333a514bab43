from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lightcone_qsd import spinors
from lightcone_qsd.errors import (
    DegenerateStateError,
    InfraredDivergenceError,
    KindMismatchError,
    LinearDependenceError,
    NonOrthonormalError,
)
from lightcone_qsd.profiles import ExpEnergy, Gaussian, PowerLaw, Tabulated
from lightcone_qsd.states import (
    FieldKind,
    MomentumAmplitude,
    boost_amplitude,
    dirac_inner_product,
    galilean_inner_product,
    gram_matrix,
    inner_product,
    lorentz_inner_product,
    make_orthogonal_pair,
    norm_squared,
    normalize,
    outcome_matrix,
    outcome_probabilities,
    photon_inner_product,
)

S = MomentumAmplitude.scalar


def cartesian_oracle(f, g, m, L=10.0, h=0.2, measure="lorentz"):
    """Trapezoid sum on a dense cube; spectrally accurate for smooth decaying integrands."""
    ax = np.arange(-L, L + h / 2, h)
    total = 0j
    for x in ax:  # slab by slab to bound memory
        P = np.stack(np.meshgrid([x], ax, ax, indexing="ij"), axis=-1).reshape(-1, 3)
        w = 1.0 / (2.0 * np.sqrt(np.sum(P * P, axis=1) + m * m)) if measure == "lorentz" else 1.0
        total += np.sum(np.conj(f(P)[:, 0]) * g(P)[:, 0] * w)
    return total * h**3


def spherical_oracle(f, g, p_max=14.0, nk=160, nt=96, nph=96):
    """Tensor Gauss-Legendre in (k, cos theta) with periodic trapezoid in phi, measure dk k^2 / 2k."""
    xk, wk = np.polynomial.legendre.leggauss(nk)
    k = 0.5 * p_max * (xk + 1)
    wk = 0.5 * p_max * wk
    xt, wt = np.polynomial.legendre.leggauss(nt)
    ph = 2 * np.pi * np.arange(nph) / nph
    K, C, PH = np.meshgrid(k, xt, ph, indexing="ij")
    W = (wk[:, None, None] * wt[None, :, None]) * (2 * np.pi / nph)
    S_ = np.sqrt(1 - C * C)
    P = np.stack([K * S_ * np.cos(PH), K * S_ * np.sin(PH), K * C], axis=-1).reshape(-1, 3)
    w = (W * K * K / (2 * K)).reshape(-1)
    return np.sum(np.sum(np.conj(f(P)) * g(P), axis=1) * w)


# ---------------------------------------------------------------- kinds and data model


def test_field_kind_invariants():
    assert FieldKind.scalar(0.0).ncomp == 1
    assert FieldKind.dirac(1.0).ncomp == 4
    assert FieldKind.photon().mass == 0.0 and FieldKind.photon().nspin == 2
    with pytest.raises(ValueError):
        FieldKind("photon", 1.0)
    with pytest.raises(ValueError):
        FieldKind("dirac", 0.0)


def test_photon_has_two_helicity_components_only():
    f = MomentumAmplitude.photon(Gaussian(width=1.0, center=(0, 0, 2)), (1, 0))
    assert f.components(np.array([[0.1, 0.2, 2.0]])).shape == (1, 2)
    with pytest.raises(ValueError):
        MomentumAmplitude(FieldKind.photon(), f.terms[:0] or ())


def test_json_roundtrip():
    f = S(ExpEnergy(a=0.7, axis=(0, 1, 0)), 2.0, label="e") + S(Gaussian(width=0.5, center=(0.1, 0, 0)), 2.0) * (0.3 - 1j)
    g = MomentumAmplitude.from_json(f.to_json())
    p = np.random.default_rng(0).normal(size=(20, 3))
    assert np.allclose(f(p), g(p), rtol=1e-15, atol=0)
    assert g.label == "e" and g.decay_hint == f.decay_hint
    d = MomentumAmplitude.dirac(PowerLaw(exponent=1.0, scale=2.0, falloff=3.0), 1.0, (0.6, 0.8j), label="d")
    assert np.allclose(MomentumAmplitude.from_dict(d.to_dict())(p), d(p))


def test_from_dict_rejects_unknown_keys():
    doc = S(Gaussian(width=1.0)).to_dict()
    doc["colour"] = "red"
    with pytest.raises(ValueError):
        MomentumAmplitude.from_dict(doc)


# ---------------------------------------------------------------- scalar products


def test_normalized_gaussian_has_unit_norm():
    f = normalize(S(Gaussian(width=0.8), 1.0))
    assert lorentz_inner_product(f, f) == pytest.approx(1.0, abs=1e-12)


def test_parity_cancellation():
    f = S(Gaussian(width=1.0), 1.0)
    g = S(Gaussian(width=1.0, axis=(0, 0, 1)), 1.0)  # p_z f: odd under p_z -> -p_z
    assert abs(lorentz_inner_product(f, g)) < 1e-14
    assert abs(galilean_inner_product(f, g)) < 1e-14


def test_displaced_gaussians_match_dense_grid_oracle():
    f = S(Gaussian(width=1.0), 1.0)
    g = S(Gaussian(width=1.0, center=(0.0, 0.0, 1.0)), 1.0)
    oracle = cartesian_oracle(f, g, 1.0)
    assert abs(lorentz_inner_product(f, g) - oracle) <= 1e-8 * abs(oracle)


def test_displaced_gaussians_galilean_oracle():
    f = S(Gaussian(width=0.7, center=(0.2, 0, 0)), 1.0)
    g = S(Gaussian(width=0.9, center=(0.0, 0.5, 0.5)), 1.0)
    oracle = cartesian_oracle(f, g, 1.0, measure="galilean")
    assert abs(galilean_inner_product(f, g) - oracle) <= 1e-8 * abs(oracle)


def test_galilean_closed_form():
    # int exp(-p^2/2w^2) d^3p = (2 pi w^2)^{3/2}
    w = 0.9
    f = S(Gaussian(width=w), 1.0)
    assert galilean_inner_product(f, f).real == pytest.approx((2 * math.pi * w * w) ** 1.5, rel=1e-10)


def test_galilean_and_lorentz_differ():
    f = S(Gaussian(width=1.0), 1.0)
    lor = lorentz_inner_product(f, f).real
    gal = galilean_inner_product(f, f).real
    ratio = lor / gal
    assert 0 < ratio < 0.5  # 1/2p0 < 1/2 everywhere for m = 1
    assert abs(ratio - 0.5) > 1e-2


def test_normalize_homogeneous():
    f = S(ExpEnergy(a=1.3), 1.0)
    n1 = normalize(f)
    n2 = normalize(f * 2.0)
    p = np.random.default_rng(1).normal(size=(10, 3))
    assert np.allclose(n1(p), n2(p), rtol=1e-12)
    assert np.allclose(normalize(n1)(p), n1(p), rtol=1e-12)
    for measure in ("lorentz", "galilean"):
        assert norm_squared(normalize(S(Gaussian(width=0.4, center=(1, 0, 0)), 0.5), measure), measure) == pytest.approx(1.0, abs=1e-8)


def test_normalize_zero_state():
    with pytest.raises(DegenerateStateError):
        normalize(S(Gaussian(width=1.0), 1.0) * 0.0)


def test_make_orthogonal_pair_overlapping_gaussians():
    f = S(Gaussian(width=1.0), 1.0)
    g = S(Gaussian(width=1.0, center=(0.6, 0, 0)), 1.0)
    e1, e2 = make_orthogonal_pair(f, g)
    G = gram_matrix([e1, e2]).entries
    assert abs(G[0, 1]) <= 1e-8
    assert abs(G[0, 0] - 1) <= 1e-8 and abs(G[1, 1] - 1) <= 1e-8


def test_make_orthogonal_pair_keeps_orthonormal_input():
    e1 = normalize(S(ExpEnergy(a=1.0), 1.0))
    e2 = normalize(S(ExpEnergy(a=1.0, axis=(0, 0, 1)), 1.0))
    o1, o2 = make_orthogonal_pair(e1, e2)
    p = np.random.default_rng(2).normal(size=(16, 3))
    assert np.allclose(o1(p), e1(p), atol=1e-10)
    assert np.allclose(o2(p), e2(p), atol=1e-10)


def test_make_orthogonal_pair_dependence():
    f = S(Gaussian(width=1.0), 1.0)
    with pytest.raises(LinearDependenceError):
        make_orthogonal_pair(f, f)
    with pytest.raises(LinearDependenceError):
        make_orthogonal_pair(f, f * (2 - 1j))


def test_kind_mismatch():
    f = S(Gaussian(width=1.0), 1.0)
    g = MomentumAmplitude.photon(Gaussian(width=1.0, center=(0, 0, 2)))
    with pytest.raises(KindMismatchError):
        inner_product(f, g)
    with pytest.raises(KindMismatchError):
        lorentz_inner_product(g, g)
    with pytest.raises(KindMismatchError):
        galilean_inner_product(g, g)


# ---------------------------------------------------------------- Dirac


def test_dirac_same_state_positive():
    f = MomentumAmplitude.dirac(Gaussian(width=1.0, center=(0.2, 0, 0)), 1.0, (1, 0))
    v = dirac_inner_product(f, f)
    assert v.real > 0 and abs(v.imag) < 1e-14 * v.real


def test_dirac_half_density_reduces_to_scalar():
    # c_zeta = u~_zeta f = s_zeta a(p), so <f|f> = |s|^2 times the scalar Lorentz norm of a
    prof = Gaussian(width=0.8, center=(0, 0.3, 0))
    d = MomentumAmplitude.dirac(prof, 1.0, (0.6, 0.8j))
    s = S(prof, 1.0)
    assert dirac_inner_product(d, d).real == pytest.approx(lorentz_inner_product(s, s).real, rel=1e-10)


def test_dirac_orthogonal_spins():
    prof = Gaussian(width=1.0, center=(0.0, 0.0, 0.4))
    up = MomentumAmplitude.dirac(prof, 1.0, (1, 0))
    down = MomentumAmplitude.dirac(prof, 1.0, (0, 1))
    assert abs(dirac_inner_product(up, down)) < 1e-14


def test_dirac_normalized():
    f = normalize(MomentumAmplitude.dirac(ExpEnergy(a=1.0), 2.0, (1, 1j)))
    assert dirac_inner_product(f, f) == pytest.approx(1.0, abs=1e-8)


def test_dirac_gram_psd_random_spinors():
    rng = np.random.default_rng(4)
    states = []
    for _ in range(3):
        spin = tuple(rng.normal(size=2) + 1j * rng.normal(size=2))
        c = tuple(rng.normal(scale=0.4, size=3))
        states.append(MomentumAmplitude.dirac(Gaussian(width=0.9, center=c), 1.0, spin))
    G = gram_matrix(states).entries
    assert np.allclose(G, G.conj().T, atol=1e-12)
    assert np.min(np.linalg.eigvalsh(G)) > -1e-10


# ---------------------------------------------------------------- photons


def test_photon_opposite_helicities():
    prof = Gaussian(width=1.0, center=(0.0, 0.0, 3.0))
    a = MomentumAmplitude.photon(prof, (1, 0))
    b = MomentumAmplitude.photon(prof, (0, 1))
    assert photon_inner_product(a, b) == 0


def test_photon_normalized():
    f = normalize(MomentumAmplitude.photon(Gaussian(width=0.7, center=(0, 0, 4)), (1, 1j)))
    assert photon_inner_product(f, f) == pytest.approx(1.0, abs=1e-8)


def test_photon_displaced_packets_oracle():
    a = MomentumAmplitude.photon(Gaussian(width=1.0, center=(0.0, 0.0, 2.0)), (1, 0))
    b = MomentumAmplitude.photon(Gaussian(width=1.0, center=(0.5, 0.0, 2.0)), (0.6, 0.8))
    oracle = spherical_oracle(a, b)
    assert abs(photon_inner_product(a, b) - oracle) <= 1e-8 * abs(oracle)


def test_photon_infrared_divergence():
    f = MomentumAmplitude.photon(PowerLaw(exponent=-1.2, scale=1.0, falloff=3.0), (1, 0))
    with pytest.raises(InfraredDivergenceError):
        photon_inner_product(f, f)


def test_photon_infrared_borderline_ok():
    f = MomentumAmplitude.photon(PowerLaw(exponent=-0.5, scale=1.0, falloff=3.0), (1, 0))
    assert photon_inner_product(f, f).real > 0


# ---------------------------------------------------------------- outcome probabilities


@pytest.fixture(scope="module")
def three_states():
    return [
        normalize(S(ExpEnergy(a=1.0), 1.0, label="s")),
        normalize(S(ExpEnergy(a=1.0, axis=(1, 0, 0)), 1.0, label="px")),
        normalize(S(ExpEnergy(a=1.0, axis=(0, 0, 1)), 1.0, label="pz")),
    ]


def test_outcome_probabilities_pair(three_states):
    pair = three_states[:2]
    assert np.allclose(outcome_probabilities(pair, 0), [1, 0, 0], atol=2e-8)
    assert np.allclose(outcome_probabilities(pair, 1), [0, 1, 0], atol=2e-8)


def test_outcome_matrix_three_states(three_states):
    P = outcome_matrix(three_states)
    assert np.max(np.abs(P - np.hstack([np.eye(3), np.zeros((3, 1))]))) <= 2e-8


def test_outcome_probabilities_rejects_nonorthonormal():
    f = normalize(S(Gaussian(width=1.0), 1.0))
    g = normalize(S(Gaussian(width=1.0, center=(0.5, 0, 0)), 1.0))
    with pytest.raises(NonOrthonormalError) as info:
        outcome_probabilities([f, g], 0)
    assert (0, 1) in [(i, j) for i, j, _ in info.value.pairs]


# ---------------------------------------------------------------- properties

widths = st.floats(min_value=0.3, max_value=2.0)
centers = st.tuples(*(st.floats(min_value=-1.0, max_value=1.0) for _ in range(3)))
masses = st.sampled_from([0.5, 1.0, 3.0])


@settings(max_examples=15)
@given(widths, centers, widths, centers, masses)
def test_hermitian_and_cauchy_schwarz(w1, c1, w2, c2, m):
    f = S(Gaussian(width=w1, center=c1), m)
    g = S(Gaussian(width=w2, center=c2, axis=(0, 1, 0)), m) + S(ExpEnergy(a=w1), m) * 0.5j
    G = gram_matrix([f, g]).entries
    assert abs(G[0, 1] - np.conj(G[1, 0])) <= 1e-10 * max(1.0, abs(G[0, 0]), abs(G[1, 1]))
    assert abs(G[0, 1]) ** 2 <= G[0, 0].real * G[1, 1].real * (1 + 1e-10)
    assert np.min(np.linalg.eigvalsh(0.5 * (G + G.conj().T))) >= -1e-10 * abs(G).max()
    Gg = gram_matrix([f, g], "galilean").entries
    assert np.min(np.linalg.eigvalsh(0.5 * (Gg + Gg.conj().T))) >= -1e-10 * abs(Gg).max()


@settings(max_examples=10)
@given(
    st.floats(min_value=-1.0, max_value=1.0),
    st.sampled_from([(1, 0, 0), (0, 0, 1), (1, 1, 0)]),
    st.floats(min_value=0.6, max_value=2.0),
    centers,
)
def test_boost_invariance(psi, axis, w, c):
    m = 1.0
    f = S(Gaussian(width=w), m)
    g = S(Gaussian(width=w, center=c), m)
    ref = inner_product(f, g)
    val = inner_product(boost_amplitude(f, psi, axis), boost_amplitude(g, psi, axis))
    assert abs(val - ref) <= 1e-6 * max(1.0, abs(ref))


def test_boost_invariance_large_rapidity():
    f = S(Gaussian(width=2.0), 1.0)
    g = S(Gaussian(width=2.0, center=(0.5, -0.5, 0.3)), 1.0)
    ref = inner_product(f, g)
    val = inner_product(boost_amplitude(f, 2.0, (0, 0, 1)), boost_amplitude(g, 2.0, (0, 0, 1)))
    assert abs(val - ref) <= 1e-6 * abs(ref)


def test_tabulated_amplitude_matches_interpolant_oracle():
    ax = np.linspace(-8, 8, 33)
    KX, KY, KZ = np.meshgrid(ax, ax, ax, indexing="ij")
    vals = np.exp(-(KX**2 + KY**2 + KZ**2) / 4.0) + 0j
    tab = S(Tabulated(axes=(ax, ax, ax), values=vals), 1.0)
    # separable data: the trilinear interpolant is a product of 1-D hat interpolants,
    # and each cell integrates (a(1-t) + b t)^2 exactly to h (a^2 + ab + b^2) / 3
    y = np.exp(-ax**2 / 4.0)
    h = np.diff(ax)
    one_d = np.sum(h * (y[:-1] ** 2 + y[:-1] * y[1:] + y[1:] ** 2) / 3.0)
    assert galilean_inner_product(tab, tab).real == pytest.approx(one_d**3, rel=1e-10)
    ref = S(Gaussian(width=1.0), 1.0)
    assert galilean_inner_product(tab, tab).real == pytest.approx(galilean_inner_product(ref, ref).real, rel=5e-2)
