from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lightcone_qsd import spinors
from lightcone_qsd.errors import InvalidMassError, UndefinedDirectionError

vec3 = st.tuples(*(st.floats(min_value=-20, max_value=20, allow_nan=False) for _ in range(3)))


def random_dirs(n, seed=0):
    v = np.random.default_rng(seed).normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def test_rest_frame_projector():
    acc = 0
    for z in (0.5, -0.5):
        u = spinors.dirac_spinor([0, 0, 0], z, +1, 1.0)
        acc = acc + 2 * np.outer(u, spinors.dirac_adjoint(u))
    assert np.allclose(acc, spinors.GAMMA0 + np.eye(4), atol=1e-15)


@given(vec3, st.sampled_from([0.3, 1.0, 5.0]), st.sampled_from([1, -1]))
def test_completeness_residual(p, m, sign):
    assert spinors.completeness_residual(np.array(p), m, sign) <= 1e-12 * max(1.0, np.linalg.norm(p) / m) ** 2


def test_completeness_vectorized():
    p = np.random.default_rng(3).normal(scale=4.0, size=(200, 3))
    assert spinors.completeness_residual(p, 1.0) < 1e-12
    assert spinors.completeness_residual(p, 1.0, -1) < 1e-12


def test_spins_linearly_independent():
    p = np.array([0.3, -1.2, 2.0])
    B = spinors.spinor_basis(p, 1.0)
    assert np.linalg.matrix_rank(B, tol=1e-10) == 2


def test_spinor_errors():
    with pytest.raises(InvalidMassError):
        spinors.dirac_spinor([0, 0, 1], 0.5, +1, 0.0)
    with pytest.raises(ValueError):
        spinors.dirac_spinor([0, 0, 1], 1.0, +1, 1.0)


def test_norm_kernel_psd_and_spin_components():
    p = np.array([0.7, 0.1, -1.4])
    K = spinors.norm_kernel(p, 1.0)
    assert np.allclose(K, K.conj().T, atol=1e-14)
    ev = np.linalg.eigvalsh(K)
    e = spinors.energy(p, 1.0)
    assert np.allclose(np.sort(ev), [0, 0, e, e], atol=1e-12)
    f = np.random.default_rng(1).normal(size=4) + 1j * np.random.default_rng(2).normal(size=4)
    c = spinors.spin_components(p, 1.0, f)
    assert np.vdot(f, K @ f).real == pytest.approx(np.sum(np.abs(c) ** 2), rel=1e-12)
    assert np.allclose(spinors.apply_norm_kernel(p, 1.0, f), K @ f, atol=1e-13)


def test_u_tilde_u_normalization():
    # u~_zeta u_zeta' = delta / ... with 2 u~u = 2 for the (p/m + 1)/2 projector trace
    p = np.array([1.0, 2.0, -0.5])
    for z in (0.5, -0.5):
        u = spinors.dirac_spinor(p, z, +1, 1.0)
        assert spinors.dirac_adjoint(u) @ u == pytest.approx(1.0, abs=1e-13)


def test_photon_basis_on_z_axis():
    wp, wm = spinors.photon_polarization_basis([0, 0, 2.5])
    assert np.allclose(wp, np.array([1, 1j, 0]) / np.sqrt(2), atol=1e-15)
    assert np.allclose(wm, np.array([1, -1j, 0]) / np.sqrt(2), atol=1e-15)


def test_photon_basis_properties_random():
    k = random_dirs(100, seed=7) * np.random.default_rng(8).uniform(0.1, 10, size=(100, 1))
    wp, wm = spinors.photon_polarization_basis(k)
    kn = np.linalg.norm(k, axis=1)
    for w in (wp, wm):
        assert np.allclose(np.sum(np.abs(w) ** 2, axis=1), 1.0, atol=1e-14)
        assert np.all(np.abs(np.sum(w * k, axis=1)) <= 1e-14 * kn)
    assert np.all(np.abs(np.sum(wp * np.conj(wm), axis=1)) <= 1e-14)


def test_photon_frame_helicity_handedness():
    # e1 x e2 = k-hat gives helicity +1 for w_plus
    k = random_dirs(50, seed=11)
    e1, e2 = spinors.polarization_frame(k)
    assert np.allclose(np.cross(e1, e2), k, atol=1e-13)


def test_photon_frame_continuity_away_from_singular_axis():
    # small steps in direction give small changes in the frame, except at k = -z
    k = random_dirs(200, seed=5)
    k = k[k[:, 2] > -0.9]
    dk = 1e-7 * random_dirs(len(k), seed=6)
    e1a, e2a = spinors.polarization_frame(k)
    e1b, e2b = spinors.polarization_frame(k + dk)
    assert np.max(np.abs(e1a - e1b)) < 1e-5
    assert np.max(np.abs(e2a - e2b)) < 1e-5


def test_photon_frame_singular_axis_convention():
    e1, e2 = spinors.polarization_frame([0, 0, -1])
    assert np.allclose(e1, [-1, 0, 0]) and np.allclose(e2, [0, 1, 0])


def test_photon_k_zero():
    with pytest.raises(UndefinedDirectionError):
        spinors.photon_polarization_basis([0, 0, 0])
