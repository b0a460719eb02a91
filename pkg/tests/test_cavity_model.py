import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cavity_kit.cavity_model import (
    CavityParams,
    CloudParams,
    ModeIndex,
    PumpParams,
    cloud_energies,
    gamma_factor,
    hermite_functions,
    hermite_gauss,
    hermite_poly,
    mhz,
    mode_weight,
    shell_weights,
    to_mhz,
)
from cavity_kit.errors import InvalidParameters
from cavity_kit.presets import BEC_ATOMS, BEC_RADII, bec_cloud


def cav_tilde(eps_t, kappa_t, alpha=0.0):
    """Cavity with eps_tilde = eps_t and |kappa_tilde| = kappa_t (kappa_tilde < 0 for red detuning)."""
    det = mhz(-100.0)
    return CavityParams(epsilon=-eps_t * det, kappa=kappa_t * -det if kappa_t else 1e-12,
                        alpha=alpha, delta_c=det)


def test_unit_conversion_roundtrip():
    assert to_mhz(mhz(2.6)) == pytest.approx(2.6, rel=1e-15)
    assert mhz(1.0) == pytest.approx(2 * np.pi)


def test_hermite_gauss_examples():
    w0 = 35.0
    assert hermite_gauss(ModeIndex(0, 0), (0.0, 0.0), w0) == pytest.approx(1.0)
    assert hermite_gauss(ModeIndex(0, 0), (w0, 0.0), w0) == pytest.approx(np.exp(-1), rel=1e-12)
    assert hermite_gauss(ModeIndex(2, 0), (0.0, 0.0), w0, normalized=False) == pytest.approx(-2.0)


def test_hermite_recurrence_matches_polynomials():
    xi = np.linspace(-3, 3, 13)
    from math import factorial

    table = hermite_functions(12, xi)
    for n in range(13):
        ref = hermite_poly(n, xi) * np.exp(-xi**2 / 2) / np.sqrt(2.0**n * factorial(n))
        np.testing.assert_allclose(table[n], ref, rtol=1e-12, atol=1e-14)


def test_hermite_functions_stay_bounded_at_high_order():
    xi = np.linspace(-40, 40, 801)
    h = hermite_functions(600, xi)
    assert np.all(np.isfinite(h))
    # Cramer's bound for normalised Hermite functions (without the pi^-1/4)
    assert np.abs(h).max() <= 1.0 + 1e-10


@given(l=st.integers(0, 30), m=st.integers(0, 30),
       x=st.floats(-60, 60), y=st.floats(-60, 60))
def test_hermite_gauss_parity(l, m, x, y):
    mode = ModeIndex(l, m)
    a = hermite_gauss(mode, (x, y), 35.0)
    b = hermite_gauss(mode, (-x, -y), 35.0)
    assert b == pytest.approx((-1) ** (l + m) * a, rel=1e-12, abs=1e-300)


def test_mode_weight_examples():
    cav = cav_tilde(0.026, 0.00137)
    assert cav.kappa_tilde == pytest.approx(-0.00137)
    assert mode_weight(0, cav) == pytest.approx(1 / (1 - 0.00137j), rel=1e-12)
    assert mode_weight(2, cav) == 0
    cav = cav_tilde(0.026, 0.0, alpha=0.01)
    w4 = mode_weight(ModeIndex(1, 3), cav)
    assert w4.real == pytest.approx(np.exp(-0.04) / 1.104, rel=1e-9)
    assert w4.real == pytest.approx(0.8703, abs=1e-4)


@given(eps_t=st.floats(1e-3, 0.2), kap=st.floats(1e-4, 0.5), alpha=st.floats(0, 0.1))
def test_weights_selection_and_monotone(eps_t, kap, alpha):
    cav = cav_tilde(eps_t, kap, alpha)
    w = shell_weights(60, cav)
    n = np.arange(61)
    assert np.all(w[n % 4 != 0] == 0)
    mods = np.abs(w[n % 4 == 0])
    assert np.all(mods <= 1 + 1e-15)
    assert np.all(np.diff(mods) < 0)


def test_single_mode_weights():
    cav = CavityParams(single_mode=True)
    w = shell_weights(20, cav)
    assert w[0] == pytest.approx(1 / (1 + 1j * cav.kappa_tilde))
    assert np.all(w[1:] == 0)
    assert mode_weight(4, cav) == 0


def test_derived_parameters():
    cav = CavityParams(epsilon=mhz(2.6), delta_c=mhz(-100), delta_0=mhz(0.8))
    det = mhz(-99.2)
    assert cav.eps_tilde == pytest.approx(2.6 / 99.2)
    assert cav.kappa_tilde == pytest.approx(0.137 / -99.2)
    assert cav.u == pytest.approx((1 + 1j * cav.kappa_tilde) / cav.eps_tilde)
    assert cav.detuning == pytest.approx(det)


@pytest.mark.parametrize("kw", [dict(w0=0), dict(kappa=-1), dict(epsilon=-1), dict(alpha=-0.1),
                                dict(wavelength=0)])
def test_cavity_validation(kw):
    with pytest.raises(InvalidParameters):
        CavityParams(**kw)


def test_dispersive_regime_required():
    with pytest.raises(InvalidParameters):
        CavityParams(delta_c=mhz(10)).require_dispersive()
    with pytest.raises(InvalidParameters):
        CavityParams(delta_c=mhz(-0.1)).require_dispersive()
    CavityParams().require_dispersive()


def test_cloud_validation():
    with pytest.raises(InvalidParameters):
        CloudParams(sigma_x=0)
    with pytest.raises(InvalidParameters):
        CloudParams(n_atoms=0.5)


def test_gamma_factor_examples():
    w0 = 35.0
    assert gamma_factor(0.0, w0) == 1.0
    assert gamma_factor(w0 / np.sqrt(2), w0) == pytest.approx(0.0, abs=1e-15)
    assert gamma_factor(w0, w0) == pytest.approx(-1 / 3)


@given(s=st.floats(0, 500), ds=st.floats(1e-3, 50))
def test_gamma_factor_monotone(s, ds):
    g1, g2 = gamma_factor(s, 35.0), gamma_factor(s + ds, 35.0)
    assert -1 < g2 < g1 <= 1


def test_recoil_energy():
    en = cloud_energies(CloudParams())
    assert to_mhz(en.e_recoil) * 1e3 == pytest.approx(3.77, abs=0.01)


def test_energy_identities():
    cl = bec_cloud()
    en = cloud_energies(cl)
    assert en.e_trap == pytest.approx(3 / 7 * en.mu_tf * cl.n_atoms, rel=1e-15)
    assert en.e_int == pytest.approx(2 / 7 * en.mu_tf * cl.n_atoms, rel=1e-15)
    assert en.e_dw == pytest.approx(2 * en.e_recoil + 8 / 7 * en.mu_tf, rel=1e-15)


def test_mu_scales_with_atom_number():
    cl = CloudParams(n_atoms=1e5)
    mu1 = cloud_energies(cl).mu_tf
    mu2 = cloud_energies(cl.with_atoms(1e5 * 2**2.5)).mu_tf
    assert mu2 / mu1 == pytest.approx(2.0, rel=1e-12)


def test_tf_radii_roundtrip():
    cl = CloudParams.from_tf_radii(BEC_RADII, BEC_ATOMS)
    np.testing.assert_allclose(cl.tf_radii(), BEC_RADII, rtol=0.01)
    assert cl.sigma_x == pytest.approx(BEC_RADII[0] / 2)


def test_far_detuned_check():
    cav, cl = CavityParams(), CloudParams(n_atoms=1e3)
    assert PumpParams().check_far_detuned(cav, cl)
    with pytest.warns(RuntimeWarning):
        assert not PumpParams(delta_a=mhz(-1000)).check_far_detuned(cav, cl)
