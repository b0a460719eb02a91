from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavity_kit.cavity_model import CloudParams, PumpParams, cloud_energies, mhz
from cavity_kit.errors import InvalidParameters, NoThreshold
from cavity_kit.greens import cloud_kernel
from cavity_kit.presets import bec_cloud, paper_cavity, paper_pump, probe_cloud
from cavity_kit.threshold import (
    N0,
    critical_pump,
    e_cav,
    interaction_integrals,
    scan_detuning,
    scan_position,
    stability_from_energies,
    stability_matrix,
)

PUMP = paper_pump()


def test_e_cav_scales_with_omega_squared():
    cl, cav = probe_cloud(), paper_cavity(alpha=1e-3)
    a = e_cav(cl, cav, mhz(10.0), PUMP.delta_a)
    b = e_cav(cl, cav, mhz(20.0), PUMP.delta_a)
    assert b == pytest.approx(4 * a, rel=1e-13)


def test_dispersive_term_vanishes_for_large_atomic_detuning():
    cl, cav = probe_cloud(), paper_cavity(alpha=1e-3)
    ratios = []
    for da in (-1e5, -1e6, -1e7):
        full = e_cav(cl, cav, 1.0, mhz(da))
        first = e_cav(cl, cav, 1.0, mhz(da), include_dispersive=False)
        ratios.append(abs(full - first) / abs(first))
    assert ratios[1] == pytest.approx(ratios[0] / 10, rel=1e-6)
    assert ratios[2] == pytest.approx(ratios[0] / 100, rel=1e-6)


def test_single_mode_e_cav_gaussian_overlap():
    cav = paper_cavity(single_mode=True)
    cl = CloudParams(sigma_x=2.0, sigma_y=5.0, center=(3.0, -1.0), n_atoms=1e5)
    # <Xi_00>_rho for a Gaussian density, per axis sqrt(g')exp(...)
    w0 = cav.w0
    ov = 1.0
    for s, c in ((cl.sigma_x, cl.center[0]), (cl.sigma_y, cl.center[1])):
        b = 1 + 2 * s**2 / w0**2
        ov *= np.exp(-c**2 / (w0**2 * b)) / np.sqrt(b)
    n, g0, da, det = cl.n_atoms, cav.g0, PUMP.delta_a, cav.detuning
    ref = n**2 * g0**2 / (2 * da**2 * det) * ov**2 / (1 + 1j * cav.kappa_tilde)
    val = e_cav(cl, cav, 1.0, da, include_dispersive=False)
    assert val == pytest.approx(ref, rel=1e-12)
    # and the kernel-level identity used by the quadrature path
    assert cloud_kernel(cl.center, cl.center, 0.0, cl, w0) == pytest.approx(ov**2, rel=1e-12)


def test_spectral_and_quadrature_paths_agree():
    cav = paper_cavity(alpha=3e-4, delta_c=mhz(-170))
    cl = probe_cloud(center=(4.0, 0.0))
    a = interaction_integrals(cl, cav, "spectral")
    b = interaction_integrals(cl, cav, "quadrature")
    assert a[0] == pytest.approx(b[0], rel=1e-7)
    assert a[1] == pytest.approx(b[1], rel=1e-5)


def test_threshold_halves_with_twice_atoms_at_fixed_edw():
    cav = paper_cavity(alpha=1e-3)
    cl = probe_cloud()
    edw = cloud_energies(cl).e_dw
    a = critical_pump(cl, cav, PUMP, include_dispersive=False, e_dw=edw)
    b = critical_pump(cl.with_atoms(2 * cl.n_atoms), cav, PUMP, include_dispersive=False, e_dw=edw)
    assert b.omega_c**2 == pytest.approx(a.omega_c**2 / 2, rel=1e-12)


def test_dispersive_term_lowers_threshold():
    for cl in (probe_cloud(), bec_cloud()):
        for dc in (-40, -120, -320):
            cav = paper_cavity(alpha=1e-3, delta_c=mhz(dc))
            full = critical_pump(cl, cav, PUMP).omega_c
            first = critical_pump(cl, cav, PUMP, include_dispersive=False).omega_c
            assert first > full


@settings(max_examples=10)
@given(s=st.floats(0.2, 5.0))
def test_g0_rescaling(s):
    cl = probe_cloud()
    cav = paper_cavity(alpha=1e-3)
    a = critical_pump(cl, cav, PUMP, include_dispersive=False).omega_c
    b = critical_pump(cl, replace(cav, g0=s * cav.g0), PUMP, include_dispersive=False).omega_c
    assert b == pytest.approx(a / s, rel=1e-12)


def test_single_mode_sqrt_scaling():
    cl = probe_cloud(n_atoms=N0)
    cav = paper_cavity(single_mode=True, delta_0=0.0)
    dets = mhz(np.linspace(-40, -320, 15))
    oc = [critical_pump(cl, replace(cav, delta_c=d), PUMP, include_dispersive=False).omega_c
          for d in dets]
    slope = np.polyfit(np.log(-dets), np.log(oc), 1)[0]
    assert slope == pytest.approx(0.5, abs=1e-4)


def test_multimode_departure_from_sqrt():
    cav = paper_cavity(alpha=1e-3)
    dets = mhz(np.linspace(-40, -320, 8))
    for cl in (bec_cloud(N0), probe_cloud(N0)):
        oc = np.array([critical_pump(cl, replace(cav, delta_c=d), PUMP).omega_c for d in dets])
        assert np.all(np.diff(oc / np.sqrt(-dets)) < 0)


def test_no_threshold_for_blue_effective_interaction():
    cav = paper_cavity(alpha=1e-3)
    with pytest.raises(InvalidParameters):
        critical_pump(probe_cloud(), cav, PumpParams(delta_a=mhz(1e5)))


def test_position_window_enforced():
    cav = paper_cavity()
    with pytest.raises(InvalidParameters):
        critical_pump(probe_cloud(center=(32.0, 0.0)), cav, PUMP)
    with pytest.raises(InvalidParameters):
        scan_position(probe_cloud(), cav, PUMP, [0.0, 31.5])


# stability -----------------------------------------------------------------------

def test_stability_no_light():
    cl = bec_cloud()
    en = cloud_energies(cl)
    ner = cl.n_atoms * en.e_recoil
    rep = stability_from_energies(ner, en.e_int, 0.0)
    lam = np.sqrt(4 * ner * (ner + 2 * en.e_int))
    assert np.sort(rep.numeric_eigs.real) == pytest.approx(np.array([-lam, -lam, lam, lam]),
                                                           rel=1e-10)
    assert not rep.unstable


@settings(max_examples=100)
@given(ner=st.floats(1e-3, 1e3), eint=st.floats(0, 1e3), ecr=st.floats(-5e3, 5e3),
       eci=st.floats(-10, 10))
def test_stability_eigenvalues_match_closed_form(ner, eint, ecr, eci):
    rep = stability_from_energies(ner, eint, complex(ecr, eci))
    scale = np.abs(rep.analytic_eigs).max()
    assert rep.max_mismatch <= 1e-10 * max(scale, 1e-300) + 1e-12 * (ner + eint + abs(ecr))


def test_instability_flips_once_at_critical_pump():
    cl = probe_cloud()
    cav = paper_cavity(alpha=1e-3, delta_c=mhz(-120))
    oc = critical_pump(cl, cav, PUMP).omega_c
    omegas = oc * np.linspace(0.5, 1.5, 101)
    flags = np.array([stability_matrix(cl, cav, PUMP, w).unstable for w in omegas])
    assert np.count_nonzero(np.diff(flags.astype(int))) == 1
    rad = lambda w: stability_matrix(cl, cav, PUMP, w).radicand.real
    assert rad(oc * (1 - 1e-6)) > 0 > rad(oc * (1 + 1e-6))


# scans ---------------------------------------------------------------------------

def test_scan_detuning_monotone_and_single_mode_rows():
    cl = probe_cloud()
    dets = mhz(np.linspace(-40, -320, 8))
    rows = scan_detuning(cl, paper_cavity(alpha=1e-3), PUMP, dets)
    oc = [r.omega_c for r in rows]
    assert all(r.status == "ok" for r in rows) and np.all(np.diff(oc) > 0)
    sm = paper_cavity(single_mode=True)
    rows = scan_detuning(cl, sm, PUMP, dets)
    for d, r in zip(dets, rows):
        assert r.omega_c == critical_pump(cl, replace(sm, delta_c=d), PUMP).omega_c


def test_scan_detuning_records_failures():
    rows = scan_detuning(probe_cloud(), paper_cavity(), PUMP, [mhz(-100), mhz(50)])
    assert rows[0].status == "ok"
    assert rows[1].status.startswith("InvalidParameters")


def test_blue_star_cross_check():
    cav = paper_cavity(alpha=1e-3)
    cl = probe_cloud()
    d = scan_detuning(cl, cav, PUMP, [mhz(-120)])[0]
    p = scan_position(cl, replace(cav, delta_c=mhz(-120)), PUMP, [0.0])[0]
    assert d.omega_c == p.omega_c


def test_position_scan_symmetry_and_dip():
    cav = paper_cavity(alpha=1e-3, delta_c=mhz(-170))
    cl = probe_cloud()
    xs = np.linspace(-12, 12, 25)
    oc = np.array([r.omega_c for r in scan_position(cl, cav, PUMP, xs)])
    np.testing.assert_allclose(oc, oc[::-1], rtol=1e-8)
    center = oc[12]
    assert np.all(oc[np.abs(xs) >= 2] > center)


def test_no_threshold_reported_in_scan():
    from cavity_kit.threshold import ScanRow

    cav = paper_cavity(alpha=1e-3)
    row = scan_detuning(probe_cloud(), cav, PumpParams(delta_a=mhz(-98e3)), [mhz(-100)])[0]
    assert isinstance(row, ScanRow)
    with pytest.raises(NoThreshold):
        # a positive E_dw with a flipped interaction sign has no threshold
        critical_pump(probe_cloud(), replace(cav, g0=1j * cav.g0), PUMP)
