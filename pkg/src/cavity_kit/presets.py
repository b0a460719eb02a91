"""Parameter sets at the scale of the in-situ confocal cavity experiment."""

from dataclasses import replace

from .cavity_model import CavityParams, CloudParams, PumpParams, mhz

BEC_RADII = (11.9, 13.2, 7.2)
PROBE_RADII = (3.1, 7.6, 5.3)
BEC_ATOMS = 4e5
N0 = 3e5
C_SINGLE = 5.2
MAGNIFICATION = 0.69
PUMP_WAIST = 1.7


def paper_cavity(**overrides) -> CavityParams:
    base = CavityParams(
        w0=35.0,
        kappa=mhz(0.137),
        epsilon=mhz(2.6),
        alpha=0.0,
        delta_c=mhz(-120.0),
        delta_0=mhz(0.8),
        g0=mhz(1.47),
        wavelength=0.780,
    )
    return replace(base, **overrides)


def paper_pump(**overrides) -> PumpParams:
    return replace(PumpParams(rabi=mhz(30.0), delta_a=mhz(-98e3)), **overrides)


def bec_cloud(n_atoms=BEC_ATOMS, center=(0.0, 0.0), tf_to_gauss_ratio=0.5) -> CloudParams:
    return CloudParams.from_tf_radii(BEC_RADII, n_atoms, center, tf_to_gauss_ratio)


def probe_cloud(n_atoms=0.76 * N0, center=(0.0, 0.0), tf_to_gauss_ratio=0.5) -> CloudParams:
    return CloudParams.from_tf_radii(PROBE_RADII, n_atoms, center, tf_to_gauss_ratio)
