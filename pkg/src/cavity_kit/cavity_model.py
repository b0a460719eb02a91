"""Domain types, unit conventions and mode functions.

Internal units: lengths in micrometres, times in microseconds and every
frequency or energy as an angular frequency in rad/us (hbar = 1).  A value
quoted as nu/2pi in MHz therefore enters as ``mhz(nu)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Tuple

import numpy as np
from scipy import constants

from .errors import InvalidParameters

TWO_PI = 2.0 * np.pi
HBAR = constants.hbar
ATOMIC_MASS = constants.physical_constants["atomic mass constant"][0]
BOHR_RADIUS_UM = constants.physical_constants["Bohr radius"][0] * 1e6
RB87_MASS = 86.909180527 * ATOMIC_MASS


def mhz(nu):
    """Cyclic frequency in MHz -> angular frequency in rad/us."""
    return TWO_PI * np.asarray(nu, dtype=float) if np.ndim(nu) else TWO_PI * float(nu)


def to_mhz(omega):
    """Angular frequency in rad/us -> cyclic MHz."""
    return np.asarray(omega) / TWO_PI if np.ndim(omega) else float(omega) / TWO_PI


@dataclass(frozen=True)
class ModeIndex:
    l: int
    m: int

    def __post_init__(self):
        if self.l < 0 or self.m < 0:
            raise InvalidParameters(f"mode indices must be non-negative, got {self}")

    @property
    def n(self) -> int:
        return self.l + self.m


@dataclass(frozen=True)
class CavityParams:
    """Confocal cavity near an even resonance, evaluated at the midplane.

    ``delta_c`` is the signed pump-cavity detuning (negative in operation)
    and ``delta_0`` the global offset added to it; every derived quantity
    uses the effective detuning ``delta_c + delta_0``.  With
    ``single_mode=True`` only the TEM00 mode carries weight.
    """

    w0: float = 35.0
    kappa: float = TWO_PI * 0.137
    epsilon: float = TWO_PI * 2.6
    alpha: float = 0.0
    delta_c: float = TWO_PI * -100.0
    delta_0: float = 0.0
    g0: float = TWO_PI * 1.47
    wavelength: float = 0.780
    n_max: int = 600
    single_mode: bool = False

    def __post_init__(self):
        if not self.w0 > 0:
            raise InvalidParameters("w0 must be positive")
        if not self.kappa > 0:
            raise InvalidParameters("kappa must be positive")
        if self.epsilon < 0:
            raise InvalidParameters("epsilon must be non-negative")
        if self.alpha < 0:
            raise InvalidParameters("alpha must be non-negative")
        if not self.wavelength > 0:
            raise InvalidParameters("wavelength must be positive")

    @property
    def detuning(self) -> float:
        return self.delta_c + self.delta_0

    @property
    def eps_tilde(self) -> float:
        return -self.epsilon / self.detuning

    @property
    def kappa_tilde(self) -> float:
        return self.kappa / self.detuning

    @property
    def u(self) -> complex:
        if self.epsilon == 0:
            return complex(np.inf, 0.0)
        return (1.0 + 1j * self.kappa_tilde) / self.eps_tilde

    def require_dispersive(self) -> None:
        """Reject configurations outside the red-detuned dispersive regime."""
        if not self.detuning < 0:
            raise InvalidParameters(
                f"delta_c + delta_0 must be negative, got {to_mhz(self.detuning):.4g} MHz"
            )
        if abs(self.kappa_tilde) >= 1:
            raise InvalidParameters("|kappa / detuning| must be < 1")
        if not self.single_mode and not self.eps_tilde > 0:
            raise InvalidParameters("multimode kernels need epsilon > 0")

    def with_detuning(self, delta_c: float) -> "CavityParams":
        return replace(self, delta_c=delta_c)


@dataclass(frozen=True)
class CloudParams:
    """Gaussian-approximated BEC at the midplane (z0 = 0)."""

    center: Tuple[float, float] = (0.0, 0.0)
    sigma_x: float = 3.0
    sigma_y: float = 3.0
    n_atoms: float = 3e5
    trap_freqs: Tuple[float, float, float] = (
        TWO_PI * 1e-4,
        TWO_PI * 1e-4,
        TWO_PI * 1e-4,
    )
    scattering_length: float = 100 * BOHR_RADIUS_UM
    atom_mass: float = RB87_MASS

    def __post_init__(self):
        if not (self.sigma_x > 0 and self.sigma_y > 0):
            raise InvalidParameters("cloud widths must be positive")
        if self.n_atoms < 1:
            raise InvalidParameters("n_atoms must be >= 1")
        if len(self.center) != 2:
            raise InvalidParameters("center is the transverse position (x, y)")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, "trap_freqs", tuple(float(w) for w in self.trap_freqs))

    @classmethod
    def from_tf_radii(
        cls,
        radii,
        n_atoms,
        center=(0.0, 0.0),
        tf_to_gauss_ratio=0.5,
        scattering_length=100 * BOHR_RADIUS_UM,
        atom_mass=RB87_MASS,
    ) -> "CloudParams":
        """Cloud whose trap frequencies reproduce the given Thomas-Fermi radii.

        Inverting R_i^2 = 2 mu / (m w_i^2) together with the Thomas-Fermi
        chemical potential gives mu = 15 hbar^2 a N / (2 m Rx Ry Rz).  The
        Gaussian widths are ``tf_to_gauss_ratio * R``.
        """
        rx, ry, rz = (float(r) * 1e-6 for r in radii)
        a = scattering_length * 1e-6
        mu = 15 * HBAR**2 * a * n_atoms / (2 * atom_mass * rx * ry * rz)
        omegas = tuple(np.sqrt(2 * mu / atom_mass) / r * 1e-6 for r in (rx, ry, rz))
        return cls(
            center=center,
            sigma_x=tf_to_gauss_ratio * radii[0],
            sigma_y=tf_to_gauss_ratio * radii[1],
            n_atoms=n_atoms,
            trap_freqs=omegas,
            scattering_length=scattering_length,
            atom_mass=atom_mass,
        )

    def at(self, x: float, y: float = 0.0) -> "CloudParams":
        return replace(self, center=(x, y))

    def with_atoms(self, n_atoms: float) -> "CloudParams":
        return replace(self, n_atoms=n_atoms)

    def tf_radii(self, wavelength: float = 0.780) -> Tuple[float, float, float]:
        mu = cloud_energies(self, wavelength).mu_tf * 1e6 * HBAR
        return tuple(
            np.sqrt(2 * mu / (self.atom_mass * (w * 1e6) ** 2)) * 1e6 for w in self.trap_freqs
        )


@dataclass(frozen=True)
class PumpParams:
    rabi: float = TWO_PI * 30.0
    delta_a: float = TWO_PI * -98e3

    def check_far_detuned(self, cavity: CavityParams, cloud: CloudParams) -> bool:
        scale = max(
            abs(cavity.detuning),
            cloud.n_atoms * cavity.g0**2 / abs(cavity.detuning),
        )
        ok = abs(self.delta_a) > 100 * scale
        if not ok:
            warnings.warn(
                "atomic detuning is not large compared with the cavity scales",
                RuntimeWarning,
                stacklevel=2,
            )
        return ok


@dataclass(frozen=True)
class CloudEnergies:
    e_recoil: float
    mu_tf: float
    e_trap: float
    e_int: float
    e_dw: float


def cloud_energies(cloud: CloudParams, wavelength: float = 0.780) -> CloudEnergies:
    """Recoil energy, Thomas-Fermi chemical potential and derived energies."""
    m = cloud.atom_mass
    k = TWO_PI / (wavelength * 1e-6)
    e_r = HBAR * k**2 / (2 * m) * 1e-6
    wbar3 = np.prod([w * 1e6 for w in cloud.trap_freqs])
    a = cloud.scattering_length * 1e-6
    mu = (15 * HBAR**2 * a * cloud.n_atoms * wbar3) ** 0.4 * m**0.2 / 2
    mu = mu / HBAR * 1e-6
    n = cloud.n_atoms
    return CloudEnergies(
        e_recoil=e_r,
        mu_tf=mu,
        e_trap=3.0 / 7.0 * mu * n,
        e_int=2.0 / 7.0 * mu * n,
        e_dw=2 * e_r + 8.0 / 7.0 * mu,
    )


def gamma_factor(sigma, w0):
    """Finite-size factor (1 - 2 s^2/w0^2) / (1 + 2 s^2/w0^2)."""
    b = 2 * np.asarray(sigma, dtype=float) ** 2 / w0**2
    g = (1 - b) / (1 + b)
    return float(g) if np.ndim(g) == 0 else g


def hermite_functions(n_max: int, xi) -> np.ndarray:
    """Normalised Hermite functions H_n(xi) exp(-xi^2/2) / sqrt(2^n n!).

    Returns an array of shape ``(n_max + 1,) + np.shape(xi)``.  The
    three-term recurrence stays well conditioned far beyond n = 600.
    """
    xi = np.asarray(xi, dtype=float)
    out = np.empty((n_max + 1,) + xi.shape)
    out[0] = np.exp(-0.5 * xi**2)
    if n_max >= 1:
        out[1] = np.sqrt(2.0) * xi * out[0]
    for n in range(1, n_max):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * xi * out[n] - np.sqrt(n / (n + 1.0)) * out[n - 1]
    return out


def hermite_poly(n: int, xi):
    """Physicists' Hermite polynomial H_n by recurrence."""
    xi = np.asarray(xi, dtype=float)
    h0, h1 = np.ones_like(xi), 2 * xi
    if n == 0:
        return h0
    for k in range(1, n):
        h0, h1 = h1, 2 * xi * h1 - 2 * k * h0
    return h1


def mode_profiles(n_max: int, coord, w0: float) -> np.ndarray:
    """One-dimensional mode factors Xi_l(coord) for l = 0..n_max."""
    return hermite_functions(n_max, np.sqrt(2.0) * np.asarray(coord, dtype=float) / w0)


def hermite_gauss(mode: ModeIndex, point, w0: float, normalized: bool = True):
    """Hermite-Gauss transverse mode at the midplane.

    The normalised form divides by sqrt(2^(l+m) l! m!) so that the modes sum
    to the Mehler kernel and TEM00 equals 1 on axis.  ``normalized=False``
    returns the bare product H_l H_m exp(-r^2/w0^2).
    """
    x, y = np.asarray(point[0], dtype=float), np.asarray(point[1], dtype=float)
    sx, sy = np.sqrt(2.0) * x / w0, np.sqrt(2.0) * y / w0
    if normalized:
        return (
            hermite_functions(mode.l, sx)[mode.l] * hermite_functions(mode.m, sy)[mode.m]
        )
    return hermite_poly(mode.l, sx) * hermite_poly(mode.m, sy) * np.exp(-(x**2 + y**2) / w0**2)


def selection_factor(n):
    """Midplane even-resonance selection cos^2(n pi/4) cos^2(n pi/2)."""
    n = np.asarray(n)
    return (n % 4 == 0).astype(float)


def mode_weight(mode: ModeIndex | int, cavity: CavityParams) -> complex:
    n = mode.n if isinstance(mode, ModeIndex) else int(mode)
    if n % 4 != 0:
        return 0j
    if cavity.single_mode:
        return 1.0 / (1.0 + 1j * cavity.kappa_tilde) if n == 0 else 0j
    return np.exp(-cavity.alpha * n) / (1.0 + cavity.eps_tilde * n + 1j * cavity.kappa_tilde)


def shell_weights(n_max: int, cavity: CavityParams) -> np.ndarray:
    """Vectorised ``mode_weight`` for every shell index n = 0..n_max."""
    n = np.arange(n_max + 1)
    if cavity.single_mode:
        w = np.zeros(n_max + 1, dtype=complex)
        w[0] = 1.0 / (1.0 + 1j * cavity.kappa_tilde)
        return w
    w = np.exp(-cavity.alpha * n) / (1.0 + cavity.eps_tilde * n + 1j * cavity.kappa_tilde)
    return w * selection_factor(n)
