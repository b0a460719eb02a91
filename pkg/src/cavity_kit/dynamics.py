"""Mean-field dynamics of the condensate components and the cavity modes.

State: (psi_0, psi_F, psi_B, alpha_mu) with alpha over the modes l + m = 0
mod 4 up to ``n_max`` (the only ones with O_mu != 0 at the midplane).  The
equations use the N-summed energies E_trap, E_int and N E_r of the stability
analysis and the gauge eta = E_trap + 2 E_int, so the normal state (1, 0, 0)
is stationary.  The mode cutoff enters as exp(-alpha n / 2) on each
coupling amplitude, which reproduces exp(-alpha n) in the interaction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .cavity_model import CavityParams, CloudParams, PumpParams, cloud_energies, mode_profiles
from .errors import InvalidParameters, NoOnset, PerturbationInvalid, StepSizeUnderflow
from .greens import _axis_grid

PERTURBATION_LIMIT = 0.3
DEFAULT_SEED = 1e-6


@dataclass(frozen=True)
class MeanFieldState:
    psi_0: complex
    psi_f: complex
    psi_b: complex
    alphas: np.ndarray
    time: float = 0.0

    def vector(self):
        return np.concatenate(([self.psi_0, self.psi_f, self.psi_b], self.alphas)).astype(complex)

    @classmethod
    def from_vector(cls, v, time=0.0):
        return cls(complex(v[0]), complex(v[1]), complex(v[2]), np.array(v[3:], complex), time)

    @classmethod
    def normal(cls, n_modes, seed=DEFAULT_SEED):
        """(sqrt(1 - seed^2), seed, 0) with empty modes."""
        return cls(np.sqrt(1 - seed**2) + 0j, complex(seed), 0j, np.zeros(n_modes, complex))

    @property
    def atomic_norm(self):
        return abs(self.psi_0) ** 2 + abs(self.psi_f) ** 2 + abs(self.psi_b) ** 2


@dataclass(frozen=True)
class ModeBasis:
    """Modes, detunings and overlap integrals for one cloud and cavity."""

    l: np.ndarray
    m: np.ndarray
    n: np.ndarray
    delta: np.ndarray
    coupling: np.ndarray
    j: np.ndarray

    def __len__(self):
        return self.n.size


def mode_basis(cloud: CloudParams, cavity: CavityParams, n_max=20) -> ModeBasis:
    """Overlaps I_mu O_mu e^(-alpha n/2) and J_mu,nu O_mu O_nu e^(-alpha (n+n')/2)."""
    if n_max < 0:
        raise InvalidParameters("n_max must be >= 0")
    if cavity.single_mode:
        n_max = 0
    pairs = [(l, nn - l) for nn in range(0, n_max + 1, 4) for l in range(nn + 1)]
    l = np.array([p[0] for p in pairs])
    m = np.array([p[1] for p in pairs])
    n = l + m
    x, wx = _axis_grid(cloud.center[0], cloud.sigma_x, cavity.w0, max(n_max, 1))
    y, wy = _axis_grid(cloud.center[1], cloud.sigma_y, cavity.w0, max(n_max, 1))
    px, py = mode_profiles(n_max, x, cavity.w0), mode_profiles(n_max, y, cavity.w0)
    ix, iy = px @ wx, py @ wy
    jx, jy = (px * wx) @ px.T, (py * wy) @ py.T
    o = np.cos(n * np.pi / 4) * np.exp(-cavity.alpha * n / 2)
    coupling = ix[l] * iy[m] * o
    j = jx[np.ix_(l, l)] * jy[np.ix_(m, m)] * np.outer(o, o)
    delta = cavity.detuning - cavity.epsilon * n
    if cavity.single_mode:
        delta = np.array([cavity.detuning])
    return ModeBasis(l, m, n, delta.astype(float), coupling, j)


@dataclass(frozen=True)
class RampProtocol:
    """Piecewise-linear Omega(t) through (times, omegas)."""

    times: tuple
    omegas: tuple
    seed_amplitude: float = DEFAULT_SEED

    def __post_init__(self):
        t, w = np.asarray(self.times, float), np.asarray(self.omegas, float)
        if t.size != w.size or t.size < 2:
            raise InvalidParameters("ramp needs matching times and omegas (>= 2 points)")
        if np.any(np.diff(t) <= 0):
            raise InvalidParameters("ramp times must increase")
        if np.any(w < 0):
            raise InvalidParameters("Omega(t) must be >= 0")
        if not 0 < self.seed_amplitude <= 1e-3:
            raise InvalidParameters("seed_amplitude must lie in (0, 1e-3]")

    @classmethod
    def linear(cls, omega_max, duration, seed_amplitude=DEFAULT_SEED, omega_start=0.0):
        return cls((0.0, float(duration)), (float(omega_start), float(omega_max)), seed_amplitude)

    @classmethod
    def constant(cls, omega, duration, seed_amplitude=DEFAULT_SEED):
        return cls((0.0, float(duration)), (float(omega), float(omega)), seed_amplitude)

    @property
    def duration(self):
        return float(self.times[-1] - self.times[0])

    def omega_of_t(self, t):
        return np.interp(t, self.times, self.omegas)


class MeanFieldModel:
    """Precomputed coefficients for the equations of motion."""

    def __init__(self, cloud: CloudParams, cavity: CavityParams, pump: PumpParams, n_max=20):
        if not pump.delta_a < 0:
            raise InvalidParameters("delta_a must be negative")
        self.cloud, self.cavity, self.pump = cloud, cavity, pump
        self.basis = mode_basis(cloud, cavity, n_max)
        en = cloud_energies(cloud, cavity.wavelength)
        n = cloud.n_atoms
        self.e_trap, self.e_int = en.e_trap, en.e_int
        self.n_er = n * en.e_recoil
        self.eta = en.e_trap + 2 * en.e_int
        self.c_per_omega = n * cavity.g0 / (np.sqrt(2.0) * pump.delta_a)
        self.d = n * cavity.g0**2 / (2 * pump.delta_a)
        self.loss = self.basis.delta + 1j * cavity.kappa

    def rhs(self, y, omega, atoms_frozen=False):
        p0, pf, pb = y[0], y[1], y[2]
        a = y[3:]
        b = self.basis
        c = self.c_per_omega * omega
        s = p0 * np.conj(pf) + np.conj(p0) * pb
        r_a = -self.loss * a + c * b.coupling * s + self.d * (b.j @ a)
        out = np.empty_like(y)
        out[3:] = -1j * r_a
        if atoms_frozen:
            out[:3] = 0
            return out
        n0, nf, nb = abs(p0) ** 2, abs(pf) ** 2, abs(pb) ** 2
        ei, et = self.e_int, self.e_trap
        ia = b.coupling @ a
        ia_c = b.coupling @ np.conj(a)
        r0 = (et + ei * (2 * n0 + 4 * nf + 4 * nb) - self.eta) * p0 \
            + 4 * ei * np.conj(p0) * pf * pb + c * (ia * pf + ia_c * pb)
        rf = (2 * self.n_er + et + ei * (4 * n0 + 3 * nf + 6 * nb) - self.eta) * pf \
            + 2 * ei * p0**2 * np.conj(pb) + c * p0 * ia_c
        rb = (2 * self.n_er + et + ei * (4 * n0 + 6 * nf + 3 * nb) - self.eta) * pb \
            + 2 * ei * p0**2 * np.conj(pf) + c * p0 * ia
        out[0], out[1], out[2] = -1j * r0, -1j * rf, -1j * rb
        return out

    def perturbation_parameter(self):
        return float(np.max(np.abs(self.d * np.diag(self.basis.j) / self.loss)))

    def adiabatic(self, y, omega):
        b = self.basis
        ratio = abs(self.d) / np.min(np.abs(b.delta))
        if ratio > 0.1:
            warnings.warn(f"|N g0^2 / (2 Delta_A)| / |Delta_mu| = {ratio:.2g} is not small",
                          RuntimeWarning)
        pert = self.perturbation_parameter()
        if pert > PERTURBATION_LIMIT:
            raise PerturbationInvalid(f"dispersive coupling {pert:.3g} exceeds {PERTURBATION_LIMIT}")
        s = y[0] * np.conj(y[1]) + np.conj(y[0]) * y[2]
        first = b.coupling / self.loss
        second = self.d * (b.j @ first) / self.loss
        return self.c_per_omega * omega * s * (first + second)


def eom_rhs(state: MeanFieldState, cloud, cavity, pump, omega_now, n_max=20,
            model: Optional[MeanFieldModel] = None) -> MeanFieldState:
    """Time derivative of the mean-field state at pump Rabi frequency ``omega_now``."""
    model = model or MeanFieldModel(cloud, cavity, pump, n_max)
    if state.alphas.size != len(model.basis):
        raise InvalidParameters(f"state carries {state.alphas.size} modes, basis has "
                                f"{len(model.basis)}")
    return MeanFieldState.from_vector(model.rhs(state.vector(), omega_now), state.time)


def adiabatic_mode_amplitudes(state: MeanFieldState, cloud, cavity, pump, omega_now, n_max=20,
                              model: Optional[MeanFieldModel] = None):
    """Instantaneous steady-state mode amplitudes, dispersive part to first order."""
    model = model or MeanFieldModel(cloud, cavity, pump, n_max)
    return model.adiabatic(state.vector(), omega_now)


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray
    omega: np.ndarray
    kappa: float
    n_steps: int = 0

    @property
    def psi_f_sq(self):
        return np.abs(self.y[1]) ** 2

    @property
    def psi_b_sq(self):
        return np.abs(self.y[2]) ** 2

    @property
    def atomic_norm(self):
        return np.sum(np.abs(self.y[:3]) ** 2, axis=0)

    @property
    def flux(self):
        """Photon-flux proxy 2 kappa sum |alpha_mu|^2."""
        return 2 * self.kappa * np.sum(np.abs(self.y[3:]) ** 2, axis=0)

    def state(self, k):
        return MeanFieldState.from_vector(self.y[:, k], float(self.t[k]))


def integrate(state0: MeanFieldState, cloud, cavity, pump, ramp: RampProtocol, tol=1e-8,
              n_samples=2001, n_max=20, atoms_frozen=False, method="DOP853",
              model: Optional[MeanFieldModel] = None, t_eval=None) -> Trajectory:
    """Adaptive Runge-Kutta integration along a pump ramp.

    ``tol`` is used as both the relative and absolute local error target.
    """
    model = model or MeanFieldModel(cloud, cavity, pump, n_max)
    y0 = state0.vector()
    if y0.size != 3 + len(model.basis):
        raise InvalidParameters("state0 does not match the mode basis")
    t0, t1 = state0.time, state0.time + ramp.duration
    if t_eval is None:
        t_eval = np.linspace(t0, t1, n_samples)

    def f(t, y):
        return model.rhs(y, ramp.omega_of_t(t - t0 + ramp.times[0]), atoms_frozen)

    sol = solve_ivp(f, (t0, t1), y0, method=method, rtol=tol, atol=tol, t_eval=t_eval,
                    first_step=min(1e-4, ramp.duration / 10))
    if not sol.success:
        raise StepSizeUnderflow(f"integration stopped at t={sol.t[-1]:.6g}: {sol.message}")
    omega = ramp.omega_of_t(sol.t - t0 + ramp.times[0])
    return Trajectory(sol.t, sol.y, omega, cavity.kappa, int(sol.nfev))


@dataclass(frozen=True)
class Onset:
    onset_time: float
    onset_omega: float


def detect_onset(traj: Trajectory, threshold_flux: float) -> Onset:
    """First time the flux proxy exceeds ``threshold_flux`` (linear interpolation)."""
    flux = traj.flux
    above = np.nonzero(flux > threshold_flux)[0]
    if above.size == 0:
        raise NoOnset(f"flux proxy never exceeds {threshold_flux:.3g}")
    k = above[0]
    if k == 0:
        return Onset(float(traj.t[0]), float(traj.omega[0]))
    # interpolate in log flux between the bracketing samples
    f0, f1 = np.log(max(flux[k - 1], 1e-300)), np.log(flux[k])
    frac = (np.log(threshold_flux) - f0) / (f1 - f0) if f1 > f0 else 1.0
    t = traj.t[k - 1] + frac * (traj.t[k] - traj.t[k - 1])
    om = traj.omega[k - 1] + frac * (traj.omega[k] - traj.omega[k - 1])
    return Onset(float(t), float(om))


def linearized_eigenvalues(model: MeanFieldModel, omega, h=1e-7):
    """Eigenvalues of the real Jacobian of the RHS at the normal state.

    Returned as complex frequencies lambda with y ~ exp(-i lambda t), i.e.
    ``i * eig(J)``, so unstable modes have Im(lambda) > 0.
    """
    y0 = np.zeros(3 + len(model.basis), complex)
    y0[0] = 1.0
    dim = y0.size

    def real_f(v):
        y = v[:dim] + 1j * v[dim:]
        out = model.rhs(y, omega)
        return np.concatenate([out.real, out.imag])

    v0 = np.concatenate([y0.real, y0.imag])
    jac = np.empty((2 * dim, 2 * dim))
    for k in range(2 * dim):
        e = np.zeros(2 * dim)
        e[k] = h
        jac[:, k] = (real_f(v0 + e) - real_f(v0 - e)) / (2 * h)
    return 1j * np.linalg.eigvals(jac)
