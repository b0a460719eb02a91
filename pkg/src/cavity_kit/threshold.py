"""Superradiant threshold, stability analysis and scan generators.

Conventions: E_cav is written as ``(N^2 g0^2 / (2 Delta_A^2 Delta)) * F``
with ``F = <D> + (N g0^2 / (2 Delta_A Delta)) <DD>``, where ``Delta`` is
the effective detuning ``delta_c + delta_0``.  The threshold follows from
-2 Re E_cav = N E_dw, and since E_cav scales as Omega^2 it is solved in
closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .cavity_model import CavityParams, CloudParams, PumpParams, cloud_energies
from .errors import CavityKitError, InvalidParameters, NoThreshold
from .greens import greens_cloud, greens_dispersive
from .quadrature import DEFAULT_SPEC, DOUBLE_SPEC
from .spectral import series_for

N0 = 3e5


@dataclass(frozen=True)
class ThresholdResult:
    """Critical pump and the two pieces of E_cav / Omega^2.

    ``first_order`` and ``dispersive`` are the contributions to
    ``e_cav_per_omega_sq``; ``mean_d`` and ``mean_dd`` are the bare
    density-averaged kernels <D> and <DD>.
    """

    omega_c: float
    omega_c_sq_norm: float
    e_cav_per_omega_sq: complex
    first_order: complex
    dispersive: complex
    mean_d: complex
    mean_dd: complex
    e_dw: float
    n_atoms: float


@dataclass(frozen=True)
class StabilityReport:
    matrix: np.ndarray
    analytic_eigs: np.ndarray
    numeric_eigs: np.ndarray
    unstable: bool
    radicand: complex
    slow_growth_rate: float

    @property
    def max_mismatch(self) -> float:
        return float(np.max(np.abs(self.analytic_eigs - self.numeric_eigs)))


def check_position(cloud: CloudParams, cavity: CavityParams):
    limit = cavity.w0 * np.sqrt(np.pi) / 2
    if np.hypot(*cloud.center) >= limit:
        raise InvalidParameters(
            f"|r0| must stay below w0 sqrt(pi)/2 = {limit:.3g} um (single longitudinal quadrature)"
        )


def interaction_integrals(cloud: CloudParams, cavity: CavityParams, method="spectral",
                          include_dispersive=True):
    """Density-averaged kernels (<D>, <DD>) for a cloud at its centre position."""
    cavity.require_dispersive()
    if method == "spectral":
        s = series_for(cloud, cavity.w0)
        d, dd = s.evaluate(cavity.eps_tilde, cavity.kappa_tilde, cavity.alpha, cavity.single_mode)
        return d, (dd if include_dispersive else 0j)
    if method == "quadrature":
        r0 = cloud.center
        d = greens_cloud(r0, r0, cloud, cavity, DEFAULT_SPEC)
        dd = greens_dispersive(r0, r0, r0, cloud, cavity, DOUBLE_SPEC) if include_dispersive else 0j
        return d, dd
    raise InvalidParameters(f"unknown method {method!r}")


def coupling_factors(cavity: CavityParams, n_atoms, delta_a):
    """(N^2 g0^2 / (2 Delta_A^2 Delta), N g0^2 / (2 Delta_A Delta))."""
    det = cavity.detuning
    g2 = cavity.g0**2
    return n_atoms**2 * g2 / (2 * delta_a**2 * det), n_atoms * g2 / (2 * delta_a * det)


def e_cav(cloud: CloudParams, cavity: CavityParams, pump_rabi, delta_a=PumpParams().delta_a,
          include_dispersive=True, method="spectral"):
    """Cavity-mediated energy E_cav for pump Rabi frequency ``pump_rabi``."""
    if not delta_a < 0:
        raise InvalidParameters("delta_a must be negative")
    d, dd = interaction_integrals(cloud, cavity, method, include_dispersive)
    pre, p = coupling_factors(cavity, cloud.n_atoms, delta_a)
    return pump_rabi**2 * pre * (d + p * dd)


def critical_pump(cloud: CloudParams, cavity: CavityParams, pump: PumpParams,
                  include_dispersive=True, method="spectral", e_dw: Optional[float] = None
                  ) -> ThresholdResult:
    """Closed-form critical Rabi frequency from -2 Re E_cav = N E_dw.

    ``e_dw`` overrides the Thomas-Fermi value computed from the cloud.
    """
    if not pump.delta_a < 0:
        raise InvalidParameters("delta_a must be negative")
    check_position(cloud, cavity)
    d, dd = interaction_integrals(cloud, cavity, method, include_dispersive)
    n = cloud.n_atoms
    pre, p = coupling_factors(cavity, n, pump.delta_a)
    first, disp = pre * d, pre * p * dd
    per = first + disp
    if e_dw is None:
        e_dw = cloud_energies(cloud, cavity.wavelength).e_dw
    if not per.real < 0:
        raise NoThreshold(f"Re E_cav / Omega^2 = {per.real:.3g} is not attractive")
    omega_c_sq = n * e_dw / (-2.0 * per.real)
    return ThresholdResult(
        omega_c=float(np.sqrt(omega_c_sq)),
        omega_c_sq_norm=float(omega_c_sq * n / N0),
        e_cav_per_omega_sq=complex(per),
        first_order=complex(first),
        dispersive=complex(disp),
        mean_d=complex(d),
        mean_dd=complex(dd),
        e_dw=float(e_dw),
        n_atoms=float(n),
    )


def stability_from_energies(n_er, e_int, e_cav_value) -> StabilityReport:
    """Linear stability of the normal state for given energies (rad/us)."""
    ec = complex(e_cav_value)
    a = 2 * n_er + 2 * e_int + ec
    b = 2 * e_int + ec
    ac, bc = np.conj(a), np.conj(b)
    m = np.array(
        [
            [ac, 0, 0, bc],
            [0, a, b, 0],
            [0, -b, -a, 0],
            [-bc, 0, 0, -ac],
        ],
        dtype=complex,
    )
    rad = 4 * n_er * (n_er + ec + 2 * e_int)
    root = np.sqrt(rad)
    rootc = np.sqrt(np.conj(rad))
    analytic = np.array([root, -root, rootc, -rootc])
    numeric = np.linalg.eigvals(m)
    # pair each analytic eigenvalue with its closest numeric one
    order, free = [], list(range(4))
    for lam in analytic:
        k = min(free, key=lambda j: abs(numeric[j] - lam))
        order.append(k)
        free.remove(k)
    numeric = numeric[order]
    return StabilityReport(
        matrix=m,
        analytic_eigs=analytic,
        numeric_eigs=numeric,
        unstable=bool((n_er + ec + 2 * e_int).real < 0),
        radicand=complex(rad),
        slow_growth_rate=float(np.max(numeric.imag)),
    )


def stability_matrix(cloud: CloudParams, cavity: CavityParams, pump: PumpParams, omega,
                     include_dispersive=True, method="spectral") -> StabilityReport:
    en = cloud_energies(cloud, cavity.wavelength)
    ec = e_cav(cloud, cavity, omega, pump.delta_a, include_dispersive, method)
    return stability_from_energies(cloud.n_atoms * en.e_recoil, en.e_int, ec)


@dataclass(frozen=True)
class ScanRow:
    x: float
    omega_c: float = float("nan")
    omega_c_norm: float = float("nan")
    enhancement: float = float("nan")
    status: str = "ok"


def _row(x, cloud, cavity, pump, **kw):
    try:
        r = critical_pump(cloud, cavity, pump, **kw)
    except NoThreshold as exc:
        return ScanRow(x=x, status=f"NoThreshold: {exc}")
    return ScanRow(
        x=x,
        omega_c=r.omega_c,
        omega_c_norm=float(np.sqrt(r.n_atoms / N0) * r.omega_c),
        enhancement=float(r.mean_d.real),
    )


def scan_detuning(cloud: CloudParams, cavity_base: CavityParams, pump: PumpParams, detunings,
                  **kw):
    """Threshold versus pump-cavity detuning (rows keep going past failures)."""
    rows = []
    for dc in detunings:
        cav = replace(cavity_base, delta_c=float(dc))
        try:
            rows.append(_row(float(dc), cloud, cav, pump, **kw))
        except CavityKitError as exc:
            rows.append(ScanRow(x=float(dc), status=f"{type(exc).__name__}: {exc}"))
    return rows


def scan_position(cloud_template: CloudParams, cavity: CavityParams, pump: PumpParams,
                  x_positions, **kw):
    """Threshold versus cloud position along x."""
    limit = cavity.w0 * np.sqrt(np.pi) / 2
    xs = [float(x) for x in x_positions]
    if any(abs(x) >= limit for x in xs):
        raise InvalidParameters(f"positions must satisfy |x| < {limit:.3g} um")
    y0 = cloud_template.center[1]
    return [_row(x, cloud_template.at(x, y0), cavity, pump, **kw) for x in xs]
