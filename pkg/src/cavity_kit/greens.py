"""Green's-function kernels of the confocal cavity at the midplane.

The interaction kernel D(r, r') is the weighted mode sum

    D(r, r') = sum_mu W_mu Xi_mu(r) Xi_mu(r'),

which becomes an integral over the Mehler kernel G(r, r', t) once the
weights are written as Laplace transforms.  Finite Gaussian clouds are
handled analytically inside the kernel (G' and G^D), leaving a one- or
two-dimensional tau integral.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .cavity_model import (
    CavityParams,
    CloudParams,
    ModeIndex,
    gamma_factor,
    mode_profiles,
    shell_weights,
)
from .errors import DivergentIntegral, InvalidParameters, QuadratureNotConverged, SingularKernel
from .quadrature import (
    DEFAULT_SPEC,
    DOUBLE_SPEC,
    QuadratureSpec,
    integrate_tau,
    integrate_tau2,
    tau_rule,
)

PHASES = np.array([1.0, -1.0, 1j, -1j])
SINGULAR_FLOOR = 1e-12


class Method(str, enum.Enum):
    MODE_SUM = "ModeSum"
    QUADRATURE = "Quadrature"
    CLOSED_FORM = "ClosedForm"


@dataclass(frozen=True)
class KernelSample:
    value: complex
    r: tuple
    r_prime: tuple
    method: Method
    rel_err: float = 0.0


def _xy(r):
    r = np.asarray(r, dtype=float)
    return r[..., 0], r[..., 1]


def mehler_1d(x, xp, t, w0):
    """Per-axis factor of the Mehler kernel; G is the product over x and y."""
    t = np.asarray(t, dtype=complex)
    q = 1.0 - t * t
    a = (1.0 + t * t) / (q * w0**2)
    b = 2.0 * t / (q * w0**2)
    return np.exp(-a * (x * x + xp * xp) + 2.0 * b * x * xp) / np.sqrt(q)


def mehler_kernel(r, r_prime, t, w0, floor=SINGULAR_FLOOR):
    """Closed-form Mehler kernel sum_mu Xi_mu(r) Xi_mu(r') t^n.

    Parameters
    ----------
    r, r_prime : array_like, shape (..., 2)
        Transverse positions in um.
    t : complex or array
        Generating-function argument with |t| <= 1.
    w0 : float
        Fundamental waist.
    floor : float
        Smallest accepted |1 - t^2|.
    """
    t = np.asarray(t, dtype=complex)
    q = 1.0 - t * t
    if np.any(np.abs(q) < floor):
        raise SingularKernel("|1 - t^2| below the singular floor")
    x, y = _xy(r)
    xp, yp = _xy(r_prime)
    r2 = x * x + y * y + xp * xp + yp * yp
    rr = x * xp + y * yp
    return np.exp((-(1.0 + t * t) * r2 + 4.0 * t * rr) / (q * w0**2)) / q


def symmetrize(r, r_prime, t, w0):
    """Average of G over t, -t, it, -it (keeps only shells n = 0 mod 4)."""
    t = np.asarray(t, dtype=float)
    return sum(mehler_kernel(r, r_prime, p * t, w0) for p in PHASES) / 4.0


def symmetrize_pm(r, r_prime, t, w0):
    """Average over t and -t only (drops the nonlocal +-it terms)."""
    t = np.asarray(t, dtype=float)
    return (mehler_kernel(r, r_prime, t, w0) + mehler_kernel(r, r_prime, -t, w0)) / 2.0


def _laplace_factor(tau, cavity):
    return np.exp(-(1.0 + 1j * cavity.kappa_tilde) * tau)


def _t_of_tau(tau, cavity):
    return np.exp(-cavity.eps_tilde * tau - cavity.alpha)


def _check_divergence(r, r_prime, cavity, w0):
    if cavity.alpha > 0 or cavity.single_mode:
        return
    r, rp = np.asarray(r, float), np.asarray(r_prime, float)
    tol = 1e-12 * w0
    if np.all(np.abs(r - rp) <= tol) or np.all(np.abs(r + rp) <= tol):
        raise DivergentIntegral(
            "alpha = 0 with point sources at r' = +-r: the shell sum diverges logarithmically"
        )


def greens_point(r, r_prime, cavity: CavityParams, spec: QuadratureSpec = DEFAULT_SPEC,
                 return_error=False):
    """Interaction kernel D(r, r') for point sources by tau quadrature.

    ``return_error=True`` also returns the relative error estimate.
    """
    cavity.require_dispersive()
    r = np.asarray(r, dtype=float)
    r_prime = np.asarray(r_prime, dtype=float)
    w0 = cavity.w0
    if cavity.single_mode:
        val = complex(mehler_kernel(r, r_prime, 0.0, w0)) / (1.0 + 1j * cavity.kappa_tilde)
        return (val, 0.0) if return_error else val
    _check_divergence(r, r_prime, cavity, w0)
    x, y = _xy(r)
    xp, yp = _xy(r_prime)

    def f(tau):
        t = _t_of_tau(tau, cavity)
        g = sum(mehler_1d(x, xp, p * t, w0) * mehler_1d(y, yp, p * t, w0) for p in PHASES)
        return g / 4.0 * _laplace_factor(tau, cavity)

    val, err = integrate_tau(f, spec)
    val = complex(val)
    return (val, float(err)) if return_error else val


def greens_map(xs, ys, source, cavity: CavityParams, spec: QuadratureSpec = DEFAULT_SPEC,
               return_error=False):
    """D(r, source) on the grid xs x ys (array indexed [ix, iy]).

    With alpha = 0 the pixels at r = +-source diverge and are returned as nan.
    ``return_error=True`` also returns the per-pixel relative error estimate.
    """
    cavity.require_dispersive()
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    sx, sy = float(source[0]), float(source[1])
    w0 = cavity.w0
    if cavity.single_mode:
        val = np.outer(mehler_1d(xs, sx, 0.0, w0), mehler_1d(ys, sy, 0.0, w0))
        val = val / (1.0 + 1j * cavity.kappa_tilde)
        return (val, np.zeros(val.shape)) if return_error else val

    def run(level):
        tau, w = tau_rule(spec, level)
        t = _t_of_tau(tau, cavity)
        c = _laplace_factor(tau, cavity) * w / 4.0
        out = np.zeros((xs.size, ys.size), dtype=complex)
        scale = np.zeros((xs.size, ys.size))
        for p in PHASES:
            mx = mehler_1d(xs[:, None], sx, p * t[None, :], w0)
            my = mehler_1d(ys[:, None], sy, p * t[None, :], w0)
            out += (mx * c) @ my.T
            scale += (np.abs(mx) * np.abs(c)) @ np.abs(my).T
        return out, scale

    coarse, _ = run(0)
    for level in range(1, spec.max_doublings + 1):
        fine, scale = run(level)
        err = np.abs(fine - coarse) / np.where(scale > 0, scale, 1.0)
        if cavity.alpha == 0:
            tol = 1e-9 * w0
            sing = (np.abs(xs[:, None] - sx) <= tol) & (np.abs(ys[None, :] - sy) <= tol)
            sing |= (np.abs(xs[:, None] + sx) <= tol) & (np.abs(ys[None, :] + sy) <= tol)
            err[sing] = 0.0
            fine[sing] = np.nan
        if np.all(err <= spec.target_rel_err):
            return (fine, err) if return_error else fine
        coarse = fine
    raise QuadratureNotConverged(f"greens_map error estimate {np.max(err):.3g} exceeds target")


def greens_sample(r, r_prime, cavity, spec=DEFAULT_SPEC, method=Method.QUADRATURE, n_max=None):
    if Method(method) is Method.MODE_SUM:
        v, e = mode_sum_oracle(r, r_prime, cavity, n_max), 0.0
    else:
        v, e = greens_point(r, r_prime, cavity, spec, return_error=True)
    return KernelSample(v, tuple(np.asarray(r, float)), tuple(np.asarray(r_prime, float)),
                        Method(method), e)


def mode_sum_oracle(r, r_prime, cavity: CavityParams, n_max=None):
    """Brute-force sum over all modes with l + m <= n_max."""
    n_max = cavity.n_max if n_max is None else int(n_max)
    if not 0 <= n_max <= 1000:
        raise InvalidParameters("mode_sum_oracle needs 0 <= n_max <= 1000")
    x, y = _xy(r)
    xp, yp = _xy(r_prime)
    w0 = cavity.w0
    px = mode_profiles(n_max, x, w0) * mode_profiles(n_max, xp, w0)
    py = mode_profiles(n_max, y, w0) * mode_profiles(n_max, yp, w0)
    shells = np.convolve(px, py)[: n_max + 1]
    return complex(shell_weights(n_max, cavity) @ shells)


# finite-size kernels ---------------------------------------------------------

def cloud_kernel_axis(xi, xj, t, gamma, w0):
    """One axis of G'(r_i, r_j, t) for Gaussian clouds with factor gamma."""
    t = np.asarray(t, dtype=complex)
    a = np.sqrt(2.0) * xi / w0
    b = np.sqrt(2.0) * xj / w0
    q = 1.0 - gamma**2 * t * t
    form = (1.0 + gamma * t * t) * (a * a + b * b) - 2.0 * (1.0 + gamma) * t * a * b
    return (1.0 + gamma) / (2.0 * np.sqrt(q)) * np.exp(-(1.0 + gamma) / (4.0 * q) * form)


def cloud_kernel(r_i, r_j, t, cloud: CloudParams, w0):
    """G'(r_i, r_j, t): the Mehler kernel averaged over two Gaussian clouds."""
    xi, yi = _xy(r_i)
    xj, yj = _xy(r_j)
    gx = gamma_factor(cloud.sigma_x, w0)
    gy = gamma_factor(cloud.sigma_y, w0)
    if gx == gy:
        t = np.asarray(t, dtype=complex)
        g = gx
        q = 1.0 - g * g * t * t
        ax, bx = np.sqrt(2.0) * xi / w0, np.sqrt(2.0) * xj / w0
        ay, by = np.sqrt(2.0) * yi / w0, np.sqrt(2.0) * yj / w0
        form = (1.0 + g * t * t) * (ax * ax + bx * bx + ay * ay + by * by) - 2.0 * (
            1.0 + g
        ) * t * (ax * bx + ay * by)
        return (1.0 + g) ** 2 / (4.0 * q) * np.exp(-(1.0 + g) / (4.0 * q) * form)
    return cloud_kernel_axis(xi, xj, t, gx, w0) * cloud_kernel_axis(yi, yj, t, gy, w0)


def _disp_a(t2, s2, g):
    return 3 - g * (1 + t2 + s2) - g * g * (t2 + s2 + t2 * s2) + 3 * g**3 * t2 * s2


def _disp_b(t2, s2, g):
    return 3 + t2 - g * (1 - t2) * (1 + s2) - g * g * s2 * (1 + 3 * t2)


def dispersive_kernel_axis(xi, xj, xk, t, tp, gamma, w0):
    """One axis of G^D(r_i, r_j, r_k, t, t'); r_i is the shared position."""
    t = np.asarray(t, dtype=complex)
    tp = np.asarray(tp, dtype=complex)
    g = gamma
    t2, s2 = t * t, tp * tp
    a = _disp_a(t2, s2, g)
    ri, rj, rk = (np.sqrt(2.0) * v / w0 for v in (xi, xj, xk))
    p_ii = 4 * (1 - g * g * t2 * s2)
    p_ij = -2 * t * (1 + g) * (1 - g * s2)
    p_ik = -2 * tp * (1 + g) * (1 - g * t2)
    p_jk = -2 * (1 - g * g) * t * tp
    form = (
        p_ii * ri * ri
        + _disp_b(t2, s2, g) * rj * rj
        + _disp_b(s2, t2, g) * rk * rk
        + 2 * (p_ij * ri * rj + p_ik * ri * rk + p_jk * rj * rk)
    )
    return (1 + g) ** 1.5 / (2 * np.sqrt(a)) * np.exp(-(1 + g) / (4 * a) * form)


def dispersive_kernel(r_i, r_j, r_k, t, tp, cloud: CloudParams, w0):
    """G^D: density-weighted product G(r, r', t) G(r, r'', t')."""
    xi, yi = _xy(r_i)
    xj, yj = _xy(r_j)
    xk, yk = _xy(r_k)
    gx = gamma_factor(cloud.sigma_x, w0)
    gy = gamma_factor(cloud.sigma_y, w0)
    return dispersive_kernel_axis(xi, xj, xk, t, tp, gx, w0) * dispersive_kernel_axis(
        yi, yj, yk, t, tp, gy, w0
    )


def _check_cloud(cloud, w0):
    for s in (cloud.sigma_x, cloud.sigma_y):
        g = gamma_factor(s, w0)
        if not -1 < g < 1:
            raise InvalidParameters("cloud gamma factors must lie in (-1, 1)")


def greens_cloud(r_i, r_j, cloud: CloudParams, cavity: CavityParams,
                 spec: QuadratureSpec = DEFAULT_SPEC, return_error=False):
    """Interaction between two identical Gaussian clouds centred at r_i and r_j."""
    cavity.require_dispersive()
    _check_cloud(cloud, cavity.w0)
    w0 = cavity.w0
    if cavity.single_mode:
        val = complex(cloud_kernel(r_i, r_j, 0.0, cloud, w0)) / (1.0 + 1j * cavity.kappa_tilde)
        return (val, 0.0) if return_error else val

    def f(tau):
        t = _t_of_tau(tau, cavity)
        g = sum(cloud_kernel(r_i, r_j, p * t, cloud, w0) for p in PHASES)
        return g / 4.0 * _laplace_factor(tau, cavity)

    val, err = integrate_tau(f, spec)
    val = complex(val)
    return (val, float(err)) if return_error else val


def greens_dispersive(r_i, r_j, r_k, cloud: CloudParams, cavity: CavityParams,
                      spec: QuadratureSpec = DOUBLE_SPEC, return_error=False):
    """Triple-cloud average of D(r, r') D(r, r''), the dispersive-shift kernel."""
    cavity.require_dispersive()
    _check_cloud(cloud, cavity.w0)
    w0 = cavity.w0
    if cavity.single_mode:
        val = complex(dispersive_kernel(r_i, r_j, r_k, 0.0, 0.0, cloud, w0))
        val /= (1.0 + 1j * cavity.kappa_tilde) ** 2
        return (val, 0.0) if return_error else val
    xi, yi = _xy(r_i)
    xj, yj = _xy(r_j)
    xk, yk = _xy(r_k)
    gx = gamma_factor(cloud.sigma_x, w0)
    gy = gamma_factor(cloud.sigma_y, w0)
    ph = PHASES

    def f(tau, lam):
        t = ph[:, None, None, None] * _t_of_tau(tau, cavity)[None, None]
        tp = ph[None, :, None, None] * _t_of_tau(lam, cavity)[None, None]
        g = dispersive_kernel_axis(xi, xj, xk, t, tp, gx, w0) * dispersive_kernel_axis(
            yi, yj, yk, t, tp, gy, w0
        )
        return g.sum(axis=(0, 1)) / 16.0 * _laplace_factor(tau + lam, cavity)

    val, err = integrate_tau2(f, spec)
    val = complex(val)
    return (val, float(err)) if return_error else val


# overlaps ---------------------------------------------------------------------

def _axis_grid(center, sigma, w0, n_max):
    half = 12.0 * sigma
    # fine enough for the shortest Hermite oscillation and the density
    step = min(sigma / 8.0, w0 / (8.0 * np.sqrt(2.0 * n_max + 1.0)))
    n = int(np.ceil(2 * half / step)) + 1
    x = np.linspace(center - half, center + half, n)
    rho = np.exp(-0.5 * ((x - center) / sigma) ** 2) / (np.sqrt(2 * np.pi) * sigma)
    w = np.full(n, x[1] - x[0])
    return x, rho * w


def overlap_tables(n_max, cloud: CloudParams, w0):
    """Per-axis overlaps int rho_x Xi_l dx and int rho_y Xi_m dy, l, m <= n_max.

    The integrand is a Gaussian times a smooth function, so the trapezoid
    rule on a uniform grid converges spectrally.
    """
    x, wx = _axis_grid(cloud.center[0], cloud.sigma_x, w0, n_max)
    y, wy = _axis_grid(cloud.center[1], cloud.sigma_y, w0, n_max)
    return mode_profiles(n_max, x, w0) @ wx, mode_profiles(n_max, y, w0) @ wy


def overlap_I(mode: ModeIndex, cloud: CloudParams, w0=35.0):
    """I_mu = int rho(r) Xi_mu(r) dr."""
    ix, iy = overlap_tables(max(mode.l, mode.m), cloud, w0)
    return float(ix[mode.l] * iy[mode.m])


def overlap_J(mode: ModeIndex, other: ModeIndex, cloud: CloudParams, w0=35.0):
    """J_mu,nu = int rho(r) Xi_mu(r) Xi_nu(r) dr."""
    n = max(mode.l, mode.m, other.l, other.m)
    x, wx = _axis_grid(cloud.center[0], cloud.sigma_x, w0, n)
    y, wy = _axis_grid(cloud.center[1], cloud.sigma_y, w0, n)
    px, py = mode_profiles(n, x, w0), mode_profiles(n, y, w0)
    jx = np.sum(px[mode.l] * px[other.l] * wx)
    jy = np.sum(py[mode.m] * py[other.m] * wy)
    return float(jx * jy)


def cloud_mode_sum(cloud: CloudParams, cavity: CavityParams, n_max=400, r_j=None):
    """sum_mu W_mu I_mu(r_i) I_mu(r_j) from overlap tables (oracle for greens_cloud)."""
    ix, iy = overlap_tables(n_max, cloud, cavity.w0)
    if r_j is None:
        jx, jy = ix, iy
    else:
        jx, jy = overlap_tables(n_max, CloudParams(
            center=tuple(r_j), sigma_x=cloud.sigma_x, sigma_y=cloud.sigma_y), cavity.w0)
    shells = np.convolve(ix * jx, iy * jy)[: n_max + 1]
    return complex(shell_weights(n_max, cavity) @ shells)
