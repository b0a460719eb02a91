"""Longitudinally pumped cavity fields and the substrate imaging chain.

A pump E_p on the midplane produces the steady-state field

    Phi(r) = (i kappa / Delta) int D(r, r') E_p(r') dr',

with the same kernel D as the atom-atom interaction.  Grids are centred
(``x_i = (i - (n - 1) / 2) dx``) and stored with x along axis 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.ndimage import gaussian_filter, map_coordinates
from scipy.optimize import brentq, least_squares

from .cavity_model import CavityParams, ModeIndex, mode_profiles, shell_weights
from .errors import FitDegenerate, GridTooCoarse, InvalidParameters, NegativeRadicand, \
    QuadratureNotConverged
from .greens import greens_point, mehler_1d
from .quadrature import QuadratureSpec, tau_rule

IMAGING_SPEC = QuadratureSpec(panels=28, order=6, target_rel_err=1e-4)
SVD_TOL = 1e-14
FWHM_PER_SIGMA = 2.0 * np.sqrt(2.0 * np.log(2.0))


@dataclass(frozen=True)
class FieldMap:
    """Sampled field on a centred grid; ``grid[i, j]`` sits at (x_i, y_j)."""

    grid: np.ndarray
    dx: float
    dy: float

    def __post_init__(self):
        g = np.asarray(self.grid)
        if g.ndim != 2:
            raise InvalidParameters("FieldMap grid must be 2-D")
        if not np.all(np.isfinite(g)):
            raise InvalidParameters("FieldMap grid must be finite")
        if not (self.dx > 0 and self.dy > 0):
            raise InvalidParameters("grid spacing must be positive")
        object.__setattr__(self, "grid", g)

    @property
    def shape(self):
        return self.grid.shape

    @property
    def extent(self):
        return (self.shape[0] * self.dx, self.shape[1] * self.dy)

    @property
    def x(self):
        return (np.arange(self.shape[0]) - (self.shape[0] - 1) / 2) * self.dx

    @property
    def y(self):
        return (np.arange(self.shape[1]) - (self.shape[1] - 1) / 2) * self.dy

    def mesh(self):
        return np.meshgrid(self.x, self.y, indexing="ij")

    def intensity(self):
        return FieldMap(np.abs(self.grid) ** 2, self.dx, self.dy)

    def norm2(self):
        return float(np.sum(np.abs(self.grid) ** 2) * self.dx * self.dy)

    def normalized(self):
        return FieldMap(self.grid / np.sqrt(self.norm2()), self.dx, self.dy)

    def __add__(self, other):
        if self.shape != other.shape or self.dx != other.dx or self.dy != other.dy:
            raise InvalidParameters("FieldMaps live on different grids")
        return FieldMap(self.grid + other.grid, self.dx, self.dy)

    def scaled(self, c):
        return FieldMap(c * self.grid, self.dx, self.dy)

    @classmethod
    def from_function(cls, func, extent, n):
        """Sample ``func(X, Y)`` on an n x n grid covering ``extent`` (um)."""
        ex, ey = (extent, extent) if np.ndim(extent) == 0 else extent
        nx, ny = (n, n) if np.ndim(n) == 0 else n
        fm = cls(np.zeros((nx, ny)), ex / nx, ey / ny)
        xx, yy = fm.mesh()
        return cls(np.asarray(func(xx, yy), dtype=complex), fm.dx, fm.dy)


def gaussian_pump(center=(0.0, 0.0), waist=1.7, extent=140.0, n=256, angle=0.0):
    """Normalised Gaussian pump exp(-|r - r0|^2 / waist^2)."""
    x0, y0 = center

    def f(x, y):
        return np.exp(-((x - x0) ** 2 + (y - y0) ** 2) / waist**2) + 0j

    return FieldMap.from_function(f, extent, n).normalized()


@dataclass(frozen=True)
class OpticsChain:
    magnification: float = 0.69
    psf_sigma: float = 0.0

    def __post_init__(self):
        if not self.magnification > 0:
            raise InvalidParameters("magnification must be positive")
        if self.psf_sigma < 0:
            raise InvalidParameters("psf_sigma must be >= 0")


# mode overlaps --------------------------------------------------------------

def overlap_table(pump: FieldMap, n_max: int, w0: float):
    """f[l, m] = int Xi_lm E_p for all l, m <= n_max."""
    px = mode_profiles(n_max, pump.x, w0)
    py = mode_profiles(n_max, pump.y, w0)
    return px @ pump.grid @ py.T * pump.dx * pump.dy


def longitudinal_overlap(pump: FieldMap, mode: ModeIndex, w0: float = 35.0) -> complex:
    """Overlap int Xi_mu(r) E_p(r) dr of the pump with one cavity mode."""
    n = max(mode.l, mode.m)
    return complex(overlap_table(pump, n, w0)[mode.l, mode.m])


def mode_sum_field(pump: FieldMap, cavity: CavityParams, n_max=None) -> FieldMap:
    """Phi = i kappa sum_mu f_mu Xi_mu / (Delta_mu + i kappa), modes n = 0 mod 4."""
    n_max = cavity.n_max if n_max is None else int(n_max)
    px = mode_profiles(n_max, pump.x, cavity.w0)
    py = mode_profiles(n_max, pump.y, cavity.w0)
    f = px @ pump.grid @ py.T * pump.dx * pump.dy
    l = np.arange(n_max + 1)
    n = l[:, None] + l[None, :]
    w = np.zeros(n.shape, dtype=complex)
    sw = shell_weights(2 * n_max, cavity)
    inside = n <= n_max
    w[inside] = sw[n[inside]]
    coef = 1j * cavity.kappa / cavity.detuning
    return FieldMap(coef * (px.T @ (w * f) @ py), pump.dx, pump.dy)


# kernel apply -----------------------------------------------------------------

def effective_width(cavity: CavityParams) -> float:
    """Width scale of the local synthetic-mode kernel, w0 sqrt((eps_t + alpha) / 2)."""
    if cavity.single_mode:
        return cavity.w0
    return cavity.w0 * np.sqrt((abs(cavity.eps_tilde) + cavity.alpha) / 2)


def check_grid(pump: FieldMap, cavity: CavityParams):
    w_eff = effective_width(cavity)
    if max(pump.dx, pump.dy) > w_eff / 4:
        raise GridTooCoarse(
            f"grid spacing {max(pump.dx, pump.dy):.3g} um exceeds w_eff/4 = {w_eff / 4:.3g} um"
        )
    if min(pump.extent) < 4 * cavity.w0:
        raise GridTooCoarse(f"grid must cover at least 4 w0 = {4 * cavity.w0:.3g} um")


def _axis_apply(coord, d, vecs, t, w0):
    """int G_1(x, x', t) v(x') dx' for each column v, real 0 < t < 1.

    Kernels narrower than the grid spacing use the small-width limit
    A(x) [v(x_c) + s^2 v''(x_c) / 2] around the image point x_c.
    """
    s2 = (1 - t * t) * w0**2 / (2 * (1 + t * t))
    if s2 >= d * d:
        k = mehler_1d(coord[:, None], coord[None, :], t, w0)
        return k @ vecs * d
    amp = w0 * np.sqrt(np.pi / (1 + t * t)) * np.exp(
        -coord**2 * (1 - t * t) / ((1 + t * t) * w0**2)
    )
    xc = 2 * t * coord / (1 + t * t)
    pos = (xc - coord[0]) / d
    curv = np.zeros_like(vecs)
    curv[1:-1] = (vecs[2:] - 2 * vecs[1:-1] + vecs[:-2]) / d**2
    out = np.empty_like(vecs)
    for j in range(vecs.shape[1]):
        col = vecs[:, j] + 0.5 * s2 * curv[:, j]
        out[:, j] = map_coordinates(col.real, [pos], order=3, mode="nearest") + 1j * \
            map_coordinates(col.imag, [pos], order=3, mode="nearest")
    return amp[:, None] * out


def _kernel_apply(pump: FieldMap, cavity: CavityParams, level: int, spec):
    u, s, vt = np.linalg.svd(pump.grid, full_matrices=False)
    keep = s > SVD_TOL * s[0] if s[0] > 0 else np.zeros_like(s, bool)
    u, s, v = u[:, keep] * s[keep], s[keep], vt[keep].T
    x, y = pump.x, pump.y
    w0 = cavity.w0
    out = np.zeros(pump.shape, dtype=complex)
    if u.shape[1] == 0:
        return out
    rev_u, rev_v = u[::-1], v[::-1]
    tau, wts = tau_rule(spec, level)
    t_all = np.exp(-cavity.eps_tilde * tau - cavity.alpha)
    lap = np.exp(-(1 + 1j * cavity.kappa_tilde) * tau) * wts / 4
    for t, c in zip(t_all, lap):
        # +t and -t share the x-kernel (mirror = reflected input), same for +-it
        ax = _axis_apply(x, pump.dx, np.hstack([u, rev_u]), t, w0)
        ay = _axis_apply(y, pump.dy, np.hstack([v, rev_v]), t, w0)
        r = u.shape[1]
        out += c * (ax[:, :r] @ ay[:, :r].T + ax[:, r:] @ ay[:, r:].T)
        kx = mehler_1d(x[:, None], x[None, :], 1j * t, w0) * pump.dx
        ky = mehler_1d(y[:, None], y[None, :], 1j * t, w0) * pump.dy
        bx, by = kx @ u, ky @ v
        bxr, byr = kx @ rev_u, ky @ rev_v
        out += c * (bx @ by.T + bxr @ byr.T)
    return out


def steady_state_field(pump: FieldMap, cavity: CavityParams, spec: QuadratureSpec = IMAGING_SPEC,
                       check=True) -> FieldMap:
    """Cavity field sustained by a longitudinal pump, by kernel convolution.

    The pump is factorised by SVD so that every tau node costs a few
    one-dimensional kernel matrix products; the four symmetrisation phases
    reuse the same matrices on reflected inputs, which requires the
    centred grid.
    """
    cavity.require_dispersive()
    coef = 1j * cavity.kappa / cavity.detuning
    if cavity.single_mode:
        f00 = longitudinal_overlap(pump, ModeIndex(0, 0), cavity.w0)
        xx, yy = pump.mesh()
        xi = np.exp(-(xx**2 + yy**2) / cavity.w0**2)
        return FieldMap(coef * f00 * xi / (1 + 1j * cavity.kappa_tilde), pump.dx, pump.dy)
    if check:
        check_grid(pump, cavity)
    coarse = _kernel_apply(pump, cavity, 0, spec)
    fine = _kernel_apply(pump, cavity, 1, spec)
    scale = np.max(np.abs(fine))
    err = np.max(np.abs(fine - coarse)) / scale if scale > 0 else 0.0
    if err > spec.target_rel_err:
        raise QuadratureNotConverged(f"field quadrature error {err:.3g} exceeds target")
    return FieldMap(coef * fine, pump.dx, pump.dy)


# optics chain --------------------------------------------------------------------

def transmission_image(field: FieldMap, chain: OpticsChain) -> FieldMap:
    """Magnify by m, blur the field with the Gaussian PSF and take |.|^2."""
    dx, dy = field.dx * chain.magnification, field.dy * chain.magnification
    g = field.grid
    if chain.psf_sigma > 0:
        sig = (chain.psf_sigma / dx, chain.psf_sigma / dy)
        g = gaussian_filter(g.real, sig, mode="constant") + 1j * gaussian_filter(
            g.imag, sig, mode="constant"
        )
    return FieldMap(np.abs(g) ** 2, dx, dy)


@dataclass(frozen=True)
class GaussianWidth:
    sigma_major: float
    sigma_minor: float
    angle: float
    center: tuple
    amplitude: float


def _gauss2d(p, xx, yy):
    amp, x0, y0, ls1, ls2, th, off = p
    c, s = np.cos(th), np.sin(th)
    u = (xx - x0) * c + (yy - y0) * s
    v = -(xx - x0) * s + (yy - y0) * c
    return off + amp * np.exp(-0.5 * (u**2 / np.exp(2 * ls1) + v**2 / np.exp(2 * ls2)))


def extract_gaussian_width(intensity: FieldMap, with_offset=False) -> GaussianWidth:
    """Fit a rotated 2-D Gaussian and return principal-axis widths.

    ``angle`` is the orientation of the major axis in degrees, (-90, 90].
    """
    img = np.real(intensity.grid)
    xx, yy = intensity.mesh()
    tot = img.sum()
    if not tot > 0:
        raise FitDegenerate("image has no positive signal")
    mx, my = (img * xx).sum() / tot, (img * yy).sum() / tot
    cxx = (img * (xx - mx) ** 2).sum() / tot
    cyy = (img * (yy - my) ** 2).sum() / tot
    cxy = (img * (xx - mx) * (yy - my)).sum() / tot
    ev, evec = np.linalg.eigh([[cxx, cxy], [cxy, cyy]])
    ev = np.clip(ev, (0.5 * min(intensity.dx, intensity.dy)) ** 2, None)
    th0 = np.arctan2(evec[1, 1], evec[0, 1])
    p0 = [img.max(), mx, my, 0.5 * np.log(ev[1]), 0.5 * np.log(ev[0]), th0, 0.0]

    def resid(p):
        q = p if with_offset else np.append(p, 0.0)
        return (_gauss2d(q, xx, yy) - img).ravel()

    start = p0 if with_offset else p0[:-1]
    res = least_squares(resid, start, x_scale="jac", xtol=1e-12, ftol=1e-12)
    if not res.success:
        raise FitDegenerate(f"2-D Gaussian fit failed: {res.message}")
    amp, x0, y0, ls1, ls2, th = res.x[:6]
    s1, s2 = np.exp(ls1), np.exp(ls2)
    if s2 > s1:
        s1, s2, th = s2, s1, th + np.pi / 2
    ang = np.degrees(th) % 180.0
    if ang > 90:
        ang -= 180
    if not (np.isfinite(s1) and s2 > 0 and amp > 0):
        raise FitDegenerate("fitted widths are not physical")
    return GaussianWidth(float(s1), float(s2), float(ang), (float(x0), float(y0)), float(amp))


@dataclass(frozen=True)
class GreensWidth:
    sigma: float
    hwhm: float


def greens_width_estimate(sigma_ccd, sigma_psf, sigma_pump, m) -> GreensWidth:
    """Kernel width by quadrature difference of Gaussian widths.

    sigma(D)^2 = (sigma_ccd^2 - sigma_psf^2) / m^2 - sigma_pump^2.  All widths
    must refer to the same profile convention (field or intensity).
    """
    if not m > 0:
        raise InvalidParameters("magnification must be positive")
    rad = (sigma_ccd**2 - sigma_psf**2) / m**2 - sigma_pump**2
    if not rad > 0:
        raise NegativeRadicand(
            f"quadrature difference is {rad:.3g} um^2: PSF or pump exceeds the observed width"
        )
    s = float(np.sqrt(rad))
    return GreensWidth(s, s * FWHM_PER_SIGMA / 2)


def field_sigma(intensity_sigma):
    """Gaussian field width from the width of its intensity profile."""
    return np.sqrt(2.0) * intensity_sigma


# kernel profile widths -----------------------------------------------------------

@lru_cache(maxsize=128)
def _hwhm_cached(cavity, quantity, r0, x_max):
    def prof(x):
        v = greens_point((r0[0] + x, r0[1]), r0, cavity)
        return abs(v) if quantity == "abs" else v.real

    peak = prof(0.0)
    grid = np.geomspace(1e-3, x_max, 200)
    vals = np.array([prof(x) for x in grid])
    below = np.nonzero(vals < peak / 2)[0]
    if below.size == 0:
        raise InvalidParameters("profile does not fall to half maximum")
    k = below[0]
    lo = grid[k - 1] if k > 0 else 0.0
    return brentq(lambda x: prof(x) - peak / 2, lo, grid[k], xtol=1e-10)


def local_hwhm(cavity: CavityParams, quantity="real", r0=(0.0, 0.0), x_max=None) -> float:
    """HWHM of the local synthetic-mode profile D(r0 + x e_x, r0) along x.

    Needs alpha > 0, since the point kernel diverges at r = r0 otherwise.
    """
    if quantity not in ("real", "abs"):
        raise InvalidParameters("quantity must be 'real' or 'abs'")
    x_max = cavity.w0 if x_max is None else x_max
    return _hwhm_cached(cavity, quantity, (float(r0[0]), float(r0[1])), float(x_max))
