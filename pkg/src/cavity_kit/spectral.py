"""Shell-series form of the cloud-averaged kernels for fast repeated evaluation.

For a Gaussian cloud the smeared kernels are analytic in t beyond the unit
circle, so their Taylor coefficients in t (the shell sums over modes with
l + m = n) follow from an FFT of the closed forms sampled on |t| = 1.  Once
the coefficients are stored, the interaction for any (eps_t, kappa_t, alpha)
is a dot product with the shell weights.  This is what makes global fits and
bootstrap refits affordable; the tau quadrature remains the reference path.

The dispersive term uses int rho(r) Phi(r)^2 dr, where Phi(r) is the field
radiated by the cloud, sampled at Gauss-Hermite nodes of the density.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .cavity_model import gamma_factor
from .greens import cloud_kernel_axis

GH_NODES = 24
COEFF_TOL = 1e-12
SVD_TOL = 1e-12


def _fft_size(gammas, tol):
    g = max(max(abs(x) for x in gammas), 1e-3)
    n_decay = 2.0 * np.log(tol) / np.log(g)
    m = 256
    while m < 1.5 * n_decay:
        m *= 2
    return m


def half_smeared_axis(x, t, x0, sigma, w0):
    """int N(x'; x0, sigma^2) G_1(x, x', t) dx', regular on |t| = 1."""
    beta = 2.0 * sigma**2 / w0**2
    t2 = t * t
    d = (1.0 + beta) - (1.0 - beta) * t2
    num = ((1.0 + beta) + (1.0 - beta) * t2) * x * x + (1.0 + t2) * x0 * x0 - 4.0 * t * x * x0
    return np.exp(-num / (w0**2 * d)) / np.sqrt(d)


@dataclass(frozen=True)
class CloudSeries:
    """Shell coefficients for one cloud geometry.

    Attributes
    ----------
    n : ndarray
        Retained shell indices (multiples of 4).
    first : ndarray
        Coefficients of G'_sym(r0, r0, t); the first-order interaction is
        ``first @ w``.
    left, right : ndarray
        Low-rank factors with Phi(r_k) = left[k] @ (right @ w).
    rho_w : ndarray
        Gauss-Hermite weights of the density nodes.
    """

    n: np.ndarray
    first: np.ndarray
    left: np.ndarray
    right: np.ndarray
    rho_w: np.ndarray

    def weights(self, eps_t, kappa_t, alpha, single_mode=False):
        if single_mode:
            w = np.zeros(self.n.size, dtype=complex)
            w[0] = 1.0 / (1.0 + 1j * kappa_t)
            return w
        return np.exp(-alpha * self.n) / (1.0 + eps_t * self.n + 1j * kappa_t)

    def evaluate(self, eps_t, kappa_t, alpha, single_mode=False):
        """Return (<D>, <DD>) for the cloud at the given cavity parameters."""
        w = self.weights(eps_t, kappa_t, alpha, single_mode)
        phi = self.left @ (self.right @ w)
        return complex(self.first @ w), complex(self.rho_w @ (phi * phi))


@lru_cache(maxsize=512)
def cloud_series(w0, center, sigma_x, sigma_y, tol=COEFF_TOL, n_gh=GH_NODES) -> CloudSeries:
    """Build (and cache) the shell series for a cloud; arguments are hashable."""
    x0, y0 = center
    gx, gy = gamma_factor(sigma_x, w0), gamma_factor(sigma_y, w0)
    m = _fft_size((gx, gy), tol)
    t = np.exp(2j * np.pi * np.arange(m) / m)

    vals = cloud_kernel_axis(x0, x0, t, gx, w0) * cloud_kernel_axis(y0, y0, t, gy, w0)
    coeff = np.fft.fft(vals).real / m

    xi, wi = np.polynomial.hermite.hermgauss(n_gh)
    xs = x0 + np.sqrt(2.0) * sigma_x * xi
    ys = y0 + np.sqrt(2.0) * sigma_y * xi
    rho_w = (wi[:, None] * wi[None, :]).ravel() / np.pi
    kx = half_smeared_axis(xs[:, None], t[None, :], x0, sigma_x, w0)
    ky = half_smeared_axis(ys[:, None], t[None, :], y0, sigma_y, w0)
    sel = np.arange(0, m // 2, 4)
    rows = []
    for a in range(n_gh):
        block = np.fft.fft(kx[a][None, :] * ky, axis=1).real / m
        rows.append(block[:, sel])
    e = np.concatenate(rows, axis=0)

    mag = np.max(np.abs(e), axis=0)
    keep = np.nonzero(mag > tol * mag.max())[0]
    n_keep = keep[-1] + 1 if keep.size else 1
    e = e[:, :n_keep]
    n = sel[:n_keep]
    first = coeff[n]

    u, s, vt = np.linalg.svd(e, full_matrices=False)
    rank = max(1, int(np.sum(s > SVD_TOL * s[0])))
    left = u[:, :rank] * s[:rank]
    right = vt[:rank]
    for arr in (n, first, left, right, rho_w):
        arr.setflags(write=False)
    return CloudSeries(n=n, first=first, left=left, right=right, rho_w=rho_w)


def series_for(cloud, w0, **kw) -> CloudSeries:
    return cloud_series(
        float(w0),
        (float(cloud.center[0]), float(cloud.center[1])),
        float(cloud.sigma_x),
        float(cloud.sigma_y),
        **kw,
    )
