"""Cooperativity enhancement of the multimode cavity over a single mode.

The enhancement ratio is Re D averaged over the atomic density at the cavity
centre.  Each quantity is available from the tau quadrature of the kernels
and from a special-function closed form (Lerch transcendent for point and
isotropic sources, Appell F1 for anisotropic clouds).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import gammaln, hyp2f1

from .cavity_model import CavityParams, CloudParams, gamma_factor
from .errors import DivergentIntegral, InvalidParameters, NotConverged
from .greens import greens_cloud, greens_point
from .quadrature import DEFAULT_SPEC, QuadratureSpec, integrate_tau

C_SINGLE = 5.2
LERCH_SWITCH = 0.99
MAX_TERMS = 10_000_000
SPECIAL_SPEC = QuadratureSpec(panels=48, order=10, target_rel_err=1e-12)


class EnhancementMethod(str, enum.Enum):
    QUADRATURE = "Quadrature"
    LERCH = "LerchClosedForm"
    APPELL = "AppellClosedForm"


@dataclass(frozen=True)
class EnhancementResult:
    """C_mm / C from the selected method plus both evaluation paths.

    ``ratio`` follows ``method``; ``ratio_quadrature`` and
    ``ratio_closed_form`` keep both numbers for cross-checking.
    """

    ratio: float
    c_mm: float
    method: EnhancementMethod
    c_single: float = C_SINGLE
    ratio_quadrature: float = float("nan")
    ratio_closed_form: float = float("nan")

    @property
    def rel_diff(self) -> float:
        return abs(self.ratio_quadrature - self.ratio_closed_form) / abs(self.ratio_closed_form)


def _result(quad, closed, method, c_single):
    ratio = closed if method is not EnhancementMethod.QUADRATURE else quad
    return EnhancementResult(
        ratio=float(ratio),
        c_mm=float(ratio) * c_single,
        method=method,
        c_single=c_single,
        ratio_quadrature=float(quad),
        ratio_closed_form=float(closed),
    )


# special functions -------------------------------------------------------------

def _laplace_integral(a, integrand, spec):
    """int_0^inf exp(-a s) integrand(s) ds, rescaled so the decay rate is ~1."""
    scale = max(float(np.real(a)), 1e-300)

    def f(tau):
        s = tau / scale
        return np.exp(-a * s) * integrand(s) / scale

    val, _ = integrate_tau(f, spec)
    return complex(val)


def lerch(z, a, tol=1e-15, method="auto"):
    """Lerch transcendent P(z, 1, a) = sum_n z^n / (n + a).

    Parameters
    ----------
    z : complex
        |z| < 1 (real z < 1 also accepted through the integral form).
    a : complex
        Re(a) > 0.  The integral form is tuned for Re(a) >= 1, which covers
        every a = u/4 met in practice.
    method : {"auto", "series", "integral"}
        ``auto`` uses the series unless |z| > 0.99.
    """
    z, a = complex(z), complex(a)
    if not a.real > 0:
        raise InvalidParameters("lerch needs Re(a) > 0")
    if z == 0:
        return 1.0 / a
    use_series = method == "series" or (method == "auto" and abs(z) <= LERCH_SWITCH)
    if use_series:
        if not abs(z) < 1:
            raise InvalidParameters("series form needs |z| < 1")
        r = abs(z)
        n_terms = int(math.ceil(math.log(tol * (1 - r)) / math.log(r))) + 1
        if n_terms > MAX_TERMS:
            raise NotConverged(f"Lerch series needs {n_terms} terms")
        out = 0j
        chunk = 200_000
        for start in range(0, n_terms, chunk):
            n = np.arange(start, min(n_terms, start + chunk))
            out += np.sum(np.exp(n * np.log(z)) / (n + a))
        return complex(out)
    if z.imag == 0 and z.real >= 1:
        raise InvalidParameters("lerch integral form needs z off [1, inf)")
    # P(z, 1, a) = int_0^inf exp(-a s) / (1 - z exp(-s)) ds
    return _laplace_integral(a, lambda s: 1.0 / (1.0 - z * np.exp(-s)), SPECIAL_SPEC)


def appell_f1_c1(a, x, y):
    """Appell F1(a; 1/2, 1/2; a + 1; x, y) for x, y < 1.

    With c - a = 1 the Euler integral collapses to
    a int_0^1 s^(a-1) (1 - x s)^(-1/2) (1 - y s)^(-1/2) ds.
    """
    a = complex(a)
    if not a.real > 0:
        raise InvalidParameters("appell_f1_c1 needs Re(a) > 0")
    if x >= 1 or y >= 1:
        raise InvalidParameters("appell_f1_c1 needs x, y < 1")
    return a * _laplace_integral(
        a, lambda s: 1.0 / np.sqrt((1.0 - x * np.exp(-s)) * (1.0 - y * np.exp(-s))), SPECIAL_SPEC
    )


# enhancement ratios -----------------------------------------------------------

def _single_mode(cavity):
    return 1.0 / (1.0 + cavity.kappa_tilde**2)


def enhancement_point(cavity: CavityParams, spec: QuadratureSpec = DEFAULT_SPEC,
                      method=EnhancementMethod.LERCH, c_single=C_SINGLE) -> EnhancementResult:
    """Enhancement for a point particle at the cavity centre."""
    cavity.require_dispersive()
    method = EnhancementMethod(method)
    if cavity.single_mode:
        r = _single_mode(cavity)
        return _result(r, r, method, c_single)
    if cavity.alpha == 0:
        raise DivergentIntegral("point-particle enhancement diverges at alpha = 0")
    quad = greens_point((0.0, 0.0), (0.0, 0.0), cavity, spec).real
    closed = (lerch(np.exp(-4 * cavity.alpha), cavity.u / 4) / (4 * cavity.eps_tilde)).real
    return _result(quad, closed, method, c_single)


def _centred(cloud):
    return replace(cloud, center=(0.0, 0.0))


def enhancement_cloud_iso(cavity: CavityParams, cloud: CloudParams,
                          spec: QuadratureSpec = DEFAULT_SPEC,
                          method=EnhancementMethod.LERCH, c_single=C_SINGLE):
    """Enhancement for an isotropic Gaussian cloud at the cavity centre."""
    if cloud.sigma_x != cloud.sigma_y:
        raise InvalidParameters("enhancement_cloud_iso needs sigma_x == sigma_y")
    cavity.require_dispersive()
    method = EnhancementMethod(method)
    cloud = _centred(cloud)
    g = gamma_factor(cloud.sigma_x, cavity.w0)
    zero = (0.0, 0.0)
    quad = greens_cloud(zero, zero, cloud, cavity, spec).real
    if cavity.single_mode:
        closed = ((1 + g) ** 2 / 4 / (1 + 1j * cavity.kappa_tilde)).real
    else:
        z = g**4 * np.exp(-4 * cavity.alpha)
        closed = ((1 + g) ** 2 / (16 * cavity.eps_tilde) * lerch(z, cavity.u / 4)).real
    return _result(quad, closed, method, c_single)


def enhancement_cloud_aniso(cavity: CavityParams, cloud: CloudParams,
                            spec: QuadratureSpec = DEFAULT_SPEC,
                            method=EnhancementMethod.APPELL, c_single=C_SINGLE):
    """Enhancement for an anisotropic Gaussian cloud at the cavity centre."""
    cavity.require_dispersive()
    method = EnhancementMethod(method)
    cloud = _centred(cloud)
    gx = gamma_factor(cloud.sigma_x, cavity.w0)
    gy = gamma_factor(cloud.sigma_y, cavity.w0)
    if not (-1 < gx < 1 and -1 < gy < 1):
        raise InvalidParameters("gamma factors must lie in (-1, 1)")
    zero = (0.0, 0.0)
    quad = greens_cloud(zero, zero, cloud, cavity, spec).real
    if cavity.single_mode:
        closed = ((1 + gx) * (1 + gy) / 4 / (1 + 1j * cavity.kappa_tilde)).real
    else:
        u = cavity.u
        x = gx**2 * np.exp(-2 * cavity.alpha)
        y = gy**2 * np.exp(-2 * cavity.alpha)
        f1 = appell_f1_c1(u / 2, -x, -y) + appell_f1_c1(u / 2, x, y)
        closed = ((1 + gx) * (1 + gy) / (8 * u * cavity.eps_tilde) * f1).real
    return _result(quad, closed, method, c_single)


def enhancement_cloud(cavity, cloud, spec=DEFAULT_SPEC, c_single=C_SINGLE):
    """Dispatch to the isotropic or anisotropic closed form."""
    if cloud.sigma_x == cloud.sigma_y:
        return enhancement_cloud_iso(cavity, cloud, spec, c_single=c_single)
    return enhancement_cloud_aniso(cavity, cloud, spec, c_single=c_single)


# hard square cutoff --------------------------------------------------------------

def _center_weights(m_max):
    """Xi_l(0)^2 = C(l, l/2) / 2^l for even l, 0 for odd l."""
    l = np.arange(m_max + 1)
    out = np.zeros(m_max + 1)
    ev = l % 2 == 0
    le = l[ev]
    out[ev] = np.exp(gammaln(le + 1) - 2 * gammaln(le / 2 + 1) - le * np.log(2.0))
    return out


def square_cutoff_enhancement(M: int):
    """Exact degenerate-cavity enhancement with a hard cutoff l, m <= M.

    Returns ``(exact, asymptote)`` where ``asymptote = M/pi + 2/pi + sqrt 2``
    is the large-M expression quoted for this model.
    """
    M = int(M)
    if M < 0 or M % 2 or M > 200:
        raise InvalidParameters("M must be even with 0 <= M <= 200")
    p = _center_weights(M)
    l = np.arange(M + 1)
    mask = (l[:, None] + l[None, :]) % 4 == 0
    exact = float(np.sum(np.outer(p, p) * mask))
    return exact, M / np.pi + 2 / np.pi + np.sqrt(2.0)


def square_cutoff_closed_form(M: int) -> float:
    """The factorial / 2F1 expression for the same sum (cross-check)."""
    M = int(M)
    h = M // 2
    a = math.exp(-(2 * M + 1) * math.log(2) + 2 * math.lgamma(M + 2) - 4 * math.lgamma(h + 1))
    dfact = math.prod(range(M + 1, 0, -2))
    b = 2.0 ** (-M - 1) * dfact**2 / math.factorial(h) ** 2 * hyp2f1(-M / 2, 0.5, 1.5, 2) ** 2
    return a + b


@dataclass(frozen=True)
class ModeCount:
    M: int
    modes: int


def effective_mode_count(c_ratio: float) -> ModeCount:
    """Smallest even M whose square-cutoff enhancement reaches ``c_ratio``."""
    if c_ratio < 1:
        raise InvalidParameters("c_ratio must be >= 1")
    M = 0
    while square_cutoff_enhancement(M)[0] < c_ratio:
        M += 2
        if M > 200:
            raise InvalidParameters("c_ratio beyond the tabulated cutoff range")
    return ModeCount(M=M, modes=int(math.ceil((M + 1) ** 2 / 4)))
