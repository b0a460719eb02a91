"""Panel quadrature for the Laplace-type integrals over tau.

Every kernel integral in the package has the form

    int_0^inf f(tau) exp(-(1 + i kappa_t) tau) dtau,   t = exp(-eps_t tau - alpha),

where f is smooth but may vary quickly near tau = 0 (t close to e^-alpha).
The nodes live on a geometric set of panels that refine toward tau = 0;
the same node set is shared by every parameter combination, which lets the
callers vectorize over many (eps_t, alpha, position) rows at once.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidParameters, QuadratureNotConverged

TAU_MAX = 40.0


@dataclass(frozen=True)
class QuadratureSpec:
    """Quadrature controls.

    Parameters
    ----------
    panels : int
        Number of geometric panels between ``TAU_MAX * ratio**-panels`` and
        ``TAU_MAX`` (one extra panel covers the remaining interval at 0).
    refinement_ratio : float
        Ratio between neighbouring panel breakpoints.
    target_rel_err : float
        Tolerance on the panel-doubling error estimate, measured against
        the integral of the absolute integrand.
    order : int
        Nodes per panel.
    rule : {"gauss", "midpoint"}
        Gauss-Legendre or composite midpoint nodes within each panel.
    max_doublings : int
        How many times the panel set may be halved before giving up.
    """

    panels: int = 40
    refinement_ratio: float = 1.7
    target_rel_err: float = 1e-8
    order: int = 8
    rule: str = "gauss"
    max_doublings: int = 3

    def __post_init__(self):
        if self.panels < 4:
            raise InvalidParameters("QuadratureSpec.panels must be >= 4")
        if not self.refinement_ratio > 1:
            raise InvalidParameters("refinement_ratio must exceed 1")
        if not 0 < self.target_rel_err <= 1e-3:
            raise InvalidParameters("target_rel_err must lie in (0, 1e-3]")
        if self.order < 1:
            raise InvalidParameters("order must be >= 1")
        if self.rule not in ("gauss", "midpoint"):
            raise InvalidParameters(f"unknown rule {self.rule!r}")


DEFAULT_SPEC = QuadratureSpec()
DOUBLE_SPEC = QuadratureSpec(panels=30, order=6, target_rel_err=1e-6)


@lru_cache(maxsize=64)
def _panel_nodes(panels, ratio, order, rule, split):
    edges = TAU_MAX * ratio ** -np.arange(panels, -1, -1.0)
    edges = np.concatenate(([0.0], edges))
    if split > 1:
        fine = [np.linspace(a, b, split + 1)[:-1] for a, b in zip(edges[:-1], edges[1:])]
        edges = np.concatenate(fine + [edges[-1:]])
    if rule == "gauss":
        x, w = np.polynomial.legendre.leggauss(order)
    else:
        x = (2 * np.arange(order) + 1) / order - 1
        w = np.full(order, 2.0 / order)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (b - a) * x + 0.5 * (b + a)).ravel()
    weights = (0.5 * (b - a) * w).ravel()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def tau_rule(spec: QuadratureSpec, level: int = 0):
    """Nodes and weights on [0, TAU_MAX]; each level halves every panel."""
    return _panel_nodes(spec.panels, spec.refinement_ratio, spec.order, spec.rule, 2**level)


def integrate_tau(func, spec: QuadratureSpec = DEFAULT_SPEC):
    """Integrate ``func(tau)`` over [0, TAU_MAX] with panel doubling.

    ``func`` receives a 1-D node array and returns values with the node axis
    last; extra leading axes are integrated independently.  Returns the
    refined estimate and the error estimate relative to int |f|.
    """
    tau, w = tau_rule(spec, 0)
    coarse = func(tau) @ w
    for level in range(1, spec.max_doublings + 1):
        tau, w = tau_rule(spec, level)
        vals = func(tau)
        fine = vals @ w
        scale = np.abs(vals) @ w
        err = np.abs(fine - coarse) / np.where(scale > 0, scale, 1.0)
        if np.all(err <= spec.target_rel_err):
            return fine, err
        coarse = fine
    raise QuadratureNotConverged(
        f"tau quadrature error estimate {np.max(err):.3g} exceeds {spec.target_rel_err:.3g}"
    )


def integrate_tau2(func, spec: QuadratureSpec = DOUBLE_SPEC):
    """Double integral over [0, TAU_MAX]^2; ``func(tau, lam)`` gets a grid."""
    def run(level):
        tau, w = tau_rule(spec, level)
        vals = func(tau[:, None], tau[None, :])
        ww = w[:, None] * w[None, :]
        return np.sum(vals * ww, axis=(-2, -1)), np.sum(np.abs(vals) * ww, axis=(-2, -1))

    coarse, _ = run(0)
    for level in range(1, spec.max_doublings + 1):
        fine, scale = run(level)
        err = np.abs(fine - coarse) / np.where(scale > 0, scale, 1.0)
        if np.all(err <= spec.target_rel_err):
            return fine, err
        coarse = fine
    raise QuadratureNotConverged(
        f"double tau quadrature error estimate {np.max(err):.3g} exceeds "
        f"{spec.target_rel_err:.3g}"
    )
