"""Global threshold fits, bootstrap errors, synthetic data and deconvolution.

The fitted observable is ``y = E_dw / (N Omega_c^2)``, which the threshold
model predicts as ``A_i * model(x; epsilon, alpha, delta_0)`` with

    model = -(g0^2 / (Delta_A^2 Delta)) Re[<D> + (N g0^2 / (2 Delta_A Delta)) <DD>].

All rows sharing a cloud geometry are evaluated together through the shell
series of :mod:`cavity_kit.spectral`, and the derivatives with respect to
(epsilon, alpha, delta_0) are taken analytically through the shell weights.
"""

from __future__ import annotations

import csv
import enum
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.optimize import least_squares
from scipy.special import voigt_profile

from .cavity_model import (
    TWO_PI,
    CavityParams,
    CloudParams,
    PumpParams,
    cloud_energies,
    mhz,
    to_mhz,
)
from .errors import (
    CavityKitError,
    FitDegenerate,
    InvalidParameters,
    MaxIterations,
    ModelEvaluationFailed,
    NoPeak,
    NoThreshold,
    SingularJacobian,
)
from .spectral import series_for
from .threshold import check_position, critical_pump


class ScanKind(str, enum.Enum):
    DETUNING = "DetuningScan"
    POSITION = "PositionScan"


@dataclass(frozen=True)
class DataRow:
    """One threshold measurement.

    ``x`` is the scan variable (delta_c in rad/us or position in um) and
    ``delta_c`` the recorded pump-cavity detuning; ``cloud`` carries the
    position, shape and atom number at threshold.
    """

    kind: ScanKind
    x: float
    omega_c_sq: float
    n_atoms: float
    cloud: CloudParams
    delta_c: float
    weight: float = 1.0
    e_dw: Optional[float] = None

    def __post_init__(self):
        if not self.omega_c_sq > 0:
            raise InvalidParameters("omega_c_sq must be positive")
        if self.n_atoms < 1:
            raise InvalidParameters("n_atoms must be >= 1")


@dataclass(frozen=True)
class ScanDataset:
    rows: tuple
    amplitude_index: int
    cavity_ref: CavityParams
    delta_a: float = mhz(-98e3)

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))


@dataclass(frozen=True)
class FitParams:
    epsilon: float
    alpha: float
    delta_0: float
    amplitudes: tuple

    def vector(self):
        return np.array([self.epsilon, self.alpha, self.delta_0, *self.amplitudes], dtype=float)

    @classmethod
    def from_vector(cls, v):
        v = np.asarray(v, dtype=float)
        return cls(float(v[0]), float(v[1]), float(v[2]), tuple(float(a) for a in v[3:]))


@dataclass
class FitResult:
    params: FitParams
    uncertainties: np.ndarray
    covariance: np.ndarray
    chi2: float
    chi2_reduced: float
    n_iterations: int
    n_points: int
    chi2_history: list = field(default_factory=list)
    alpha_at_bound: bool = False

    @property
    def epsilon(self):
        return self.params.epsilon

    @property
    def alpha(self):
        return self.params.alpha

    @property
    def delta_0(self):
        return self.params.delta_0

    @property
    def amplitudes(self):
        return self.params.amplitudes

    @property
    def sigma_epsilon(self):
        return float(self.uncertainties[0])

    def to_dict(self):
        names = ["epsilon", "alpha", "delta_0"] + [
            f"A_{i}" for i in range(len(self.params.amplitudes))
        ]
        return {
            "parameters": dict(zip(names, self.params.vector().tolist())),
            "uncertainties": dict(zip(names, np.asarray(self.uncertainties).tolist())),
            "covariance": np.asarray(self.covariance).tolist(),
            "chi2": self.chi2,
            "chi2_reduced": self.chi2_reduced,
            "n_iterations": self.n_iterations,
            "n_points": self.n_points,
            "alpha_at_bound": self.alpha_at_bound,
        }


@dataclass(frozen=True)
class FitOptions:
    max_iterations: int = 100
    ftol: float = 1e-14
    xtol: float = 1e-12
    lambda0: float = 1e-3
    jacobian: str = "analytic"
    fd_step: float = 1e-6
    fd_step: float = 1e-6


# model -------------------------------------------------------------------------

def _geometry_key(cloud: CloudParams, w0):
    return (float(w0), (float(cloud.center[0]), float(cloud.center[1])),
            float(cloud.sigma_x), float(cloud.sigma_y))


class ThresholdModel:
    """Vectorized threshold model over all rows of a list of datasets."""

    def __init__(self, datasets: Sequence[ScanDataset]):
        if not datasets:
            raise InvalidParameters("need at least one dataset")
        ref = datasets[0].cavity_ref
        for ds in datasets:
            if ds.cavity_ref.w0 != ref.w0 or ds.cavity_ref.g0 != ref.g0 \
                    or ds.cavity_ref.kappa != ref.kappa:
                raise InvalidParameters("datasets must share cavity_ref geometry")
        self.cavity = ref
        self.n_amp = 1 + max(ds.amplitude_index for ds in datasets)
        rows, amp, delta_a = [], [], []
        for ds in datasets:
            for r in ds.rows:
                check_position(r.cloud, ref)
                rows.append(r)
                amp.append(ds.amplitude_index)
                delta_a.append(ds.delta_a)
        self.rows = rows
        self.amp_index = np.array(amp, dtype=int)
        self.delta_a = np.array(delta_a, dtype=float)
        self.delta_c = np.array([r.delta_c for r in rows])
        self.n_atoms = np.array([r.n_atoms for r in rows])
        self.weight = np.array([r.weight for r in rows])
        e_dw = np.array([
            r.e_dw if r.e_dw is not None else cloud_energies(r.cloud, ref.wavelength).e_dw
            for r in rows
        ])
        self.y = e_dw / (self.n_atoms * np.array([r.omega_c_sq for r in rows]))
        groups = {}
        for k, r in enumerate(rows):
            groups.setdefault(_geometry_key(r.cloud, ref.w0), []).append(k)
        self.groups = [
            (series_for(rows[idx[0]].cloud, ref.w0), np.array(idx)) for idx in groups.values()
        ]

    def __len__(self):
        return len(self.rows)

    def evaluate(self, epsilon, alpha, delta_0, derivatives=False):
        """Model values per row and, optionally, d/d(epsilon, alpha, delta_0)."""
        cav = self.cavity
        det = self.delta_c + delta_0
        if np.any(det >= 0):
            raise ModelEvaluationFailed("effective detuning must stay negative")
        if not epsilon > 0 or alpha < 0:
            raise ModelEvaluationFailed("parameters outside bounds")
        g2 = cav.g0**2
        p = self.n_atoms * g2 / (2 * self.delta_a * det)
        pref = -g2 / (self.delta_a**2 * det)
        f = np.empty(len(self), dtype=complex)
        df = np.empty((3, len(self)), dtype=complex) if derivatives else None
        for s, idx in self.groups:
            n = s.n.astype(float)[None, :]
            d_k = det[idx][:, None]
            eps_t = -epsilon / d_k
            kap_t = cav.kappa / d_k
            damp = np.exp(-alpha * n)
            q = 1.0 + eps_t * n + 1j * kap_t
            w = damp / q
            if not derivatives:
                phi = (w @ s.right.T) @ s.left.T
                f[idx] = w @ s.first + p[idx] * ((phi * phi) @ s.rho_w)
                continue
            dq = damp / q**2
            stack = np.concatenate([
                w,
                dq * n / d_k,
                -n * w,
                -dq * (n * epsilon / d_k**2 - 1j * cav.kappa / d_k**2),
            ])
            phis = ((stack @ s.right.T) @ s.left.T).reshape(4, len(idx), -1)
            lin = (stack @ s.first).reshape(4, len(idx))
            phi = phis[0]
            dd = (phi * phi) @ s.rho_w
            f[idx] = lin[0] + p[idx] * dd
            for j in range(3):
                ddd = 2 * (phi * phis[j + 1]) @ s.rho_w
                df[j, idx] = lin[j + 1] + p[idx] * ddd
            df[2, idx] += -p[idx] / det[idx] * dd
        model = pref * f.real
        if not derivatives:
            return model
        jac = pref * df.real
        jac[2] += -model / det
        return model, jac

    def residuals(self, vec, mult=None):
        eps, alpha, d0 = vec[:3]
        amps = np.asarray(vec[3:])
        model = self.evaluate(eps, alpha, d0)
        w = self.weight if mult is None else self.weight * np.sqrt(mult)
        return w * (self.y - amps[self.amp_index] * model)

    def jacobian(self, vec, mult=None):
        eps, alpha, d0 = vec[:3]
        amps = np.asarray(vec[3:])
        model, dm = self.evaluate(eps, alpha, d0, derivatives=True)
        w = self.weight if mult is None else self.weight * np.sqrt(mult)
        a = amps[self.amp_index]
        jac = np.zeros((len(self), 3 + self.n_amp))
        jac[:, :3] = -(w * a)[:, None] * dm.T
        jac[np.arange(len(self)), 3 + self.amp_index] = -w * model
        return jac


def residuals(params: FitParams, datasets, model: Optional[ThresholdModel] = None):
    """Weighted residuals y_k - A_i model_k for every row."""
    model = model or ThresholdModel(datasets)
    try:
        return model.residuals(params.vector())
    except CavityKitError as exc:
        if isinstance(exc, ModelEvaluationFailed):
            raise
        raise ModelEvaluationFailed(str(exc)) from exc


def numeric_jacobian(model: ThresholdModel, vec, step=1e-6, mult=None):
    """Central-difference Jacobian of the residual vector."""
    vec = np.asarray(vec, dtype=float)
    cols = []
    for j in range(vec.size):
        h = step * max(abs(vec[j]), 1e-3 if j != 1 else 1e-4)
        up, dn = vec.copy(), vec.copy()
        up[j] += h
        dn[j] -= h
        if j == 1 and dn[j] < 0:
            dn[j] = vec[j]
            cols.append((model.residuals(up, mult) - model.residuals(dn, mult)) / h)
            continue
        cols.append((model.residuals(up, mult) - model.residuals(dn, mult)) / (2 * h))
    return np.array(cols).T


# optimizer ---------------------------------------------------------------------

def _project(vec, free):
    v = vec.copy()
    v[0] = max(v[0], 1e-9)
    v[1] = max(v[1], 0.0)
    return v


def _levenberg_marquardt(model, x0, options: FitOptions, free=None, mult=None):
    free = np.ones(x0.size, bool) if free is None else np.asarray(free, bool)

    def jac(x):
        if options.jacobian == "analytic":
            return model.jacobian(x, mult)
        return numeric_jacobian(model, x, options.fd_step, mult)

    x = _project(np.asarray(x0, float), free)
    r = model.residuals(x, mult)
    chi2 = float(r @ r)
    history = [chi2]
    lam = options.lambda0
    j = jac(x)
    for it in range(1, options.max_iterations + 1):
        jf = j[:, free]
        g = jf.T @ r
        h = jf.T @ jf
        diag = np.diag(h).copy()
        diag[diag <= 0] = 1.0
        # variables pinned at the alpha bound with an outward gradient stay put
        active = np.ones(jf.shape[1], bool)
        fidx = np.nonzero(free)[0]
        for k, p in enumerate(fidx):
            if p == 1 and x[1] <= 0 and g[k] > 0:
                active[k] = False
        accepted = False
        while lam < 1e16:
            a = h[np.ix_(active, active)] + lam * np.diag(diag[active])
            try:
                step_a = np.linalg.solve(a, -g[active])
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            step = np.zeros(x.size)
            step[fidx[active]] = step_a
            x_new = _project(x + step, free)
            try:
                r_new = model.residuals(x_new, mult)
            except ModelEvaluationFailed:
                lam *= 10
                continue
            chi2_new = float(r_new @ r_new)
            if chi2_new <= chi2:
                accepted = True
                break
            lam *= 4
        if not accepted:
            return x, chi2, history, it, j
        dx = np.abs(x_new - x)
        dchi = chi2 - chi2_new
        x, r, chi2 = x_new, r_new, chi2_new
        history.append(chi2)
        j = jac(x)
        lam = max(lam / 3, 1e-12)
        if dchi <= options.ftol * max(chi2, 1e-300) or np.all(
            dx[free] <= options.xtol * (np.abs(x[free]) + options.xtol)
        ):
            return x, chi2, history, it, j
    raise MaxIterations(f"no convergence within {options.max_iterations} iterations")


def _covariance(j, free, chi2_red):
    jf = j[:, free]
    col = np.linalg.norm(jf, axis=0)
    col[col == 0] = 1.0
    js = jf / col
    u, s, vt = np.linalg.svd(js, full_matrices=False)
    if s[-1] <= 1e-12 * s[0]:
        direction = np.zeros(free.size)
        direction[free] = vt[-1] / col
        raise SingularJacobian("Jacobian is rank deficient at the optimum", direction=direction)
    inv = (vt.T / s**2) @ vt
    cov_f = inv / np.outer(col, col) * chi2_red
    cov = np.zeros((free.size, free.size))
    cov[np.ix_(free, free)] = cov_f
    return cov


def fit_global(datasets, init: FitParams, options: FitOptions = FitOptions(),
               model: Optional[ThresholdModel] = None, mult=None) -> FitResult:
    """Simultaneous least-squares fit of (epsilon, alpha, delta_0, {A_i}).

    ``mult`` gives per-row multiplicities (used by the bootstrap).
    """
    model = model or ThresholdModel(datasets)
    x0 = init.vector()
    if x0.size != 3 + model.n_amp:
        raise InvalidParameters("init must carry one amplitude per dataset")
    if init.epsilon <= 0 or init.alpha < 0:
        raise InvalidParameters("init outside bounds (epsilon > 0, alpha >= 0)")
    free = np.ones(x0.size, bool)
    if mult is not None:
        counts = np.bincount(model.amp_index, weights=mult, minlength=model.n_amp)
        free[3:] = counts > 0
    x, chi2, hist, it, j = _levenberg_marquardt(model, x0, options, free, mult)
    n_pts = int(np.sum(mult)) if mult is not None else len(model)
    dof = max(n_pts - int(free.sum()), 1)
    chi2_red = chi2 / dof
    at_bound = x[1] <= 0
    cov = _covariance(j, free, chi2_red)
    return FitResult(
        params=FitParams.from_vector(x),
        uncertainties=np.sqrt(np.clip(np.diag(cov), 0, None)),
        covariance=cov,
        chi2=chi2,
        chi2_reduced=chi2_red,
        n_iterations=it,
        n_points=n_pts,
        chi2_history=hist,
        alpha_at_bound=bool(at_bound),
    )


@dataclass
class BootstrapResult:
    fits: List[FitResult]
    n_failed: int
    seed: int

    def _stack(self):
        return np.array([f.params.vector() for f in self.fits])

    @property
    def mean(self):
        return self._stack().mean(axis=0)

    @property
    def covariance(self):
        return np.cov(self._stack(), rowvar=False)

    @property
    def median(self):
        return np.median(self._stack(), axis=0)

    @property
    def std(self):
        return self._stack().std(axis=0, ddof=1)


BOOTSTRAP_OPTIONS = FitOptions(ftol=1e-10, xtol=1e-9)


def bootstrap(datasets, n_resamples: int, seed: int, init: Optional[FitParams] = None,
              options: FitOptions = BOOTSTRAP_OPTIONS, sampler: Optional[Callable] = None,
              model: Optional[ThresholdModel] = None, base_fit: Optional[FitResult] = None,
              workers: int = 1):
    """Refit resamples of all rows drawn with replacement.

    Each replica gets its own child seed from ``numpy.random.SeedSequence``
    so results do not depend on ``workers``; ``sampler(rng, n)`` may replace
    the default index draw.  Refits start from the full-data optimum.
    """
    if n_resamples < 2:
        raise InvalidParameters("n_resamples must be >= 2")
    model = model or ThresholdModel(datasets)
    if base_fit is None:
        if init is None:
            raise InvalidParameters("bootstrap needs init or base_fit")
        base_fit = fit_global(datasets, init, FitOptions(), model)
    start = base_fit.params
    n = len(model)

    def one(child):
        rng = np.random.default_rng(child)
        idx = sampler(rng, n) if sampler is not None else rng.integers(0, n, n)
        mult = np.bincount(np.asarray(idx), minlength=n).astype(float)
        try:
            return fit_global(datasets, start, options, model, mult=mult)
        except CavityKitError:
            return None

    children = np.random.SeedSequence(seed).spawn(n_resamples)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, children))
    else:
        results = [one(c) for c in children]
    fits = [r for r in results if r is not None]
    return BootstrapResult(fits=fits, n_failed=len(results) - len(fits), seed=seed)


# synthetic data --------------------------------------------------------------

@dataclass(frozen=True)
class DetuningScanDesign:
    radii: tuple
    n_atoms: float
    detunings: tuple


@dataclass(frozen=True)
class PositionScanDesign:
    radii: tuple
    n_atoms: float
    delta_c: float
    positions: tuple


@dataclass(frozen=True)
class ScanDesign:
    detuning_scans: tuple = ()
    position_scans: tuple = ()
    tf_to_gauss_ratio: float = 0.5


@dataclass(frozen=True)
class NoiseModel:
    """Multiplicative log-normal noise on Omega_c^2 (``sigma`` = log-sd)."""

    sigma: float = 0.03


def paper_design(n_detunings=8, n_positions=13) -> ScanDesign:
    """Eight centred detuning scans and eighteen position scans."""
    shapes = [
        (11.9, 13.2, 7.2), (3.1, 7.6, 5.3), (5.0, 5.0, 6.0), (4.0, 9.0, 6.0),
        (7.0, 8.0, 6.5), (3.5, 4.5, 6.0), (9.0, 10.0, 7.0), (6.0, 12.0, 7.0),
    ]
    atoms = [4e5, 2.3e5, 3e5, 2.6e5, 3.4e5, 2e5, 3.8e5, 3.2e5]
    dets = tuple(mhz(v) for v in np.linspace(-40.0, -320.0, n_detunings))
    det_scans = tuple(DetuningScanDesign(s, n, dets) for s, n in zip(shapes, atoms))
    probes = [(3.1, 7.6, 5.3), (3.6, 6.0, 5.0), (4.5, 8.0, 6.0)]
    pos = tuple(np.linspace(-12.0, 12.0, n_positions))
    pos_scans = tuple(
        PositionScanDesign(p, 0.76 * 3e5, mhz(dc), pos)
        for dc in (-60.0, -120.0, -170.0, -220.0, -270.0, -320.0)
        for p in probes
    )
    return ScanDesign(det_scans, pos_scans)


def synthesize_dataset(true_params: FitParams, design: ScanDesign, noise: NoiseModel,
                       seed: int, cavity_ref: Optional[CavityParams] = None,
                       delta_a=mhz(-98e3)):
    """Forward-model thresholds for a scan layout and add noise and A_i."""
    from .presets import paper_cavity

    cav0 = cavity_ref or paper_cavity()
    cav = replace(cav0, epsilon=true_params.epsilon, alpha=true_params.alpha,
                  delta_0=true_params.delta_0)
    pump = PumpParams(rabi=1.0, delta_a=delta_a)
    rng = np.random.default_rng(seed)
    scans = [(ScanKind.DETUNING, s) for s in design.detuning_scans] + [
        (ScanKind.POSITION, s) for s in design.position_scans
    ]
    if len(true_params.amplitudes) != len(scans):
        raise InvalidParameters("one amplitude per scan is required")
    out = []
    for i, (kind, sd) in enumerate(scans):
        amp = true_params.amplitudes[i]
        if kind is ScanKind.DETUNING:
            points = [(dc, dc, (0.0, 0.0)) for dc in sd.detunings]
        else:
            points = [(x, sd.delta_c, (float(x), 0.0)) for x in sd.positions]
        rows = []
        for x, dc, center in points:
            cloud = CloudParams.from_tf_radii(sd.radii, sd.n_atoms, center,
                                              design.tf_to_gauss_ratio)
            try:
                res = critical_pump(cloud, replace(cav, delta_c=dc), pump)
            except NoThreshold:
                warnings.warn(f"no threshold at x={x}; row dropped", RuntimeWarning)
                continue
            om2 = res.omega_c**2 / amp
            if noise.sigma > 0:
                om2 *= np.exp(noise.sigma * rng.standard_normal())
            y = res.e_dw / (sd.n_atoms * om2)
            wgt = 1.0 / (max(noise.sigma, 1e-3) * y)
            rows.append(DataRow(kind, float(x), float(om2), float(sd.n_atoms), cloud, float(dc),
                                weight=float(wgt), e_dw=float(res.e_dw)))
        out.append(ScanDataset(tuple(rows), i, cav0, delta_a))
    return out


# CSV exchange ---------------------------------------------------------------------

CSV_COLUMNS = (
    "kind", "x_value_MHz_or_um", "omega_c_sq_MHz2", "n_atoms", "sigma_x_um", "sigma_y_um",
    "delta_c_MHz", "amplitude_index", "e_dw_over_2pi_MHz", "weight",
)


def write_datasets_csv(path, datasets):
    """Rows of all datasets; frequencies as nu = omega / 2 pi."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for ds in datasets:
            for r in ds.rows:
                x = to_mhz(r.x) if r.kind is ScanKind.DETUNING else r.x
                e_dw = r.e_dw if r.e_dw is not None else cloud_energies(
                    r.cloud, ds.cavity_ref.wavelength).e_dw
                w.writerow([r.kind.value, repr(float(x)), repr(r.omega_c_sq / TWO_PI**2),
                            repr(r.n_atoms), repr(r.cloud.sigma_x), repr(r.cloud.sigma_y),
                            repr(to_mhz(r.delta_c)), ds.amplitude_index, repr(to_mhz(e_dw)),
                            repr(r.weight)])


def read_datasets_csv(path, cavity_ref: CavityParams, delta_a=mhz(-98e3)):
    """Inverse of :func:`write_datasets_csv`; rows are grouped by amplitude_index.

    ``e_dw_over_2pi_MHz`` and ``weight`` may be left empty; E_dw then falls
    back to the default trap of :class:`CloudParams` and the weight to 1/y.
    """
    groups = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_COLUMNS[:8]) - set(reader.fieldnames or ())
        if missing:
            raise InvalidParameters(f"dataset CSV lacks columns {sorted(missing)}")
        for rec in reader:
            kind = ScanKind(rec["kind"])
            xv = float(rec["x_value_MHz_or_um"])
            dc = mhz(float(rec["delta_c_MHz"]))
            center = (xv, 0.0) if kind is ScanKind.POSITION else (0.0, 0.0)
            x = xv if kind is ScanKind.POSITION else mhz(xv)
            n_atoms = float(rec["n_atoms"])
            cloud = CloudParams(center=center, sigma_x=float(rec["sigma_x_um"]),
                                sigma_y=float(rec["sigma_y_um"]), n_atoms=n_atoms)
            om2 = float(rec["omega_c_sq_MHz2"]) * TWO_PI**2
            e_txt = (rec.get("e_dw_over_2pi_MHz") or "").strip()
            e_dw = mhz(float(e_txt)) if e_txt else None
            w_txt = (rec.get("weight") or "").strip()
            if w_txt:
                wgt = float(w_txt)
            else:
                e = e_dw if e_dw is not None else cloud_energies(cloud, cavity_ref.wavelength).e_dw
                wgt = n_atoms * om2 / e
            row = DataRow(kind, x, om2, n_atoms, cloud, dc, weight=wgt, e_dw=e_dw)
            groups.setdefault(int(rec["amplitude_index"]), []).append(row)
    if not groups:
        raise InvalidParameters("dataset CSV has no rows")
    if sorted(groups) != list(range(len(groups))):
        raise InvalidParameters("amplitude_index values must be 0, 1, ..., n - 1")
    return [ScanDataset(tuple(groups[k]), k, cavity_ref, delta_a) for k in sorted(groups)]


# position-scan analysis --------------------------------------------------------

@dataclass(frozen=True)
class PositionProfile:
    """Interaction strength (e.g. 1/Omega_c^2) sampled versus position."""

    x: np.ndarray
    value: np.ndarray
    shift: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "value", np.asarray(self.value, dtype=float))


@dataclass(frozen=True)
class VoigtResult:
    hwhm_total: float
    hwhm_lorentz: float
    gamma_scan: float
    sigma_scan: float
    gamma_err: float


def _voigt_hwhm(sigma, gamma):
    fg = 2 * sigma * np.sqrt(2 * np.log(2))
    fl = 2 * gamma
    return 0.5 * (0.5346 * fl + np.sqrt(0.2166 * fl**2 + fg**2))


def voigt_deconvolve(scan: PositionProfile, cloud: CloudParams) -> VoigtResult:
    """Deconvolve the known density kernel from a position-scan peak.

    The scan is sampled in the cloud position r0 while the mirror term is a
    function of 2 r0, so the Gaussian part of the Voigt is fixed at
    sigma_x / sqrt(2) in scan units and widths are reported in units of the
    kernel argument (twice the scan-unit values).
    """
    x, v = scan.x, scan.value
    if x.size < 5:
        raise NoPeak("need at least five scan points")
    sig = cloud.sigma_x / np.sqrt(2.0)
    k = int(np.argmax(v))
    span = np.ptp(v)
    if span <= 0:
        raise NoPeak("flat scan")

    def model(p):
        off, amp, x0, lg = p
        return off + amp * voigt_profile(x - x0, sig, np.exp(lg))

    peak0 = voigt_profile(0.0, sig, sig)
    p0 = [v.min(), span / peak0, x[k], np.log(sig)]
    res = least_squares(lambda p: model(p) - v, p0, method="lm", x_scale="jac")
    off, amp, x0, lg = res.x
    gamma = float(np.exp(lg))
    jtj = res.jac.T @ res.jac
    dof = max(x.size - 4, 1)
    s2 = float(res.fun @ res.fun) / dof
    try:
        cov = np.linalg.inv(jtj) * max(s2, 1e-300)
        lg_err = float(np.sqrt(max(cov[3, 3], 0.0)))
    except np.linalg.LinAlgError:
        lg_err = np.inf
    gamma_err = gamma * lg_err
    if not np.isfinite(gamma_err) or gamma < 1e-3 * sig or gamma < 2 * gamma_err:
        raise FitDegenerate("Lorentzian width is consistent with zero")
    return VoigtResult(
        hwhm_total=2 * float(_voigt_hwhm(sig, gamma)),
        hwhm_lorentz=2 * gamma,
        gamma_scan=gamma,
        sigma_scan=float(sig),
        gamma_err=float(gamma_err),
    )


def peak_offset_correction(scan: PositionProfile) -> PositionProfile:
    """Shift positions so that a fitted offset Gaussian is centred at zero."""
    x, v = scan.x, scan.value
    if x.size < 4 or np.ptp(v) <= 0:
        raise NoPeak("scan has no peak")
    k = int(np.argmax(v))
    if k in (0, x.size - 1):
        raise NoPeak("maximum sits at the scan edge")

    def model(p):
        off, amp, x0, ls = p
        return off + amp * np.exp(-0.5 * ((x - x0) / np.exp(ls)) ** 2)

    p0 = [v.min(), np.ptp(v), x[k], np.log(max(np.ptp(x) / 8, 1e-6))]
    res = least_squares(lambda p: model(p) - v, p0, method="lm", x_scale="jac")
    x0 = float(res.x[2])
    if not np.isfinite(x0) or not x.min() <= x0 <= x.max():
        raise NoPeak("fitted centre lies outside the scan")
    return PositionProfile(x - x0, v, scan.shift + x0)


def profile_from_scan(rows) -> PositionProfile:
    """1/Omega_c^2 versus position from ``threshold.scan_position`` rows."""
    good = [r for r in rows if r.status == "ok"]
    return PositionProfile(np.array([r.x for r in good]),
                           np.array([1.0 / r.omega_c**2 for r in good]))
