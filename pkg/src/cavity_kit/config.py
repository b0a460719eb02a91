"""Configuration files for the command line (TOML or JSON).

Keys carry their units; frequencies are given as nu = omega / 2 pi in MHz.
Missing sections fall back to the laboratory-scale presets.

    [cavity]
    w0_um = 35.0
    kappa_over_2pi_MHz = 0.137
    epsilon_over_2pi_MHz = 2.6
    alpha = 0.0
    delta_c_over_2pi_MHz = -120.0
    delta_0_over_2pi_MHz = 0.8
    g0_over_2pi_MHz = 1.47
    wavelength_um = 0.78
    n_max = 600
    single_mode = false

    [cloud]
    tf_radii_um = [3.1, 7.6, 5.3]     # or sigma_um = [sx, sy] with trap_freqs_over_2pi_Hz
    n_atoms = 2.28e5
    center_um = [0.0, 0.0]
    tf_to_gauss_ratio = 0.5

    [pump]
    rabi_over_2pi_MHz = 30.0
    delta_a_over_2pi_MHz = -98000.0

    [run]
    seed = 0
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .cavity_model import CavityParams, CloudParams, PumpParams, TWO_PI, mhz
from .errors import InvalidParameters
from .presets import paper_cavity, paper_pump, probe_cloud

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

CAVITY_KEYS = {
    "w0_um": ("w0", 1.0),
    "kappa_over_2pi_MHz": ("kappa", TWO_PI),
    "epsilon_over_2pi_MHz": ("epsilon", TWO_PI),
    "alpha": ("alpha", 1.0),
    "delta_c_over_2pi_MHz": ("delta_c", TWO_PI),
    "delta_0_over_2pi_MHz": ("delta_0", TWO_PI),
    "g0_over_2pi_MHz": ("g0", TWO_PI),
    "wavelength_um": ("wavelength", 1.0),
}
CLOUD_KEYS = {"tf_radii_um", "sigma_um", "n_atoms", "center_um", "tf_to_gauss_ratio",
              "trap_freqs_over_2pi_Hz"}
PUMP_KEYS = {"rabi_over_2pi_MHz", "delta_a_over_2pi_MHz"}


class ConfigError(InvalidParameters):
    """Malformed configuration (unknown key, wrong type, unreadable file)."""


@dataclass
class RunConfig:
    cavity: CavityParams
    cloud: CloudParams
    pump: PumpParams
    seed: int = 0
    raw: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


def _check_keys(section, allowed, name):
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in [{name}]: {sorted(unknown)}")


def cavity_from_dict(d) -> CavityParams:
    _check_keys(d, set(CAVITY_KEYS) | {"n_max", "single_mode"}, "cavity")
    kw = {CAVITY_KEYS[k][0]: float(v) * CAVITY_KEYS[k][1] for k, v in d.items() if k in CAVITY_KEYS}
    if "n_max" in d:
        kw["n_max"] = int(d["n_max"])
    if "single_mode" in d:
        kw["single_mode"] = bool(d["single_mode"])
    return paper_cavity(**kw)


def cloud_from_dict(d) -> CloudParams:
    _check_keys(d, CLOUD_KEYS, "cloud")
    n_atoms = float(d.get("n_atoms", 0.76 * 3e5))
    center = tuple(float(c) for c in d.get("center_um", (0.0, 0.0)))
    if "sigma_um" in d:
        sx, sy = (float(s) for s in d["sigma_um"])
        kw = {}
        if "trap_freqs_over_2pi_Hz" in d:
            kw["trap_freqs"] = tuple(TWO_PI * float(f) * 1e-6 for f in d["trap_freqs_over_2pi_Hz"])
        return CloudParams(center=center, sigma_x=sx, sigma_y=sy, n_atoms=n_atoms, **kw)
    if "tf_radii_um" in d:
        radii = tuple(float(r) for r in d["tf_radii_um"])
        if len(radii) != 3:
            raise ConfigError("tf_radii_um needs three radii")
        return CloudParams.from_tf_radii(radii, n_atoms, center,
                                         float(d.get("tf_to_gauss_ratio", 0.5)))
    return probe_cloud(n_atoms=n_atoms, center=center,
                       tf_to_gauss_ratio=float(d.get("tf_to_gauss_ratio", 0.5)))


def pump_from_dict(d) -> PumpParams:
    _check_keys(d, PUMP_KEYS, "pump")
    kw = {}
    if "rabi_over_2pi_MHz" in d:
        kw["rabi"] = mhz(float(d["rabi_over_2pi_MHz"]))
    if "delta_a_over_2pi_MHz" in d:
        kw["delta_a"] = mhz(float(d["delta_a_over_2pi_MHz"]))
    return paper_pump(**kw)


def parse_config(raw: dict) -> RunConfig:
    known = {"cavity", "cloud", "pump", "run"}
    try:
        cfg = RunConfig(
            cavity=cavity_from_dict(raw.get("cavity", {})),
            cloud=cloud_from_dict(raw.get("cloud", {})),
            pump=pump_from_dict(raw.get("pump", {})),
            seed=int(raw.get("run", {}).get("seed", 0)),
            raw=raw,
            extra={k: v for k, v in raw.items() if k not in known},
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path=None) -> RunConfig:
    """Read a TOML (or ``.json``) file; ``None`` gives the presets."""
    if path is None:
        return parse_config({})
    p = Path(path)
    try:
        text = p.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    try:
        if p.suffix.lower() == ".json":
            raw = json.loads(text)
        else:
            raw = tomllib.loads(text.decode())
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config {p}: {exc}") from exc
    return parse_config(raw)
