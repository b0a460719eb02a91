"""
Reading the cavity off the superradiance threshold
==================================================

The critical pump strength depends on the cavity-mediated interaction
averaged over the cloud.  A single-mode cavity gives Omega_c ~ |Delta_C|^1/2;
the multimode cavity bends away from that, and scanning the cloud position
reveals the local/mirror overlap as a dip at the centre.
"""

# %%
from dataclasses import replace
from pathlib import Path

import numpy as np

from cavity_kit import bec_cloud, mhz, paper_cavity, paper_pump, probe_cloud, to_mhz
from cavity_kit.fitting import peak_offset_correction, profile_from_scan, voigt_deconvolve
from cavity_kit.plotting import svg_lines
from cavity_kit.presets import N0
from cavity_kit.threshold import scan_detuning, scan_position

out = Path(__file__).with_name("out")
out.mkdir(exist_ok=True)
pump = paper_pump()

# %%
dets = mhz(np.linspace(-40, -320, 15))
cl = bec_cloud(N0)
multi = scan_detuning(cl, paper_cavity(alpha=1e-3), pump, dets)
single = scan_detuning(cl, paper_cavity(single_mode=True), pump, dets)
norm = lambda rows: [to_mhz(r.omega_c_norm) for r in rows]
svg_lines(out / "threshold_vs_detuning.svg", -to_mhz(dets),
          {"multimode": norm(multi), "single mode": norm(single)},
          "-Delta_C / 2pi (MHz)", "sqrt(N/N0) Omega_c / 2pi (MHz)")
slope = np.polyfit(np.log(-dets), np.log([r.omega_c for r in multi]), 1)[0]
print(f"multimode log-log slope {slope:.3f} (single mode: 1/2)")

# %%
# Position scan with the compact probe cloud.
xs = np.linspace(-12, 12, 49)
probe = probe_cloud()
rows = scan_position(probe, paper_cavity(delta_c=mhz(-120)), pump, xs)
svg_lines(out / "position_scan.svg", xs, {"Omega_c": [to_mhz(r.omega_c_norm) for r in rows]},
          "x (um)", "sqrt(N/N0) Omega_c / 2pi (MHz)")
print("wrote", out / "position_scan.svg")

# %%
# Voigt deconvolution separates the cloud width from the kernel width.
prof = peak_offset_correction(profile_from_scan(rows))
v = voigt_deconvolve(prof, probe)
print(f"dip HWHM {v.hwhm_total:.2f} um -> kernel HWHM {v.hwhm_lorentz:.2f} um")
